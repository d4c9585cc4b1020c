import numpy as np
import pytest

from glbandit.kernels import available_backends, backend


def backends():
    return list(available_backends().items())


def random_spd(rng, d):
    G = rng.standard_normal((d, d))
    return np.ascontiguousarray(G @ G.T + 0.3 * np.eye(d))


def test_compiled_backend_selected_when_built():
    names = set(available_backends())
    assert "python" in names
    if "cython" in names:
        assert backend == "cython"


@pytest.mark.parametrize("name,impl", backends())
def test_rank_one_update_matches_dense(name, impl):
    rng = np.random.default_rng(0)
    for d in (1, 3, 10):
        A = random_spd(rng, d)
        Ainv = np.ascontiguousarray(np.linalg.inv(A))
        x = rng.standard_normal(d) * 0.6
        A2 = A + np.outer(x, x)
        w = impl.rank_one_update(A, Ainv, x)
        np.testing.assert_allclose(A, A2, atol=1e-12)
        np.testing.assert_allclose(Ainv, np.linalg.inv(A2), atol=1e-9)
        np.testing.assert_allclose(w, np.linalg.inv(A2) @ x, atol=1e-9)


@pytest.mark.parametrize("name,impl", backends())
def test_quad_forms_matches_einsum(name, impl):
    rng = np.random.default_rng(1)
    X = np.ascontiguousarray(rng.standard_normal((37, 6)))
    M = random_spd(rng, 6)
    got = impl.quad_forms(X, M)
    np.testing.assert_allclose(got, np.einsum("ij,jk,ik->i", X, M, X), atol=1e-10)


@pytest.mark.parametrize("name,impl", backends())
def test_scores_match_reference_formula(name, impl):
    rng = np.random.default_rng(2)
    X = np.ascontiguousarray(rng.standard_normal((25, 5)))
    Minv = random_spd(rng, 5)
    theta = rng.standard_normal(5)
    quad = np.einsum("ij,jk,ik->i", X, Minv, X)
    np.testing.assert_allclose(
        impl.ucb_scores(X, theta, Minv, 1.7),
        X @ theta + 1.7 * np.sqrt(quad),
        atol=1e-10,
    )
    np.testing.assert_allclose(
        impl.quad_scores(X, theta, Minv, 0.42),
        X @ theta + 0.42 * quad,
        atol=1e-10,
    )


def test_backends_agree_bitwise_close():
    impls = available_backends()
    if len(impls) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(3)
    ref = impls["python"]
    cy = impls["cython"]
    for _ in range(50):
        d = int(rng.integers(1, 12))
        A1 = random_spd(rng, d)
        A2 = A1.copy()
        I1 = np.ascontiguousarray(np.linalg.inv(A1))
        I2 = I1.copy()
        x = rng.standard_normal(d)
        w1 = ref.rank_one_update(A1, I1, x)
        w2 = cy.rank_one_update(A2, I2, x)
        np.testing.assert_allclose(w1, w2, atol=1e-13)
        np.testing.assert_allclose(A1, A2, atol=0)
        np.testing.assert_allclose(I1, I2, atol=1e-13)
        X = np.ascontiguousarray(rng.standard_normal((20, d)))
        th = rng.standard_normal(d)
        np.testing.assert_allclose(
            ref.ucb_scores(X, th, I1, 0.9), cy.ucb_scores(X, th, I2, 0.9),
            atol=1e-12,
        )
        np.testing.assert_allclose(
            ref.quad_scores(X, th, I1, 0.3), cy.quad_scores(X, th, I2, 0.3),
            atol=1e-12,
        )


def test_ucb_scores_clamps_negative_quadratic_drift():
    # a slightly indefinite inverse (floating-point drift) must not produce NaN
    for name, impl in backends():
        X = np.ascontiguousarray(np.eye(2))
        Minv = np.ascontiguousarray(np.array([[-1e-14, 0.0], [0.0, 1.0]]))
        out = impl.ucb_scores(X, np.zeros(2), Minv, 1.0)
        assert np.all(np.isfinite(out))
