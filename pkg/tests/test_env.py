import numpy as np
import pytest

from glbandit.envs import (
    TrialSpec,
    default_c_grid,
    gen_instance,
    make_radius_rule,
    run_policy,
    run_trial,
    step_regret,
    tune_radius_coefficient,
)
from glbandit.families import make_family
from glbandit.confidence import OnlineConfidenceSet
from glbandit.ons import OnsGlmLearner
from glbandit.kernels import ucb_scores


class TestGenInstance:
    def test_unit_norms(self):
        fam = make_family("logit", 1.0)
        inst = gen_instance(8, 50, fam, np.random.default_rng(0))
        assert np.linalg.norm(inst.theta_star) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(
            np.linalg.norm(inst.arms.X, axis=1), 1.0, atol=1e-12
        )

    def test_same_seed_same_instance(self):
        fam = make_family("logit", 1.0)
        a = gen_instance(5, 20, fam, np.random.default_rng(3))
        b = gen_instance(5, 20, fam, np.random.default_rng(3))
        np.testing.assert_array_equal(a.theta_star, b.theta_star)
        np.testing.assert_array_equal(a.arms.X, b.arms.X)

    def test_pairwise_dots_centered(self):
        fam = make_family("logit", 1.0)
        inst = gen_instance(6, 400, fam, np.random.default_rng(4))
        dots = inst.arms.X @ inst.arms.X.T
        off_diag = dots[~np.eye(400, dtype=bool)]
        band = 3.0 / np.sqrt(400 * 6)
        assert abs(off_diag.mean()) <= band

    def test_rejects_bad_sizes(self):
        fam = make_family("logit", 1.0)
        with pytest.raises(ValueError):
            gen_instance(0, 5, fam, np.random.default_rng(0))


class TestStepRegret:
    def test_optimal_arm_zero(self):
        fam = make_family("logit", 1.0)
        inst = gen_instance(4, 30, fam, np.random.default_rng(5))
        assert step_regret(inst, inst.best_arm) == 0.0

    def test_always_nonnegative(self):
        fam = make_family("probit", 1.0)
        inst = gen_instance(4, 30, fam, np.random.default_rng(6))
        assert all(step_regret(inst, i) >= 0.0 for i in range(30))

    def test_two_arm_sigmoid_gap(self):
        # arms at natural parameters 0 and 1 under the logistic link
        fam = make_family("logit", 1.0)
        expected = float(fam.mean(1.0) - fam.mean(0.0))
        assert expected == pytest.approx(0.231059, abs=1e-6)


class TestRunTrial:
    def test_single_step_trace(self):
        spec = TrialSpec(policy="gloc", family="logit", d=3, N=5, T=1, base_seed=1)
        tr = run_trial(spec, 0)
        assert tr.cum_regret.shape == (1,)
        assert tr.wall_ms.shape == (1,)

    def test_cum_regret_nondecreasing_and_bounded(self):
        fam = make_family("logit", 1.0)
        L = fam.constants().L
        spec = TrialSpec(policy="qgloc", family="logit", d=4, N=20, T=300,
                         base_seed=2, c=0.1)
        tr = run_trial(spec, 0)
        steps = np.diff(np.concatenate([[0.0], tr.cum_regret]))
        assert np.all(steps >= -1e-12)
        assert np.all(steps <= L * 2.0 * spec.S + 1e-12)

    def test_noise_free_greedy_converges(self):
        # gaussian rewards with no noise and a zero radius: pure exploitation
        # locks onto an arm; on this seed the lock is the optimal arm and the
        # per-step regret hits exactly zero
        spec = TrialSpec(policy="gloc", family="gaussian", d=3, N=10, T=300,
                         base_seed=6, c=0.0, noise_sd=0.0)
        tr = run_trial(spec, 0)
        late = np.diff(tr.cum_regret[-50:])
        assert np.all(late == 0.0)

    def test_zero_radius_greedy_always_locks(self):
        # without exploration the late trajectory is a constant-slope lock
        for seed in (0, 1, 2):
            spec = TrialSpec(policy="gloc", family="gaussian", d=3, N=10,
                             T=300, base_seed=seed, c=0.0, noise_sd=0.0)
            tr = run_trial(spec, 0)
            late = np.diff(tr.cum_regret[-50:])
            assert np.allclose(late, late[0])

    def test_deterministic_traces(self):
        spec = TrialSpec(policy="gloc-ts", family="logit", d=4, N=15, T=200,
                         base_seed=4, c=0.1)
        a = run_trial(spec, 3)
        b = run_trial(spec, 3)
        np.testing.assert_array_equal(a.cum_regret, b.cum_regret)

    def test_distinct_trials_differ(self):
        spec = TrialSpec(policy="gloc", family="logit", d=4, N=15, T=100,
                         base_seed=4, c=0.1)
        a = run_trial(spec, 0)
        b = run_trial(spec, 1)
        assert not np.array_equal(a.cum_regret, b.cum_regret)

    def test_hashed_trace_records_candidates(self):
        spec = TrialSpec(policy="qgloc", family="logit", d=4, N=200, T=50,
                         base_seed=5, c=0.1, hash_enabled=True, hash_k=6,
                         hash_U=4, hash_probes=6, hash_rebuild_every=25)
        tr = run_trial(spec, 0)
        assert tr.candidates_frac is not None
        assert np.all(tr.candidates_frac > 0.0)
        assert np.all(tr.candidates_frac <= 1.0)
        assert tr.algo == "qgloc-hash"

    def test_hash_reward_stream_paired_with_exact(self):
        # switching hashing on must not consume the reward stream differently
        base = TrialSpec(policy="gloc-ts", family="logit", d=4, N=50, T=30,
                         base_seed=6, c=0.1)
        hashed = TrialSpec(policy="gloc-ts", family="logit", d=4, N=50, T=30,
                           base_seed=6, c=0.1, hash_enabled=True, hash_k=4,
                           hash_U=6, hash_probes=4)
        a = run_trial(base, 0)
        b = run_trial(hashed, 0)
        assert a.cum_regret.shape == b.cum_regret.shape

    def test_ucb_glm_runs(self):
        spec = TrialSpec(policy="ucb-glm", family="logit", d=3, N=10, T=60,
                         base_seed=7, c=0.1)
        tr = run_trial(spec, 0)
        assert tr.algo == "ucb-glm"
        assert tr.cum_regret.shape == (60,)

    def test_rejects_unknown_policy_and_bad_hash_combo(self):
        with pytest.raises(ValueError):
            run_trial(TrialSpec(policy="sup-glm"), 0)
        with pytest.raises(ValueError):
            run_trial(TrialSpec(policy="gloc", hash_enabled=True, T=5, d=2, N=3), 0)

    def test_state_probes_constant_for_confidence_policies(self):
        spec = TrialSpec(policy="gloc", family="logit", d=4, N=10, T=400,
                         base_seed=8, c=0.1)
        tr = run_trial(spec, 0, probe_steps=(100, 400))
        (t1, f1), (t2, f2) = tr.state_probes
        assert (t1, t2) == (100, 400)
        assert f1 == f2

    def test_state_probes_grow_for_ucb_glm(self):
        spec = TrialSpec(policy="ucb-glm", family="logit", d=4, N=10, T=400,
                         base_seed=9, c=0.1)
        tr = run_trial(spec, 0, probe_steps=(100, 400))
        (_, f1), (_, f2) = tr.state_probes
        assert f2 > f1


class TestRadiusRule:
    def test_grid_has_nine_points(self):
        grid = default_c_grid()
        assert len(grid) == 9
        assert grid[0] == pytest.approx(10.0)
        assert grid[-1] == pytest.approx(1e-3)

    def test_paper_theory_radius_positive(self):
        fam = make_family("logit", 1.0)
        consts = fam.constants()
        conf = OnlineConfidenceSet(3, 1.0, 1.0, consts.R, consts.kappa, 0.1)
        learner = OnsGlmLearner(3, 1.0, 1.0, consts.kappa)
        rule = make_radius_rule("paper_theory")
        assert rule(conf, learner, 0.1) > 0.0

    def test_tuned_rule_scales_budget(self):
        fam = make_family("logit", 1.0)
        consts = fam.constants()
        conf = OnlineConfidenceSet(3, 1.0, 1.0, consts.R, consts.kappa, 0.1)
        learner = OnsGlmLearner(3, 1.0, 1.0, consts.kappa)
        learner.budget_accum = 2.5
        rule = make_radius_rule("tuned", c=0.3)
        assert rule(conf, learner, 0.1) == pytest.approx(0.75)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            make_radius_rule("bayes")

    def test_huge_c_becomes_bonus_only_selection(self):
        # at enormous radius the linear part of the score is negligible
        fam = make_family("logit", 1.0)
        inst = gen_instance(4, 25, fam, np.random.default_rng(10))
        consts = fam.constants()
        conf = OnlineConfidenceSet(4, 1.0, 1.0, consts.R, consts.kappa, 0.1)
        learner = OnsGlmLearner(4, 1.0, 1.0, consts.kappa)
        rng = np.random.default_rng(11)
        for _ in range(30):
            x = inst.arms.X[rng.integers(0, 25)]
            y = fam.sample(float(x @ inst.theta_star), rng)
            z = float(x @ learner.predict())
            learner.update(x, y, fam)
            conf.update(x, z)
        ell = conf.snapshot(1e6 * learner.budget_accum)
        scores = ucb_scores(inst.arms.X, ell.center, ell.shape_inv,
                            np.sqrt(ell.radius_sq))
        bonus_only = ucb_scores(inst.arms.X, np.zeros(4), ell.shape_inv,
                                np.sqrt(ell.radius_sq))
        assert int(np.argmax(scores)) == int(np.argmax(bonus_only))


class TestOrchestration:
    def test_run_policy_sequential_matches_parallel(self):
        spec = TrialSpec(policy="gloc", family="logit", d=3, N=8, T=50,
                         base_seed=12, c=0.1)
        seq = run_policy(spec, 3, jobs=1)
        par = run_policy(spec, 3, jobs=2)
        for a, b in zip(seq, par):
            np.testing.assert_array_equal(a.cum_regret, b.cum_regret)

    def test_tuning_picks_grid_minimum(self):
        spec = TrialSpec(policy="gloc", family="logit", d=3, N=8, T=80,
                         base_seed=13)
        best_c, means, traces = tune_radius_coefficient(
            spec, [1.0, 0.1], trials=3
        )
        assert best_c in (1.0, 0.1)
        assert means[best_c] == min(means.values())
        assert len(traces) == 3
