"""Synthetic bandit environments and the per-trial driver loop.

Instances draw the hidden parameter and a fixed arm pool uniformly from the
unit sphere. Each trial owns four independent random streams (instance,
rewards, perturbation noise, hashing) so that switching any one feature --
e.g. hashed versus exact selection -- leaves the other streams untouched and
comparisons stay paired.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .confidence import OnlineConfidenceSet
from .families import GaussianFamily, make_family
from .hashing import HashIndex, query as hash_query
from .ons import OnsGlmLearner
from .policies import (
    UcbGlmPolicy,
    arm_norm_floor,
    default_c0,
    gloc_select,
    gloc_ts_select,
    make_arm_set,
    qgloc_query,
    qgloc_select,
    quadratic_features_matrix,
    sample_parameter,
)

GLOC_FAMILY_POLICIES = ("gloc", "gloc-ts", "qgloc")
ALL_POLICIES = GLOC_FAMILY_POLICIES + ("ucb-glm",)
HASHABLE_POLICIES = ("gloc-ts", "qgloc")


@dataclass(frozen=True)
class Instance:
    theta_star: np.ndarray
    arms: object
    family: object
    dots: np.ndarray
    regret_per_arm: np.ndarray
    best_arm: int


def gen_instance(d, N, family, rng):
    """Hidden parameter and N arms drawn uniformly from the unit sphere."""
    if d < 1 or N < 1:
        raise ValueError("need d >= 1 and N >= 1")
    theta = rng.standard_normal(d)
    theta /= np.linalg.norm(theta)
    X = rng.standard_normal((N, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    arms = make_arm_set(X)
    dots = X @ theta
    mus = np.asarray(family.mean(dots), dtype=float)
    best = int(np.argmax(dots))
    return Instance(
        theta_star=theta,
        arms=arms,
        family=family,
        dots=dots,
        regret_per_arm=mus[best] - mus,
        best_arm=best,
    )


def step_regret(instance, chosen):
    """Instantaneous mean-reward regret of pulling the chosen arm."""
    return float(instance.regret_per_arm[chosen])


@dataclass(frozen=True)
class TrialSpec:
    """Everything one trial needs; (spec, trial_index) fixes every byte."""

    policy: str
    family: str = "logit"
    d: int = 10
    N: int = 100
    T: int = 3000
    S: float = 1.0
    R: float | None = None
    noise_sd: float = 1.0
    delta: float = 0.1
    lam: float = 1.0
    eps: float = 1.0
    c0: float | None = None
    floor_mode: str = "auto"
    radius_rule: str = "tuned"
    c: float = 0.1
    base_seed: int = 0
    hash_enabled: bool = False
    hash_k: int = 12
    hash_U: int = 24
    hash_probes: int = 12
    hash_dot_mode: str = "exact"
    hash_m: int = 64
    hash_rebuild_every: int = 500


@dataclass
class RegretTrace:
    """Per-step record of one (algorithm, trial) run."""

    algo: str
    trial: int
    cum_regret: np.ndarray
    wall_ms: np.ndarray
    candidates_frac: np.ndarray | None = None
    state_probes: list = field(default_factory=list)


class ArmRewardStreams:
    """Rewards indexed by (arm, pull count) rather than by step.

    Two runs that differ only in selection (hashed versus exact, or different
    radius rules) observe identical rewards whenever they pull the same arm
    for the k-th time, which makes variant comparisons tightly paired.
    """

    def __init__(self, seed_seq, family, dots):
        self._children = seed_seq.spawn(len(dots))
        self._rngs = {}
        self._family = family
        self._dots = dots

    def draw(self, idx):
        rng = self._rngs.get(idx)
        if rng is None:
            rng = np.random.default_rng(self._children[idx])
            self._rngs[idx] = rng
        return self._family.sample(self._dots[idx], rng)


def default_c_grid():
    """Radius-scaling tuning grid: 10^1, 10^0.5, ..., 10^-3."""
    return [10.0 ** (1.0 - 0.5 * i) for i in range(9)]


def make_radius_rule(kind, c=None):
    """Squared-radius rule for the confidence-driven policies.

    "paper_theory" uses the budget-driven radius at the run's confidence
    level; "tuned" replaces it with c times the learner's raw budget
    accumulator.
    """
    if kind == "paper_theory":
        return lambda conf, learner, delta: conf.radius_sq(
            learner.regret_budget(), delta=delta
        )
    if kind == "tuned":
        if c is None or c < 0:
            raise ValueError("tuned rule needs c >= 0")
        return lambda conf, learner, delta: c * learner.budget_accum
    raise ValueError(f"unknown radius rule {kind!r}")


def _make_family(spec):
    if spec.family == "gaussian":
        return GaussianFamily(spec.S, R=spec.R, noise_sd=spec.noise_sd)
    return make_family(spec.family, spec.S, R=spec.R)


def run_trial(spec, trial_index, probe_steps=()):
    """Run one full trial; deterministic given (spec, trial_index)."""
    if spec.policy not in ALL_POLICIES:
        raise ValueError(f"unknown policy {spec.policy!r}")
    if spec.hash_enabled and spec.policy not in HASHABLE_POLICIES:
        raise ValueError(f"policy {spec.policy!r} has no hashed selection path")
    family = _make_family(spec)
    streams = np.random.SeedSequence(spec.base_seed + trial_index).spawn(4)
    rng_inst = np.random.default_rng(streams[0])
    rng_ts = np.random.default_rng(streams[2])
    rng_hash = np.random.default_rng(streams[3])
    inst = gen_instance(spec.d, spec.N, family, rng_inst)
    rewards = ArmRewardStreams(streams[1], family, inst.dots)
    if spec.policy == "ucb-glm":
        return _run_ucb_glm(spec, trial_index, inst, family, rewards, probe_steps)
    return _run_confidence_policy(
        spec, trial_index, inst, family, rewards, rng_ts, rng_hash, probe_steps
    )


def _algo_name(spec):
    return spec.policy + ("-hash" if spec.hash_enabled else "")


def _run_confidence_policy(spec, trial_index, inst, family, rewards, rng_ts,
                           rng_hash, probe_steps):
    consts = family.constants()
    learner = OnsGlmLearner(spec.d, spec.eps, spec.S, consts.kappa)
    conf = OnlineConfidenceSet(
        spec.d, spec.lam, spec.S, consts.R, consts.kappa, spec.delta
    )
    rule = make_radius_rule(spec.radius_rule, spec.c)
    delta_sel = spec.delta
    if spec.policy == "gloc-ts" and spec.radius_rule == "paper_theory":
        delta_sel = spec.delta / (8.0 * spec.T)
    c0 = spec.c0 if spec.c0 is not None else default_c0(consts)
    floor_mode = spec.floor_mode
    if floor_mode == "auto":
        floor_mode = "eig" if spec.d <= 64 else "bound"
    arms = inst.arms
    N = len(arms)
    cum = np.empty(spec.T)
    wall = np.empty(spec.T)
    cand_frac = np.empty(spec.T) if spec.hash_enabled else None
    probes = []
    index = None
    running = 0.0
    for t in range(1, spec.T + 1):
        tic = time.perf_counter()
        if spec.hash_enabled and (index is None or (t - 1) % spec.hash_rebuild_every == 0):
            pts = arms.X if spec.policy == "gloc-ts" else quadratic_features_matrix(arms.X)
            index = HashIndex(pts, spec.hash_k, spec.hash_U, rng_hash)
        radius_sq = rule(conf, learner, delta_sel)
        ell = conf.snapshot(radius_sq)
        frac = None
        if spec.policy == "gloc":
            idx = gloc_select(ell, arms)
        elif spec.policy == "gloc-ts":
            if spec.hash_enabled:
                theta_dot = sample_parameter(ell, rng_ts)
                idx, frac = _hashed_pick(
                    spec, index, theta_dot,
                    lambda sub: sub @ theta_dot, arms, rng_hash,
                )
            else:
                idx, _ = gloc_ts_select(ell, arms, rng_ts)
        else:  # qgloc
            floor = arm_norm_floor(
                ell.shape_inv, arms.r, mode=floor_mode, t=conf.t, lam=spec.lam
            )
            if spec.hash_enabled:
                qq = qgloc_query(ell, c0, floor)
                idx, frac = _hashed_pick(
                    spec, index, qq.flat,
                    lambda sub: qq.score_many(sub), arms, rng_hash,
                )
            else:
                idx = qgloc_select(ell, arms, c0, floor)
        x = arms.X[idx]
        y = rewards.draw(idx)
        z = float(x @ learner.predict())
        learner.update(x, y, family)
        conf.update(x, z)
        running += inst.regret_per_arm[idx]
        cum[t - 1] = running
        wall[t - 1] = (time.perf_counter() - tic) * 1e3
        if cand_frac is not None:
            cand_frac[t - 1] = frac if frac is not None else 1.0
        if t in probe_steps:
            probes.append(
                (t, learner.state_float_count() + conf.state_float_count())
            )
    return RegretTrace(
        algo=_algo_name(spec),
        trial=trial_index,
        cum_regret=cum,
        wall_ms=wall,
        candidates_frac=cand_frac,
        state_probes=probes,
    )


def _hashed_pick(spec, index, query_vec, sub_scorer, arms, rng_hash):
    """Hashed selection with exact-scan fallback; returns (index, frac)."""
    if not np.any(query_vec):
        # degenerate zero query: every arm scores equally, scan exactly
        return int(np.argmax(sub_scorer(arms.X))), 1.0
    best, ncand = hash_query(
        index, query_vec,
        probes=spec.hash_probes, dot_mode=spec.hash_dot_mode,
        m=spec.hash_m, rng=rng_hash,
        scorer=lambda I: sub_scorer(arms.X[I]),
    )
    if best is None:
        return int(np.argmax(sub_scorer(arms.X))), 1.0
    return best, ncand / len(arms)


def _run_ucb_glm(spec, trial_index, inst, family, rewards, probe_steps):
    if spec.radius_rule != "tuned":
        raise ValueError("ucb-glm supports only the tuned radius rule")
    arms = inst.arms
    pol = UcbGlmPolicy(family, arms, spec.T)
    cum = np.empty(spec.T)
    wall = np.empty(spec.T)
    probes = []
    running = 0.0
    for t in range(1, spec.T + 1):
        tic = time.perf_counter()
        alpha = float(np.sqrt(spec.c * spec.d * np.log(t))) if t > 1 else 0.0
        idx = pol.select(t, alpha)
        x = arms.X[idx]
        y = rewards.draw(idx)
        pol.observe(x, y)
        running += inst.regret_per_arm[idx]
        cum[t - 1] = running
        wall[t - 1] = (time.perf_counter() - tic) * 1e3
        if t in probe_steps:
            probes.append((t, pol.state_float_count()))
    return RegretTrace(
        algo=_algo_name(spec),
        trial=trial_index,
        cum_regret=cum,
        wall_ms=wall,
        state_probes=probes,
    )


def _trial_worker(args):
    spec, trial = args
    return run_trial(spec, trial)


def run_policy(spec, trials, jobs=1):
    """Run several trials of one spec; trials are independent and pairable."""
    if jobs <= 1 or trials <= 1:
        return [run_trial(spec, i) for i in range(trials)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        out = list(pool.map(_trial_worker, [(spec, i) for i in range(trials)]))
    return out


def tune_radius_coefficient(spec, c_grid, trials, jobs=1):
    """Pick the grid value with the lowest mean final regret.

    Returns (best_c, {c: mean_final_regret}, traces_at_best). Ties resolve
    to the earliest grid entry.
    """
    means = {}
    best_c = None
    best_traces = None
    for c in c_grid:
        traces = run_policy(replace(spec, c=float(c)), trials, jobs=jobs)
        mean_final = float(np.mean([tr.cum_regret[-1] for tr in traces]))
        means[float(c)] = mean_final
        if best_c is None or mean_final < means[best_c]:
            best_c = float(c)
            best_traces = traces
    return best_c, means, best_traces
