"""Command-line front end: experiment configuration, subcommands, CSV output.

Subcommands: ``simulate`` (regret experiments), ``hash-bench`` (retrieval
quality of the hash index), ``iprod-bench`` (sampled inner-product
estimators). Outputs are plain CSV / two-column plot data plus a JSON run
manifest; all files are written atomically and are reproducible from the
manifest (wall-clock columns excepted).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .envs import (
    ALL_POLICIES,
    HASHABLE_POLICIES,
    TrialSpec,
    default_c_grid,
    run_policy,
    tune_radius_coefficient,
)
from .hashing import HashIndex, query as hash_query
from .sampling import (
    SamplingScheme,
    chebyshev_bound,
    gaussian_variance_study,
    hoeffding_bound,
)


class ConfigError(ValueError):
    pass


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _parse_int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _parse_str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    subcommand: str
    family: str = "logit"
    policy: list = field(default_factory=lambda: ["gloc"])
    d: int = 10
    N: int = 100
    T: int = 3000
    trials: int = 40
    delta: float = 0.1
    lam: float = 1.0
    eps: float = 1.0
    S: float = 1.0
    c0: float | None = None
    radius: str = "tuned"
    c_grid: list = field(default_factory=default_c_grid)
    seed: int = 0
    jobs: int = 1
    output_dir: str = "out"
    hash_enabled: bool = False
    hash_k: int = 12
    hash_U: int = 24
    hash_probes: int = 12
    hash_dot_mode: str = "exact"
    hash_m: int = 64
    hash_rebuild_every: int = 500
    queries: int = 200
    m_grid: list = field(default_factory=lambda: [4, 16, 64])
    eps_grid: list = field(default_factory=lambda: [0.5, 1.0, 2.0])

    def to_file_text(self):
        """Config in the line-oriented ``key = value`` file format."""
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "subcommand":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            lines.append(f"{_FILE_KEY[f.name]} = {value}")
        return "\n".join(lines) + "\n"

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


# field name -> (file/flag key, parser)
_FIELD_PARSERS = {
    "family": ("family", str),
    "policy": ("policy", _parse_str_list),
    "d": ("d", int),
    "N": ("N", int),
    "T": ("T", int),
    "trials": ("trials", int),
    "delta": ("delta", float),
    "lam": ("lambda", float),
    "eps": ("eps", float),
    "S": ("S", float),
    "c0": ("c0", float),
    "radius": ("radius", str),
    "c_grid": ("c-grid", _parse_float_list),
    "seed": ("seed", int),
    "jobs": ("jobs", int),
    "output_dir": ("output-dir", str),
    "hash_enabled": ("hash-enabled", _parse_bool),
    "hash_k": ("hash-k", int),
    "hash_U": ("hash-U", int),
    "hash_probes": ("hash-probes", int),
    "hash_dot_mode": ("hash-dot-mode", str),
    "hash_m": ("hash-m", int),
    "hash_rebuild_every": ("hash-rebuild-every", int),
    "queries": ("queries", int),
    "m_grid": ("m-grid", _parse_int_list),
    "eps_grid": ("eps-grid", _parse_float_list),
}
_FILE_KEY = {name: key for name, (key, _) in _FIELD_PARSERS.items()}
_BY_FILE_KEY = {key: (name, parser) for name, (key, parser) in _FIELD_PARSERS.items()}


def _read_config_file(path):
    values = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in _BY_FILE_KEY:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
        name, parser = _BY_FILE_KEY[key]
        try:
            values[name] = parser(value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {exc}") from exc
    return values


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="glbandit",
        description="Generalized linear bandit toolkit",
    )
    sub = parser.add_subparsers(dest="subcommand")
    for name in ("simulate", "hash-bench", "iprod-bench"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--family", default=None)
        p.add_argument("--policy", default=None, help="comma-separated policies")
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--N", type=int, default=None)
        p.add_argument("--T", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--S", type=float, default=None)
        p.add_argument("--c0", type=float, default=None)
        p.add_argument("--radius", default=None,
                       choices=("paper_theory", "tuned"))
        p.add_argument("--c-grid", dest="c_grid", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--output-dir", dest="output_dir", default=None)
        p.add_argument("--hash", dest="hash_enabled",
                       action=argparse.BooleanOptionalAction, default=None)
        p.add_argument("--hash-k", dest="hash_k", type=int, default=None)
        p.add_argument("--hash-U", dest="hash_U", type=int, default=None)
        p.add_argument("--hash-probes", dest="hash_probes", type=int, default=None)
        p.add_argument("--hash-dot-mode", dest="hash_dot_mode", default=None,
                       choices=("exact", "l1_sampled"))
        p.add_argument("--hash-m", dest="hash_m", type=int, default=None)
        p.add_argument("--hash-rebuild-every", dest="hash_rebuild_every",
                       type=int, default=None)
        p.add_argument("--queries", type=int, default=None)
        p.add_argument("--m-grid", dest="m_grid", default=None)
        p.add_argument("--eps-grid", dest="eps_grid", default=None)
    return parser


def parse_config(argv):
    """Build a validated config from argv; file values yield to flags."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        raise ConfigError("missing subcommand: simulate | hash-bench | iprod-bench")
    values = {}
    if ns.config:
        values.update(_read_config_file(ns.config))
    for name, (_key, parse) in _FIELD_PARSERS.items():
        flag_value = getattr(ns, name, None)
        if flag_value is None:
            continue
        if isinstance(flag_value, str) and parse is not str:
            flag_value = parse(flag_value)
        values[name] = flag_value
    if "seed" not in values and os.environ.get("GLB_SEED"):
        try:
            values["seed"] = int(os.environ["GLB_SEED"])
        except ValueError as exc:
            raise ConfigError(f"GLB_SEED must be an integer: {exc}") from exc
    config = ExperimentConfig(subcommand=ns.subcommand, **values)
    validate_config(config)
    return config


def validate_config(config):
    if config.family not in ("logit", "probit", "gaussian"):
        raise ConfigError("family must be logit, probit or gaussian")
    for p in config.policy:
        if p not in ALL_POLICIES:
            raise ConfigError(
                f"unknown policy '{p}'; expected one of {', '.join(ALL_POLICIES)}"
            )
    if not config.policy:
        raise ConfigError("at least one policy is required")
    for name in ("d", "N", "T", "trials", "jobs", "queries"):
        if getattr(config, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if not 0.0 < config.delta < 1.0:
        raise ConfigError("delta must be in (0,1)")
    for name in ("lam", "eps"):
        if getattr(config, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if config.S < 1.0:
        raise ConfigError("S must be >= 1 (the hidden parameter is unit norm)")
    if config.c0 is not None and config.c0 <= 0:
        raise ConfigError("c0 must be positive")
    if config.radius not in ("paper_theory", "tuned"):
        raise ConfigError("radius must be paper_theory or tuned")
    if config.radius == "tuned":
        if not config.c_grid or any(c <= 0 for c in config.c_grid):
            raise ConfigError("c-grid must be a nonempty list of positive reals")
    elif "ucb-glm" in config.policy:
        raise ConfigError("ucb-glm supports only the tuned radius rule")
    if config.hash_enabled:
        for p in config.policy:
            if p not in HASHABLE_POLICIES:
                raise ConfigError(f"policy '{p}' has no hashed selection path")
        if config.hash_k < 0 or config.hash_U < 1:
            raise ConfigError("need hash-k >= 0 and hash-U >= 1")
        if config.hash_probes < 0:
            raise ConfigError("hash-probes must be >= 0")
        if config.hash_dot_mode not in ("exact", "l1_sampled"):
            raise ConfigError("hash-dot-mode must be exact or l1_sampled")
        if config.hash_m < 1:
            raise ConfigError("hash-m must be >= 1")
        if config.hash_rebuild_every < 1:
            raise ConfigError("hash-rebuild-every must be >= 1")
    if config.subcommand == "iprod-bench":
        if not config.m_grid or any(m < 1 for m in config.m_grid):
            raise ConfigError("m-grid must be a nonempty list of integers >= 1")
        if not config.eps_grid or any(e <= 0 for e in config.eps_grid):
            raise ConfigError("eps-grid must be a nonempty list of positive reals")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(float(value))


def atomic_write(path, text):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) if not isinstance(v, str) else v for v in row)
                 for row in rows)
    atomic_write(path, "\n".join(lines) + "\n")


def version_string():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=here, capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    return f"glbandit-{__version__}"


def write_manifest(config, path):
    manifest = {
        "config": config.as_dict(),
        "version": version_string(),
        "seed": config.seed,
    }
    atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _spec_from_config(config, policy):
    return TrialSpec(
        policy=policy,
        family=config.family,
        d=config.d,
        N=config.N,
        T=config.T,
        S=config.S,
        delta=config.delta,
        lam=config.lam,
        eps=config.eps,
        c0=config.c0,
        radius_rule=config.radius,
        c=config.c_grid[0] if config.c_grid else 0.1,
        base_seed=config.seed,
        hash_enabled=config.hash_enabled,
        hash_k=config.hash_k,
        hash_U=config.hash_U,
        hash_probes=config.hash_probes,
        hash_dot_mode=config.hash_dot_mode,
        hash_m=config.hash_m,
        hash_rebuild_every=config.hash_rebuild_every,
    )


def _run_simulate(config):
    os.makedirs(config.output_dir, exist_ok=True)
    write_manifest(config, os.path.join(config.output_dir, "manifest.json"))
    all_traces = []
    tuning_rows = []
    for policy in config.policy:
        spec = _spec_from_config(config, policy)
        if config.radius == "tuned" and len(config.c_grid) > 1:
            best_c, means, traces = tune_radius_coefficient(
                spec, config.c_grid, config.trials, jobs=config.jobs
            )
            for c in config.c_grid:
                tuning_rows.append(
                    (traces[0].algo, c, means[float(c)], int(c == best_c))
                )
        else:
            traces = run_policy(spec, config.trials, jobs=config.jobs)
        all_traces.extend(traces)

    regret_rows = []
    for tr in all_traces:
        frac = tr.candidates_frac
        for t in range(tr.cum_regret.shape[0]):
            regret_rows.append((
                tr.algo, tr.trial, t + 1, tr.cum_regret[t], tr.wall_ms[t],
                None if frac is None else frac[t],
            ))
    write_csv(
        os.path.join(config.output_dir, "regret.csv"),
        ["algo", "trial", "t", "cum_regret", "wall_ms", "candidates_frac"],
        regret_rows,
    )

    agg_rows = []
    algos = []
    for tr in all_traces:
        if tr.algo not in algos:
            algos.append(tr.algo)
    for algo in algos:
        stack = np.vstack([tr.cum_regret for tr in all_traces if tr.algo == algo])
        means = stack.mean(axis=0)
        if stack.shape[0] > 1:
            ci = 1.959963984540054 * stack.std(axis=0, ddof=1) / math.sqrt(stack.shape[0])
        else:
            ci = np.zeros_like(means)
        agg_rows.extend(
            (algo, t + 1, means[t], ci[t]) for t in range(means.shape[0])
        )
        plot_text = "".join(
            f"{t + 1} {_fmt(means[t])}\n" for t in range(means.shape[0])
        )
        atomic_write(
            os.path.join(config.output_dir, f"plot_{algo}.dat"), plot_text
        )
    write_csv(
        os.path.join(config.output_dir, "aggregate.csv"),
        ["algo", "t", "mean", "ci95"],
        agg_rows,
    )
    if tuning_rows:
        write_csv(
            os.path.join(config.output_dir, "tuning.csv"),
            ["algo", "c", "mean_final_regret", "selected"],
            tuning_rows,
        )
    return 0


def _run_hash_bench(config):
    os.makedirs(config.output_dir, exist_ok=True)
    write_manifest(config, os.path.join(config.output_dir, "manifest.json"))
    streams = np.random.SeedSequence(config.seed).spawn(3)
    rng_data, rng_proj, rng_query = (np.random.default_rng(s) for s in streams)
    X = rng_data.standard_normal((config.N, config.d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    index = HashIndex(X, config.hash_k, config.hash_U, rng_proj)
    rows = []
    for qi in range(config.queries):
        q = rng_query.standard_normal(config.d)
        q /= np.linalg.norm(q)
        exact = X @ q
        best = float(exact.max())
        got, ncand = hash_query(
            index, q, probes=config.hash_probes,
            dot_mode=config.hash_dot_mode, m=config.hash_m, rng=rng_query,
        )
        if got is None:
            ratio, frac = float(exact[int(np.argmax(exact))] / best), 1.0
        else:
            ratio, frac = float(exact[got] / best), ncand / config.N
        rows.append((config.hash_k, config.hash_U, config.hash_probes,
                     qi, ratio, frac))
    write_csv(
        os.path.join(config.output_dir, "recall.csv"),
        ["k", "U", "probes", "query", "ip_ratio", "candidates_frac"],
        rows,
    )
    return 0


def _run_iprod_bench(config):
    os.makedirs(config.output_dir, exist_ok=True)
    write_manifest(config, os.path.join(config.output_dir, "manifest.json"))
    rng = np.random.default_rng(config.seed)
    study = gaussian_variance_study(config.d, config.trials, rng)
    var_rows = []
    for i in range(config.trials):
        var_rows.append(("l1", config.d, i, study["var_l1"][i]))
        var_rows.append(("l2", config.d, i, study["var_l2"][i]))
    write_csv(
        os.path.join(config.output_dir, "variances.csv"),
        ["scheme", "d", "trial", "variance"],
        var_rows,
    )

    q = rng.standard_normal(config.d)
    a = rng.standard_normal(config.d)
    truth = float(q @ a)
    schemes = {"l1": SamplingScheme("l1", q), "l2": SamplingScheme("l2", q)}
    bounds = {"l1": hoeffding_bound, "l2": chebyshev_bound}
    bound_rows = []
    for name, scheme in schemes.items():
        for m in config.m_grid:
            estimates = scheme.sampled_dots(
                np.tile(a, (config.trials, 1)), m, rng
            )
            err = np.abs(estimates - truth)
            for eps in config.eps_grid:
                bound_rows.append((
                    name, m, eps, bounds[name](q, a, m, eps),
                    float(np.mean(err >= eps)),
                ))
    write_csv(
        os.path.join(config.output_dir, "bounds.csv"),
        ["scheme", "m", "eps", "bound", "empirical_fail"],
        bound_rows,
    )
    return 0


def run(config):
    """Execute a validated config; returns a process exit code."""
    if config.subcommand == "simulate":
        return _run_simulate(config)
    if config.subcommand == "hash-bench":
        return _run_hash_bench(config)
    if config.subcommand == "iprod-bench":
        return _run_iprod_bench(config)
    raise ConfigError(f"unknown subcommand {config.subcommand!r}")


def main(argv=None):
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
        return run(config)
    except ConfigError as exc:
        print(f"glbandit: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"glbandit: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
