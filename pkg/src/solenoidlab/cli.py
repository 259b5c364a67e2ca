"""Experiment orchestration and report emission.

One subcommand per experiment; every knob has a default so bare runs work.
Each run writes its artifacts (CSV series, JSON scalars) plus a manifest
capturing the fully resolved configuration; re-running from the manifest
reproduces the CSV bodies byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circle_map import coefficient_table, lyapunov_target, verify_lattice
from .fourier import decay_exponent, dyadic_frequencies, mu_hat, nu_hat
from .solenoid import periodic_orbit, step
from .symbolic import cylinder_rows
from .thermo import (
    EquilibriumData,
    GridFunction,
    gibbs_ratio_stats,
    large_deviation_profile,
    mme_potential,
    solve_equilibrium,
    srb_potential,
)
from .twisted import concentration_report, exp_sum, twisted_norm_profile, zeta_table

EXPERIMENTS = (
    "construct",
    "equilibrium",
    "gibbs",
    "deviations",
    "twisted",
    "nonconc",
    "expsum",
    "fourier",
)

DEFAULTS = {
    "n_max": 5,
    "bump_kind": "exp",
    "potential": "mme",  # mme | srb | path to a JSON array file
    "grid_m": 1 << 14,
    "seed": 0,
    "lattice_k_max": 20,
    "orbit_periods": [1, 2, 3, 4, 5],
    "gibbs_levels": [8, 10, 12],
    # the zero potential's Birkhoff fluctuations sit at the 1e-5 scale; O(1)
    # potentials want epsilon around 0.25 instead
    "deviation_epsilon": 3e-5,
    "deviation_levels": [6, 7, 8, 9, 10, 11, 12, 13, 14],
    "twist_t": 100.0,
    "twist_steps": 80,
    "zeta_n": 12,
    "zeta_context": "0101010101010",
    "sigma_lo": 1e-4,
    "sigma_hi": 1e-1,
    "sigma_count": 10,
    "eps0": 0.26,
    "expsum_k": 2,
    "eta_count": 12,
    "freq_base": 100.0,
    "freq_count": 11,
    "mu_samples": 1_000_000,
    "mu_depth": 20,
    "mu_cross_t": [10.0, 100.0, 1000.0],
}


class ConfigError(Exception):
    """Configuration failed validation."""


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def resolve_config(overrides: dict | None = None, config_path: str | None = None) -> dict:
    """Merge defaults, an optional config file (or manifest), and overrides."""
    config = dict(DEFAULTS)
    if config_path:
        with open(config_path) as fh:
            loaded = json.load(fh)
        if isinstance(loaded, dict) and "config" in loaded and "experiment" in loaded:
            loaded = loaded["config"]  # accept an emitted manifest directly
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            config[key] = value
    if (
        config["zeta_context"] == DEFAULTS["zeta_context"]
        and config["zeta_n"] != DEFAULTS["zeta_n"]
    ):
        # keep the alternating default context in step with a changed block length
        config["zeta_context"] = ("01" * (config["zeta_n"] + 1))[: config["zeta_n"] + 1]
    _validate(config)
    return config


def _validate(config: dict) -> None:
    unknown = set(config) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    m = config["grid_m"]
    if not isinstance(m, int) or m < 1024 or m & (m - 1):
        raise ConfigError(f"grid_m must be a power of two >= 1024, got {m}")
    if config["n_max"] < 1:
        raise ConfigError("n_max must be >= 1")
    if config["lattice_k_max"] < 2:
        raise ConfigError("lattice_k_max must be >= 2")
    if not 1 <= config["zeta_n"] <= 14:
        raise ConfigError("zeta_n must be in 1..14")
    ctx = config["zeta_context"]
    if set(ctx) - {"0", "1"} or len(ctx) != config["zeta_n"] + 1:
        raise ConfigError("zeta_context must be a 0/1 string of length zeta_n + 1")
    if config["expsum_k"] < 1:
        raise ConfigError("expsum_k must be >= 1")
    if config["deviation_epsilon"] <= 0:
        raise ConfigError("deviation_epsilon must be positive")
    if not 0 < config["sigma_lo"] < config["sigma_hi"]:
        raise ConfigError("need 0 < sigma_lo < sigma_hi")
    if config["eps0"] <= 0:
        raise ConfigError("eps0 must be positive")
    if config["mu_samples"] < 1000:
        raise ConfigError("mu_samples must be >= 1000")
    if 4.0 ** (-config["mu_depth"]) > 1e-9:
        raise ConfigError("mu_depth leaves the fiber unresolved")
    if config["twist_steps"] < 1 or config["twist_steps"] > 200:
        raise ConfigError("twist_steps must be in 1..200")
    levels = config["deviation_levels"]
    if any(b <= a for a, b in zip(levels, levels[1:])) or (levels and levels[-1] > 40):
        raise ConfigError("deviation_levels must be increasing and <= 40")
    if any(not 1 <= n <= 16 for n in config["gibbs_levels"]):
        raise ConfigError("gibbs_levels must be in 1..16")


def _build_potential(config: dict, spec) -> GridFunction:
    m = config["grid_m"]
    kind = config["potential"]
    if kind == "mme":
        return mme_potential(m)
    if kind == "srb":
        return srb_potential(spec, m)
    path = Path(kind)
    if not path.exists():
        raise ConfigError(f"potential must be 'mme', 'srb', or a JSON file; got {kind!r}")
    values = np.asarray(json.load(open(path)), dtype=float)
    if values.shape != (m,):
        raise ConfigError(f"custom potential has {values.size} values, expected {m}")
    return GridFunction(values)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _equilibrium(config: dict) -> EquilibriumData:
    spec = coefficient_table(config["n_max"], config["bump_kind"])
    return solve_equilibrium(spec, _build_potential(config, spec))


def _run_construct(config: dict, out: Path) -> None:
    spec = coefficient_table(config["n_max"], config["bump_kind"])
    report = verify_lattice(config["lattice_k_max"])
    doc = json.loads(spec.to_json())
    doc["lyapunov_targets"] = {
        str(n): _fmt(lyapunov_target(spec, n)) for n in range(2, spec.n_max + 1)
    }
    _write_json(out / "coefficients.json", doc)
    _write_json(
        out / "lattice.json",
        {
            "k_max": report.k_max,
            "radius_base": report.radius_base,
            "intervals_checked": report.intervals_checked,
            "pairs_checked": report.pairs_checked,
            "exclusions_checked": report.exclusions_checked,
            "disjoint_ok": report.disjoint_ok,
            "exclusions_ok": report.exclusions_ok,
            "first_violation": report.first_violation,
        },
    )
    for N in config["orbit_periods"]:
        orbit = periodic_orbit(spec, N)
        rows = []
        for p in orbit.points:
            _, deriv = step(spec, p)
            rows.append((p.theta, p.x, p.y, deriv))
        _write_csv(out / f"orbit_{N}.csv", ["theta", "x", "y", "unstable_deriv"], rows)


def _run_equilibrium(config: dict, out: Path) -> EquilibriumData:
    eq = _equilibrium(config)
    _write_json(
        out / "equilibrium.json",
        {
            "spec": json.loads(eq.spec.to_json()),
            "potential": config["potential"],
            "m": eq.m,
            "pressure": _fmt(eq.pressure),
            "lyapunov": _fmt(eq.lyapunov),
            "dimension": _fmt(eq.dimension),
            "psi": [float(v) for v in eq.potential_psi.values],
            "eigenfunction": [float(v) for v in eq.eigenfunction.values],
            "density": [float(v) for v in eq.density.values],
            "phi": [float(v) for v in eq.phi.values],
        },
    )
    return eq


def _run_gibbs(config: dict, out: Path, eq: EquilibriumData) -> None:
    rows = []
    for n in config["gibbs_levels"]:
        lo, hi = gibbs_ratio_stats(eq, n)
        rows.append((n, lo, hi))
    _write_csv(out / "gibbs.csv", ["n", "ratio_min", "ratio_max"], rows)
    level = min(min(config["gibbs_levels"]), 10)
    _write_csv(
        out / "cylinders.csv",
        ["word", "lo", "hi", "anchor", "deriv_at_anchor"],
        cylinder_rows(eq.spec, level),
    )


def _run_deviations(config: dict, out: Path, eq: EquilibriumData) -> None:
    prof = large_deviation_profile(
        eq, config["deviation_epsilon"], config["deviation_levels"], seed=config["seed"]
    )
    _write_csv(out / "deviations.csv", ["n", "fraction"], prof.entries)
    _write_json(
        out / "deviations.json",
        {"epsilon": _fmt(prof.epsilon), "fitted_rate": _fmt(prof.fitted_rate)},
    )


def _run_twisted(config: dict, out: Path, eq: EquilibriumData) -> None:
    norms = twisted_norm_profile(eq, config["twist_t"], config["twist_steps"])
    rows = [(n + 1, float(v)) for n, v in enumerate(norms)]
    _write_csv(out / "twisted.csv", ["n", "sup_norm"], rows)
    slope = float(np.polyfit(np.arange(1, norms.size + 1), np.log(norms), 1)[0])
    _write_json(
        out / "twisted.json",
        {"t": _fmt(config["twist_t"]), "fitted_log_slope": _fmt(slope)},
    )


def _zeta(config: dict, eq: EquilibriumData):
    context = tuple(int(c) for c in config["zeta_context"])
    return zeta_table(eq, context, config["zeta_n"])


def _run_nonconc(config: dict, out: Path, eq: EquilibriumData) -> None:
    table = _zeta(config, eq)
    sigmas = np.geomspace(config["sigma_lo"], config["sigma_hi"], config["sigma_count"])
    report = concentration_report(table, sigmas)
    rows = [
        (float(s), c, c / report.N**2)
        for s, c in zip(report.sigma_list, report.counts)
    ]
    _write_csv(out / "nonconc.csv", ["sigma", "count", "count_over_N2"], rows)
    _write_json(
        out / "nonconc.json",
        {"N": report.N, "gamma_emp": _fmt(report.gamma_emp), "zeta_n": config["zeta_n"]},
    )


def _run_expsum(config: dict, out: Path, eq: EquilibriumData) -> None:
    table = _zeta(config, eq)
    n = config["zeta_n"]
    eps0 = config["eps0"]
    etas = np.geomspace(
        np.exp(eps0 * n / 2.0), np.exp(2.0 * eps0 * n), config["eta_count"]
    )
    tables = [table] * config["expsum_k"]
    rows = [(float(eta), exp_sum(float(eta), tables)) for eta in etas]
    _write_csv(out / "expsum.csv", ["eta", "exp_sum_modulus"], rows)
    slope = float(
        np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0]
    )
    _write_json(
        out / "expsum.json",
        {"eps0": _fmt(eps0), "k": config["expsum_k"], "fitted_slope": _fmt(slope)},
    )


def _run_fourier(config: dict, out: Path, eq: EquilibriumData) -> None:
    freqs = dyadic_frequencies(config["freq_base"], config["freq_count"])
    series = [(float(t), abs(nu_hat(eq, t))) for t in freqs]
    fit = decay_exponent(series)
    _write_csv(
        out / "decay.csv",
        ["frequency", "modulus", "stderr"],
        [(f, m, 0.0) for f, m in series],
    )
    cross = []
    for t in config["mu_cross_t"]:
        value, err = mu_hat(
            eq.spec,
            eq,
            (float(t), 0.0, 0.0),
            samples=config["mu_samples"],
            depth=config["mu_depth"],
            seed=config["seed"],
        )
        ref = nu_hat(eq, float(t))
        cross.append(
            {
                "t": _fmt(t),
                "mu_hat_mod": _fmt(abs(value)),
                "nu_hat_mod": _fmt(abs(ref)),
                "abs_diff": _fmt(abs(value - ref)),
                "stderr": _fmt(err),
            }
        )
    _write_json(
        out / "summary.json",
        {
            "exponent": _fmt(fit.exponent),
            "stderr": _fmt(fit.stderr),
            "n_points": fit.n_used,
            "marginal_cross_check": cross,
        },
    )


def run(experiment: str, config: dict, out_dir: str | os.PathLike) -> None:
    """Execute one experiment (or 'all') and write artifacts plus a manifest."""
    if experiment != "all" and experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    _validate(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()

    chain = EXPERIMENTS if experiment == "all" else (experiment,)
    eq: EquilibriumData | None = None
    for name in chain:
        if name == "construct":
            _run_construct(config, out)
            continue
        if eq is None:
            eq = _run_equilibrium(config, out)
        if name == "gibbs":
            _run_gibbs(config, out, eq)
        elif name == "deviations":
            _run_deviations(config, out, eq)
        elif name == "twisted":
            _run_twisted(config, out, eq)
        elif name == "nonconc":
            _run_nonconc(config, out, eq)
        elif name == "expsum":
            _run_expsum(config, out, eq)
        elif name == "fourier":
            _run_fourier(config, out, eq)

    _write_json(
        out / "manifest.json",
        {
            "experiment": experiment,
            "config": config,
            "version": __version__,
            "workers": os.environ.get("SOLENOIDLAB_WORKERS", "1"),
            "wall_clock_seconds": time.time() - started,
        },
    )


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solenoidlab",
        description="Construct the nonlinear solenoid and run its verification experiments.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS + ("all",):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config or a previously emitted manifest")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, help="Monte-Carlo seed")
        p.add_argument("--grid", type=int, help="grid size (power of two >= 1024)")
        p.add_argument("--n-max", type=int, help="coefficient truncation order")
        p.add_argument("--potential", help="mme, srb, or path to a JSON grid")
        p.add_argument("--bump-kind", choices=("exp", "smoothstep"))
        if name in ("construct", "all"):
            p.add_argument("--k-max", type=int, help="lattice verification order")
        if name in ("twisted", "all"):
            p.add_argument("--t", type=float, help="twist frequency")
            p.add_argument("--steps", type=int, help="twisted iteration count")
        if name in ("deviations", "all"):
            p.add_argument("--epsilon", type=float, help="deviation window")
        if name in ("nonconc", "expsum", "all"):
            p.add_argument("--zeta-n", type=int, help="phase-table block length")
            p.add_argument("--context", help="context word as a 0/1 string")
            p.add_argument("--eps0", type=float, help="eta-window exponent")
        if name in ("fourier", "all"):
            p.add_argument("--samples", type=int, help="Monte-Carlo sample count")
            p.add_argument("--depth", type=int, help="attractor iteration depth")
    return parser


_FLAG_TO_KEY = {
    "seed": "seed",
    "grid": "grid_m",
    "n_max": "n_max",
    "potential": "potential",
    "bump_kind": "bump_kind",
    "k_max": "lattice_k_max",
    "t": "twist_t",
    "steps": "twist_steps",
    "epsilon": "deviation_epsilon",
    "zeta_n": "zeta_n",
    "context": "zeta_context",
    "eps0": "eps0",
    "samples": "mu_samples",
    "depth": "mu_depth",
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    overrides = {
        key: getattr(args, flag)
        for flag, key in _FLAG_TO_KEY.items()
        if hasattr(args, flag)
    }
    try:
        config = resolve_config(overrides, args.config)
        run(args.experiment, config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # propagate operation failures as a diagnostic
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
