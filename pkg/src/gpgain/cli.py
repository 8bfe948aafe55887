"""Experiment harness: gain sweeps, regret benchmarks, spectrum dumps, verification.

Subcommands
-----------
gamma     greedy information-gain sweep over horizons, with the projection
          and eigendecay bounds evaluated per horizon (soundness asserted).
regret    policy benchmark over seeds; per-seed trace CSVs plus a summary.
spectrum  Nystrom eigenvalues of a kernel on a quadrature grid plus a
          fitted decay profile.
verify    run the numerical verification suite.

A JSON config file (--config) may supply any field; command-line flags
override it.  Exit codes: 0 success, 1 check failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import io
from .bandit import PolicyConfig, regret_summary, run_policy
from .errors import ConfigError, GPGainError
from .gp import sample_gp, sample_rkhs
from .infogain import (
    decay_gain_bound,
    effective_dimension,
    greedy_gamma,
    projected_gain_bound,
)
from .kernels import (
    KernelSpec,
    fit_decay_profile,
    kernel_from_dict,
    kernel_to_dict,
    nystrom_spectrum,
    tail_mass,
    profile_to_dict,
)
from .rng import substream
from .verify import run_verification

DEFAULT_HORIZONS = (64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    kernel: KernelSpec | None
    tau: float
    horizons: tuple[int, ...]
    grid_size: int
    seeds: tuple[int, ...]
    master_seed: int
    out: Path | None
    policy: PolicyConfig | None = None
    num_eigs: int = 64
    fit_range: tuple[int, int] = (3, 20)
    mc_samples: int = 100_000
    fault: str | None = None


def _parse_int_list(text: str, field: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{field}: expected comma-separated integers, got {text!r}")
    if not values:
        raise ConfigError(f"{field}: empty list")
    return values


def _load_kernel(text: str) -> KernelSpec:
    raw = text.strip()
    if not raw.startswith("{"):
        path = Path(raw)
        if not path.exists():
            raise ConfigError(f"kernel: file {raw!r} does not exist")
        raw = path.read_text()
    try:
        return kernel_from_dict(json.loads(raw))
    except (json.JSONDecodeError, KeyError, ValueError, GPGainError) as exc:
        raise ConfigError(f"kernel: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpgain", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with default values for any flag")
        p.add_argument("--kernel", help="kernel spec: JSON file path or inline JSON")
        p.add_argument("--tau", type=float, help="observation noise variance (default 1.0)")
        p.add_argument("--grid-size", type=int, dest="grid_size",
                       help="grid points per dimension (default 512 for d=1, 64 for d>=2)")
        p.add_argument("--seed", type=int, dest="master_seed", help="master seed (default 0)")
        p.add_argument("--out", help="output directory")

    g = sub.add_parser("gamma", help="greedy information-gain sweep with bounds")
    common(g)
    g.add_argument("--horizons", help="comma-separated increasing horizons "
                                      "(default 64,128,256,512,1024)")

    r = sub.add_parser("regret", help="policy regret benchmark")
    common(r)
    r.add_argument("--horizon", type=int, help="steps per trace (default 500)")
    r.add_argument("--seeds", help="comma-separated per-trace seeds (default 0..9)")
    r.add_argument("--algo", choices=["ucb", "ts"], help="policy (default ucb)")
    r.add_argument("--setting", choices=["bayesian", "frequentist"],
                   help="objective model (default bayesian)")
    r.add_argument("--delta", type=float, help="confidence level in (0,1) (default 0.1)")
    r.add_argument("--norm-bound", type=float, dest="norm_bound",
                   help="function-space norm bound (frequentist)")
    r.add_argument("--noise-scale", type=float, dest="noise_scale",
                   help="sub-Gaussian noise scale (frequentist)")
    r.add_argument("--width-constant", type=float, dest="width_constant",
                   help="Bayesian width multiplier (default 1.0)")

    s = sub.add_parser("spectrum", help="Nystrom eigenvalues and fitted decay profile")
    common(s)
    s.add_argument("--num-eigs", type=int, dest="num_eigs",
                   help="number of eigenvalues to keep (default 64)")
    s.add_argument("--fit-lo", type=int, dest="fit_lo", help="first fitted index (default 3)")
    s.add_argument("--fit-hi", type=int, dest="fit_hi", help="last fitted index (default 20)")

    v = sub.add_parser("verify", help="run the verification suite")
    common(v)
    v.add_argument("--mc-samples", type=int, dest="mc_samples",
                   help="Monte Carlo sample count (default 100000)")
    v.add_argument("--fault-fixture", dest="fault", choices=["asymmetric"],
                   help="inject a known-bad fixture (negative testing)")
    return parser


def _merge_config_file(args: argparse.Namespace) -> dict:
    merged = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config: file {args.config!r} does not exist")
        try:
            merged.update(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})")
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            merged[key] = value
    return merged


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    raw = _merge_config_file(args)
    command = raw["command"]

    kernel = None
    if raw.get("kernel") is not None:
        k = raw["kernel"]
        kernel = _load_kernel(k if isinstance(k, str) else json.dumps(k))
    if command in ("gamma", "regret", "spectrum") and kernel is None:
        raise ConfigError("kernel: required for this command")

    tau = float(raw.get("tau", 1.0))
    if tau <= 0:
        raise ConfigError(f"tau: must be positive, got {tau}")

    if command == "regret":
        horizons = (int(raw.get("horizon", 500)),)
    else:
        h = raw.get("horizons", ",".join(str(t) for t in DEFAULT_HORIZONS))
        horizons = _parse_int_list(h, "horizons") if isinstance(h, str) else tuple(int(t) for t in h)
    if any(t < 1 for t in horizons):
        raise ConfigError(f"horizons: must be positive, got {horizons}")
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigError(f"horizons: must be strictly increasing, got {horizons}")

    if raw.get("grid_size") is not None:
        grid_size = int(raw["grid_size"])
    else:
        dim = kernel.domain.dim if kernel is not None else 1
        grid_size = 512 if dim == 1 else 64
    if grid_size < 1:
        raise ConfigError(f"grid_size: must be positive, got {grid_size}")

    seeds_raw = raw.get("seeds", ",".join(str(s) for s in range(10)))
    seeds = _parse_int_list(seeds_raw, "seeds") if isinstance(seeds_raw, str) \
        else tuple(int(s) for s in seeds_raw)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds: duplicate values")

    master_seed = int(raw.get("master_seed", 0))

    out = raw.get("out")
    out_path = Path(out) if out is not None else None
    if command in ("gamma", "regret", "spectrum"):
        if out_path is None:
            raise ConfigError("out: required for this command")
        out_path.mkdir(parents=True, exist_ok=True)
        probe = out_path / ".write_probe"
        try:
            probe.touch()
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"out: directory {out_path} is not writable ({exc})")

    policy = None
    if command == "regret":
        try:
            policy = PolicyConfig(
                algorithm=raw.get("algo", "ucb"),
                setting=raw.get("setting", "bayesian"),
                delta=float(raw.get("delta", 0.1)),
                norm_bound=raw.get("norm_bound"),
                noise_scale=raw.get("noise_scale"),
                width_constant=float(raw.get("width_constant", 1.0)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc))

    num_eigs = int(raw.get("num_eigs", 64))
    if num_eigs < 1:
        raise ConfigError(f"num_eigs: must be positive, got {num_eigs}")
    fit_range = (int(raw.get("fit_lo", 3)), int(raw.get("fit_hi", 20)))
    mc_samples = int(raw.get("mc_samples", 100_000))
    if mc_samples < 100:
        raise ConfigError(f"mc_samples: must be at least 100, got {mc_samples}")

    return ExperimentConfig(
        command=command,
        kernel=kernel,
        tau=tau,
        horizons=horizons,
        grid_size=grid_size,
        seeds=seeds,
        master_seed=master_seed,
        out=out_path,
        policy=policy,
        num_eigs=num_eigs,
        fit_range=fit_range,
        mc_samples=mc_samples,
        fault=raw.get("fault"),
    )


class _OutputSet:
    """Tracks written files so a failed run leaves no partial outputs."""

    def __init__(self):
        self.paths: list[Path] = []

    def register(self, path: Path) -> Path:
        self.paths.append(Path(path))
        return path

    def discard_all(self):
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _bound_inputs(config: ExperimentConfig):
    """Decay profile, feature bound, and kbar used by the bound calculators.

    Mercer kernels carry these directly; stationary kernels get an
    empirically fitted profile from a Nystrom spectrum on the run's grid.
    """
    kernel = config.kernel
    if kernel.family == "mercer":
        s = kernel.spectrum
        return s, s.decay, s.feature_bound, kernel.kbar, "declared" if s.decay else None
    grid = kernel.domain.quadrature_grid(config.grid_size)
    num = min(config.num_eigs, grid.shape[0])
    spectrum = nystrom_spectrum(kernel, grid, num)
    positive = int(np.sum(spectrum.eigenvalues > spectrum.eigenvalues[0] * 1e-12))
    hi = min(config.fit_range[1], positive)
    profile = fit_decay_profile(spectrum, (config.fit_range[0], hi))
    return spectrum, profile, spectrum.feature_bound, kernel.kbar, "fitted"


def run_gamma_sweep(config: ExperimentConfig) -> int:
    kernel = config.kernel
    grid = kernel.domain.grid(config.grid_size)
    t_max = config.horizons[-1]
    trace = greedy_gamma(kernel, grid, t_max, config.tau)

    spectrum, profile, psi, kbar, profile_source = _bound_inputs(config)
    rows = []
    violations = []
    for t in config.horizons:
        empirical = float(trace.cumulative_gain[t - 1])
        if profile is not None:
            d_star = effective_dimension(profile, psi, kbar, config.tau, t)
        else:
            d_star = spectrum.size  # finite-rank kernel: zero tail at full rank
        tail = tail_mass(spectrum, d_star)
        proj = projected_gain_bound(d_star, tail, kbar, config.tau, t)
        dec = decay_gain_bound(profile, psi, kbar, config.tau, t) if profile else None
        rows.append({"T": t, "empirical_gamma": empirical, "D_star": d_star,
                     "projection_bound": proj, "decay_bound": dec})
        if empirical > proj + 1e-8:
            violations.append(f"T={t}: empirical {empirical:.6f} > projection bound {proj:.6f}")
        if dec is not None and empirical > dec + 1e-8:
            violations.append(f"T={t}: empirical {empirical:.6f} > decay bound {dec:.6f}")

    log_t = np.log([r["T"] for r in rows])
    log_g = np.log([max(r["empirical_gamma"], 1e-300) for r in rows])
    slope = float(np.polyfit(log_t, log_g, 1)[0]) if len(rows) > 1 else float("nan")

    outputs = _OutputSet()
    try:
        io.write_gamma_sweep_csv(rows, outputs.register(config.out / "sweep.csv"))
        final = rows[-1]
        io.write_infogain_csv(
            replace(trace, rank_used=final["D_star"],
                    projection_bound=final["projection_bound"],
                    decay_bound=final["decay_bound"]),
            outputs.register(config.out / f"trace_T{t_max}.csv"),
        )
        io.write_json(
            {
                "command": "gamma",
                "kernel": kernel_to_dict(kernel),
                "tau": config.tau,
                "grid_size": config.grid_size,
                "horizons": list(config.horizons),
                "decay_profile": profile_to_dict(profile),
                "profile_source": profile_source,
                "gamma_slope": slope,
                "D_star": final["D_star"],
                "projection_bound": final["projection_bound"],
                "decay_bound": final["decay_bound"],
                "rows": rows,
            },
            outputs.register(config.out / "sweep.json"),
        )
    except Exception:
        outputs.discard_all()
        raise

    for line in violations:
        print(f"BOUND VIOLATION {line}", file=sys.stderr)
    print(f"gamma sweep: {len(rows)} horizons, slope={slope:.4f}, "
          f"wrote {config.out / 'sweep.csv'}")
    return 1 if violations else 0


def _gamma_bound_fn(spectrum, profile, psi, kbar, tau):
    if profile is None:
        return None

    def bound(t: int) -> float:
        if t == 0:
            return 0.0
        d = effective_dimension(profile, psi, kbar, tau, t)
        return projected_gain_bound(d, tail_mass(spectrum, d), kbar, tau, t)

    return bound


def run_regret_bench(config: ExperimentConfig) -> int:
    kernel = config.kernel
    if kernel.family != "mercer":
        raise ConfigError("kernel: regret benchmark needs a mercer kernel "
                          "(objectives are sampled from its spectrum)")
    spectrum = kernel.spectrum
    policy = config.policy
    horizon = config.horizons[0]
    grid = kernel.domain.grid(config.grid_size)

    gamma_bound = None
    if policy.setting == "frequentist":
        gamma_bound = _gamma_bound_fn(spectrum, spectrum.decay, spectrum.feature_bound,
                                      kernel.kbar, config.tau)

    traces = []
    for seed in config.seeds:
        obj_rng = substream(config.master_seed, f"seed{seed}", "objective")
        if policy.setting == "bayesian":
            objective = sample_gp(spectrum, spectrum.size, obj_rng)
        else:
            objective = sample_rkhs(spectrum, spectrum.size, policy.norm_bound, obj_rng)
        traces.append(run_policy(policy, objective, kernel, config.tau, grid,
                                 horizon, rng_seed=seed, gamma_bound=gamma_bound))

    summary = regret_summary(traces)
    outputs = _OutputSet()
    try:
        per_trace = []
        for tr in traces:
            io.write_regret_csv(tr, outputs.register(config.out / f"trace_seed{tr.seed}.csv"))
            width_final = float(tr.widths[-1])
            per_trace.append({
                "seed": tr.seed,
                "final_regret": tr.final_regret,
                "final_gain": tr.final_gain,
                "width_at_T": width_final,
                "comparator": width_final * math.sqrt(horizon * tr.final_gain),
            })
        io.write_summary_csv(summary, outputs.register(config.out / "summary.csv"))
        io.write_json(
            {
                "command": "regret",
                "kernel": kernel_to_dict(kernel),
                "tau": config.tau,
                "grid_size": config.grid_size,
                "horizon": horizon,
                "seeds": list(config.seeds),
                "master_seed": config.master_seed,
                "policy": {
                    "algorithm": policy.algorithm,
                    "setting": policy.setting,
                    "delta": policy.delta,
                    "norm_bound": policy.norm_bound,
                    "noise_scale": policy.noise_scale,
                    "width_constant": policy.width_constant,
                },
                "traces": per_trace,
            },
            outputs.register(config.out / "bench.json"),
        )
    except Exception:
        outputs.discard_all()
        raise
    print(f"regret bench: {len(traces)} seeds, horizon {horizon}, "
          f"median final regret {float(summary.median[-1]):.4f}, wrote {config.out}")
    return 0


def run_spectrum_dump(config: ExperimentConfig) -> int:
    kernel = config.kernel
    grid = kernel.domain.quadrature_grid(config.grid_size)
    num = min(config.num_eigs, grid.shape[0])
    spectrum = nystrom_spectrum(kernel, grid, num)
    positive = int(np.sum(spectrum.eigenvalues > spectrum.eigenvalues[0] * 1e-12))
    hi = min(config.fit_range[1], positive)
    profile = None
    if hi - config.fit_range[0] + 1 >= 5:
        profile = fit_decay_profile(spectrum, (config.fit_range[0], hi))

    outputs = _OutputSet()
    try:
        path = outputs.register(config.out / "spectrum.csv")
        with open(path, "w", newline="") as fh:
            fh.write("m,eigenvalue\n")
            for i, lam in enumerate(spectrum.eigenvalues, start=1):
                fh.write(f"{i},{lam!r}\n")
        io.write_json(
            {
                "command": "spectrum",
                "kernel": kernel_to_dict(kernel),
                "grid_size": config.grid_size,
                "num_eigs": num,
                "feature_bound": spectrum.feature_bound,
                "fitted_profile": profile_to_dict(profile),
                "fit_range": [config.fit_range[0], hi],
            },
            outputs.register(config.out / "spectrum.json"),
        )
    except Exception:
        outputs.discard_all()
        raise
    kind = type(profile).__name__ if profile is not None else "none"
    print(f"spectrum: {num} eigenvalues, fitted profile {kind}, wrote {config.out}")
    return 0


def run_verify_command(config: ExperimentConfig) -> int:
    results = run_verification(config.master_seed, fault=config.fault,
                               mc_samples=config.mc_samples)
    for res in results:
        print(res.line())
    failures = [r for r in results if not r.passed]
    print(f"{len(results) - len(failures)}/{len(results)} checks passed")
    if config.out is not None:
        config.out.mkdir(parents=True, exist_ok=True)
        io.write_json(
            {
                "command": "verify",
                "master_seed": config.master_seed,
                "checks": [
                    {"name": r.name, "passed": r.passed,
                     "max_error": r.max_error, "detail": r.detail}
                    for r in results
                ],
            },
            config.out / "verify.json",
        )
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        if config.command == "gamma":
            return run_gamma_sweep(config)
        if config.command == "regret":
            return run_regret_bench(config)
        if config.command == "spectrum":
            return run_spectrum_dump(config)
        return run_verify_command(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except GPGainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
