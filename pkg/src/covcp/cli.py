"""Command-line surface: detection, critical values, and the experiment
harness, all emitting machine-readable JSON."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import datagen, detector, moments, nullsim
from .covstream import DataMatrix
from .datagen import SyntheticModel
from .errors import CovcpError, DataValidationError

__all__ = [
    "RunConfig",
    "ExperimentSummary",
    "ingest_csv",
    "run_experiment",
    "cmd_detect",
    "cmd_quantile",
    "cmd_simulate",
    "main",
]


@dataclass
class RunConfig:
    """Flat bag of options shared by the subcommands."""

    command: str
    input_path: str | None = None
    t0: float = 0.2
    alpha: float = 0.05
    mc_reps: int = 100_000
    seed: int = 0
    model: int = 1
    n: int = 0
    p: int = 0
    delta: float = 1.0
    t_star: float = 0.5
    runs: int = 1
    innovation: str = "gaussian"
    output_path: str | None = None
    per_run_csv: str | None = None
    threads: int = 0

    def __post_init__(self):
        if not 0.0 < self.t0 < 0.5:
            raise DataValidationError(f"t0 must lie in (0, 0.5), got {self.t0}")
        if not 0.0 < self.alpha < 1.0:
            raise DataValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.runs < 1:
            raise DataValidationError(f"runs must be >= 1, got {self.runs}")


@dataclass
class ExperimentSummary:
    """Aggregate of one simulation experiment.

    ``tau_mse`` is the mean of ``(tau_hat - t_star)**2`` over runs and is
    exactly recomputable from ``per_run``.
    """

    rejection_rate: float
    tau_mean: float
    tau_sd: float
    tau_mse: float
    per_run: list[dict] = field(default_factory=list)


def _resolve_threads(threads: int) -> int:
    if threads and threads > 0:
        return threads
    # auto: stay modest; each run is already BLAS-heavy
    return min(4, os.cpu_count() or 1)


def ingest_csv(path: str) -> DataMatrix:
    """Read a comma-separated observation matrix.

    Rows are observations, columns coordinates, decimal points, optional
    single header row (detected when any first-row cell fails numeric
    parsing).  Ragged rows and non-numeric cells are rejected with their
    file location.
    """
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataValidationError(f"cannot open {path!r}: {exc}") from exc
    with handle:
        raw = [(line_no, row) for line_no, row in
               enumerate(csv.reader(handle), start=1) if row]
    if not raw:
        raise DataValidationError(f"{path!r} contains no data rows")

    def parse_cell(cell: str) -> float | None:
        try:
            return float(cell)
        except ValueError:
            return None

    first_line, first_row = raw[0]
    header = any(parse_cell(c) is None for c in first_row)
    body = raw[1:] if header else raw
    if not body:
        raise DataValidationError(f"{path!r} has a header but no data rows")

    width = len(body[0][1])
    values = np.empty((len(body), width))
    for out_row, (line_no, row) in enumerate(body):
        if len(row) != width:
            raise DataValidationError(
                f"{path!r}: ragged row at line {line_no}: got {len(row)} cells, "
                f"expected {width}"
            )
        for col, cell in enumerate(row):
            value = parse_cell(cell)
            if value is None:
                raise DataValidationError(
                    f"{path!r}: non-numeric cell {cell!r} at line {line_no}, "
                    f"column {col + 1}"
                )
            values[out_row, col] = value
    return DataMatrix(values)


def _profile_entries(profile: detector.SplitProfile) -> list[dict]:
    return [
        {
            "m": int(m),
            "t": float(t),
            "two_log_lambda_cen": float(stat),
            "mu_tilde": float(mu),
            "sigma_nt": float(sig),
            "standardized": float(std),
            "centered_over_n": float(cen),
        }
        for m, t, stat, mu, sig, std, cen in zip(
            profile.m, profile.t, profile.two_log_lambda_cen, profile.mu_tilde,
            profile.sigma_nt, profile.standardized, profile.centered_over_n,
        )
    ]


def _report_dict(report: detector.DetectionReport) -> dict:
    profile = report.profile
    return {
        "n": profile.n,
        "p": profile.p,
        "t0": profile.t0,
        "alpha": report.alpha,
        "kappa_hat": report.kappa_hat,
        "statistic": report.statistic,
        "quantile": report.quantile,
        "reject": report.reject,
        "tau_hat": report.tau_hat,
        "mc": {
            "reps": report.mc_meta.reps,
            "seed": report.mc_meta.seed,
            "std_error": report.mc_meta.std_error,
        },
        "profile": _profile_entries(profile),
    }


def _emit(payload: dict, output_path: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if output_path:
        with open(output_path, "w") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def run_seed(master_seed: int, run_index: int) -> int:
    """Per-run seed derived from (master seed, run index)."""
    return int(np.random.SeedSequence((master_seed, run_index)).generate_state(1)[0])


def run_experiment(config: RunConfig) -> ExperimentSummary:
    """Run the synthetic experiment described by ``config``.

    One critical value is simulated per experiment (it depends only on
    (n, p, t0, alpha, mc_reps, seed)) and shared by all runs; each run
    draws its own data from a seed derived from (master seed, run index),
    so the summary is independent of the worker-thread count.
    """
    threads = _resolve_threads(config.threads)
    # fail fast with the scan's admissibility message (which quotes the
    # t0 > p/n bound) before paying for the kernel factorization
    detector._scan_bounds(config.n, config.p, config.t0)
    kg = nullsim.build_kernel_grid(config.n, config.p, config.t0)
    quantile = nullsim.simulate_min_quantile(
        kg, config.alpha, config.mc_reps, config.seed, threads=threads
    )

    def one_run(r: int) -> dict:
        seed = run_seed(config.seed, r)
        model = SyntheticModel(
            n=config.n, p=config.p, t_star=config.t_star, delta=config.delta,
            rotation=(config.model == 2), innovation=config.innovation,
            seed=seed,
        )
        data = datagen.generate(model)
        kappa = moments.kurtosis_hat(data)
        profile = detector.build_profile(data, config.t0, kappa)
        statistic, tau_hat = detector.min_statistic(profile)
        return {
            "seed": seed,
            "M": float(statistic),
            "q": float(quantile.q_alpha),
            "reject": bool(statistic < quantile.q_alpha),
            "tau_hat": float(tau_hat),
        }

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_run = list(pool.map(one_run, range(config.runs)))
    else:
        per_run = [one_run(r) for r in range(config.runs)]

    return summarize_runs(per_run, config.t_star)


def summarize_runs(per_run: list[dict], t_star: float) -> ExperimentSummary:
    """Aggregate per-run records; bit-reproducible from their JSON form."""
    taus = np.array([r["tau_hat"] for r in per_run])
    rejects = np.array([r["reject"] for r in per_run], dtype=np.float64)
    return ExperimentSummary(
        rejection_rate=float(rejects.mean()),
        tau_mean=float(taus.mean()),
        tau_sd=float(taus.std(ddof=1)) if len(taus) > 1 else 0.0,
        tau_mse=float(np.mean((taus - t_star) ** 2)),
        per_run=per_run,
    )


def cmd_detect(config: RunConfig) -> int:
    data = ingest_csv(config.input_path)
    if data.n <= 2 * data.p + 4:
        raise DataValidationError(
            f"{config.input_path!r}: n={data.n} observations with p={data.p} "
            f"coordinates; detection needs n > 2p+4 = {2 * data.p + 4}"
        )
    report = detector.detect(
        data,
        detector.DetectorConfig(t0=config.t0, alpha=config.alpha,
                                mc_reps=config.mc_reps, seed=config.seed),
        threads=_resolve_threads(config.threads),
    )
    _emit(_report_dict(report), config.output_path)
    return 0


def cmd_quantile(config: RunConfig) -> int:
    kg = nullsim.build_kernel_grid(config.n, config.p, config.t0)
    quantile = nullsim.simulate_min_quantile(
        kg, config.alpha, config.mc_reps, config.seed,
        threads=_resolve_threads(config.threads),
    )
    _emit(
        {
            "q_alpha": quantile.q_alpha,
            "alpha": quantile.alpha,
            "y": kg.y,
            "grid_size": kg.size,
            "reps": quantile.reps,
            "seed": quantile.seed,
            "std_error": quantile.std_error,
        },
        config.output_path,
    )
    return 0


def cmd_simulate(config: RunConfig) -> int:
    summary = run_experiment(config)
    if config.per_run_csv:
        with open(config.per_run_csv, "w", newline="") as handle:
            writer = csv.DictWriter(
                handle, fieldnames=["seed", "M", "q", "reject", "tau_hat"]
            )
            writer.writeheader()
            writer.writerows(summary.per_run)
    _emit(
        {
            "rejection_rate": summary.rejection_rate,
            "tau_mean": summary.tau_mean,
            "tau_sd": summary.tau_sd,
            "tau_mse": summary.tau_mse,
            "per_run": summary.per_run,
        },
        config.output_path,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covcp",
        description="Change-point detection for high-dimensional covariance "
                    "sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--t0", type=float, default=0.2,
                       help="trimming fraction in (0, 0.5) (default 0.2)")
        p.add_argument("--alpha", type=float, default=0.05,
                       help="test level in (0, 1) (default 0.05)")
        p.add_argument("--mc-reps", type=int, default=100_000,
                       help="Monte Carlo repetitions for the critical value")
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads (0 = auto)")

    det = sub.add_parser("detect", help="test a CSV file for a covariance change")
    det.add_argument("--input", required=True, help="CSV of observations")
    common(det)
    det.add_argument("--output", help="write the JSON report here instead of stdout")

    qua = sub.add_parser("quantile", help="simulate the critical value only")
    qua.add_argument("--n", type=int, required=True, help="sample size")
    qua.add_argument("--p", type=int, required=True, help="dimension")
    common(qua)
    qua.add_argument("--output", help="write the JSON report here instead of stdout")

    sim = sub.add_parser("simulate", help="run the synthetic experiment harness")
    sim.add_argument("--model", type=int, choices=(1, 2), required=True,
                     help="1 = diagonal change, 2 = rotated change")
    sim.add_argument("--n", type=int, required=True, help="sample size")
    sim.add_argument("--p", type=int, required=True, help="dimension (even)")
    sim.add_argument("--delta", type=float, required=True,
                     help="post-change eigenvalue of the trailing block (>= 1)")
    sim.add_argument("--t-star", type=float, required=True,
                     help="change fraction in (0, 1)")
    sim.add_argument("--runs", type=int, required=True, help="number of runs")
    sim.add_argument("--innovation", choices=datagen._INNOVATIONS,
                     default="gaussian")
    common(sim)
    sim.add_argument("--output", help="write the JSON summary here instead of stdout")
    sim.add_argument("--per-run-csv", help="also write per-run rows as CSV here")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        input_path=getattr(args, "input", None),
        t0=args.t0,
        alpha=args.alpha,
        mc_reps=args.mc_reps,
        seed=args.seed,
        model=getattr(args, "model", 1),
        n=getattr(args, "n", 0),
        p=getattr(args, "p", 0),
        delta=getattr(args, "delta", 1.0),
        t_star=getattr(args, "t_star", 0.5),
        runs=getattr(args, "runs", 1),
        innovation=getattr(args, "innovation", "gaussian"),
        output_path=getattr(args, "output", None),
        per_run_csv=getattr(args, "per_run_csv", None),
        threads=args.threads,
    )


_COMMANDS = {"detect": cmd_detect, "quantile": cmd_quantile, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        return _COMMANDS[args.command](config)
    except CovcpError as exc:
        print(f"covcp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
