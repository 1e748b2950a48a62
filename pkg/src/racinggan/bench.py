"""Single runs and the multi-seed benchmark over the four variants."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import diffcore as dc
from .analysis import (BenchmarkSummary, RunSummary, convergence_report, diversity_metric,
                       tracking_distance)
from .config import RunConfig
from .synthdata import containment_rate
from .trainer import TrainingError, TrainResult, sample_generator, stream, train

log = logging.getLogger(__name__)

WORKERS_ENV = "RACINGGAN_WORKERS"
_FINAL_EVAL = 5  # spawn key of the final-evaluation stream


def worker_count(default: int | None = None) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return n
    return default or os.cpu_count() or 1


@dataclass(frozen=True)
class RunPaths:
    out_dir: Path

    def trace(self, variant: str, seed: int) -> Path:
        return self.out_dir / "traces" / f"{variant}_seed{seed}.csv"

    def report(self, variant: str, seed: int) -> Path:
        return self.out_dir / "reports" / f"{variant}_seed{seed}_convergence.csv"

    def loss_plot(self, variant: str, seed: int) -> Path:
        return self.out_dir / "plots" / f"{variant}_seed{seed}_loss.svg"

    def curves_plot(self, variant: str, seed: int) -> Path:
        return self.out_dir / "plots" / f"{variant}_seed{seed}_curves.svg"

    @property
    def checkpoints(self) -> Path:
        return self.out_dir / "checkpoints"


def targets_for(cfg: RunConfig, k: int) -> dict[str, float] | None:
    a = cfg.analysis
    if a.d_target is None and a.g_target is None:
        return None
    from .analysis import equilibrium_target

    def pick(value, role):
        if value is not None:
            return value
        return equilibrium_target(role, k, cfg.loss.formulation)

    out = {"d": pick(a.d_target, "discriminator")}
    out.update({f"g{i}": pick(a.g_target, "generator") for i in range(k)})
    return out


def evaluate(result: TrainResult, cfg: RunConfig) -> RunSummary:
    """Convergence, tracking and sample-quality numbers for a finished run."""
    spec, a = result.spec, cfg.analysis
    report = convergence_report(result.trace, spec.loss_config.formulation,
                                targets_for(cfg, spec.k), a.band_frac, a.window, a.smooth)
    tracking = None
    if spec.k >= 2 and a.burn_in < len(result.trace):
        tracking = tracking_distance(result.trace.loss_g[0], result.trace.loss_g[1], a.burn_in)
    rng = stream(spec.seed, _FINAL_EVAL)
    tol = a.containment_tol_frac * spec.band.height
    containment, diversity = [], []
    for g in result.state.generators:
        ys = sample_generator(g, spec.latent_dim, a.eval_samples, rng)
        containment.append(containment_rate(ys, spec.band, tol))
        diversity.append(diversity_metric(ys, spec.band))
    return RunSummary(spec.variant, spec.seed, report, tracking, containment, diversity)


def run_one(cfg: RunConfig, variant: str | None = None, seed: int | None = None,
            out_dir=None, plots: bool | None = None) -> RunSummary:
    """Train, analyse and write every per-run artifact under ``out_dir``.

    Numerical failures are returned as a RunSummary with ``error`` set.
    """
    from .report import write_run_report

    spec = cfg.experiment_spec(variant, seed)
    paths = RunPaths(Path(out_dir or cfg.output.out_dir))
    plots = cfg.output.plots if plots is None else plots
    try:
        result = train(spec)
    except (TrainingError, dc.AutodiffError) as exc:
        log.error("%s seed=%d failed: %s", spec.variant, spec.seed, exc)
        return RunSummary(spec.variant, spec.seed, None, error=str(exc))
    result.trace.write_csv(paths.trace(spec.variant, spec.seed))
    result.write_checkpoints(paths.checkpoints)
    summary = evaluate(result, cfg)
    write_run_report(paths.report(spec.variant, spec.seed), summary)
    if plots:
        from .plotting import plot_checkpoint_curves, plot_loss_trace
        plot_loss_trace(result.trace, paths.loss_plot(spec.variant, spec.seed),
                        title=f"{spec.variant} seed {spec.seed}")
        if result.checkpoints:
            plot_checkpoint_curves(result.checkpoints, spec.band,
                                   paths.curves_plot(spec.variant, spec.seed),
                                   title=f"{spec.variant} seed {spec.seed}")
    return summary


def _run_job(args) -> RunSummary:
    cfg, variant, seed, out_dir, plots = args
    return run_one(cfg, variant, seed, out_dir, plots)


def run_bench(cfg: RunConfig, out_dir=None, workers: int | None = None,
              plots: bool | None = None) -> BenchmarkSummary:
    """Every configured variant x seed, one run per worker process."""
    from .report import write_bench_outputs

    out_dir = Path(out_dir or cfg.output.out_dir)
    jobs = [(cfg, v, s, out_dir, plots) for v in cfg.bench.variants for s in cfg.bench.seeds]
    workers = min(worker_count() if workers is None else workers, len(jobs))
    if workers <= 1:
        runs = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_job, jobs))
    summary = BenchmarkSummary(runs)
    write_bench_outputs(out_dir, summary)
    return summary
