"""Convergence detection and benchmark summaries over loss traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .synthdata import CurveBand, lambdas_of
from .trainer import LossTrace

DEFAULT_BAND_FRAC = 0.01
DEFAULT_WINDOW = 500
DEFAULT_SMOOTH = 50


class NoAnalyticTarget(ValueError):
    pass


def equilibrium_score(k: int) -> float:
    """Optimal D output once all k generators reproduce the data: 1 / (k + 1)."""
    return 1.0 / (k + 1)


def equilibrium_target(role: str, k: int, formulation: str = "standard_bce",
                       score: float | None = None) -> float:
    """Loss value when D outputs the constant ``score`` on real and fake data.

    ``score`` defaults to the optimal discriminator output 1/(k+1), so the
    discriminator target is ``ln(k+1) + k ln((k+1)/k)`` and the generator
    target is ``ln(k+1)``; hinge terms vanish because all scores tie. Pass
    ``score=0.5`` for the loss values at D = 1/2.
    """
    if formulation != "standard_bce":
        raise NoAnalyticTarget(f"no analytic equilibrium target under {formulation!r}; supply one")
    if k < 1:
        raise ValueError("k must be >= 1")
    s = equilibrium_score(k) if score is None else score
    if not 0.0 < s < 1.0:
        raise ValueError(f"score must lie in (0, 1), got {s}")
    if role == "discriminator":
        return -math.log(s) - k * math.log1p(-s)
    if role == "generator":
        return -math.log(s)
    raise ValueError(f"role must be 'discriminator' or 'generator', got {role!r}")


def smooth_trailing(series, smooth: int) -> np.ndarray:
    """Trailing moving average; entry m averages ``series[m : m + smooth]``."""
    x = np.asarray(series, dtype=np.float64)
    if smooth == 1:
        return x.copy()
    return np.convolve(x, np.full(smooth, 1.0 / smooth), mode="valid")


def convergence_iteration(series, target: float, band_frac: float = DEFAULT_BAND_FRAC,
                          window: int = DEFAULT_WINDOW, smooth: int = DEFAULT_SMOOTH) -> int | None:
    """First position t whose smoothed value stays inside the band for ``window`` steps.

    Position t refers to the raw series: the smoothed value at t averages
    ``series[t - smooth + 1 : t + 1]``, so the earliest possible answer is
    ``smooth - 1``. Returns None when the loss never settles.
    """
    x = np.asarray(series, dtype=np.float64)
    if window < 1 or smooth < 1:
        raise ValueError("window and smooth must be positive")
    if window + smooth > x.size + 1:
        raise ValueError(f"series of length {x.size} too short for window={window}, smooth={smooth}")
    half = band_frac * abs(target)
    if half == 0.0:
        raise ValueError("degenerate band: relative band around a zero target")
    inside = np.abs(smooth_trailing(x, smooth) - target) <= half
    run = 0
    for m, ok in enumerate(inside):
        run = run + 1 if ok else 0
        if run == window:
            return m - window + 1 + smooth - 1
    return None


@dataclass
class ConvergenceReport:
    """Convergence iteration per network, keyed ``d``, ``g0``, ``g1``, ..."""

    iterations: dict[str, int | None]
    targets: dict[str, float]
    band_frac: float
    window: int
    smooth: int
    trace_length: int

    @property
    def generator_keys(self) -> list[str]:
        return [k for k in self.iterations if k.startswith("g")]

    @property
    def best_generator(self) -> int | None:
        found = [v for k, v in self.iterations.items() if k.startswith("g") and v is not None]
        return min(found) if found else None


def convergence_report(trace: LossTrace, formulation: str = "standard_bce",
                       targets: Mapping[str, float] | None = None,
                       band_frac: float = DEFAULT_BAND_FRAC, window: int = DEFAULT_WINDOW,
                       smooth: int = DEFAULT_SMOOTH) -> ConvergenceReport:
    """Apply :func:`convergence_iteration` to every loss column of a trace.

    Iterations are reported with the trace's own (1-based) labels. A trace
    too short to hold one smoothing span plus one window reports no
    convergence for any network.
    """
    if targets is None:
        targets = {"d": equilibrium_target("discriminator", trace.k, formulation)}
        targets.update({f"g{i}": equilibrium_target("generator", trace.k, formulation)
                        for i in range(trace.k)})
    columns = {"d": trace.loss_d, **{f"g{i}": col for i, col in enumerate(trace.loss_g)}}
    iters: dict[str, int | None] = {}
    decidable = window + smooth <= len(trace) + 1
    for key, col in columns.items():
        if not decidable:
            iters[key] = None
            continue
        pos = convergence_iteration(col, targets[key], band_frac, window, smooth)
        iters[key] = None if pos is None else trace.iterations[pos]
    return ConvergenceReport(iters, dict(targets), band_frac, window, smooth, len(trace))


def improvement_pct(base: float | None, value: float | None) -> float | None:
    if base is None or value is None:
        return None
    return (base - value) / base * 100.0


def improvement_table(table: Mapping[str, tuple], baseline: str = "gan1"
                      ) -> dict[str, tuple[float | None, float | None]]:
    """Percent reduction in convergence iterations relative to ``baseline``.

    ``table`` maps variant -> ``(d_iter, [g_iter, ...])``. The generator column
    compares each variant's fastest generator against the baseline's fastest.
    Missing convergence propagates as None rather than as 0%.
    """
    if baseline not in table:
        raise KeyError(f"baseline {baseline!r} missing from table")

    def best(gs):
        found = [g for g in gs if g is not None]
        return min(found) if found else None

    base_d, base_g = table[baseline][0], best(table[baseline][1])
    return {v: (improvement_pct(base_d, d), improvement_pct(base_g, best(gs)))
            for v, (d, gs) in table.items()}


def tracking_distance(trace_a, trace_b, burn_in: int = 1000) -> float:
    """Mean absolute gap between two loss series from ``burn_in`` onward."""
    a = np.asarray(trace_a, dtype=np.float64)
    b = np.asarray(trace_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"traces differ in length: {a.size} vs {b.size}")
    if not 0 <= burn_in < a.size:
        raise ValueError(f"burn_in {burn_in} outside trace of length {a.size}")
    return float(np.mean(np.abs(a[burn_in:] - b[burn_in:])))


def diversity_metric(samples, band: CurveBand) -> float:
    """Spread (std) of each sample's position across the band."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] < 2:
        raise ValueError("diversity needs at least 2 samples")
    return float(np.std(lambdas_of(samples, band)))


def median_or_none(values: Sequence[float | None]) -> float | None:
    """Median with missing entries counted as never converging."""
    if not values:
        return None
    m = float(np.median([math.inf if v is None else v for v in values]))
    return None if math.isinf(m) else m


@dataclass
class RunSummary:
    variant: str
    seed: int
    report: ConvergenceReport
    tracking: float | None = None
    containment: list[float] = field(default_factory=list)
    diversity: list[float] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BenchmarkSummary:
    runs: list[RunSummary]
    baseline: str = "gan1"

    def variants(self) -> list[str]:
        return sorted({r.variant for r in self.runs})

    def seeds(self) -> list[int]:
        return sorted({r.seed for r in self.runs})

    def by_variant(self, variant: str) -> list[RunSummary]:
        return sorted((r for r in self.runs if r.variant == variant and r.ok), key=lambda r: r.seed)

    def run(self, variant: str, seed: int) -> RunSummary | None:
        for r in self.runs:
            if r.variant == variant and r.seed == seed and r.ok:
                return r
        return None

    def medians(self, variant: str) -> dict[str, float | None]:
        runs = self.by_variant(variant)
        if not runs:
            return {}
        keys = list(runs[0].report.iterations)
        out = {key: median_or_none([r.report.iterations[key] for r in runs]) for key in keys}
        out["g_best"] = median_or_none([r.report.best_generator for r in runs])
        return out

    def median_tracking(self, variant: str) -> float | None:
        vals = [r.tracking for r in self.by_variant(variant) if r.tracking is not None]
        return float(np.median(vals)) if vals else None

    def improvements(self) -> dict[str, tuple[float | None, float | None]]:
        table = {}
        for v in self.variants():
            m = self.medians(v)
            if m:
                table[v] = (m["d"], [m["g_best"]])
        if self.baseline not in table:
            return {}
        return improvement_table(table, self.baseline)
