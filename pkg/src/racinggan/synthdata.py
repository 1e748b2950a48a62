"""Quadratic curves drawn from the region between two boundary parabolas."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Quadratic:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not np.isfinite([self.a, self.b, self.c]).all():
            raise ValueError(f"quadratic coefficients must be finite: {self}")

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @classmethod
    def from_coeffs(cls, coeffs) -> "Quadratic":
        a, b, c = (float(v) for v in coeffs)
        return cls(a, b, c)


def evaluate_quadratic(q: Quadratic, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if not np.isfinite(xs).all():
        raise ValueError("x values must be finite")
    return q.a * xs * xs + q.b * xs + q.c


def default_grid(n: int = 16, lo: float = -1.0, hi: float = 1.0) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(lo, hi, n))


@dataclass(frozen=True)
class CurveBand:
    lower: Quadratic = Quadratic(1.0, 0.0, 0.0)
    upper: Quadratic = Quadratic(1.0, 0.0, 1.0)
    grid: tuple[float, ...] = field(default_factory=default_grid)

    def __post_init__(self):
        grid = tuple(float(x) for x in self.grid)
        object.__setattr__(self, "grid", grid)
        if len(grid) < 3:
            raise ValueError(f"band grid needs at least 3 points, got {len(grid)}")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("band grid must be strictly increasing")
        if np.any(self.upper_y < self.lower_y):
            raise ValueError("upper boundary dips below lower boundary on the grid")

    @property
    def xs(self) -> np.ndarray:
        return np.asarray(self.grid)

    @property
    def n(self) -> int:
        return len(self.grid)

    @property
    def lower_y(self) -> np.ndarray:
        return evaluate_quadratic(self.lower, self.grid)

    @property
    def upper_y(self) -> np.ndarray:
        return evaluate_quadratic(self.upper, self.grid)

    @property
    def height(self) -> float:
        """Largest vertical gap between the boundaries on the grid."""
        return float(np.max(self.upper_y - self.lower_y))

    def interpolate(self, lam: float) -> Quadratic:
        return Quadratic.from_coeffs((1.0 - lam) * self.lower.coeffs + lam * self.upper.coeffs)


def sample_real(band: CurveBand, count: int, rng: np.random.Generator,
                lambdas=None) -> np.ndarray:
    """Draw ``count`` curves as a ``(count, N)`` array of y-values.

    Each curve has coefficients ``(1 - lam) * lower + lam * upper`` with
    ``lam ~ U(0, 1)``. Pass ``lambdas`` to pin the mixing weights.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    if lambdas is None:
        lam = rng.random(count)
    else:
        lam = np.broadcast_to(np.asarray(lambdas, dtype=np.float64), (count,))
    lo, hi = band.lower_y, band.upper_y
    # same as evaluating the interpolated quadratic, since evaluation is linear in the coefficients
    return (1.0 - lam)[:, None] * lo[None, :] + lam[:, None] * hi[None, :]


def containment_rate(samples, band: CurveBand, tol: float = 1e-6) -> float:
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] == 0:
        raise ValueError("containment_rate needs at least one sample")
    if samples.shape[1] != band.n:
        raise ValueError(f"samples have {samples.shape[1]} points, band grid has {band.n}")
    inside = (samples >= band.lower_y - tol) & (samples <= band.upper_y + tol)
    return float(inside.all(axis=1).mean())


def fit_quadratic(sample, grid) -> Quadratic:
    """Least-squares quadratic through ``(grid, sample)``."""
    y = np.asarray(sample, dtype=np.float64)
    x = np.asarray(grid, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"sample length {y.size} does not match grid length {x.size}")
    if x.size < 3:
        raise ValueError("need at least 3 points to fit a quadratic")
    if np.unique(x).size < 3:
        raise np.linalg.LinAlgError("degenerate grid: fewer than 3 distinct x values")
    design = np.vander(x, 3)
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    return Quadratic.from_coeffs(coeffs)


def write_curves_csv(path, band: CurveBand, samples) -> Path:
    """One row per grid point: x, both boundaries, then each sample."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["x", "y_lower", "y_upper"] + [f"y_sample_{b}" for b in range(samples.shape[0])]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, (x, lo, hi) in enumerate(zip(band.xs, band.lower_y, band.upper_y)):
            w.writerow([repr(float(v)) for v in (x, lo, hi, *samples[:, i])])
    return path


def read_curves_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(xs, lower, upper, samples)`` with samples shaped ``(B, N)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2], data[:, 3:].T


def lambda_of(q: Quadratic, band: CurveBand) -> float:
    """Project ``q`` onto the segment between the boundary coefficient vectors."""
    d = band.upper.coeffs - band.lower.coeffs
    denom = float(d @ d)
    if denom == 0.0:
        raise ValueError("boundaries coincide; lambda undefined")
    lam = float((q.coeffs - band.lower.coeffs) @ d) / denom
    return min(1.0, max(0.0, lam))


def lambdas_of(samples, band: CurveBand) -> np.ndarray:
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    return np.array([lambda_of(fit_quadratic(s, band.xs), band) for s in samples])


__all__ = [
    "Quadratic", "CurveBand", "evaluate_quadratic", "default_grid", "sample_real",
    "containment_rate", "fit_quadratic", "write_curves_csv", "read_curves_csv",
    "lambda_of", "lambdas_of",
]
