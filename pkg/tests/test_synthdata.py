import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from racinggan.synthdata import (CurveBand, Quadratic, containment_rate, evaluate_quadratic,
                                 fit_quadratic, lambdas_of, read_curves_csv, sample_real,
                                 write_curves_csv)


@pytest.mark.parametrize("q, x, y", [
    (Quadratic(1, 0, 0), 2.0, 4.0),
    (Quadratic(0, 0, 5), -3.7, 5.0),
    (Quadratic(1, 1, 1), -1.0, 1.0),
])
def test_evaluate_quadratic(q, x, y):
    assert evaluate_quadratic(q, [x])[0] == y


def test_quadratic_rejects_nonfinite():
    with pytest.raises(ValueError):
        Quadratic(np.inf, 0, 0)


def test_band_validation():
    with pytest.raises(ValueError, match="at least 3"):
        CurveBand(grid=(0.0, 1.0))
    with pytest.raises(ValueError, match="increasing"):
        CurveBand(grid=(0.0, 1.0, 1.0))
    with pytest.raises(ValueError, match="below"):
        CurveBand(Quadratic(1, 0, 1), Quadratic(1, 0, 0))


def test_default_band():
    band = CurveBand()
    assert band.n == 16
    assert band.xs[0] == -1.0 and band.xs[-1] == 1.0
    assert band.height == 1.0


def test_sample_endpoints(rng):
    band = CurveBand()
    np.testing.assert_array_equal(sample_real(band, 3, rng, lambdas=0.0)[0], band.lower_y)
    np.testing.assert_array_equal(sample_real(band, 3, rng, lambdas=1.0)[2], band.upper_y)


def test_sample_midpoint(rng):
    band = CurveBand(Quadratic(1, 0, 0), Quadratic(1, 0, 2), grid=(-1.0, 0.0, 1.0))
    y = sample_real(band, 1, rng, lambdas=0.5)[0]
    assert y[1] == 1.0
    np.testing.assert_allclose(y, evaluate_quadratic(Quadratic(1, 0, 1), band.grid))


def test_sample_count_positive(rng):
    with pytest.raises(ValueError):
        sample_real(CurveBand(), 0, rng)


def test_sample_seeded():
    a = sample_real(CurveBand(), 8, np.random.default_rng(3))
    b = sample_real(CurveBand(), 8, np.random.default_rng(3))
    assert np.array_equal(a, b)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3),
       gap=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.01, 3)))
def test_samples_always_contained(seed, a, b, c, gap):
    # a band made non-crossing on the grid by shifting the upper curve up
    lower = Quadratic(a, b, c)
    xs = np.linspace(-1, 1, 9)
    raw = Quadratic(a + gap[0], b + gap[1], c)
    shift = max(0.0, float(np.max(evaluate_quadratic(lower, xs) - evaluate_quadratic(raw, xs))))
    upper = Quadratic(raw.a, raw.b, raw.c + shift + gap[2])
    band = CurveBand(lower, upper, grid=tuple(xs))
    ys = sample_real(band, 50, np.random.default_rng(seed))
    assert containment_rate(ys, band, tol=1e-9) == 1.0


def test_containment_boundaries():
    band = CurveBand()
    assert containment_rate([band.lower_y, band.upper_y], band, tol=0.0) == 1.0


def test_containment_violation():
    band = CurveBand()
    tol = 0.02
    assert containment_rate([band.upper_y + 10 * tol], band, tol) == 0.0


def test_containment_mixed(rng):
    band = CurveBand()
    ys = np.vstack([sample_real(band, 3, rng), band.lower_y - 1.0])
    assert containment_rate(ys, band, 1e-6) == 0.75


def test_containment_empty():
    with pytest.raises(ValueError):
        containment_rate(np.empty((0, 16)), CurveBand())


def test_fit_exact():
    q = fit_quadratic([1.0, 0.0, 1.0], [-1.0, 0.0, 1.0])
    assert q.coeffs == pytest.approx([1, 0, 0], abs=1e-12)


def test_fit_constant():
    q = fit_quadratic([3.0] * 5, np.linspace(0, 1, 5))
    assert q.coeffs == pytest.approx([0, 0, 3], abs=1e-12)


def test_fit_noisy_matches_normal_equations():
    rng = np.random.default_rng(123)
    x = np.linspace(-1, 1, 64)
    y = 2 * x * x - x + 0.5 + rng.normal(0, 0.01, 64)
    q = fit_quadratic(y, x)
    # coefficients from an explicit normal-equations solve of the same data
    assert q.coeffs == pytest.approx([1.99517334, -1.00208577, 0.50226035], abs=1e-7)
    assert q.coeffs == pytest.approx([2, -1, 0.5], abs=0.05)


def test_fit_degenerate_grid():
    with pytest.raises(np.linalg.LinAlgError):
        fit_quadratic([1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 1.0, 1.0])


def test_fit_recovers_lambda(rng):
    band = CurveBand(Quadratic(0.5, -1, 0), Quadratic(1.5, 0.5, 2))
    lam = rng.random(40)
    ys = sample_real(band, 40, rng, lambdas=lam)
    np.testing.assert_allclose(lambdas_of(ys, band), lam, atol=1e-9)


def test_curve_csv_roundtrip(tmp_path, rng):
    band = CurveBand()
    ys = sample_real(band, 4, rng)
    path = write_curves_csv(tmp_path / "c.csv", band, ys)
    header = path.read_text().splitlines()[0]
    assert header == "x,y_lower,y_upper,y_sample_0,y_sample_1,y_sample_2,y_sample_3"
    xs, lo, hi, back = read_curves_csv(path)
    assert len(path.read_text().splitlines()) == 1 + band.n
    np.testing.assert_array_equal(back, ys)
    np.testing.assert_array_equal(lo, band.lower_y)
