import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlab.funcspec import builtin, constant, parse
from mlab.partitions import Window, dyadic_fourier_partition, equidistant_partition
from mlab.transforms import (NyquistError, SampledFunction, TransformError, band_component,
                             band_sup, coefficients, direct_convolution_oracle,
                             equidistant_band_sups, frequencies, sample, sup_norm)


def trig_poly(rng, n, step, modes=11, max_freq=None):
    """Random trigonometric polynomial with ``modes`` grid frequencies."""
    xi = frequencies(n, step)
    allowed = np.flatnonzero(np.abs(xi) < (max_freq if max_freq is not None else np.pi / step / 2))
    pick = rng.choice(allowed, size=modes, replace=False)
    amp = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    x = step * np.arange(n)
    return SampledFunction(0.0, step, np.exp(1j * np.outer(x, xi[pick])) @ amp)


def test_sample_examples():
    np.testing.assert_array_equal(sample(constant(1), -3.0, 0.5, 8).values, np.ones(8))
    f = sample(builtin("f_alpha", 1, 0), 0.0, 1.0, 4)
    np.testing.assert_allclose(f.values, [1, 1 / 2, 1 / 3, 1 / 4], rtol=1e-15)
    a = sample(parse("exp(-x^2)"), -4.0, 1 / 32, 256).values
    b = sample(builtin("gaussian"), -4.0, 1 / 32, 256).values
    np.testing.assert_allclose(a, b, rtol=1e-14)


def test_sample_rejects_bad_length():
    with pytest.raises(TransformError):
        sample(constant(1), 0.0, 1.0, 6)
    with pytest.raises(TransformError):
        SampledFunction(0.0, 1.0, [1, np.nan])


def test_zero_and_band_pass_identity():
    fam = equidistant_partition(-8, 8)
    z = SampledFunction(0.0, 0.1, np.zeros(128))
    assert not band_component(z, fam.window(2), 2).component.values.any()
    n, step = 512, 0.05
    xi = frequencies(n, step)
    xi0 = xi[np.argmin(np.abs(xi - 3.0))]
    # widen(3) is identically one on [2.5, 3.5]; use the sum of three windows
    w = fam.window(2)
    win = Window(lambda x: fam.evaluate(2, x) + fam.evaluate(3, x) + fam.evaluate(4, x), (1.0, 5.0), "w")
    f = SampledFunction(0.0, step, np.exp(1j * xi0 * step * np.arange(n)))
    comp = band_component(f, win).component.values
    assert np.abs(comp - f.values).max() < 1e-10
    assert w(np.array([xi0]))[0] < 1


def test_window_past_nyquist_rejected():
    f = SampledFunction(0.0, 1.0, np.ones(16))
    with pytest.raises(NyquistError):
        band_component(f, equidistant_partition(-8, 8).window(4))
    band_component(f, equidistant_partition(-8, 8).window(4), clip=True)


def test_oracle_examples(rng):
    fam = equidistant_partition(-4, 4)
    z = SampledFunction(0.0, 0.25, np.zeros(64))
    assert not direct_convolution_oracle(z, fam.window(0)).values.any()
    one = SampledFunction(0.0, 0.25, np.ones(64))
    out = direct_convolution_oracle(one, fam.window(0)).values
    np.testing.assert_allclose(out, fam.evaluate(0, np.zeros(1))[0], atol=1e-12)
    with pytest.raises(TransformError):
        direct_convolution_oracle(SampledFunction(0.0, 0.1, np.ones(8192)), fam.window(0))


@pytest.mark.parametrize("n, step, band", [(256, 0.05, 3), (1024, 0.02, -7), (128, 0.2, 1)])
def test_fft_matches_oracle(rng, n, step, band):
    fam = equidistant_partition(-12, 12)
    f = trig_poly(rng, n, step)
    a = band_component(f, fam.window(band)).component.values
    b = direct_convolution_oracle(f, fam.window(band)).values
    assert np.abs(a - b).max() < 1e-8


def test_sup_norm_examples():
    assert sup_norm(SampledFunction(0.0, 1.0, np.ones(8))) == 1.0
    c = 2.5 * np.exp(0.7j)
    assert sup_norm(SampledFunction(0.0, 1.0, np.full(8, c))) == pytest.approx(2.5, rel=1e-15)
    n = 1024
    # an off-grid phase so that no sample lands on the peak
    x = 2 * np.pi * (np.arange(n) + 0.37) / n
    s = SampledFunction(0.0, 2 * np.pi / n, np.sin(x))
    assert abs(sup_norm(s) - 1) < 1e-6
    coarse = SampledFunction(0.0, 2 * np.pi / 16, np.sin(2 * np.pi * (np.arange(16) + 0.5) / 16))
    assert np.abs(coarse.values).max() < 0.99
    assert sup_norm(coarse) == pytest.approx(1.0, abs=1e-6)


def test_reconstruction_and_parseval():
    f = sample(parse("exp(-x^2) * cos(3*x)"), -16.0, 1 / 16, 512)
    fam = dyadic_fourier_partition(7)
    total = sum(band_component(f, fam.window(n), n, clip=True).component.values
                for n in fam.index_range)
    assert np.abs(total - f.values).max() < 1e-10
    fh = np.fft.fft(f.values) / np.sqrt(f.n)
    assert np.linalg.norm(fh) == pytest.approx(np.linalg.norm(f.values), rel=1e-12)


@settings(max_examples=25)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.integers(-5, 5), st.integers(0, 2 ** 31))
def test_band_component_linear(a, b, band, seed):
    rng = np.random.default_rng(seed)
    f = trig_poly(rng, 128, 0.1)
    g = trig_poly(rng, 128, 0.1)
    w = equidistant_partition(-6, 6).window(band)
    lhs = band_component(a * f + b * g, w).component.values
    rhs = a * band_component(f, w).component.values + b * band_component(g, w).component.values
    assert np.abs(lhs - rhs).max() <= 1e-12 * (1 + np.abs(lhs).max())


def test_band_sup_agrees_with_full_component(rng):
    f = trig_poly(rng, 1024, 0.03, modes=40, max_freq=30)
    fam = equidistant_partition(-40, 40)
    c = coefficients(f)
    bands = list(range(-20, 21))
    sups, l1, upper = equidistant_band_sups(f, bands, coeffs=c)
    for i, n in enumerate(bands):
        full = sup_norm(band_component(f, fam.window(n)).component)
        s, bound = band_sup(f, fam.window(n), c)
        assert s == pytest.approx(full, rel=1e-6, abs=1e-12)
        assert sups[i] == pytest.approx(full, rel=1e-4, abs=1e-12)
        assert full <= bound * (1 + 1e-12) + 1e-15
        assert sups[i] <= upper[i] * (1 + 1e-12) + 1e-15


def test_serialization_round_trip(rng):
    f = SampledFunction(-1.5, 0.125, rng.normal(size=16) + 1j * rng.normal(size=16))
    g = SampledFunction.from_bytes(f.to_bytes())
    assert (g.origin, g.step) == (f.origin, f.step)
    np.testing.assert_array_equal(g.values, f.values)
    h = SampledFunction.from_csv(f.to_csv())
    np.testing.assert_array_equal(h.values, f.values)
    assert h.origin == f.origin
