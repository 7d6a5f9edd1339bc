
import numpy as np
import pytest
from scipy import stats

from mlab.funcspec import bracket, builtin, constant, exp_substitute, evaluate, identity, parse
from mlab.norms import (LogGrid, NormError, NormReport, UnifGrid, algebra_defect, besov_norm,
                        classical_mihlin_seminorm, e_infty_norm, e_unif_norm, embedding_ratios,
                        mihlin_norm)
from mlab.partitions import dyadic_fourier_partition, dyadic_partition
from mlab.transforms import SampledFunction, frequencies, sup_norm

# frozen values (computed once with the default grids)
E_UNIF_ONE_HALF = 2.585683479227174
MIHLIN_FALPHA_1_1 = 8.368033960896813


def modes(n, step, freqs, amps):
    x = step * np.arange(n)
    xi = frequencies(n, step)
    idx = [int(np.argmin(np.abs(xi - w))) for w in freqs]
    return SampledFunction(0.0, step, np.exp(1j * np.outer(x, xi[idx])) @ np.asarray(amps))


def test_zero_function_norms():
    z = SampledFunction(0.0, 0.1, np.zeros(256))
    assert besov_norm(z, 0.5).value == 0
    assert besov_norm(z, 0.5, q="inf").value == 0
    assert e_infty_norm(z, 0.5).value == 0


def test_besov_single_band_identity():
    # width 0.6 windows are identically one near the band centres
    n, step = 1024, 1 / 16
    f = modes(n, step, [3.6, 4.0, 4.4], [1.0, 0.5j, -0.3])
    rep = besov_norm(f, 0.7, width=0.6)
    nonzero = {k: v for k, v in rep.per_band_terms.items() if v > 1e-12}
    assert list(nonzero) == [3]
    assert nonzero[3] == pytest.approx(2 ** (3 * 0.7) * sup_norm(f), rel=1e-8)


def test_besov_q_chain(rng):
    n, step = 2048, 1 / 16
    for _ in range(5):
        f = modes(n, step, rng.uniform(-20, 20, 6), rng.normal(size=6) + 1j * rng.normal(size=6))
        b1 = besov_norm(f, 0.5).value
        binf = besov_norm(f, 0.5, q="inf").value
        b_lower = besov_norm(f, 0.4).value
        assert b1 >= binf > 0
        assert b1 >= b_lower
        assert binf >= 0.05 * b_lower


def test_besov_rejects_narrow_family():
    f = SampledFunction(0.0, 0.01, np.ones(64))
    with pytest.raises(NormError):
        besov_norm(f, 0.5, family=dyadic_fourier_partition(3))
    with pytest.raises(NormError):
        besov_norm(f, 0.5, q=2)


def test_exp_substitute_examples():
    x = np.linspace(-3, 3, 10)
    np.testing.assert_allclose(evaluate(exp_substitute(identity()), x), np.exp(x), rtol=1e-15)
    np.testing.assert_array_equal(evaluate(exp_substitute(constant(1)), x), np.ones(10))
    fe = exp_substitute(builtin("f_alpha", 1, 0))
    np.testing.assert_allclose(evaluate(fe, x), 1 / (1 + np.exp(x)), rtol=1e-14)


def test_mihlin_constant_is_one():
    assert mihlin_norm(constant(1), 0.8).value == pytest.approx(1.0, abs=1e-12)


def test_mihlin_falpha_frozen():
    rep = mihlin_norm(builtin("f_alpha", 1, 1), 0.8, accept_tail=True)
    assert rep.value == pytest.approx(MIHLIN_FALPHA_1_1, rel=1e-8)
    with pytest.raises(NormError):
        mihlin_norm(builtin("f_alpha", 1, 1), 0.8)


def test_mihlin_imaginary_power_growth():
    s = np.array([1, 2, 4, 8, 16])
    vals = [mihlin_norm(builtin("power", 1j * v), 0.5, accept_tail=True).value for v in s]
    # the mass sits in the band around log2|s|, so the growth is |s|^alpha
    fit = stats.linregress(np.log(s), np.log(vals))
    assert fit.slope == pytest.approx(0.5, abs=0.15)


def test_mihlin_flags_divergence():
    rep = mihlin_norm(identity(), 0.5, accept_tail=True)
    assert "divergent" in rep.flags
    assert "divergent" not in mihlin_norm(constant(1), 0.5).flags


def test_mihlin_grid_validation():
    with pytest.raises(NormError):
        LogGrid(n=1000)
    with pytest.raises(NormError):
        LogGrid(x_min=1.0, x_max=0.0)


def test_e_infty_support_bookkeeping():
    n, step = 1024, 1 / 8
    f = modes(n, step, [-0.3, 0.1, 0.35], [1.0, -0.7, 0.4j])
    alpha = 0.6
    v = e_infty_norm(f, alpha).value
    s = sup_norm(f)
    assert s * (1 - 1e-9) <= v <= 3 ** alpha * 3 * s


def test_e_infty_modulation_growth():
    n, step = 4096, 1 / 16
    x = step * np.arange(n) - n * step / 2
    g = np.exp(-x ** 2 / 4)
    alpha = 0.5
    ts = np.array([1, 2, 4, 8, 16, 32, 64, 128])
    vals = [e_infty_norm(SampledFunction(x[0], step, g * np.exp(1j * t * x)), alpha).value for t in ts]
    fit = stats.linregress(np.log(bracket(ts)), np.log(vals))
    assert fit.slope <= alpha + 0.1


def test_e_unif_constant_equals_e_infty_of_base_window():
    rep = e_unif_norm(constant(1), 0.5, (-2, 2))
    assert rep.value == pytest.approx(E_UNIF_ONE_HALF, rel=1e-10)
    assert rep.diagnostics["unresolved_k"] == []
    grid = UnifGrid()
    base = dyadic_partition(0, 0).window(0)
    n = 2 ** 14
    step = grid.period / n
    x = 1.25 - grid.period / 2 + step * np.arange(n)
    phi0 = SampledFunction(x[0], step, base(x))
    assert e_infty_norm(phi0, 0.5).value == pytest.approx(rep.value, rel=1e-6)


def test_e_unif_unimodular_scale():
    f = parse("x^(2*i)", domain="positive")
    full = e_unif_norm(f, 0.5, (-3, 3)).value
    k0 = e_unif_norm(f, 0.5, (0, 0)).value
    assert full == pytest.approx(k0, rel=1e-10)


def test_e_unif_partition_independence():
    fs = [constant(1), builtin("f_alpha", 1, 0), builtin("f_alpha", 1, 2), parse("x/(1+x)^2"),
          parse("exp(-x)")]
    for f in fs:
        a = e_unif_norm(f, 0.5, (-4, 4)).value
        b = e_unif_norm(f, 0.5, (-4, 4), dyadic_width=0.7).value
        assert 1 / 4 <= a / b <= 4


def test_classical_seminorm_examples():
    assert classical_mihlin_seminorm(constant(1), 3) == 1.0
    growth = [classical_mihlin_seminorm(identity(), 0, np.geomspace(1e-3, r, 101)) for r in (1e2, 1e4)]
    assert growth[1] == pytest.approx(100 * growth[0])
    f = builtin("f_alpha", 1, 0)
    coarse = classical_mihlin_seminorm(f, 2)
    fine = classical_mihlin_seminorm(f, 2, np.geomspace(1e-6, 1e6, 200_001))
    assert coarse == pytest.approx(fine, rel=1e-3)
    with pytest.raises(NormError):
        classical_mihlin_seminorm(f, 1, [0.0, 1.0])


def test_algebra_defect_of_constants():
    one = e_unif_norm(constant(1), 0.5, (-1, 1)).value
    d = algebra_defect(constant(1), constant(1), 0.5, (-1, 1))
    assert d == pytest.approx(1 / one, rel=1e-12)
    assert d <= 1
    g = builtin("f_alpha", 1, 0)
    assert algebra_defect(g, constant(1), 0.5, (-2, 2)) == pytest.approx(1 / one, rel=1e-6)


def test_embedding_ratios_constant():
    rep = embedding_ratios([("one", constant(1))], 0.3, 0.1, k_range=(-2, 2))
    row = rep.rows[0]
    assert np.isfinite(row["r1"]) and np.isfinite(row["r2"])
    assert row["r1"] <= 2 and row["r2"] <= 2
    # at alpha = 1/2 the first ratio is the frozen E_unif value of the constant
    rep = embedding_ratios([("one", constant(1))], 0.5, 0.1, k_range=(-2, 2))
    assert rep.max_r1 == pytest.approx(E_UNIF_ONE_HALF, rel=1e-10)


def test_embedding_excludes_divergent():
    rep = embedding_ratios([("lin", identity()), ("one", constant(1))], 0.5, 0.1, k_range=(0, 0))
    assert [e["name"] for e in rep.excluded] == ["lin"]
    assert len(rep.rows) == 1


def test_norm_report_round_trip():
    rep = e_unif_norm(constant(1), 0.5, (0, 0))
    back = NormReport.from_dict(rep.to_dict())
    assert back.value == rep.value
    assert back.per_band_terms == rep.per_band_terms
    assert rep.value == pytest.approx(sum(rep.per_band_terms.values()), rel=1e-12)
