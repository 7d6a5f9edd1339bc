import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlab.funcspec import constant, parse
from mlab.operators import (Budget, GridField, OperatorError, OperatorFamily, SymbolOperator,
                            TorusGrid, apply_multiplier, gamma_bound_estimate,
                            gaussian_sum_norm, identity_operator, laplacian_halfpower_symbol,
                            lp_norm, mean_zero, multiplier_operator, opnorm_estimate,
                            paley_littlewood_ratio, resolvent_check, semigroup_operator,
                            square_function_norm, wave_family, wave_operator)
from mlab.partitions import dyadic_partition
from mlab.poisson import KernelParams, poisson_kernel


def random_field(rng, grid):
    return GridField(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))


def test_grid_validation():
    with pytest.raises(OperatorError):
        TorusGrid(1, 100, 1.0)
    with pytest.raises(OperatorError):
        TorusGrid(4, 8, 1.0)
    with pytest.raises(OperatorError):
        TorusGrid(3, 128, 1.0)


def test_symbol_examples():
    grid = TorusGrid(1, 64, 10.0)
    A = laplacian_halfpower_symbol(grid)
    assert A.symbol[0] == 0
    np.testing.assert_allclose(A.symbol[5].real, 2 * np.pi * 5 / 10.0, rtol=1e-15)
    D = laplacian_halfpower_symbol(grid, "discrete")
    xi = np.abs(grid.axis_frequencies())
    low = (xi * grid.step <= 0.1) & (xi > 0)
    np.testing.assert_allclose(D.symbol[low].real, A.symbol[low].real, rtol=1e-3)
    g2 = TorusGrid(2, 16, 4.0)
    A2 = laplacian_halfpower_symbol(g2)
    assert A2.symbol[3, 4].real == pytest.approx(2 * np.pi / 4.0 * 5, rel=1e-14)


def test_apply_multiplier_identities(rng):
    grid = TorusGrid(2, 32, 8.0)
    A = laplacian_halfpower_symbol(grid)
    g = random_field(rng, grid)
    np.testing.assert_allclose(apply_multiplier(constant(1), A, g).values, g.values, atol=1e-12)
    # bump over its neighbour sum, as in the mother window: one on [0, 2 * top]
    u = f"x/{4 * A.sup}"
    w = parse(f"bump({u})/(bump({u}) + bump({u} - 1.5))")
    np.testing.assert_allclose(apply_multiplier(w, A, g).values, g.values, atol=1e-12)
    sq = apply_multiplier(parse("x^2"), A, g).values
    twice = A(A(g)).values
    assert np.abs(sq - twice).max() < 1e-10 * max(1.0, np.abs(twice).max())


def test_multiplier_mean_zero_skips_origin():
    grid = TorusGrid(1, 32, 8.0)
    A = laplacian_halfpower_symbol(grid)
    f = parse("x^(-1)", domain="positive")
    T = multiplier_operator(f, A, mean_zero=True)
    assert T.symbol[0] == 0
    assert T.symbol[1] == pytest.approx(1 / A.symbol[1].real)


def test_lp_norm_examples(rng):
    grid = TorusGrid(2, 16, 3.0)
    e = np.zeros(grid.shape)
    e[2, 3] = 1
    assert lp_norm(GridField(grid, e), 1) == pytest.approx(grid.cell_volume, rel=1e-15)
    one = GridField(grid, np.ones(grid.shape))
    for p in (1, 2, 3.5, 10):
        assert lp_norm(one, p) == pytest.approx(3.0 ** (2 / p), rel=1e-13)
    assert lp_norm(one, np.inf) == 1
    g = random_field(rng, grid)
    assert lp_norm(g, 2) <= np.sqrt(lp_norm(g, 1) * lp_norm(g, np.inf)) * (1 + 1e-12)


def test_square_function_examples(rng):
    grid = TorusGrid(1, 64, 5.0)
    g = random_field(rng, grid)
    assert square_function_norm([g], 3) == pytest.approx(lp_norm(g, 3), rel=1e-14)
    assert square_function_norm([g] * 5, 3) == pytest.approx(np.sqrt(5) * lp_norm(g, 3), rel=1e-13)
    a, b = np.zeros(64, complex), np.zeros(64, complex)
    a[:20], b[30:] = rng.normal(size=20), rng.normal(size=34)
    fa, fb = GridField(grid, a), GridField(grid, b)
    lhs = square_function_norm([fa, fb], 2) ** 2
    assert lhs == pytest.approx(lp_norm(fa, 2) ** 2 + lp_norm(fb, 2) ** 2, rel=1e-12)


def test_opnorm_identity_and_plancherel(rng):
    grid = TorusGrid(1, 64, 6.0)
    for p in (1.5, 3, 6):
        assert opnorm_estimate(identity_operator(grid), p).lower_bound == pytest.approx(1, rel=1e-12)
    T = SymbolOperator(grid, rng.normal(size=64) + 1j * rng.normal(size=64))
    assert opnorm_estimate(T, 2).lower_bound == pytest.approx(T.sup, rel=1e-6)
    with pytest.raises(OperatorError):
        opnorm_estimate(T, 1.0)


def _dense_pnorm(M, p, rng, starts=200, iters=400):
    """Power iteration for a dense matrix on l^p from many random starts."""
    q = p / (p - 1)

    def dual(v, r):
        return np.abs(v) ** (r - 1) * np.exp(1j * np.angle(v))

    def ratio(x):
        return np.sum(np.abs(M @ x) ** p, 0) ** (1 / p) / np.sum(np.abs(x) ** p, 0) ** (1 / p)

    x = rng.normal(size=(M.shape[0], starts)) + 1j * rng.normal(size=(M.shape[0], starts))
    best = ratio(x).max()
    for _ in range(iters):
        x = dual(M.conj().T @ dual(M @ x, p), q)
        x /= np.abs(x).max(0)
        best = max(best, ratio(x).max())
    return best


def test_opnorm_matches_dense_oracle():
    rng = np.random.default_rng(7)
    grid = TorusGrid(1, 64, 64.0)
    sym = rng.normal(size=64)
    T = SymbolOperator(grid, sym)
    F = np.fft.fft(np.eye(64), axis=0)
    M = np.fft.ifft(sym[:, None] * F, axis=0)
    dense = _dense_pnorm(M, 3.0, rng)
    est = opnorm_estimate(T, 3.0, Budget(max_iter=400, starts=6)).lower_bound
    assert est == pytest.approx(dense, abs=1e-4)
    assert est >= T.sup * (1 - 1e-12)


def test_opnorm_certificate_attains_bound(rng):
    grid = TorusGrid(1, 128, 32.0)
    A = laplacian_halfpower_symbol(grid)
    T = wave_operator(A, 0.6, 8.0)
    est = opnorm_estimate(T, 4.0)
    x = est.certificate
    assert lp_norm(T(x), 4.0) / lp_norm(x, 4.0) == pytest.approx(est.lower_bound, rel=1e-10)
    assert est.lower_bound >= T.sup - 1e-12


def test_gaussian_sum_examples(rng):
    grid = TorusGrid(1, 64, 4.0)
    g = random_field(rng, grid)
    est, se = gaussian_sum_norm([g], 3.0, samples=4000, seed=1)
    assert abs(est - lp_norm(g, 3.0)) <= 3 * se
    fields = [random_field(rng, grid) for _ in range(6)]
    est, se = gaussian_sum_norm(fields, 2.0, samples=4000, seed=2)
    target = sum(lp_norm(f, 2.0) ** 2 for f in fields)
    # the delta-method stderr of est^2 is 2 est se
    assert abs(est ** 2 - target) <= 3 * 2 * est * se
    with pytest.raises(OperatorError):
        gaussian_sum_norm(fields, 2.0, samples=10)


def test_gamma_examples():
    grid = TorusGrid(1, 64, 16.0)
    fam = OperatorFamily((identity_operator(grid),))
    assert gamma_bound_estimate(fam, 4.0, trials=10).value == pytest.approx(1.0, rel=1e-9)
    rng = np.random.default_rng(3)
    cs = rng.uniform(-1, 1, 6) * np.exp(2j * np.pi * rng.random(6))
    contr = OperatorFamily(tuple(identity_operator(grid).scaled(c) for c in cs))
    g = gamma_bound_estimate(contr, 4.0, trials=10, gaussian=True, samples=200)
    assert g.value <= 1 + 3 * g.stderr + 1e-12
    A = laplacian_halfpower_symbol(grid)
    wf = wave_family(A, 0.6, 0.6, 2.0, (-3, 3))
    g2 = gamma_bound_estimate(wf, 2.0, trials=10)
    assert g2.value == pytest.approx(max(T.sup for T in wf.operators), abs=1e-3)


def test_paley_littlewood_examples(rng):
    grid = TorusGrid(1, 256, 64.0)
    A = laplacian_halfpower_symbol(grid)
    s = A.symbol.real
    fam = dyadic_partition(int(np.floor(np.log2(s[s > 0].min()))) - 1,
                           int(np.ceil(np.log2(s.max()))) + 1, 0.6)
    # a single mode near 4, where the width 0.6 window of band 2 is one
    k = int(np.argmin(np.abs(s - 4.0)))
    assert abs(np.log2(s[k]) - 2) < 0.4
    x = np.zeros(256, complex)
    x[k] = 1
    assert paley_littlewood_ratio(A, fam, GridField(grid, np.fft.ifft(x)), 2.0) == pytest.approx(1.0, rel=1e-12)
    fam1 = dyadic_partition(fam.n_min, fam.n_max)
    for _ in range(20):
        x = mean_zero(random_field(rng, grid))
        r = paley_littlewood_ratio(A, fam1, x, 2.0)
        assert 2 ** -0.5 - 1e-12 <= r <= 1 + 1e-12
    with pytest.raises(OperatorError):
        paley_littlewood_ratio(A, fam1, GridField(grid, np.ones(256)), 2.0)
    with pytest.raises(OperatorError):
        paley_littlewood_ratio(A, dyadic_partition(0, 1), x, 2.0)


def test_resolvent_examples():
    grid = TorusGrid(1, 256, 64.0)
    A = laplacian_halfpower_symbol(grid)
    assert resolvent_check(A, 0.5, [-1.0, -10.0, -0.01]) <= 1
    assert resolvent_check(A, 0.5, [1j * 3.0]) == pytest.approx(1.0, abs=1e-12)
    s = np.sort(np.unique(A.symbol.real))
    for phi in (np.pi / 3, 1.0, 1.4):
        # choose |lambda| so the nearest point of R+ is an exact grid value
        r = s[40] / np.cos(phi)
        lam = r * np.exp(1j * phi)
        assert resolvent_check(A, np.pi / 4, [lam]) == pytest.approx(1 / np.sin(phi), rel=1e-6)
    with pytest.raises(OperatorError):
        resolvent_check(A, np.pi / 4, [1.0 + 0.1j])


def test_semigroup_examples(rng):
    grid = TorusGrid(1, 4096, 400.0)
    A = laplacian_halfpower_symbol(grid)
    S = semigroup_operator(A, 1e-12)
    assert np.abs(S.symbol - 1).max() < 1e-9
    a, b = semigroup_operator(A, 0.7), semigroup_operator(A, 1.8)
    np.testing.assert_allclose((a @ b).symbol, semigroup_operator(A, 2.5).symbol, atol=1e-12)
    with pytest.raises(OperatorError):
        semigroup_operator(A, 1.0, np.pi / 2)
    K = semigroup_operator(A, 1.0).kernel().real
    x = grid.coordinates()[0]
    params = KernelParams(1.0, 0.0, 1, normalized=True)
    ref = sum(poisson_kernel(x + m * grid.period, params).real for m in range(-2000, 2001))
    near = np.abs(x) <= 10
    np.testing.assert_allclose(K[near], ref[near], rtol=1e-3)


def test_wave_family_examples():
    grid = TorusGrid(1, 128, 32.0)
    A = laplacian_halfpower_symbol(grid)
    W = wave_operator(A, 0.6, 0.0)
    assert W.sup == pytest.approx(1.0)
    for t in (0.0, 3.0, 50.0):
        fam = wave_family(A, 0.6, 0.6, t, (-2, 2))
        assert [T.sup for T in fam.operators] == pytest.approx([1.0] * 5)
        U = wave_operator(A, 0.0, t)
        np.testing.assert_allclose(np.abs(U.symbol), 1.0, rtol=1e-15)
    with pytest.raises(OperatorError):
        wave_family(A, 0.6, 0.5, 1.0, (0, 1))


@settings(max_examples=20)
@given(st.integers(0, 2 ** 31), st.floats(1.2, 6.0))
def test_opnorm_bounds_property(seed, p):
    rng = np.random.default_rng(seed)
    grid = TorusGrid(1, 32, 8.0)
    T = SymbolOperator(grid, rng.normal(size=32) + 1j * rng.normal(size=32))
    est = opnorm_estimate(T, p, Budget(max_iter=30, starts=1))
    # lower bound by the symbol sup, upper bound by the kernel l1 norm (Young)
    assert est.lower_bound >= T.sup * (1 - 1e-9)
    assert est.lower_bound <= np.abs(T.kernel()).sum() * grid.cell_volume * (1 + 1e-9)


def test_field_serialization_round_trip(rng):
    grid = TorusGrid(2, 8, 3.0)
    g = random_field(rng, grid)
    back = GridField.from_bytes(g.to_bytes())
    assert back.grid == grid
    np.testing.assert_array_equal(back.values, g.values)
