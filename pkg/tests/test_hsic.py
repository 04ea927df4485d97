import numpy as np
import pytest

from hsicmap.errors import NotCentered, RowCountMismatch
from hsicmap.hsic import Method, dependence, hsic, rhsic, rhsic_cross_covariance
from hsicmap.kernelcore import Bandwidth, Heuristic
from hsicmap.rff import feature_map, feature_pair, sample_frequencies


def _naive_hsic(X, Y, sx, sy):
    n = X.shape[0]
    Kx = np.array([[np.exp(-np.sum((a - b) ** 2) / (2 * sx * sx)) for b in X] for a in X])
    Ky = np.array([[np.exp(-np.sum((a - b) ** 2) / (2 * sy * sy)) for b in Y] for a in Y])
    H = np.eye(n) - np.ones((n, n)) / n
    return np.trace(Kx @ H @ Ky @ H) / (n * n), np.trace(H @ Kx @ H @ Ky) / (n * n)


def test_two_point_closed_form():
    X = np.array([[0.0], [1.0]])
    stat = hsic(X, X, 1.0, 1.0)
    assert stat.value == pytest.approx((1 - np.exp(-0.5)) ** 2 / 4, abs=1e-14)
    assert stat.method is Method.HSIC
    assert stat.n == 2


def test_matches_naive_trace_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 31))
        dx, dy = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        X, Y = rng.standard_normal((n, dx)), rng.standard_normal((n, dy))
        sx, sy = rng.uniform(0.3, 3.0, 2)
        got = hsic(X, Y, sx, sy).value
        want, cyclic = _naive_hsic(X, Y, sx, sy)
        assert want == pytest.approx(cyclic, rel=1e-9, abs=1e-13)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-13)


def test_symmetric_and_non_negative(small_pair):
    X, Y = small_pair
    a = hsic(X, Y, 1.1, 0.7)
    b = hsic(Y, X, 0.7, 1.1)
    assert a.value == pytest.approx(b.value, rel=1e-12)
    assert a.value > 0


def test_constant_variable_gives_exact_zero(rng):
    X = rng.standard_normal((25, 2))
    Y = np.full((25, 1), 3.5)
    assert hsic(X, Y, 1.0, 1.0).value == 0.0


def test_heuristic_bandwidths_are_reported(small_pair):
    X, Y = small_pair
    stat = hsic(X, Y, heuristic=Heuristic.MEDIAN)
    assert stat.sigma_x.heuristic is Heuristic.MEDIAN
    assert stat.sigma_y.sigma > 0


def test_row_count_mismatch():
    with pytest.raises(RowCountMismatch):
        hsic(np.zeros((5, 1)), np.zeros((4, 1)), 1.0, 1.0)


def test_rhsic_is_squared_norm_of_complex_cross_covariance(small_pair):
    X, Y = small_pair
    Zx, Zy = feature_pair(X, Y, 40, 1.0, 0.8, seed=3)
    zx = Zx.cos_part + 1j * Zx.sin_part
    zy = Zy.cos_part + 1j * Zy.sin_part
    want = np.linalg.norm(zx.conj().T @ zy) ** 2 / X.shape[0] ** 2
    stat = rhsic(Zx, Zy)
    assert stat.value == pytest.approx(want, rel=1e-12)
    assert stat.D == 40
    assert stat.method is Method.RHSIC


def test_rhsic_is_zero_for_constant_variable(rng):
    X = rng.standard_normal((30, 2))
    Y = np.zeros((30, 1))
    Zx, Zy = feature_pair(X, Y, 16, 1.0, 1.0, seed=0)
    assert rhsic(Zx, Zy).value == 0.0


def test_rhsic_needs_centered_maps(small_pair):
    X, Y = small_pair
    Zx = feature_map(X, sample_frequencies(3, 8, 1.0, 0))
    Zy = feature_map(Y, sample_frequencies(2, 8, 1.0, 1))
    with pytest.raises(NotCentered):
        rhsic(Zx, Zy)


def test_rhsic_tracks_hsic_on_average():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1, 1, (60, 1))
    y = x ** 2 + 0.1 * rng.standard_normal((60, 1))
    sx, sy = Bandwidth(0.6), Bandwidth(0.4)
    exact = hsic(x, y, sx, sy).value
    approx = np.mean([rhsic(*feature_pair(x, y, 512, sx, sy, s)).value for s in range(20)])
    assert approx == pytest.approx(exact, rel=0.1)


def test_dependence_dispatch_is_reproducible(small_pair):
    X, Y = small_pair
    a = dependence(X, Y, Method.RHSIC, D=30, seed=5)
    b = dependence(X, Y, Method.RHSIC, D=30, seed=5)
    assert a.value == b.value
    assert dependence(X, Y).method is Method.HSIC


def test_cross_covariance_matches_complex_product(small_pair):
    X, Y = small_pair
    Zx, Zy = feature_pair(X, Y, 12, 1.0, 1.5, seed=3)
    cov = rhsic_cross_covariance(Zx, Zy)
    zx = Zx.cos_part + 1j * Zx.sin_part
    zy = Zy.cos_part + 1j * Zy.sin_part
    expected = zx.conj().T @ zy
    np.testing.assert_allclose(cov.real, expected.real, atol=1e-12)
    np.testing.assert_allclose(cov.imag, expected.imag, atol=1e-12)
    assert rhsic(Zx, Zy, cov=cov).value == pytest.approx(rhsic(Zx, Zy).value, rel=1e-12)


def test_joint_row_permutation_leaves_hsic_unchanged(small_pair):
    X, Y = small_pair
    p = np.random.default_rng(3).permutation(X.shape[0])
    assert hsic(X[p], Y[p], 1.0, 1.5).value == pytest.approx(hsic(X, Y, 1.0, 1.5).value, abs=1e-12)


def test_rhsic_within_five_percent_at_large_d():
    rng = np.random.default_rng(21)
    x = rng.uniform(-1, 1, (50, 1))
    y = np.sin(3 * x) + 0.1 * rng.standard_normal((50, 1))
    sx, sy = Bandwidth(0.5), Bandwidth(0.5)
    exact = hsic(x, y, sx, sy).value
    rel = [abs(rhsic(*feature_pair(x, y, 4096, sx, sy, s)).value - exact) / exact for s in range(5)]
    assert np.median(rel) < 0.05


@pytest.mark.slow
def test_cross_covariance_is_larger_for_dependent_data():
    rng = np.random.default_rng(4)
    n, larger = 10_000, 0
    for s in range(100):
        x = rng.standard_normal((n, 1))
        dep = x + 0.3 * rng.standard_normal((n, 1))
        ind = rng.standard_normal((n, 1))
        a = rhsic_cross_covariance(*feature_pair(x, dep, 32, 1.0, 1.0, s)).sq_frobenius()
        b = rhsic_cross_covariance(*feature_pair(x, ind, 32, 1.0, 1.0, s)).sq_frobenius()
        larger += a > b
    assert larger >= 95
