"""Independence tests: permutation null, moment-matched gamma null, threshold and p-value."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc
from scipy.stats import kstest

from hsicmap.errors import DegenerateNull, InputError
from hsicmap.hsic import (
    DependenceStatistic,
    Method,
    centered_gram,
    check_pair,
    hsic,
    rhsic,
)
from hsicmap.kernelcore import Bandwidth, as_bandwidth
from hsicmap.rff import FeatureMap, feature_pair
from hsicmap.seeding import generator, spawn_seeds

logger = logging.getLogger(__name__)

GAMMA_PERMUTATIONS = 200
FULL_PERMUTATIONS = 2000


class NullKind(enum.Enum):
    PERMUTATION = "permutation"
    GAMMA = "gamma"


@dataclass(frozen=True, eq=False)
class NullModel:
    kind: NullKind
    B: int
    samples: np.ndarray | None = None
    a: float | None = None  # gamma shape
    b: float | None = None  # gamma scale

    @property
    def mean(self) -> float:
        if self.kind is NullKind.GAMMA:
            return self.a * self.b
        return float(np.mean(self.samples))


@dataclass(frozen=True)
class DependenceResult:
    """Outcome of one test. `reject` is p_value <= alpha.

    A statistic that ties the permutation threshold is rejected only if the
    p-value allows it: constant Y under a fixed bandwidth gives statistic 0,
    threshold 0 and p = 1, so it is not rejected.
    """

    statistic: DependenceStatistic
    p_value: float
    threshold: float
    alpha: float
    null: NullModel
    reject: bool


def _permutation(rng: np.random.Generator, n: int) -> np.ndarray:
    identity = np.arange(n)
    while True:
        p = rng.permutation(n)
        if not np.array_equal(p, identity):
            return p


def permutation_null(
    X,
    Y,
    sigma_x: Bandwidth | float,
    sigma_y: Bandwidth | float,
    method: Method = Method.HSIC,
    B: int = FULL_PERMUTATIONS,
    seed: int = 0,
    *,
    D: int = 30,
    redraw_frequencies: bool = False,
) -> NullModel:
    """Statistic values after permuting the rows of Y, X fixed.

    Permutation b draws from its own sub-stream of `seed`, so the draws do
    not depend on evaluation order. The identity permutation is never used.
    For RHSIC the frequencies are drawn once and shared by all permutations
    unless `redraw_frequencies` is set.
    """
    if B < 1:
        raise InputError(f"Need at least one permutation, got B={B}")
    X, Y = check_pair(X, Y)
    sx, sy = as_bandwidth(sigma_x), as_bandwidth(sigma_y)
    n = X.shape[0]
    perm_seeds = spawn_seeds(seed, B + 1)
    draws = np.empty(B, dtype=np.float64)

    if method is Method.HSIC:
        Lx = centered_gram(X, sx)
        Ly = centered_gram(Y, sy)
        for i in range(B):
            p = _permutation(generator(perm_seeds[i + 1]), n)
            # H commutes with row/column permutations
            draws[i] = float(np.vdot(Lx, Ly[np.ix_(p, p)])) / (n * n)
    elif not redraw_frequencies:
        Zx, Zy = feature_pair(X, Y, D, sx, sy, perm_seeds[0])
        for i in range(B):
            p = _permutation(generator(perm_seeds[i + 1]), n)
            Zy_p = _take_rows(Zy, p)
            draws[i] = rhsic(Zx, Zy_p).value
    else:
        for i in range(B):
            rng_seed, feat_seed = spawn_seeds(perm_seeds[i + 1], 2)
            p = _permutation(generator(rng_seed), n)
            Zx, Zy = feature_pair(X, Y[p], D, sx, sy, feat_seed)
            draws[i] = rhsic(Zx, Zy).value

    logger.debug("permutation null %s B=%s mean=%.6g", method.value, B, draws.mean())
    return NullModel(NullKind.PERMUTATION, B, samples=draws)


def _take_rows(Z: FeatureMap, p: np.ndarray) -> FeatureMap:
    return replace(Z, cos_part=Z.cos_part[p], sin_part=Z.sin_part[p])


def gamma_null(null: NullModel) -> NullModel:
    """Gamma(a, b) with a = m^2 / v and b = v / m from permutation draws."""
    if null.kind is not NullKind.PERMUTATION:
        raise InputError("gamma_null needs a permutation null model")
    s = null.samples
    if s.size < 2 or np.ptp(s) == 0:
        raise DegenerateNull("Null draws have no spread; gamma moments undefined")
    m = float(np.mean(s))
    v = float(np.var(s, ddof=1))
    if m <= 0 or v <= 0:
        raise DegenerateNull(f"Gamma moment match needs mean > 0 and variance > 0 (m={m:.3g}, v={v:.3g})")
    return NullModel(NullKind.GAMMA, null.B, a=m * m / v, b=v / m)


def _gamma_cdf(x: float, a: float, b: float) -> float:
    return float(gammainc(a, x / b))


def _check_null(null: NullModel) -> None:
    if null.kind is NullKind.GAMMA:
        if not (null.a and null.b and null.a > 0 and null.b > 0):
            raise DegenerateNull(f"Bad gamma parameters a={null.a}, b={null.b}")
    elif null.samples is None or null.samples.size < 1:
        raise DegenerateNull("Permutation null has no draws")


def threshold(null: NullModel, alpha: float = 0.05) -> float:
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    _check_null(null)

    if null.kind is NullKind.PERMUTATION:
        s = np.sort(null.samples)
        k = math.ceil((1.0 - alpha) * (s.size + 1) - 1e-9)
        k = min(max(k, 1), s.size)
        return float(s[k - 1])

    a, b = null.a, null.b
    target = 1.0 - alpha
    hi = max(a * b, b)
    for _ in range(2000):
        if _gamma_cdf(hi, a, b) >= target:
            break
        hi *= 2.0
    else:
        raise DegenerateNull(f"Could not bracket the gamma quantile (a={a:.3g}, b={b:.3g})")
    return float(brentq(lambda x: _gamma_cdf(x, a, b) - target, 0.0, hi, xtol=1e-12))


def p_value(stat: DependenceStatistic | float, null: NullModel) -> float:
    value = stat.value if isinstance(stat, DependenceStatistic) else float(stat)
    _check_null(null)
    if null.kind is NullKind.PERMUTATION:
        hits = int(np.count_nonzero(null.samples >= value))
        return (1 + hits) / (null.B + 1)
    return float(gammaincc(null.a, max(value, 0.0) / null.b))


def ks_distance(null: NullModel, fitted: NullModel) -> float:
    """Kolmogorov-Smirnov distance between permutation draws and a fitted gamma."""
    if null.kind is not NullKind.PERMUTATION or fitted.kind is not NullKind.GAMMA:
        raise InputError("ks_distance compares a permutation null with a gamma null")
    res = kstest(null.samples, lambda x: gammainc(fitted.a, np.maximum(x, 0.0) / fitted.b))
    return float(res.statistic)


@dataclass(frozen=True)
class IndependenceConfig:
    method: Method = Method.HSIC
    null: NullKind = NullKind.GAMMA
    alpha: float = 0.05
    permutations: int | None = None
    D: int = 30
    seed: int = 0
    redraw_frequencies: bool = False

    @property
    def B(self) -> int:
        if self.permutations is not None:
            return self.permutations
        return GAMMA_PERMUTATIONS if self.null is NullKind.GAMMA else FULL_PERMUTATIONS


def feature_seed(seed: int) -> int:
    """Seed of the RHSIC frequencies for a run rooted at `seed` (sub-stream 0)."""
    return spawn_seeds(seed, 1)[0]


def observed_statistic(X, Y, sx: Bandwidth, sy: Bandwidth, config: IndependenceConfig) -> DependenceStatistic:
    if config.method is Method.HSIC:
        return hsic(X, Y, sx, sy)
    # same frequencies as the permutation null
    Zx, Zy = feature_pair(X, Y, config.D, sx, sy, feature_seed(config.seed))
    return rhsic(Zx, Zy)


def independence_test(
    X,
    Y,
    sigma_x: Bandwidth | float,
    sigma_y: Bandwidth | float,
    config: IndependenceConfig = IndependenceConfig(),
) -> DependenceResult:
    """Statistic, null model, threshold at level alpha and p-value.

    `reject` is p <= alpha. For a gamma null this is exactly stat >= threshold;
    for a permutation null the two agree unless the statistic ties a null draw.
    """
    X, Y = check_pair(X, Y)
    sx, sy = as_bandwidth(sigma_x), as_bandwidth(sigma_y)
    stat = observed_statistic(X, Y, sx, sy, config)
    null = permutation_null(
        X, Y, sx, sy, config.method, config.B, config.seed,
        D=config.D, redraw_frequencies=config.redraw_frequencies,
    )
    if config.null is NullKind.GAMMA:
        null = gamma_null(null)

    theta = threshold(null, config.alpha)
    p = p_value(stat, null)
    logger.info(
        "%s test n=%s stat=%.6g theta=%.6g p=%.4g (%s null, B=%s)",
        config.method.value, stat.n, stat.value, theta, p, config.null.value, config.B,
    )
    return DependenceResult(stat, p, theta, config.alpha, null, p <= config.alpha)
