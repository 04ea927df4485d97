"""Feature ranking, additive-noise causal direction scoring and weighted ROC/PR evaluation."""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.metrics import average_precision_score, precision_recall_curve, roc_auc_score, roc_curve

from hsicmap.errors import InputError, ShapeMismatch, ZeroVariance
from hsicmap.hsic import Method, hsic, resolve_bandwidth, rhsic
from hsicmap.kernelcore import Heuristic, as_data_matrix
from hsicmap.rff import feature_pair
from hsicmap.seeding import spawn_seeds
from hsicmap.sensmap import aggregate, hsic_sensitivity, rhsic_sensitivity

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# Feature ranking


class Criterion(enum.Enum):
    HSIC_PER_FEATURE = "hsic"
    SENSITIVITY_PER_FEATURE = "sensitivity"
    PEARSON_ABS = "pearson"


@dataclass(frozen=True, eq=False)
class FeatureRanking:
    scores: np.ndarray
    order: np.ndarray
    criterion: Criterion

    def top(self, nf: int) -> np.ndarray:
        if not 1 <= nf <= self.order.size:
            raise InputError(f"nf must lie in [1, {self.order.size}], got {nf}")
        return self.order[:nf]


def _as_vector(v, name: str) -> np.ndarray:
    A = as_data_matrix(v, name)
    if A.shape[1] != 1:
        raise ShapeMismatch(f"{name}: expected a single column, got {A.shape[1]}")
    return A[:, 0]


def pearson(x, y) -> float:
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.size != y.size:
        raise ShapeMismatch(f"x has {x.size} samples, y has {y.size}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ZeroVariance("Pearson correlation is undefined for a constant variable")
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))


def rank_features(
    X,
    y,
    criterion: Criterion = Criterion.HSIC_PER_FEATURE,
    *,
    heuristic: Heuristic = Heuristic.MEAN,
) -> FeatureRanking:
    """Filter ranking of the columns of X by their dependence on y.

    Ties go to the lower feature index.
    """
    X = as_data_matrix(X, "X")
    y = as_data_matrix(y, "y")
    if y.shape[1] != 1:
        raise ShapeMismatch(f"y must have one column, got {y.shape[1]}")
    if y.shape[0] != X.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows, y has {y.shape[0]}")

    d = X.shape[1]
    if criterion is Criterion.HSIC_PER_FEATURE:
        sy = resolve_bandwidth(y, None, heuristic)
        scores = np.array([hsic(X[:, [j]], y, resolve_bandwidth(X[:, [j]], None, heuristic), sy).clamped for j in range(d)])
    elif criterion is Criterion.SENSITIVITY_PER_FEATURE:
        S = hsic_sensitivity(X, y, heuristic=heuristic)
        scores = aggregate(S).per_feature[:d]
    else:
        scores = np.array([abs(pearson(X[:, j], y[:, 0])) for j in range(d)])

    order = np.argsort(-scores, kind="stable")
    logger.debug("ranked %s features by %s: top=%s", d, criterion.value, order[: min(d, 5)].tolist())
    return FeatureRanking(scores, order, criterion)


# ------------------------------------------------------------
# Leave-one-out kNN regression


@dataclass(frozen=True, eq=False)
class LooFit:
    predicted: np.ndarray
    residuals: np.ndarray
    k: int


def default_k(n: int) -> int:
    return min(max(1, math.ceil(math.sqrt(n))), n - 1)


class RegressorKind(enum.Enum):
    KNN = "knn"


@dataclass(frozen=True)
class Regressor:
    """Leave-one-out regressor used for the forward and backward fits."""

    kind: RegressorKind = RegressorKind.KNN
    k: int | None = None  # None: default_k(n)

    def fit(self, x, y) -> LooFit:
        return knn_regress(x, y, self.k)


def knn_regress(x, y, k: int | None = None) -> LooFit:
    """Leave-one-out kNN: y_hat_i is the mean of y over the k nearest other rows.

    Distance ties go to the lower sample index.
    """
    X = as_data_matrix(x, "x")
    yv = _as_vector(y, "y")
    n = X.shape[0]
    if yv.size != n:
        raise ShapeMismatch(f"x has {n} rows, y has {yv.size}")
    k = default_k(n) if k is None else int(k)
    if not 1 <= k < n:
        raise InputError(f"k must satisfy 1 <= k < n={n}, got {k}")

    dist = cdist(X, X, metric="sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, :k]
    predicted = yv[nbrs].mean(axis=1)
    return LooFit(predicted, yv - predicted, k)


# ------------------------------------------------------------
# Causal direction


class Direction(enum.Enum):
    X_CAUSES_Y = "x->y"
    Y_CAUSES_X = "y->x"


class Score(enum.Enum):
    C = "C"  # HSIC difference, < 0 means x -> y
    CS = "Cs"  # sensitivity difference, > 0 means x -> y


@dataclass(frozen=True)
class CausalConfig:
    method: Method = Method.HSIC
    D: int = 30
    seed: int = 0
    regressor: Regressor = Regressor()
    score: Score = Score.C
    heuristic: Heuristic = Heuristic.MEAN


@dataclass(frozen=True)
class SensitivityComponents:
    forward_x: float  # S_f^x
    forward_r: float  # S_f^r
    backward_y: float  # S_b^y
    backward_r: float  # S_b^r


@dataclass(frozen=True, eq=False)
class CausalDecision:
    score_c: float
    score_cs: float
    direction: Direction
    forward_residuals: np.ndarray
    backward_residuals: np.ndarray
    components: SensitivityComponents
    stat_forward: float
    stat_backward: float

    def evidence(self, score: Score) -> float:
        """Signed evidence for x -> y under either score."""
        return -self.score_c if score is Score.C else self.score_cs


def _mean_sq(A: np.ndarray) -> float:
    return float(np.mean(A * A))


def _residual_dependence(cause: np.ndarray, resid: np.ndarray, config: CausalConfig) -> tuple[float, float, float]:
    """Statistic of (cause, residual) and the mean-of-squares of both sensitivity blocks."""
    c = cause.reshape(-1, 1)
    r = resid.reshape(-1, 1)
    sc = resolve_bandwidth(c, None, config.heuristic)
    sr = resolve_bandwidth(r, None, config.heuristic)
    if config.method is Method.HSIC:
        stat = hsic(c, r, sc, sr).value
        S = hsic_sensitivity(c, r, sc, sr)
    else:
        # one seed for both directions keeps the score antisymmetric
        Zc, Zr = feature_pair(c, r, config.D, sc, sr, config.seed)
        stat = rhsic(Zc, Zr).value
        S = rhsic_sensitivity(c, r, Zc, Zr)
    return stat, _mean_sq(S.Sx), _mean_sq(S.Sy)


def causal_score(x, y, config: CausalConfig = CausalConfig()) -> CausalDecision:
    """Additive-noise direction scores from leave-one-out residuals.

    C  = stat(x, r_f) - stat(y, r_b); C < 0 favours x -> y.
    Cs = (S_b^y + S_b^r) - (S_f^x + S_f^r); Cs > 0 favours x -> y.
    Each S term is the mean of squared entries of one sensitivity block.
    """
    xv = _as_vector(x, "x")
    yv = _as_vector(y, "y")
    if xv.size != yv.size:
        raise ShapeMismatch(f"x has {xv.size} samples, y has {yv.size}")

    r_f = config.regressor.fit(xv, yv).residuals
    r_b = config.regressor.fit(yv, xv).residuals

    stat_f, sf_x, sf_r = _residual_dependence(xv, r_f, config)
    stat_b, sb_y, sb_r = _residual_dependence(yv, r_b, config)

    score_c = stat_f - stat_b
    score_cs = (sb_y + sb_r) - (sf_x + sf_r)
    evidence = -score_c if config.score is Score.C else score_cs
    direction = Direction.X_CAUSES_Y if evidence > 0 else Direction.Y_CAUSES_X
    return CausalDecision(
        score_c=score_c,
        score_cs=score_cs,
        direction=direction,
        forward_residuals=r_f,
        backward_residuals=r_b,
        components=SensitivityComponents(sf_x, sf_r, sb_y, sb_r),
        stat_forward=stat_f,
        stat_backward=stat_b,
    )


# ------------------------------------------------------------
# Ranked decisions and weighted curves


@dataclass(frozen=True, eq=False)
class CausalPair:
    pair_id: str
    x: np.ndarray
    y: np.ndarray
    weight: float = 1.0
    truth: Direction | None = None

    def __post_init__(self) -> None:
        if not self.weight > 0:
            raise InputError(f"pair {self.pair_id}: weight must be positive, got {self.weight}")


@dataclass(frozen=True, eq=False)
class CurveSet:
    """Weighted ROC / PR curves for one score, evidence oriented towards x -> y."""

    score: Score
    fpr: np.ndarray
    tpr: np.ndarray
    roc_thresholds: np.ndarray
    fp_weight: np.ndarray
    tp_weight: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    pr_thresholds: np.ndarray
    auc: float
    average_precision: float
    accuracy: float
    decision_rate: np.ndarray  # cumulative weight share of the |score|-ranked decisions
    ranked_accuracy: np.ndarray  # weighted accuracy among those decisions


@dataclass(frozen=True, eq=False)
class CausalRanking:
    pair_ids: list[str]
    decisions: list[CausalDecision]
    weights: np.ndarray
    labels: np.ndarray  # 1 for x -> y
    curves: dict[Score, CurveSet] = field(default_factory=dict)

    def ranked(self, score: Score) -> list[int]:
        """Pair indices by decreasing |score|, ties by input order."""
        mags = np.array([abs(d.evidence(score)) for d in self.decisions])
        return np.argsort(-mags, kind="stable").tolist()


def weighted_auc(labels: np.ndarray, evidence: np.ndarray, weights: np.ndarray) -> float:
    if np.unique(labels).size < 2:
        logger.warning("ROC AUC needs both directions among the pairs; returning NaN")
        return float("nan")
    return float(roc_auc_score(labels, evidence, sample_weight=weights))


def _curves(score: Score, labels: np.ndarray, evidence: np.ndarray, weights: np.ndarray) -> CurveSet:
    both = np.unique(labels).size == 2
    if both:
        fpr, tpr, roc_thr = roc_curve(labels, evidence, sample_weight=weights, drop_intermediate=False)
        prec, rec, pr_thr = precision_recall_curve(labels, evidence, sample_weight=weights)
        ap = float(average_precision_score(labels, evidence, sample_weight=weights))
    else:
        fpr = tpr = roc_thr = prec = rec = pr_thr = np.empty(0)
        ap = float("nan")

    correct = (evidence > 0) == (labels == 1)
    order = np.argsort(-np.abs(evidence), kind="stable")
    w_sorted = weights[order]
    cum_w = np.cumsum(w_sorted)
    return CurveSet(
        score=score,
        fpr=fpr,
        tpr=tpr,
        roc_thresholds=roc_thr,
        fp_weight=fpr * weights[labels == 0].sum(),
        tp_weight=tpr * weights[labels == 1].sum(),
        precision=prec,
        recall=rec,
        pr_thresholds=pr_thr,
        auc=weighted_auc(labels, evidence, weights),
        average_precision=ap,
        accuracy=float(np.sum(weights * correct) / weights.sum()),
        decision_rate=cum_w / cum_w[-1],
        ranked_accuracy=np.cumsum(w_sorted * correct[order]) / cum_w,
    )


def causal_rank(pairs: list[CausalPair], config: CausalConfig = CausalConfig()) -> CausalRanking:
    """Score every pair, then build weighted ROC/PR curves for C and Cs.

    Pair i uses the i-th sub-stream of `config.seed`.
    """
    if not pairs:
        raise InputError("No pairs to rank")
    missing = [p.pair_id for p in pairs if p.truth is None]
    if missing:
        raise InputError(f"Pairs without ground truth: {', '.join(missing[:5])}")

    seeds = spawn_seeds(config.seed, len(pairs))
    decisions = []
    for pair, s in zip(pairs, seeds):
        decisions.append(causal_score(pair.x, pair.y, replace(config, seed=s)))
        logger.debug("pair %s: C=%.4g Cs=%.4g", pair.pair_id, decisions[-1].score_c, decisions[-1].score_cs)

    labels = np.array([1 if p.truth is Direction.X_CAUSES_Y else 0 for p in pairs])
    weights = np.array([p.weight for p in pairs], dtype=np.float64)
    curves = {
        score: _curves(score, labels, np.array([d.evidence(score) for d in decisions]), weights)
        for score in Score
    }
    logger.info(
        "ranked %s pairs: AUC(C)=%.4f AUC(Cs)=%.4f acc(C)=%.3f",
        len(pairs), curves[Score.C].auc, curves[Score.CS].auc, curves[Score.C].accuracy,
    )
    return CausalRanking([p.pair_id for p in pairs], decisions, weights, labels, curves)
