from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from hsicmap.apps import CausalConfig, Criterion, Regressor, Score, causal_rank, pearson, rank_features
from hsicmap.bench import BenchRow, timing_study
from hsicmap.errors import DegenerateDataError, HsicMapError, InputError, RowCountMismatch
from hsicmap.hsic import Method, dependence
from hsicmap.kernelcore import Bandwidth, Heuristic, bandwidth_heuristic, standardize
from hsicmap.loader import LabeledMatrix, read_matrix, read_pairs, write_matrix, write_pairs, write_rows
from hsicmap.nulltest import DependenceResult, IndependenceConfig, NullKind, feature_seed, independence_test
from hsicmap.rff import feature_pair
from hsicmap.sensmap import aggregate, ascent_step, hsic_sensitivity, rhsic_sensitivity
from hsicmap.settings import BandwidthSpec, Settings, load_settings, parse_bandwidth
from hsicmap.toys import anm_suite, associations, noise_regimes

logger = logging.getLogger("hsicmap")

EXIT_INPUT = 2
EXIT_DEGENERATE = 3


@dataclass(frozen=True)
class RunConfig:
    method: Method
    D: int
    alpha: float
    permutations: int | None
    seed: int
    bandwidth: tuple[BandwidthSpec, BandwidthSpec]
    standardize: bool
    null: NullKind
    redraw: bool = False
    timing: bool = False
    exact_limit: int = 4000

    @classmethod
    def from_args(cls, args: argparse.Namespace, settings: Settings) -> "RunConfig":
        """Flags override settings."""

        def pick(name: str, fallback: Any) -> Any:
            v = getattr(args, name, None)
            return fallback if v is None else v

        try:
            bandwidth = parse_bandwidth(pick("bandwidth", settings.bandwidth))
        except ValueError as e:
            raise InputError(str(e)) from None

        config = cls(
            method=Method(pick("method", settings.method)),
            D=int(pick("features", settings.features)),
            alpha=float(pick("alpha", settings.alpha)),
            permutations=pick("permutations", settings.permutations),
            seed=int(pick("seed", settings.seed)),
            bandwidth=bandwidth,
            standardize=bool(getattr(args, "standardize", False) or settings.standardize),
            null=NullKind(pick("null", settings.null)),
            redraw=bool(getattr(args, "redraw", False)),
            timing=bool(getattr(args, "timing", False)),
            exact_limit=settings.exact_limit,
        )
        if config.D < 1:
            raise InputError(f"--features must be >= 1, got {config.D}")
        if not 0.0 < config.alpha < 1.0:
            raise InputError(f"--alpha must lie in (0, 1), got {config.alpha}")
        if config.permutations is not None and config.permutations < 1:
            raise InputError(f"--permutations must be >= 1, got {config.permutations}")
        return config

    def independence(self) -> IndependenceConfig:
        return IndependenceConfig(
            method=self.method,
            null=self.null,
            alpha=self.alpha,
            permutations=self.permutations,
            D=self.D,
            seed=self.seed,
            redraw_frequencies=self.redraw,
        )

    @property
    def heuristic(self) -> Heuristic:
        h = self.bandwidth[0].heuristic
        return Heuristic.MEAN if h is Heuristic.FIXED else h


_JSON_NAMES = {
    "method": "method",
    "statistic": "statistic",
    "p_value": "pValue",
    "threshold": "threshold",
    "reject": "reject",
    "n": "n",
    "D": "D",
    "sigma_x": "sigmaX",
    "sigma_y": "sigmaY",
    "seed": "seed",
    "wall_time_ms": "wallTimeMs",
}


@dataclass(frozen=True)
class ResultRecord:
    method: str
    statistic: float
    p_value: float
    threshold: float
    reject: bool
    n: int
    D: int | None
    sigma_x: float
    sigma_y: float
    seed: int
    wall_time_ms: float | None = None

    @classmethod
    def from_result(cls, res: DependenceResult, config: RunConfig, wall_time_ms: float | None) -> "ResultRecord":
        st = res.statistic
        return cls(
            method=st.method.value,
            statistic=st.clamped,
            p_value=res.p_value,
            threshold=res.threshold,
            reject=bool(res.reject),
            n=st.n,
            D=st.D,
            sigma_x=st.sigma_x.sigma,
            sigma_y=st.sigma_y.sigma,
            seed=config.seed,
            wall_time_ms=wall_time_ms,
        )

    def to_json(self) -> str:
        return json.dumps({key: getattr(self, attr) for attr, key in _JSON_NAMES.items()}, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        obj = json.loads(text)
        missing = [key for key in _JSON_NAMES.values() if key not in obj]
        if missing:
            raise InputError(f"Result record is missing {', '.join(missing)}")
        return cls(**{attr: obj[key] for attr, key in _JSON_NAMES.items()})


def _emit(obj: dict[str, Any] | str) -> None:
    # stdout carries only machine-readable lines
    line = obj if isinstance(obj, str) else json.dumps(obj, ensure_ascii=False)
    sys.stdout.write(line + "\n")


def _finite_or_none(v: float) -> float | None:
    return None if math.isnan(v) else float(v)


def _resolve(A: np.ndarray, spec: BandwidthSpec) -> Bandwidth:
    if spec.heuristic is Heuristic.FIXED:
        return Bandwidth(spec.sigma)
    return bandwidth_heuristic(A, spec.heuristic)


def _read_inputs(xfile: str, yfile: str, config: RunConfig) -> tuple[LabeledMatrix, LabeledMatrix]:
    X = read_matrix(xfile)
    Y = read_matrix(yfile)
    if X.n != Y.n:
        raise RowCountMismatch(f"{xfile} has {X.n} rows, {yfile} has {Y.n}")
    if config.standardize:
        X = LabeledMatrix(standardize(X.values), X.names)
        Y = LabeledMatrix(standardize(Y.values), Y.names)
    return X, Y


# ------------------------------------------------------------
# Commands


def cmd_test(args: argparse.Namespace, config: RunConfig) -> int:
    X, Y = _read_inputs(args.xfile, args.yfile, config)
    sx, sy = _resolve(X.values, config.bandwidth[0]), _resolve(Y.values, config.bandwidth[1])

    t0 = time.perf_counter()
    res = independence_test(X.values, Y.values, sx, sy, config.independence())
    ms = (time.perf_counter() - t0) * 1000.0
    logger.info("test finished in %.1f ms", ms)

    _emit(ResultRecord.from_result(res, config, ms if config.timing else None).to_json())
    return 0


def cmd_sensitivity(args: argparse.Namespace, config: RunConfig) -> int:
    X, Y = _read_inputs(args.xfile, args.yfile, config)
    sx, sy = _resolve(X.values, config.bandwidth[0]), _resolve(Y.values, config.bandwidth[1])

    if config.method is Method.HSIC:
        S = hsic_sensitivity(X.values, Y.values, sx, sy)
    else:
        Zx, Zy = feature_pair(X.values, Y.values, config.D, sx, sy, feature_seed(config.seed))
        S = rhsic_sensitivity(X.values, Y.values, Zx, Zy)
    agg = aggregate(S)

    prefix = args.out
    files = [f"{prefix}_Sx.csv", f"{prefix}_Sy.csv", f"{prefix}_aggregates.csv"]
    write_matrix(files[0], S.Sx, X.names)
    write_matrix(files[1], S.Sy, Y.names)

    names = X.names + Y.names
    rows: list[tuple] = []
    rows += [("per_feature", j, names[j], float(v)) for j, v in enumerate(agg.per_feature)]
    rows += [("per_sample", i, "", float(v)) for i, v in enumerate(agg.per_sample)]
    rows += [("sample_norm", i, "", float(v)) for i, v in enumerate(agg.sample_norms)]
    rows += [("sample_norm_x", i, "", float(v)) for i, v in enumerate(agg.sample_norms_x)]
    write_rows(files[2], ["kind", "index", "name", "value"], rows)

    _emit({"method": config.method.value, "n": X.n, "sigmaX": sx.sigma, "sigmaY": sy.sigma, "files": files})
    return 0


def cmd_rank(args: argparse.Namespace, config: RunConfig) -> int:
    X, Y = _read_inputs(args.xfile, args.yfile, config)
    if config.bandwidth[0].heuristic is Heuristic.FIXED:
        logger.warning("Fixed bandwidth ignored by rank: each feature uses the mean-distance heuristic")

    criterion = Criterion(args.criterion)
    ranking = rank_features(X.values, Y.values, criterion, heuristic=config.heuristic)
    nf = X.values.shape[1] if args.nf is None else args.nf
    selected = ranking.top(nf)

    _emit({
        "criterion": criterion.value,
        "n": X.n,
        "scores": [float(s) for s in ranking.scores],
        "ranking": ranking.order.tolist(),
        "selected": selected.tolist(),
        "selectedNames": [X.names[j] for j in selected],
    })
    return 0


def _curve_rows(*columns: np.ndarray):
    for row in zip(*columns):
        yield tuple(float(v) for v in row)


def cmd_causal(args: argparse.Namespace, config: RunConfig) -> int:
    pairs = read_pairs(args.pairdir, args.metafile, max_samples=args.max_samples, seed=config.seed)
    cc = CausalConfig(
        method=config.method,
        D=config.D,
        seed=config.seed,
        regressor=Regressor(k=args.k),
        score=Score(args.score),
        heuristic=config.heuristic,
    )
    ranking = causal_rank(pairs, cc)

    prefix = args.out
    for score, cs in ranking.curves.items():
        write_rows(
            f"{prefix}_roc_{score.value}.csv",
            ["threshold", "fpr", "tpr", "fp_weight", "tp_weight"],
            _curve_rows(cs.roc_thresholds, cs.fpr, cs.tpr, cs.fp_weight, cs.tp_weight),
        )
        write_rows(
            f"{prefix}_pr_{score.value}.csv",
            ["threshold", "precision", "recall"],
            # precision/recall carry one point more than the thresholds
            _curve_rows(np.append(cs.pr_thresholds, np.inf), cs.precision, cs.recall) if cs.precision.size else [],
        )
        write_rows(
            f"{prefix}_rate_{score.value}.csv",
            ["decision_rate", "accuracy"],
            _curve_rows(cs.decision_rate, cs.ranked_accuracy),
        )

    write_rows(
        f"{prefix}_decisions.csv",
        ["id", "weight", "truth", "C", "Cs", "direction"],
        (
            (pid, float(w), "1->2" if lab == 1 else "2->1", d.score_c, d.score_cs, d.direction.value)
            for pid, w, lab, d in zip(ranking.pair_ids, ranking.weights, ranking.labels, ranking.decisions)
        ),
    )

    summary: dict[str, Any] = {"pairs": len(pairs), "method": config.method.value, "seed": config.seed, "score": cc.score.value}
    for score, cs in ranking.curves.items():
        summary[f"auc{score.value}"] = _finite_or_none(cs.auc)
        summary[f"ap{score.value}"] = _finite_or_none(cs.average_precision)
        summary[f"accuracy{score.value}"] = cs.accuracy
    _emit(summary)
    return 0


def cmd_bench(args: argparse.Namespace, config: RunConfig) -> int:
    if args.seeds < 1:
        raise InputError(f"--seeds must be >= 1, got {args.seeds}")
    rows = timing_study(
        args.sizes, args.grid, config.seed,
        exact_limit=config.exact_limit, repeats=args.repeats, seeds=args.seeds, with_product=not args.no_product,
    )
    if args.out:
        write_rows(args.out, BenchRow.HEADER, (r.as_row() for r in rows))
        _emit({"rows": len(rows), "file": args.out})
        return 0
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(BenchRow.HEADER)
    for r in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r.as_row()])
    return 0


def cmd_generate(args: argparse.Namespace, config: RunConfig) -> int:
    pairs = anm_suite(args.pairs, args.n, config.seed, args.noise)
    write_pairs(args.pairdir, args.metafile, pairs)
    _emit({"pairs": len(pairs), "pairdir": str(args.pairdir), "metafile": str(args.metafile), "seed": config.seed})
    return 0


def _compare_inputs(x: np.ndarray, y: np.ndarray, config: RunConfig):
    X, Y = x.reshape(-1, 1), y.reshape(-1, 1)
    if config.standardize:
        X, Y = standardize(X), standardize(Y)
    return X, Y, _resolve(X, config.bandwidth[0]), _resolve(Y, config.bandwidth[1])


def _ascent_summary(name: str, x: np.ndarray, y: np.ndarray, config: RunConfig) -> dict[str, Any]:
    X, Y, sx, sy = _compare_inputs(x, y, config)
    seed = feature_seed(config.seed)
    before = dependence(X, Y, config.method, sx, sy, D=config.D, seed=seed)
    if config.method is Method.HSIC:
        S = hsic_sensitivity(X, Y, sx, sy)
    else:
        Zx, Zy = feature_pair(X, Y, config.D, sx, sy, seed)
        S = rhsic_sensitivity(X, Y, Zx, Zy)
    X1, Y1 = ascent_step(X, Y, S)
    # bandwidths and frequencies stay fixed across the step
    after = dependence(X1, Y1, config.method, sx, sy, D=config.D, seed=seed)
    agg = aggregate(S)
    return {
        "problem": name,
        "method": config.method.value,
        "statistic": before.value,
        "statisticAfterStep": after.value,
        "increased": bool(after.value > before.value),
        "meanSampleSensitivity": float(np.mean(agg.sample_norms)),
        "perFeature": [float(v) for v in agg.per_feature],
    }


def cmd_compare(args: argparse.Namespace, config: RunConfig) -> int:
    """One JSON line per problem.

    Default: the association gallery with Pearson, HSIC, RHSIC, p-value and
    mean sample sensitivity. With --regimes: the noise-regime pairs with the
    statistic before and after one ascent step along the sensitivity field.
    """
    if args.regimes:
        for name, (x, y) in noise_regimes(args.n, config.seed).items():
            _emit(_ascent_summary(name, x, y, config))
        return 0

    for name, (x, y) in associations(args.n, config.seed).items():
        X, Y, sx, sy = _compare_inputs(x, y, config)
        res = independence_test(X, Y, sx, sy, IndependenceConfig(
            method=Method.HSIC, null=config.null, alpha=config.alpha,
            permutations=config.permutations, seed=config.seed,
        ))
        approx = dependence(X, Y, Method.RHSIC, sx, sy, D=config.D, seed=feature_seed(config.seed))
        S = hsic_sensitivity(X, Y, sx, sy)
        _emit({
            "problem": name,
            "pearson": pearson(X, Y),
            "hsic": res.statistic.clamped,
            "rhsic": approx.clamped,
            "pValue": res.p_value,
            "reject": bool(res.reject),
            "meanSampleSensitivity": float(np.mean(aggregate(S).sample_norms)),
        })
    return 0


# ------------------------------------------------------------
# Argument parsing


def _int_list(text: str) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or any(v < 1 for v in out):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--method", choices=[m.value for m in Method], help="hsic (exact) or rhsic (random features)")
    common.add_argument("--features", type=int, help="number of random features D")
    common.add_argument("--alpha", type=float, help="test level")
    common.add_argument("--permutations", type=int, help="permutation draws (default 200 gamma, 2000 permutation)")
    common.add_argument("--null", choices=[k.value for k in NullKind], help="null model")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--bandwidth", help="auto-mean | auto-median | <sigma> | <sigma_x>,<sigma_y>")
    common.add_argument("--standardize", action="store_true", help="z-score every input column first")
    common.add_argument("--redraw", action="store_true", help="redraw RFF frequencies for every permutation")
    common.add_argument("--timing", action="store_true", help="report wallTimeMs (output is then not byte-reproducible)")

    parser = argparse.ArgumentParser(prog="hsicmap", description="Kernel dependence, independence tests and sensitivity maps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", parents=[common], help="independence test of two CSV variables")
    p.add_argument("xfile")
    p.add_argument("yfile")
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("sensitivity", parents=[common], help="write sensitivity maps and aggregates")
    p.add_argument("xfile")
    p.add_argument("yfile")
    p.add_argument("--out", default="sensitivity", help="output prefix")
    p.set_defaults(handler=cmd_sensitivity)

    p = sub.add_parser("rank", parents=[common], help="rank the columns of X by dependence on y")
    p.add_argument("xfile")
    p.add_argument("yfile")
    p.add_argument("--criterion", choices=[c.value for c in Criterion], default=Criterion.HSIC_PER_FEATURE.value)
    p.add_argument("--nf", type=int, help="number of features to select (default: all)")
    p.set_defaults(handler=cmd_rank)

    p = sub.add_parser("causal", parents=[common], help="direction scores and weighted ROC/PR on a pair collection")
    p.add_argument("pairdir")
    p.add_argument("metafile")
    p.add_argument("--k", type=int, help="kNN neighbours (default ceil(sqrt(n)))")
    p.add_argument("--max-samples", type=int, help="subsample larger pairs to this many rows")
    p.add_argument("--score", choices=[s.value for s in Score], default=Score.C.value, help="score used for decisions")
    p.add_argument("--out", default="causal", help="output prefix")
    p.set_defaults(handler=cmd_causal)

    p = sub.add_parser("bench", parents=[common], help="statistic values, run times and approximation errors per (n, D)")
    p.add_argument("--sizes", type=_int_list, default=[100], help="comma-separated sample sizes")
    p.add_argument("--grid", type=_int_list, default=[30], help="comma-separated feature counts")
    p.add_argument("--repeats", type=int, default=1, help="timing repeats (minimum is kept)")
    p.add_argument("--seeds", type=int, default=10, help="feature draws per (n, D) for the error medians")
    p.add_argument("--no-product", action="store_true", help="skip the O(n^3) product-error column")
    p.add_argument("--out", help="CSV file (default: stdout)")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic additive-noise pair collection")
    p.add_argument("pairdir")
    p.add_argument("metafile")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.2)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("compare", parents=[common], help="dependence measures on a gallery of association shapes")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--regimes", action="store_true", help="noise-regime pairs with one ascent step along the sensitivity field")
    p.set_defaults(handler=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        settings = load_settings()
    except RuntimeError as e:
        print(f"hsicmap: {e}", file=sys.stderr)
        return EXIT_INPUT

    logging.basicConfig(
        level=settings.log_level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    handler: Callable[[argparse.Namespace, RunConfig], int] = args.handler
    try:
        config = RunConfig.from_args(args, settings)
        return handler(args, config)
    except InputError as e:
        print(f"hsicmap: {e}", file=sys.stderr)
        return EXIT_INPUT
    except DegenerateDataError as e:
        print(f"hsicmap: degenerate data: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except HsicMapError:
        logger.exception("%s failed", args.command)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
