"""sepctl: command-line front end.

Subcommands evaluate the closed-form separability bounds, draw seeded
samples, run the Monte Carlo census grid, fit and apply correctors, and
render reports.  Every run with identical flags and seed produces
byte-identical primary outputs; wall-clock timing goes to a sidecar file.

Exit codes: 0 success, 1 runtime or I/O failure, 2 domain or validation
error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, bounds, corrector, sampling, separability
from . import io as sepio

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_DOMAIN = 2


def _real(text: str) -> float:
    """Numeric flag value; scientific notation like 1e9 is accepted."""
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _count(text: str) -> int:
    value = _real(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _require_flags(args, names: list[str]) -> None:
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise bounds.DomainError(f"missing required flags: {', '.join(missing)}")


def _cmd_bounds(args) -> int:
    op = args.op
    result: dict
    if op == "p1":
        _require_flags(args, ["n", "m", "eps"])
        result = asdict(bounds.point_separation_bound(bounds.SeparationRegime(args.n, args.m, args.eps)))
    elif op in ("pm", "two-neuron"):
        # with --eps the bound is evaluated at that shell thickness,
        # without it the eps-maximized variant runs
        _require_flags(args, ["n", "m"])
        if args.eps is not None:
            regime = bounds.SeparationRegime(args.n, args.m, args.eps)
            fn = {"pm": bounds.extreme_points_bound, "two-neuron": bounds.two_neuron_bound}[op]
            result = asdict(fn(regime))
        else:
            fn = {"pm": bounds.extreme_points_bound_max, "two-neuron": bounds.two_neuron_bound_max}[op]
            result = asdict(fn(args.n, args.m))
    elif op in ("p1max", "two-neuron-max"):
        _require_flags(args, ["n", "m"])
        fn = {
            "p1max": bounds.point_separation_bound_max,
            "two-neuron-max": bounds.two_neuron_bound_max,
        }[op]
        result = asdict(fn(args.n, args.m))
    elif op in ("pm-union", "two-neuron-all"):
        _require_flags(args, ["n", "m"])
        eps = args.eps if args.eps is not None else 0.5  # regime eps unused by union bounds
        regime = bounds.SeparationRegime(args.n, args.m, eps)
        fn = {
            "pm-union": bounds.extreme_points_union_bound,
            "two-neuron-all": bounds.two_neuron_union_bound,
        }[op]
        result = asdict(fn(regime))
    elif op == "capacity":
        _require_flags(args, ["n", "eps", "p"])
        result = asdict(bounds.separation_capacity(args.n, args.eps, args.p))
    elif op == "capacity-all":
        _require_flags(args, ["n", "eps", "q"])
        result = asdict(bounds.extreme_points_capacity(args.n, args.eps, args.q))
    else:  # pragma: no cover - argparse restricts choices
        raise bounds.DomainError(f"unknown bounds operation {op!r}")
    result["op"] = op
    _emit(result, args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    semi_axes = None
    if args.semi_axes:
        semi_axes = tuple(float(t) for t in args.semi_axes.split(","))
    spec = sampling.DistributionSpec(kind=args.dist, n=args.n, semi_axes=semi_axes)
    seed = sampling.SeedSpec(args.seed, args.stream)
    matrix = sampling.sample(spec, args.m, seed)
    sepio.write_matrix(matrix, args.out, fmt=args.format)
    return EXIT_OK


def _cmd_mc(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = sepio.config_from_dict(json.load(fh))
    started = time.perf_counter()
    report = separability.mc_experiment(config, threads=args.threads)
    elapsed = time.perf_counter() - started
    sepio.write_report(report, args.out)
    sidecar = Path(str(args.out) + ".time")
    sidecar.write_text(json.dumps({"wall_clock_s": elapsed}) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_census(args) -> int:
    matrix = sepio.read_matrix(args.infile, fmt=args.format)
    result = separability.census(matrix)
    doc = {
        "m": int(matrix.shape[0]),
        "n": int(matrix.shape[1]),
        "separable_count": result.separable_count,
        "f1": result.f1,
    }
    if args.per_point:
        doc["per_point"] = [int(v) for v in result.per_point]
    _emit(doc, args.out)
    return EXIT_OK


def _cmd_pca(args) -> int:
    matrix = sepio.read_matrix(args.infile, fmt=args.format)
    pca = corrector.fit_pca(matrix)
    doc = {
        "eigenvalues": pca.eigenvalues.tolist(),
        "broken_stick_count": corrector.broken_stick_count(pca.eigenvalues),
        "kaiser_count": corrector.kaiser_count(pca.eigenvalues),
    }
    _emit(doc, args.out)
    return EXIT_OK


def _whitening_from_args(args, positives: np.ndarray) -> corrector.WhiteningModel:
    if args.k is not None:
        rule: int | str = args.k
    elif args.rule is not None:
        rule = args.rule.replace("-", "_")
    else:
        rule = positives.shape[1]  # keep every component
    return corrector.build_whitening(positives, rule, whiten=args.whiten)


def _cmd_train(args) -> int:
    positives = sepio.read_matrix(args.positives)
    trash = sepio.read_matrix(args.trash)
    kind = args.kind
    if kind == "spherical-cap":
        if args.whiten or args.rule or args.k is not None:
            raise bounds.DomainError(
                "the spherical cap model works on raw centered data; "
                "--whiten/--rule/--k do not apply"
            )
        models = [corrector.spherical_cap_corrector(positives, row) for row in trash]
    elif kind == "fisher-single":
        whitening = _whitening_from_args(args, positives)
        models = [
            corrector.fisher_corrector_single(positives, row, whitening) for row in trash
        ]
    elif kind == "fisher-multi":
        whitening = _whitening_from_args(args, positives)
        models = [corrector.fisher_corrector_multi(positives, trash, whitening)]
    elif kind == "two-neuron":
        whitening = None
        if args.whiten or args.rule or args.k is not None:
            whitening = _whitening_from_args(args, positives)
        models = [
            corrector.two_neuron_corrector(positives, row, whitening) for row in trash
        ]
    elif kind == "svm-baseline":
        whitening = None
        if args.whiten or args.rule or args.k is not None:
            whitening = _whitening_from_args(args, positives)
        cfg = corrector.SvmConfig(
            epochs=args.epochs, step=args.step, regularization=args.reg, seed=args.seed
        )
        models = [corrector.svm_baseline(positives, trash, cfg, whitening)]
    else:  # pragma: no cover - argparse restricts choices
        raise bounds.DomainError(f"unknown corrector kind {kind!r}")
    model = models[0] if len(models) == 1 else corrector.assemble_cascade(models)
    sepio.write_model(model, args.out)
    return EXIT_OK


def _cmd_eval(args) -> int:
    model = sepio.read_model(args.model)
    data = sepio.read_labeled(args.data)
    metrics = corrector.evaluate(model, data)
    doc = asdict(metrics)
    doc["tp_removal_rate"] = metrics.tp_removal_rate
    doc["fp_removal_rate"] = metrics.fp_removal_rate
    _emit(doc, args.out)
    return EXIT_OK


def _cmd_apply(args) -> int:
    model = sepio.read_model(args.model)
    matrix = sepio.read_matrix(args.infile, fmt=args.format)
    flags = np.asarray(model.apply(matrix))
    lines = "\n".join("1" if f else "0" for f in flags) + "\n"
    if args.out:
        Path(args.out).write_text(lines, encoding="utf-8")
    else:
        sys.stdout.write(lines)
    return EXIT_OK


def _cmd_report(args) -> int:
    report = sepio.read_report(args.infile)
    from . import report as reporting  # deferred: pulls in matplotlib

    written = reporting.render_report(report, args.out_dir, dpi=args.dpi)
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepctl",
        description="separability bounds, census experiments, and one-shot correctors",
    )
    parser.add_argument("--version", action="version", version=f"sepctl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pb = sub.add_parser(
        "bounds",
        help="closed-form separability bounds and capacities",
        description=(
            "Evaluate a closed-form bound. p1: (1-(1-eps)^n)(1-rho^n/2)^m with "
            "rho=sqrt(1-(1-eps)^2), the chance a fresh point separates from a "
            "sample of m. p1max: the same maximized over eps. pm: "
            "[(1-(1-eps)^n)(1-(m-1)rho^n/2)]^m, the chance every sample point is "
            "an extreme point; pm-union: 1-m(1-p1max). two-neuron: p1 times "
            "exp((m-n+1)x)(1-((m-n+1)x)^n/n!) with x=(rho^n/2)/(1-rho^n/2), for "
            "a cascade of two orthogonal-weight predicates; two-neuron-max "
            "maximizes it over eps, two-neuron-all is its union-bound variant. "
            "capacity: m_max = (ln p - ln(1-(1-eps)^n))/ln(1-rho^n/2), the "
            "largest sample keeping p1 >= p, with asymptote exp(n ln(1/rho))|ln p|. "
            "capacity-all: exp((n/2)ln(1/rho))sqrt(1-q) for the all-points bound."
        ),
    )
    pb.add_argument(
        "op",
        choices=[
            "p1",
            "p1max",
            "pm",
            "pm-union",
            "two-neuron",
            "two-neuron-max",
            "two-neuron-all",
            "capacity",
            "capacity-all",
        ],
    )
    pb.add_argument("--n", type=_count, help="dimension")
    pb.add_argument("--m", type=_real, help="sample size (reals like 1e9 accepted)")
    pb.add_argument("--eps", type=_real, help="boundary shell thickness in (0,1)")
    pb.add_argument("--p", type=_real, help="target probability for capacity")
    pb.add_argument("--q", type=_real, help="target probability for capacity-all")
    pb.add_argument("--out", help="write the JSON result here instead of stdout")
    pb.set_defaults(func=_cmd_bounds)

    ps = sub.add_parser(
        "sample",
        help="draw a seeded sample matrix",
        description=(
            "Draw m i.i.d. rows: ball = uniform in the unit ball via Gaussian "
            "direction and u^(1/n) radius; cube = uniform on [-1,1]^n; gaussian "
            "= standard normal; ellipsoid = ball scaled per-coordinate by the "
            "semi-axes."
        ),
    )
    ps.add_argument("--dist", required=True, choices=sampling.KINDS)
    ps.add_argument("--n", type=_count, required=True)
    ps.add_argument("--m", type=_count, required=True)
    ps.add_argument("--seed", type=_count, required=True)
    ps.add_argument("--stream", type=_count, default=0, help="stream id (default 0)")
    ps.add_argument("--semi-axes", help="comma-separated semi-axes (ellipsoid only)")
    ps.add_argument("--out", required=True)
    ps.add_argument("--format", choices=sepio.FORMATS, default=None)
    ps.set_defaults(func=_cmd_sample)

    pm = sub.add_parser(
        "mc",
        help="Monte Carlo census over a (distribution, n) grid",
        description=(
            "For each grid cell draw `repeats` samples on derived streams, run "
            "the census (each point y counts when <y,x> - |y|^2 < 0 on every "
            "other point x), and report min/median/max of the frequencies "
            "N/(m-1), plus the theoretical p1max bound for ball cells.  The "
            "report is identical for any --threads value; timing goes to "
            "<out>.time."
        ),
    )
    pm.add_argument("--config", required=True, help="experiment config JSON")
    pm.add_argument("--out", required=True, help="report JSON path")
    pm.add_argument("--threads", type=_count, default=1, help="worker threads (0 = auto)")
    pm.set_defaults(func=_cmd_mc)

    pc = sub.add_parser(
        "census",
        help="separability census of one sample",
        description=(
            "Count rows y with <y,x> - |y|^2 < 0 strictly for every other row "
            "x, via the Gram matrix; reports the count and the frequency "
            "N/(m-1)."
        ),
    )
    pc.add_argument("--in", dest="infile", required=True)
    pc.add_argument("--format", choices=sepio.FORMATS, default=None)
    pc.add_argument("--out")
    pc.add_argument("--per-point", action="store_true", help="include per-row flags")
    pc.set_defaults(func=_cmd_census)

    pp = sub.add_parser(
        "pca",
        help="covariance spectrum and component-count rules",
        description=(
            "Eigendecompose the sample covariance (divisor m-1) and report the "
            "descending spectrum with the broken-stick count (leading "
            "eigenvalue fractions above the expected broken-stick fragments) "
            "and the Kaiser count (eigenvalues above the mean)."
        ),
    )
    pp.add_argument("--in", dest="infile", required=True)
    pp.add_argument("--format", choices=sepio.FORMATS, default=None)
    pp.add_argument("--out")
    pp.set_defaults(func=_cmd_pca)

    pt = sub.add_parser(
        "train",
        help="fit a corrector from positives and trash rows",
        description=(
            "spherical-cap: per trash row q, flag <q'/|q'|, x - mean> >= |q'| "
            "with q' = q - mean of the positives.  fisher-single: per trash "
            "row, direction = whitened query minus whitened-positives mean, "
            "threshold at the query projection.  fisher-multi: direction = "
            "(cov_tp + cov_fp)^-1 (mean_fp - mean_tp), threshold = smallest "
            "trash projection.  two-neuron: cap predicate plus an orthogonal "
            "second predicate cleaning out cap survivors.  svm-baseline: "
            "hinge-loss subgradient descent benchmark.  Multi-row single-query "
            "kinds are assembled into an OR cascade."
        ),
    )
    pt.add_argument(
        "--kind",
        required=True,
        choices=["spherical-cap", "fisher-single", "fisher-multi", "two-neuron", "svm-baseline"],
    )
    pt.add_argument("--positives", required=True, help="CSV of rows to preserve")
    pt.add_argument("--trash", required=True, help="CSV of mistakes to flag")
    pt.add_argument("--rule", choices=["broken-stick", "kaiser"], help="component count rule")
    pt.add_argument("--k", type=_count, help="fixed component count")
    pt.add_argument("--whiten", action="store_true", help="rescale by 1/sqrt(eigenvalue)")
    pt.add_argument("--seed", type=_count, default=0, help="svm-baseline shuffle seed")
    pt.add_argument("--epochs", type=_count, default=200)
    pt.add_argument("--step", type=_real, default=0.5)
    pt.add_argument("--reg", type=_real, default=1e-4)
    pt.add_argument("--out", required=True, help="model JSON path")
    pt.set_defaults(func=_cmd_train)

    pe = sub.add_parser(
        "eval",
        help="removal metrics of a model on labeled data",
        description=(
            "Apply the model to a labeled CSV (last column positive|trash) and "
            "report removal counts and rates per label."
        ),
    )
    pe.add_argument("--model", required=True)
    pe.add_argument("--data", required=True)
    pe.add_argument("--out")
    pe.set_defaults(func=_cmd_eval)

    pa = sub.add_parser(
        "apply",
        help="per-row boolean flags of a model on a matrix",
        description="Whiten each row, evaluate the cascade, emit one 0/1 flag per row.",
    )
    pa.add_argument("--model", required=True)
    pa.add_argument("--in", dest="infile", required=True)
    pa.add_argument("--format", choices=sepio.FORMATS, default=None)
    pa.add_argument("--out")
    pa.set_defaults(func=_cmd_apply)

    pr = sub.add_parser(
        "report",
        help="render a report JSON to a table and figures",
        description=(
            "Write a plot-ready CSV summary and a separability-vs-dimension "
            "figure (median with min/max whiskers, theoretical ball curve) "
            "into the output directory."
        ),
    )
    pr.add_argument("--in", dest="infile", required=True, help="report JSON from `mc`")
    pr.add_argument("--out-dir", required=True)
    pr.add_argument("--dpi", type=_count, default=150)
    pr.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, separability.SeparationFailure) as exc:
        kind = EXIT_RUNTIME if isinstance(exc, separability.SeparationFailure) else EXIT_DOMAIN
        print(f"sepctl: error: {exc}", file=sys.stderr)
        return kind
    except OSError as exc:
        print(f"sepctl: i/o error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
