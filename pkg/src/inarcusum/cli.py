"""Command-line interface.

Exit codes: ``test`` returns 0 when no component rejects, 1 on rejection;
every command returns 2 on invalid flags, unreadable input or a failed fit.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import warnings
from pathlib import Path

from . import __version__
from .changepoint import ScanKind, estimate_changepoint
from .cusum import TestConfig, TestKind, evaluate_fit
from .dataio import (
    changepoint_document,
    decision_document,
    dump_report,
    estimation_document,
    format_counts,
    read_counts,
    report_document,
)
from .estimate import cls_estimate
from .exceptions import InarError, NotPositiveDefinite, SingularDesign
from .model import ChangeSpec, InarModel, InnovationSpec, ObservationSeries, simulate, simulate_with_change
from .montecarlo import ExperimentSpec, run_experiment

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2

_HINTS = {
    SingularDesign: "the lagged regressors are collinear; use fewer lags or a longer, non-constant series",
    NotPositiveDefinite: "the estimated information matrix is degenerate; check for a near-constant series "
    "or a negative innovation-variance estimate",
}


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _lag_support(args):
    if args.lags:
        return tuple(sorted(set(args.lags)))
    if args.p:
        return tuple(range(1, args.p + 1))
    return (1,)


def _model_from_flags(args):
    support = _lag_support(args)
    if args.alpha is None:
        raise UsageError("--alpha is required")
    if len(args.alpha) != len(support):
        raise UsageError(f"--alpha has {len(args.alpha)} values but the lag set {list(support)} has {len(support)}")
    order = max(support) if args.p is None else max(args.p, max(support))
    try:
        innovation = InnovationSpec.parse(args.innov)
        return InarModel.seasonal(order, dict(zip(support, args.alpha)), innovation)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _change_from_flags(text, pre):
    """``rho=0.5,mu=2,alpha1=0.2``: post-change values override the pre-change model."""
    fields = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--change entries must look like key=value, got {item!r}")
        fields[key.strip().lower()] = value.strip()
    try:
        rho = float(fields.pop("rho"))
    except KeyError:
        raise UsageError("--change needs rho=...") from None
    alpha = list(pre.alpha)
    innovation = pre.innovation
    for key, value in fields.items():
        if key in ("mu", "mean"):
            innovation = innovation.with_mean(float(value))
        elif key in ("innov", "innovation"):
            innovation = InnovationSpec.parse(value.replace(";", ","))
        elif match := re.fullmatch(r"(?:alpha|a)_?(\d*)", key):
            lag = int(match.group(1) or 1)
            if not 1 <= lag <= pre.order:
                raise UsageError(f"--change refers to lag {lag} outside 1..{pre.order}")
            alpha[lag - 1] = float(value)
        else:
            raise UsageError(f"unknown --change key {key!r}")
    support = tuple(sorted(set(pre.lag_support) | {i for i, a in enumerate(alpha, 1) if a}))
    return ChangeSpec(rho, pre, InarModel(tuple(alpha), innovation, support))


def _load_series(path, support):
    counts = read_counts(path)
    n_initial = max(support)
    if counts.size <= n_initial + len(support) + 1:
        raise UsageError(f"{path}: {counts.size} values are too few for lags {list(support)}")
    return ObservationSeries.from_raw(counts, n_initial), n_initial


def _config(args):
    return TestConfig(args.kind, args.alpha_level, tuple(args.components) if args.components else None)


def _emit(doc, output):
    text = dump_report(doc, output)
    if output is None or output == "-":
        sys.stdout.write(text)


def _flags(args):
    return {k: v for k, v in vars(args).items() if k not in ("func", "command")}


def cmd_simulate(args):
    model = _model_from_flags(args)
    p = model.order
    if args.n <= p:
        raise UsageError(f"--n must exceed the model order {p}")
    steps = args.n - p
    if args.change:
        spec = _change_from_flags(args.change, model)
        series = simulate_with_change(spec, steps, seed=args.seed)
        echo = {"pre": _model_echo(spec.pre), "post": _model_echo(spec.post), "rho": spec.rho,
                "tau": spec.tau(steps), "raw_row": spec.tau(steps) + p}
    else:
        series = simulate(model, steps, seed=args.seed)
        echo = {"model": _model_echo(model)}
    echo.update(n_rows=args.n, n_initial=p, seed=args.seed)
    text = format_counts(series.full, header=not args.no_header)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    print(json.dumps(echo), file=sys.stderr)
    return EXIT_OK


def _model_echo(model):
    return {"alpha": list(model.alpha), "lag_support": list(model.lag_support), "innovation": model.innovation.describe()}


def _fit(series, support):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        est = cls_estimate(series, support)
    return est, [str(w.message) for w in caught]


def cmd_test(args):
    support = _lag_support(args)
    series, n_initial = _load_series(args.file, support)
    est, diagnostics = _fit(series, support)
    report = evaluate_fit(series, est, _config(args))
    doc = report_document(
        "test",
        input_path=args.file,
        flags=_flags(args),
        seed=None,
        n_initial=n_initial,
        estimates=estimation_document(est),
        test=decision_document(report),
        diagnostics=diagnostics,
    )
    _emit(doc, args.output)
    return EXIT_REJECT if report.reject else EXIT_OK


def _segment_document(counts, lags, args):
    support = tuple(sorted(set(lags)))
    n_initial = max(support)
    series = ObservationSeries.from_raw(counts, n_initial)
    est, diagnostics = _fit(series, support)
    report = evaluate_fit(series, est, TestConfig(args.kind, args.alpha_level))
    return {
        "raw_rows": counts.size,
        "estimates": estimation_document(est),
        "test": decision_document(report, path_samples=False),
        "diagnostics": diagnostics,
    }


def cmd_changepoint(args):
    support = _lag_support(args)
    series, n_initial = _load_series(args.file, support)
    est, diagnostics = _fit(series, support)
    cp = estimate_changepoint(series, est, args.scan, args.weight_lag)
    report = evaluate_fit(series, est, _config(args))
    sections = {
        "n_initial": n_initial,
        "estimates": estimation_document(est),
        "test": decision_document(report),
        "changepoint": changepoint_document(cp, n_initial),
        "diagnostics": diagnostics,
    }
    if args.refit_lags:
        counts = series.full
        split = cp.tau_hat + n_initial
        segments = {}
        for name, part in (("pre", counts[:split]), ("post", counts[split:])):
            try:
                segments[name] = _segment_document(part, args.refit_lags, args)
            except (InarError, ValueError) as exc:
                segments[name] = {"raw_rows": int(part.size), "error": f"{type(exc).__name__}: {exc}"}
        sections["segments"] = segments
    doc = report_document("changepoint", input_path=args.file, flags=_flags(args), seed=None, **sections)
    _emit(doc, args.output)
    return EXIT_OK


def _experiment_from_json(doc):
    try:
        model_doc = doc["model"]
        lags = model_doc.get("lags") or list(range(1, len(model_doc["alpha"]) + 1))
        order = model_doc.get("p") or max(lags)
        model = InarModel.seasonal(order, dict(zip(lags, model_doc["alpha"])), InnovationSpec.parse(model_doc["innovation"]))
        scenario = model
        if doc.get("change"):
            change = ",".join(f"{k}={v}" for k, v in doc["change"].items())
            scenario = _change_from_flags(change, model)
        test = doc.get("test", {})
        config = TestConfig(test.get("kind", "two-sided"), test.get("alpha", 0.05), test.get("components"))
        return ExperimentSpec(
            scenario,
            int(doc["n"]),
            int(doc["replications"]),
            config,
            int(doc.get("seed", 0)),
            tuple(lags),
            ScanKind.coerce(doc.get("scan", "max-abs")),
            doc.get("weight_lag"),
        )
    except KeyError as exc:
        raise UsageError(f"experiment spec is missing {exc}") from None


def cmd_montecarlo(args):
    if args.spec:
        raw = json.loads(Path(args.spec).read_text())
    else:
        support = _lag_support(args)
        raw = {
            "model": {"alpha": args.alpha, "lags": list(support), "p": args.p, "innovation": args.innov},
            "n": args.n,
            "replications": args.reps,
            "seed": args.seed,
            "test": {"kind": args.kind, "alpha": args.alpha_level, "components": args.components},
            "scan": args.scan,
            "weight_lag": args.weight_lag,
        }
        if args.alpha is None:
            raise UsageError("--alpha is required without --spec")
        if args.change:
            raw["change"] = dict(item.split("=", 1) for item in args.change.split(","))
    try:
        spec = _experiment_from_json(raw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    summary = run_experiment(spec, keep_replicas=bool(args.replica_log))
    body = summary.to_dict()
    replicas = body["extras"].pop("replicas", None)
    if args.replica_log:
        Path(args.replica_log).write_text("".join(json.dumps(r) + "\n" for r in replicas))
    doc = report_document("montecarlo", flags=_flags(args), seed=spec.seed, experiment=raw, summary=body)
    _emit(doc, args.output)
    if args.timing:
        print(f"wall clock: {summary.wall_clock:.2f} s", file=sys.stderr)
    return EXIT_OK


def _add_lags(p):
    p.add_argument("--p", type=int, help="model order; lags 1..p unless --lags is given")
    p.add_argument("--lags", type=_int_list, help="comma-separated lag set, e.g. 1,12")


def _add_test_flags(p):
    p.add_argument("--kind", default="two-sided", choices=[k.value for k in TestKind])
    p.add_argument("--alpha", dest="alpha_level", type=float, default=0.05, help="overall significance level")
    p.add_argument("--components", type=_int_list, help="1-based components to monitor (default: all)")


def build_parser():
    parser = argparse.ArgumentParser(prog="inarcusum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an INAR series to CSV")
    _add_lags(p)
    p.add_argument("--alpha", type=_float_list, required=True, help="coefficients, one per lag")
    p.add_argument("--innov", default="poisson:1", help="poisson:MU | negbin:MU:VAR | degenerate:V | pmf:p0,p1,...")
    p.add_argument("--n", type=int, required=True, help="rows to write, including the initial values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--change", help="rho=R plus post-change values, e.g. rho=0.5,mu=2")
    p.add_argument("--output", "-o")
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("test", help="CUSUM test for a parameter change")
    p.add_argument("file")
    _add_lags(p)
    _add_test_flags(p)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("changepoint", help="estimate the change point")
    p.add_argument("file")
    _add_lags(p)
    _add_test_flags(p)
    p.add_argument("--scan", default="max-abs", choices=[k.value for k in ScanKind])
    p.add_argument("--weight-lag", type=int, help="scan sum M_j X_{j-q} instead of sum M_j")
    p.add_argument("--refit-lags", type=_int_list, help="refit and test both segments with this lag set")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_changepoint)

    p = sub.add_parser("montecarlo", help="run a size or power experiment")
    p.add_argument("--spec", help="JSON experiment specification")
    _add_lags(p)
    p.add_argument("--alpha", type=_float_list, help="coefficients, one per lag")
    p.add_argument("--innov", default="poisson:1")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--change", help="rho=R plus post-change values; makes this a power experiment")
    p.add_argument("--kind", default="two-sided", choices=[k.value for k in TestKind])
    p.add_argument("--test-alpha", dest="alpha_level", type=float, default=0.05)
    p.add_argument("--components", type=_int_list)
    p.add_argument("--scan", default="max-abs", choices=[k.value for k in ScanKind])
    p.add_argument("--weight-lag", type=int)
    p.add_argument("--replica-log", help="write one JSON line per replica to this file")
    p.add_argument("--timing", action="store_true", help="print wall-clock time to stderr")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SingularDesign, NotPositiveDefinite) as exc:
        print(f"error: {type(exc).__name__}: {exc}\nhint: {_HINTS[type(exc)]}", file=sys.stderr)
    except (UsageError, InarError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
