"""Command-line pipeline: ingest/synth -> analyze -> select -> evaluate,
plus probe-synth -> simulate for the transit RTT side.

Stages hand off through files (CSV + JSON sidecars) so each one is
independently scriptable.  Every output is a pure function of inputs,
flags, and the seed; re-running a stage reproduces its files byte for
byte.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from csv import reader as csv_reader
from csv import writer as csv_writer
from pathlib import Path

import numpy as np

from . import dynamism, evaluation, rttsim, selectors, trace

USAGE_ERROR = 1
DATA_ERROR = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv_writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_matrix(path: str) -> trace.HourlyTraceMatrix:
    csv_path = Path(path)
    if not csv_path.exists():
        raise ValueError(f"missing matrix artifact {csv_path}; run ingest or synth first")
    return trace.load_matrix(csv_path)


# ---------------------------------------------------------------- ingest


def _cmd_ingest(args) -> int:
    rows = list(trace.iter_trace_csv(args.input))

    start, bins = args.start, args.bins
    if start is None or bins is None:
        stamps = []
        for row in rows:
            try:
                stamps.append(int(row[0]))
            except (ValueError, IndexError, TypeError):
                continue
        if not stamps:
            raise ValueError("no usable records: cannot derive a grid")
        if start is None:
            start = (min(stamps) // args.bin_seconds) * args.bin_seconds
        if bins is None:
            bins = (max(stamps) - start) // args.bin_seconds + 1
    grid = trace.TimeGrid(start=start, bin_seconds=args.bin_seconds, bin_count=bins)

    policy = "raise" if args.on_error == "abort" else "count"
    matrix, summary = trace.bin_records(rows, grid, errors=policy)

    out = _out_dir(args)
    trace.save_matrix(matrix, out / "matrix.csv")
    _write_json(
        out / "ingest.json",
        {
            "records_read": summary.records_read,
            "records_binned": summary.records_binned,
            "rejected_malformed": summary.rejected_malformed,
            "rejected_out_of_range": summary.rejected_out_of_range,
            "bytes_binned": summary.bytes_binned,
            "bytes_rejected": summary.bytes_rejected,
            "active_prefixes": summary.active_prefixes,
        },
    )
    print(
        f"ingest: {summary.records_binned}/{summary.records_read} records binned, "
        f"{summary.records_rejected} rejected, "
        f"{summary.active_prefixes} active prefixes -> {out / 'matrix.csv'}"
    )
    return 0


# ----------------------------------------------------------------- synth


def _parse_burst(text: str) -> trace.BurstSpec:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"bad burst {text!r}; expected RANK:HOUR:MULTIPLIER")
    return trace.BurstSpec(rank=int(parts[0]), hour=int(parts[1]), multiplier=float(parts[2]))


def _cmd_synth(args) -> int:
    spec = trace.SyntheticTraceSpec(
        prefix_count=args.prefixes,
        zipf_s=args.zipf_s,
        hourly_volume=args.hourly_volume,
        diurnal_amplitude=args.diurnal,
        noise=args.noise,
        bursts=tuple(_parse_burst(b) for b in args.burst),
        seed=args.seed,
    )
    grid = trace.TimeGrid(start=args.start, bin_seconds=args.bin_seconds, bin_count=args.bins)
    matrix = trace.synthesize_trace(spec, grid)

    out = _out_dir(args)
    trace.save_matrix(matrix, out / "matrix.csv")
    _write_json(
        out / "synth.json",
        {
            "prefix_count": spec.prefix_count,
            "zipf_s": spec.zipf_s,
            "hourly_volume": spec.hourly_volume,
            "diurnal_amplitude": spec.diurnal_amplitude,
            "noise": spec.noise,
            "bursts": [[b.rank, b.hour, b.multiplier] for b in spec.bursts],
            "seed": spec.seed,
            "bins": grid.bin_count,
            "bin_seconds": grid.bin_seconds,
            "start": grid.start,
        },
    )
    print(f"synth: {len(matrix)} prefixes x {grid.bin_count} bins -> {out / 'matrix.csv'}")
    return 0


# --------------------------------------------------------------- analyze


def _bin_rows(stats):
    for s in stats:
        yield [s.label, s.lo_pct, s.hi_pct, s.count, s.mean, s.median, s.p25, s.p75]


def _cmd_analyze(args) -> int:
    m = _load_matrix(args.matrix)
    profile = dynamism.compute_core_profile(m, threshold=args.threshold)
    out = _out_dir(args)

    week_total = float(m.totals.sum())
    values = m.values.astype(np.float64)
    cv = values.std(axis=1) / values.mean(axis=1)
    shares_pct = 100.0 * values.sum(axis=1) / week_total
    _write_csv(
        out / "prefixes.csv",
        ["prefix", "weekly_share_pct", "cv", "icp"],
        (
            [p.text, shares_pct[i], cv[i], profile.icp[i]]
            for i, p in enumerate(m.prefixes)
        ),
    )
    active = m.active_counts()
    _write_csv(
        out / "hours.csv",
        ["hour", "total", "active_prefixes", "core_size", "bi"],
        (
            [h, m.totals[h - 1], active[h - 1], profile.core_sizes[h - 1], profile.bi[h - 1]]
            for h in m.grid.hours()
        ),
    )
    _write_csv(
        out / "cv_bins.csv",
        ["bin", "lo_pct", "hi_pct", "count", "mean", "median", "p25", "p75"],
        _bin_rows(dynamism.cv_vs_volume_bins(m)),
    )
    _write_csv(
        out / "icp_bins.csv",
        ["bin", "lo_pct", "hi_pct", "count", "mean", "median", "p25", "p75"],
        _bin_rows(dynamism.icp_vs_volume_bins(m, profile)),
    )
    curve = dynamism.concentration_curve(m, args.span)
    _write_csv(
        out / f"concentration_{curve.span.replace(':', '_')}.csv",
        ["rank", "share", "cdf", "zipf_ref"],
        (
            [k + 1, curve.shares[k], curve.cdf[k], curve.zipf_overlay[k]]
            for k in range(curve.shares.size)
        ),
    )
    summary = {
        "core": dynamism.core_summary(profile, m),
        "burstiness": dynamism.burstiness_summary(profile),
        "threshold": args.threshold,
        "bins": m.bin_count,
        "active_prefixes": len(m),
        "total_volume": week_total,
    }
    _write_json(out / "summary.json", summary)
    print(
        f"analyze: core avg {summary['core']['avg_core_size']:.1f} "
        f"({summary['core']['avg_core_pct_of_active']:.2f}% of active), "
        f"max {summary['core']['max_core_size']}; "
        f"mean BI {summary['burstiness']['mean_bi']:.2f} -> {out}"
    )
    return 0


# ---------------------------------------------------------------- select


def _selection_name(config: selectors.SelectorConfig) -> str:
    return f"selection_{config.method}_L{config.window}.csv"


def _write_selection(out: Path, run: selectors.SelectionRun) -> Path:
    cfg = run.config
    path = out / _selection_name(cfg)
    rows = []
    for hour in run.hours:
        for rank, (prefix, score) in enumerate(run.selected(int(hour)), start=1):
            rows.append([int(hour), rank, prefix.text, score, cfg.method, cfg.window, cfg.size])
    _write_csv(path, ["hour", "rank", "prefix", "score", "method", "L", "K"], rows)
    return path


def _selector_configs(args, profile) -> list[selectors.SelectorConfig]:
    size = args.size if args.size is not None else selectors.max_core_size(profile)
    if args.config:
        with open(args.config) as fh:
            entries = json.load(fh)
        return [
            selectors.SelectorConfig(
                method=e["method"],
                window=int(e["window"]),
                size=int(e.get("size", size)),
            )
            for e in entries
        ]
    if args.grid:
        return [
            selectors.SelectorConfig(method=method, window=window, size=size)
            for method in selectors.METHODS
            for window in selectors.WINDOW_GRID
        ]
    if args.method is None:
        raise _UsageError("one of --method, --grid or --config is required")
    return [selectors.SelectorConfig(method=args.method, window=args.window, size=size)]


def _cmd_select(args) -> int:
    m = _load_matrix(args.matrix)
    profile = dynamism.compute_core_profile(m, threshold=args.threshold)
    out = _out_dir(args)
    for config in _selector_configs(args, profile):
        run = selectors.run_selection(m, profile, config)
        path = _write_selection(out, run)
        note = f", {run.gm11_fallbacks} gm11 fallbacks" if config.method == "gm11" else ""
        print(f"select: {config.method} L={config.window} K={config.size}{note} -> {path}")
    return 0


# -------------------------------------------------------------- evaluate


def _read_selection_csv(path: Path, m: trace.HourlyTraceMatrix, threshold: float):
    if not path.exists():
        raise ValueError(f"missing selection artifact {path}; run the select stage first")
    per_hour: dict[int, list[tuple[int, float]]] = {}
    config = None
    with open(path, newline="") as fh:
        rows = csv_reader(fh)
        header = next(rows, None)
        if header != ["hour", "rank", "prefix", "score", "method", "L", "K"]:
            raise ValueError(f"{path}: unexpected selection header {header!r}")
        for row in rows:
            if not row:
                continue
            hour, rank = int(row[0]), int(row[1])
            if not 2 <= hour <= m.bin_count:
                raise ValueError(
                    f"{path}: hour {hour} outside the matrix grid; "
                    "selection was made against a different matrix"
                )
            prefix = trace.Prefix.parse(row[2])
            cfg = selectors.SelectorConfig(method=row[4], window=int(row[5]), size=int(row[6]))
            if config is None:
                config = cfg
            elif config != cfg:
                raise ValueError(f"{path}: mixed selector configurations")
            if prefix not in m:
                raise ValueError(f"{path}: prefix {prefix} not in matrix")
            per_hour.setdefault(hour, []).append((rank, float(row[3]), m.index_of(prefix)))
    if config is None:
        raise ValueError(f"{path}: empty selection file")

    hours = np.arange(2, m.bin_count + 1, dtype=np.int64)
    picks, scores = [], []
    for h in hours:
        entries = sorted(per_hour.get(int(h), []))
        picks.append(np.array([i for _, _, i in entries], dtype=np.int64))
        scores.append(np.array([s for _, s, _ in entries], dtype=np.float64))
    warmup = (hours - 1) < config.window
    shortfall = np.array([p.size < config.size for p in picks])
    return selectors.SelectionRun(
        config=config,
        threshold=threshold,
        prefixes=m.prefixes,
        hours=hours,
        picks=picks,
        scores=scores,
        warmup=warmup,
        shortfall=shortfall,
    )


def _report_key(report: evaluation.EvaluationReport) -> str:
    return f"{report.method}:L{report.window}:K{report.size}"


def _report_payload(report: evaluation.EvaluationReport) -> dict:
    chn = report.churn_summary
    return {
        "coverage": report.coverage_summary.as_dict(),
        "churn": chn.as_dict() if chn is not None else None,
        "warmup_hours": int(report.warmup.sum()),
        "threshold": report.threshold,
        "percentile_convention": "linear interpolation",
    }


def _write_report_csv(out: Path, report: evaluation.EvaluationReport) -> Path:
    path = out / f"report_{report.method}_L{report.window}.csv"
    rows = []
    for pos, hour in enumerate(report.hours):
        churn = report.churn[pos - 1] if pos > 0 else None
        rows.append([int(hour), report.coverage[pos], churn])
    _write_csv(path, ["hour", "coverage", "churn"], rows)
    return path


def _cmd_evaluate(args) -> int:
    m = _load_matrix(args.matrix)
    out = _out_dir(args)

    paths: list[Path] = [Path(p) for p in args.selection]
    if args.select_dir:
        paths.extend(sorted(Path(args.select_dir).glob("selection_*.csv")))
    if not paths:
        raise _UsageError("no selection inputs: pass --selection or --select-dir")

    summary = {}
    for path in paths:
        run = _read_selection_csv(path, m, args.threshold)
        report = evaluation.evaluate_run(run, m)
        csv_path = _write_report_csv(out, report)
        summary[_report_key(report)] = _report_payload(report)
        mean_churn = report.churn_summary.mean if report.churn_summary else float("nan")
        print(
            f"evaluate: {report.method} L={report.window} "
            f"mean coverage {report.coverage_summary.mean:.4f} "
            f"mean churn {mean_churn:.2f} -> {csv_path}"
        )
    _write_json(out / "evaluation_summary.json", summary)
    return 0


# ------------------------------------------------------------ probe-synth


def _parse_regime(text: str) -> rttsim.RegimeSwitch:
    parts = text.split(":")
    if len(parts) != 4:
        raise _UsageError(f"bad regime {text!r}; expected TRANSIT:START:END:MULTIPLIER")
    return rttsim.RegimeSwitch(
        transit=parts[0], start_tick=int(parts[1]), end_tick=int(parts[2]),
        multiplier=float(parts[3]),
    )


def _cmd_probe_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    transits = [f"T{i + 1}" for i in range(args.transits)]
    prefixes = [trace.synthetic_prefix(k) for k in range(1, args.prefix_count + 1)]
    base = {}
    for prefix in sorted(prefixes, key=lambda p: p.text):
        for transit in transits:
            base[(prefix, transit)] = float(rng.uniform(args.rtt_low, args.rtt_high))
    model = rttsim.RttModel(
        base_rtt=base,
        noise_std=args.noise_std,
        loss_prob=args.loss,
        regime_switches=tuple(_parse_regime(r) for r in args.regime),
    )
    schedule = rttsim.ProbeScheduleSpec(
        mean_interval=args.interval, jitter=args.jitter,
        duration=args.duration, seed=args.seed,
    )
    log = rttsim.generate_probe_log(schedule, model)

    out = _out_dir(args)
    rttsim.save_probe_log(log, out / "probes.csv")
    _write_json(
        out / "probe_meta.json",
        {
            "transits": transits,
            "prefix_count": args.prefix_count,
            "mean_interval": schedule.mean_interval,
            "jitter": schedule.jitter,
            "duration": schedule.duration,
            "seed": args.seed,
            "ticks": len(log.ticks),
            "tick_times": list(log.tick_times),
        },
    )
    print(
        f"probe-synth: {len(log.ticks)} rounds x {len(prefixes)} prefixes x "
        f"{len(transits)} transits -> {out / 'probes.csv'}"
    )
    return 0


# -------------------------------------------------------------- simulate


def _cmd_simulate(args) -> int:
    path = Path(args.probes)
    if not path.exists():
        raise ValueError(f"missing probe artifact {path}; run the probe-synth stage first")
    log = rttsim.load_probe_log(path)
    out = _out_dir(args)

    rows = []
    for transit in log.transits:
        series = rttsim.np_series(log, transit)
        for tick, value, included in zip(series.ticks, series.values, series.included):
            rows.append([tick, transit, value, included])
    dynamic = None
    if args.dynamic and len(log.ticks) >= 2:
        dynamic = rttsim.simulate_dynamic_selection(log, seed=args.seed)
        for tick, value, included in zip(dynamic.ticks, dynamic.values, dynamic.included):
            rows.append([tick, rttsim.DYNAMIC_LABEL, value, included])
    _write_csv(out / "np.csv", ["tick", "transit", "np", "included_prefixes"], rows)

    ranking = rttsim.rank_transits(log, include_dynamic=args.dynamic, seed=args.seed)
    if not ranking:
        raise ValueError(f"{path}: no round has a usable RTT sample")
    _write_json(
        out / "np_summary.json",
        {
            "order": [label for label, _ in ranking],
            "transits": {label: summary.as_dict() for label, summary in ranking},
            "seed": args.seed,
        },
    )
    best = ranking[0]
    print(
        f"simulate: {len(log.transits)} transits, {len(log.ticks)} rounds; "
        f"best mean NP {best[1].mean:.4f} ({best[0]}) -> {out / 'np.csv'}"
    )
    return 0


# ---------------------------------------------------------------- report


def _cmd_report(args) -> int:
    m = _load_matrix(args.matrix)
    profile = dynamism.compute_core_profile(m, threshold=args.threshold)
    size = args.size if args.size is not None else selectors.max_core_size(profile)
    out = _out_dir(args)

    header = [
        "method", "L", "K",
        "coverage_min", "coverage_p25", "coverage_median", "coverage_mean",
        "coverage_p75", "coverage_max",
        "churn_min", "churn_p25", "churn_median", "churn_mean",
        "churn_p75", "churn_max",
    ]
    rows = []
    summary = {}
    for method in selectors.METHODS:
        for window in selectors.WINDOW_GRID:
            config = selectors.SelectorConfig(method=method, window=window, size=size)
            run = selectors.run_selection(m, profile, config)
            report = evaluation.evaluate_run(run, m)
            cov, chn = report.coverage_summary, report.churn_summary
            churn_cells = (
                [chn.minimum, chn.p25, chn.median, chn.mean, chn.p75, chn.maximum]
                if chn is not None
                else [None] * 6
            )
            rows.append([
                method, window, size,
                cov.minimum, cov.p25, cov.median, cov.mean, cov.p75, cov.maximum,
            ] + churn_cells)
            summary[_report_key(report)] = _report_payload(report)
    _write_csv(out / "grid_summary.csv", header, rows)
    _write_json(out / "grid_summary.json", summary)
    print(f"report: {len(rows)} configurations (K={size}) -> {out / 'grid_summary.csv'}")
    return 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prefixcast", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="bin a timestamp,prefix,bytes CSV into an hourly matrix")
    p.add_argument("input", help="flow records CSV")
    p.add_argument("--start", type=int, default=None, help="grid start (epoch s, bin-aligned)")
    p.add_argument("--bins", type=int, default=None, help="bin count (default: derived)")
    p.add_argument("--bin-seconds", type=int, default=3600)
    p.add_argument("--on-error", choices=("skip", "abort"), default="skip")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic Zipf trace matrix")
    p.add_argument("--prefixes", type=int, default=1000)
    p.add_argument("--zipf-s", type=float, default=1.0)
    p.add_argument("--hourly-volume", type=float, default=1e9)
    p.add_argument("--diurnal", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--burst", action="append", default=[], metavar="RANK:HOUR:MULT")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--bins", type=int, default=168)
    p.add_argument("--bin-seconds", type=int, default=3600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("analyze", help="dynamism metrics: cores, variation, burstiness")
    p.add_argument("--matrix", required=True, help="matrix CSV from ingest/synth")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--span", default="week", help="concentration span: week, hour:H, day:H0")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("select", help="predictive selection from window history")
    p.add_argument("--matrix", required=True)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--method", choices=selectors.METHODS, default=None)
    p.add_argument("--window", type=int, default=1, help="history window L in hours")
    p.add_argument("--size", type=int, default=None,
                   help="selection size K (default: max weekly core size)")
    p.add_argument("--grid", action="store_true",
                   help="run all methods x all canonical windows")
    p.add_argument("--config", default=None,
                   help="JSON list of {method, window, size} entries")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("evaluate", help="coverage and churn of selection runs")
    p.add_argument("--matrix", required=True)
    p.add_argument("--selection", action="append", default=[], help="selection CSV (repeatable)")
    p.add_argument("--select-dir", default=None, help="directory of selection_*.csv files")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("probe-synth", help="generate a synthetic RTT probe log")
    p.add_argument("--prefix-count", type=int, default=20)
    p.add_argument("--transits", type=int, default=2)
    p.add_argument("--duration", type=float, default=86400.0, help="seconds of probing")
    p.add_argument("--interval", type=float, default=240.0)
    p.add_argument("--jitter", type=float, default=0.30)
    p.add_argument("--loss", type=float, default=0.0)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--rtt-low", type=float, default=20.0)
    p.add_argument("--rtt-high", type=float, default=80.0)
    p.add_argument("--regime", action="append", default=[], metavar="TRANSIT:START:END:MULT")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_probe_synth)

    p = sub.add_parser("simulate", help="normalized RTT per transit + dynamic selection")
    p.add_argument("--probes", required=True, help="probe log CSV")
    p.add_argument("--no-dynamic", dest="dynamic", action="store_false",
                   help="skip the virtual last-round-best transit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="full method x window grid summary")
    p.add_argument("--matrix", required=True)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--size", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_help()
            return USAGE_ERROR
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
