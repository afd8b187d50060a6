"""Command-line front end.

Every command writes machine-readable files under ``--out`` and a short
human summary to stdout. Exit status: 0 success, 1 pipeline error (the
failing phase is named on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import AssetRecord, MetaParameters, default_asset, load_asset, load_meta
from .degrade import select_degradation_feature
from .detect import (
    DEFAULT_BASELINE_COUNT,
    amplitudes_by_spectrum,
    decide,
    envelope_view,
    first_detection,
    steady_state_alarm_levels,
)
from .errors import PhaseError, TribokitError
from .framework import (
    BearingFeatureExtractor,
    DirectoryMeasurementData,
    analyze_condition,
    config_audit,
    default_registry,
    timing_stats,
)
from .io import (
    SyntheticFaultSpec,
    feature_series,
    read_feature_table,
    scan_run_directory,
    synthesize_run,
    write_feature_table,
    write_ims_record,
)
from .rul import estimate_rul, trajectory_quantiles


def _fmt(v) -> str:
    return repr(float(v))


def _asset_and_meta(args) -> AssetRecord:
    meta = load_meta(args.meta_config) if getattr(args, "meta_config", None) else None
    if getattr(args, "asset_config", None):
        return load_asset(args.asset_config, meta)
    return default_asset(meta=meta)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_tsv(path: Path, header, rows) -> Path:
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(v) for v in row) + "\n")
    return path


def _records(args, asset):
    return DirectoryMeasurementData(args.data_dir).records(asset.channel)


# -- commands ---------------------------------------------------------------


def cmd_synth(args) -> int:
    asset = _asset_and_meta(args)
    targets = asset.fault_frequencies.targets()
    freq = args.fault_frequency if args.fault_frequency else targets[args.fault_type]
    base = SyntheticFaultSpec(
        fault_frequency=freq,
        resonance_frequency=args.resonance,
        noise_std=args.noise,
        slip=args.slip,
    )
    onset = None if args.fault_onset is None or args.fault_onset < 0 else args.fault_onset
    records = synthesize_run(
        args.records, onset, base, onset_amplitude=args.onset_amplitude, growth=args.growth, seed=args.seed
    )
    out = _out_dir(args)
    for r in records:
        write_ims_record(out, [r])
    state = "healthy" if onset is None else f"fault at {freq:.6g} Hz from record {onset}"
    print(f"synth: wrote {len(records)} records to {out} ({state})")
    return 0


def cmd_ingest(args) -> int:
    run = scan_run_directory(args.data_dir)
    hours = run.hours_since_start()
    rows = [(ts.isoformat(), p.name, _fmt(h)) for ts, p, h in zip(run.timestamps, run.records, hours)]
    out = _out_dir(args)
    _write_tsv(out / "manifest.tsv", ["timestamp", "file", "hours"], rows)
    print(
        f"ingest: {len(run)} records, {run.channels_per_file} channels x {run.samples_per_file} samples, "
        f"span {_fmt(hours[-1])} h"
    )
    return 0


def _extract(args, asset):
    records = _records(args, asset)
    extractor = BearingFeatureExtractor()
    return records, [extractor.extract(r, asset) for r in records]


def cmd_features(args) -> int:
    asset = _asset_and_meta(args)
    _, vectors = _extract(args, asset)
    out = _out_dir(args)
    path = write_feature_table(vectors, out / "features.tsv")
    print(f"features: {len(vectors)} vectors written to {path}")
    return 0


def cmd_detect(args) -> int:
    asset = _asset_and_meta(args)
    meta = asset.meta
    records = _records(args, asset)
    b = max(1, min(args.baseline_count, len(records)))
    alarms = steady_state_alarm_levels(records[:b], meta)
    combined = alarms.for_path("combined")
    freqs = asset.fault_frequencies
    names = list(freqs.targets())
    statuses, history = [], []
    for r in records[b:] or records[-1:]:
        amps = amplitudes_by_spectrum(envelope_view(r, meta), freqs)
        status = decide(amps, combined, r.timestamp)
        statuses.append(status)
        raw_ratio = [amps[n][0] / alarms.raw for n in names]
        wav_ratio = [max(a / al for a, al in zip(amps[n][1:], alarms.levels)) for n in names]
        history.append((r.timestamp.isoformat(), *map(_fmt, raw_ratio), *map(_fmt, wav_ratio), str(status.is_faulty).lower()))
    out = _out_dir(args)
    with open(out / "detect.jsonl", "w") as fh:
        for s in statuses:
            fh.write(s.to_line() + "\n")
    _write_tsv(
        out / "detect_history.tsv",
        ["timestamp", *(f"raw_{n}_ratio" for n in names), *(f"wavelet_{n}_ratio" for n in names), "faulty"],
        history,
    )
    first = first_detection(statuses)
    summary = {
        "alarm_levels": {"raw": alarms.raw, "wavelet": list(alarms.levels)},
        "baseline_count": b,
        "first_detection": first.to_line() if first else None,
    }
    (out / "detect_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if first:
        print(f"detect: {first.fault_type} fault first detected at {first.detection_time.isoformat()} "
              f"(amplitude {_fmt(first.detected_amplitude)} > alarm {_fmt(first.alarm_level)})")
    else:
        print(f"detect: no fault in {len(statuses)} monitored records (raw alarm {_fmt(alarms.raw)})")
    return 0


def _write_rul_outputs(out: Path, result, goodness=None, horizon_points: int = 200):
    (out / "rul.json").write_text(result.to_json() + "\n")
    if goodness is not None:
        (out / "goodness.tsv").write_text(goodness.to_table())
    if result.posterior is not None:
        end = max(result.q95, result.last_measurement) * 1.1
        times = np.linspace(0.0, end, horizon_points)
        bands = trajectory_quantiles(result.posterior, times)
        _write_tsv(
            out / "trajectory.tsv",
            ["hours", "q05", "q50", "q95", "alarm"],
            [(_fmt(t), *(_fmt(v) for v in row), _fmt(result.alarm_level_rul)) for t, row in zip(times, bands)],
        )


def cmd_rul(args) -> int:
    asset = _asset_and_meta(args)
    meta = asset.meta
    if args.features:
        vectors = read_feature_table(args.features)
    elif args.data_dir:
        _, vectors = _extract(args, asset)
    else:
        raise SystemExit("rul: give --features or --data-dir")
    extractor = BearingFeatureExtractor()
    series = feature_series(vectors)
    if args.feature_id:
        goodness = None
        chosen = next(s for s in series if s.feature_id == args.feature_id)
    else:
        goodness = extractor.select_degradation_feature(series, meta)
        chosen = next(s for s in series if s.feature_id == goodness.selected_feature_id)
    result = estimate_rul(chosen, meta, seed=args.seed)
    out = _out_dir(args)
    _write_rul_outputs(out, result, goodness)
    print(f"rul: feature {chosen.feature_id}, last operation {result.to_dict()['last_operation_date']} "
          f"(q05 {_fmt(result.q05)} h, q50 {_fmt(result.q50)} h, q95 {_fmt(result.q95)} h)")
    return 0


def _analyze(args, asset):
    registry = default_registry([asset])
    return analyze_condition(
        asset.asset_id, registry, DirectoryMeasurementData(args.data_dir), asset.meta, args.seed, args.baseline_count
    )


def cmd_run_all(args) -> int:
    asset = _asset_and_meta(args)
    outcome = _analyze(args, asset)
    out = _out_dir(args)
    (out / "report.json").write_text(outcome.to_json(include_timings=False) + "\n")
    (out / "timings.json").write_text(json.dumps(outcome.timings.as_dict(), indent=2) + "\n")
    write_feature_table(outcome.features, out / "features.tsv")
    with open(out / "detect.jsonl", "w") as fh:
        for s in outcome.statuses:
            fh.write(s.to_line() + "\n")
    if outcome.rul is not None:
        _write_rul_outputs(out, outcome.rul, outcome.goodness)
    status = outcome.fault_status
    if status.is_faulty:
        print(f"run-all: {status.fault_type} fault detected at {status.detection_time.isoformat()}; "
              f"last operation {outcome.rul.to_dict()['last_operation_date']} (q05 {_fmt(outcome.rul.q05)} h)")
    else:
        print("run-all: no fault detected; rulSkipped = true")
    return 0


def cmd_perf(args) -> int:
    asset = _asset_and_meta(args)
    runs = [_analyze(args, asset).timings for _ in range(args.runs)]
    stats = timing_stats(runs)
    out = _out_dir(args)
    (out / "perf.tsv").write_text(stats.to_table())
    print(stats.summary(), end="")
    return 0


def cmd_config_audit(args) -> int:
    meta = load_meta(args.meta_config) if args.meta_config else MetaParameters()
    audit = config_audit(meta)
    text = audit.to_text()
    if args.out:
        out = _out_dir(args)
        (out / "config_audit.tsv").write_text(text)
    print(text, end="")
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tribokit", description="Bearing fault detection and RUL pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True, out_required=True):
        if data:
            p.add_argument("--data-dir", required=True, help="IMS-layout run directory")
        p.add_argument("--asset-config", help="INI file with an [asset] section")
        p.add_argument("--meta-config", help="INI file with a [meta] section")
        p.add_argument("--out", required=out_required, help="output directory")

    p = sub.add_parser("synth", help="write a synthetic run directory")
    common(p, data=False)
    p.add_argument("--records", type=int, default=100)
    p.add_argument("--fault-onset", type=int, default=None, help="0-based record index; omit for a healthy run")
    p.add_argument("--fault-type", choices=("BPFI", "BPFO", "BSF"), default="BPFO")
    p.add_argument("--fault-frequency", type=float, default=None, help="overrides --fault-type")
    p.add_argument("--onset-amplitude", type=float, default=0.5)
    p.add_argument("--growth", type=float, default=0.0, help="per-record exponential amplitude growth")
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--slip", type=float, default=0.005)
    p.add_argument("--resonance", type=float, default=4000.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="scan a run directory")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="extract features 1-10 per record")
    common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("detect", help="per-record fault status")
    common(p)
    p.add_argument("--baseline-count", type=int, default=DEFAULT_BASELINE_COUNT)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("rul", help="select degradation feature and estimate RUL")
    common(p, data=False)
    p.add_argument("--data-dir")
    p.add_argument("--features", help="feature table written by 'features'")
    p.add_argument("--feature-id", type=int, choices=range(1, 11), help="skip selection")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_rul)

    p = sub.add_parser("run-all", help="load, extract, detect and (if faulty) estimate RUL")
    common(p)
    p.add_argument("--baseline-count", type=int, default=DEFAULT_BASELINE_COUNT)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("perf", help="repeat run-all and report per-phase timing")
    common(p)
    p.add_argument("--baseline-count", type=int, default=DEFAULT_BASELINE_COUNT)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_perf)

    p = sub.add_parser("config-audit", help="list the plug-in meta-parameters")
    p.add_argument("--meta-config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_config_audit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PhaseError as exc:
        print(f"error [{exc.phase}]: {exc.cause}", file=sys.stderr)
        return 1
    except TribokitError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
