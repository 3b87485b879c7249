"""Command-line interface: simulate, serve, detect, features, stats, replay."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import stats as st
from .features import FeatureSet, normalize
from .rpeak import detect_batch
from .session import (PopulationParams, read_log, replay, run_experiment,
                      block_features, write_log)
from .signals import Signal


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    return args.func(args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pulseloop",
        description="Closed-loop false heart-rate biofeedback experiment "
                    "platform.")
    sub = p.add_subparsers(dest="command")

    sim = sub.add_parser("simulate", help="run a headless experiment")
    sim.add_argument("--participants", type=int, default=29)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--duration", type=float, default=480.0)
    sim.add_argument("--fidelity", choices=("waveform", "beat"),
                     default="waveform")
    sim.add_argument("--bf-factor", type=float, default=1.5)
    sim.add_argument("--config", type=Path, default=None,
                     help="JSON file with population parameters")
    sim.add_argument("--out", type=Path, required=True,
                     help="output directory for logs and the feature table")
    sim.set_defaults(func=cmd_simulate)

    srv = sub.add_parser("serve", help="run the live session service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8710)
    srv.add_argument("--out", type=Path, default=None,
                     help="directory for block logs")
    srv.add_argument("--frontend", type=Path, default=Path("frontend/dist"),
                     help="static UI bundle to serve")
    srv.add_argument("--bf-enabled", choices=("auto", "on", "off"),
                     default="auto",
                     help="override the per-condition biofeedback default")
    srv.set_defaults(func=cmd_serve)

    det = sub.add_parser("detect", help="detect R-peaks in an ECG CSV")
    det.add_argument("--input", type=Path, required=True, help="signal CSV")
    det.add_argument("--output", type=Path, required=True,
                     help="beat JSONL output")
    det.set_defaults(func=cmd_detect)

    feat = sub.add_parser("features",
                          help="compute the per-block feature row")
    feat.add_argument("--log", type=Path, required=True, help="block JSONL")
    feat.add_argument("--out", type=Path, required=True,
                      help="feature CSV (one header + one row)")
    feat.set_defaults(func=cmd_features)

    sta = sub.add_parser("stats", help="run contrasts over a feature table")
    sta.add_argument("--features", type=Path, required=True,
                     help="feature table CSV from `simulate`")
    sta.add_argument("--contrasts", type=Path, required=True,
                     help="JSON contrast specification")
    sta.add_argument("--out", type=Path, required=True, help="results CSV")
    sta.set_defaults(func=cmd_stats)

    rep = sub.add_parser("replay", help="re-derive a block from its log")
    rep.add_argument("--log", type=Path, required=True, help="block JSONL")
    rep.add_argument("--out", type=Path, default=None,
                     help="write the replayed record here")
    rep.set_defaults(func=cmd_replay)
    return p


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    population = PopulationParams()
    if args.config:
        cfg = json.loads(args.config.read_text())
        known = {f.name for f in fields(PopulationParams)}
        bad = set(cfg) - known
        if bad:
            print(f"unknown population parameters: {sorted(bad)}",
                  file=sys.stderr)
            return 2
        population = PopulationParams(**cfg)
    exp = run_experiment(args.participants, population,
                         master_seed=args.seed, duration=args.duration,
                         fidelity=args.fidelity, bf_factor=args.bf_factor)
    args.out.mkdir(parents=True, exist_ok=True)
    for (pid, cond), rec in exp.records.items():
        write_log(rec, args.out / f"p{pid:03d}_{cond}.jsonl")
    header, rows = exp.feature_table()
    with (args.out / "features.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {len(exp.records)} block logs and features.csv "
          f"to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve
    override = {"auto": None, "on": True, "off": False}[args.bf_enabled]
    frontend = args.frontend if args.frontend.is_dir() else None
    serve(host=args.host, port=args.port, out_dir=args.out,
          frontend_dir=frontend, bf_override=override)
    return 0


def cmd_detect(args) -> int:
    signal = Signal.from_csv(args.input)
    beats = detect_batch(signal)
    with args.output.open("w") as fh:
        for b in beats:
            fh.write(json.dumps({"t": float(b.t), "amp": float(b.amplitude)})
                     + "\n")
    print(f"{len(beats)} beats -> {args.output}")
    return 0


def cmd_features(args) -> int:
    record = read_log(args.log)
    fs = block_features(record)
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FeatureSet.COLUMNS)
        w.writerow(fs.as_row())
    print(f"feature row -> {args.out}")
    return 0


_TESTS = {
    "paired_t": st.paired_t,
    "wilcoxon": st.wilcoxon_signed_rank,
}


def cmd_stats(args) -> int:
    spec = json.loads(args.contrasts.read_text())
    alpha = float(spec.get("alpha", 0.05))
    table = _read_feature_table(args.features)
    results = []
    for c in spec["contrasts"]:
        measure, ca, cb = c["measure"], c["a"], c["b"]
        test = _TESTS.get(c.get("test", "paired_t"))
        if test is None:
            print(f"unknown test {c.get('test')!r}", file=sys.stderr)
            return 2
        a, b = _paired_vectors(table, measure, ca, cb,
                               baseline=c.get("normalize_to"))
        res = test(a, b)
        results.append((c.get("name", f"{measure} {ca} vs {cb}"),
                        c.get("test", "paired_t"), res))
    adjusted = st.bonferroni([r.p for _, _, r in results])
    with args.out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["name", "test", "n", "statistic", "p", "p_adjusted",
                    "effect", "significant"])
        for (name, tname, res), p_adj in zip(results, adjusted):
            w.writerow([name, tname, res.n, repr(res.statistic), repr(res.p),
                        repr(float(p_adj)), repr(res.effect), p_adj < alpha])
    print(f"{len(results)} contrasts -> {args.out}")
    return 0


def _read_feature_table(path: Path):
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    idx = {name: i for i, name in enumerate(header)}
    table = {}
    for row in rows:
        pid = row[idx["participant"]]
        cond = row[idx["condition"]]
        table[(pid, cond)] = {name: row[idx[name]] for name in header[2:]}
    return table


def _paired_vectors(table, measure, cond_a, cond_b, baseline=None):
    """Paired per-participant values, optionally baseline-normalized."""
    pids = sorted({pid for pid, _ in table})
    a, b = [], []
    for pid in pids:
        try:
            va = float(table[(pid, cond_a)][measure])
            vb = float(table[(pid, cond_b)][measure])
        except KeyError:
            continue
        if baseline is not None:
            base = float(table[(pid, baseline)][measure])
            va, vb = normalize(va, base), normalize(vb, base)
        if math.isnan(va) or math.isnan(vb):
            continue
        a.append(va)
        b.append(vb)
    return np.array(a), np.array(b)


def cmd_replay(args) -> int:
    record = read_log(args.log)
    rep = replay(record)
    same_events = rep.events == record.events
    rows = (rep.features.as_row(), record.features.as_row()) \
        if record.features else (None, None)
    same_features = record.features is None or all(
        a == b or (math.isnan(a) and math.isnan(b))
        for a, b in zip(*rows))
    print(f"events: {'identical' if same_events else 'DIVERGED'} "
          f"({len(rep.events)} events)")
    print(f"features: {'identical' if same_features else 'DIVERGED'}")
    if args.out:
        write_log(rep, args.out)
        print(f"replayed record -> {args.out}")
    return 0 if same_events and same_features else 1


if __name__ == "__main__":
    sys.exit(main())
