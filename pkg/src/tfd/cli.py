"""Command-line front end: ``tfd synth | train | detect | eval | report``.

A run is driven by one JSON config (``--config``) whose fields the flags
override. Exit status: 0 success / no attack, 2 usage error, 3 attacks
detected, 4 I/O or format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from .errors import (
    BadPreset,
    CorruptFile,
    EmptyTrainingSet,
    InsufficientRuns,
    InvalidConfig,
    MalformedLine,
    ShapeMismatch,
)
from .evaluation import EvalResult, evaluate_runs, report, results_from_json
from .ingest import apply_normalization, features_array, fit_normalization, read_packets, segment_stream
from .modelio import config_hash, load_model, save_model
from .pipeline import ATTACK, Hyperparams, detect_batch, fit_detector
from .synth import (
    NORMAL,
    PRESETS,
    LabeledDataset,
    NormalTrafficConfig,
    PulseAttackConfig,
    get_preset,
    read_labels,
    scheduled_dataset,
    split_train_valid,
    table2_dataset,
    write_dataset,
)

log = logging.getLogger("tfd")

EXIT_OK, EXIT_USAGE, EXIT_ATTACK, EXIT_IO = 0, 2, 3, 4
ALL_UNITED = "all-united"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "out"
    hyperparams: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls()
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**doc)

    def provenance(self) -> dict:
        """Seed and hash of everything except the output location."""
        d = asdict(self)
        d.pop("out")
        # file names only, so the same run in another directory hashes the same
        d["paths"] = {k: Path(v).name for k, v in self.paths.items()}
        return {"seed": self.seed, "config_hash": config_hash(d)}

    def hp(self) -> Hyperparams:
        h = dict(self.hyperparams)
        epochs = h.get("epochs", 100)
        if epochs < 100 and "calib_epoch_lo" not in h and "calib_epoch_hi" not in h:
            return Hyperparams.quick(epochs, seed=self.seed, **{k: v for k, v in h.items() if k != "epochs"})
        return Hyperparams(**{**h, "seed": self.seed})


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if getattr(args, "out", None) is not None:
        cfg.out = args.out
    for key in ("epochs", "calib_runs"):
        v = getattr(args, key, None)
        if v is not None:
            cfg.hyperparams[key] = v
    syn = cfg.synth
    for key in ("preset", "duration", "n_normal", "n_attack", "normal_rate", "peak", "pulse", "period", "schedule"):
        v = getattr(args, key, None)
        if v is not None and v is not False:
            syn[key] = v
    for key in ("trace", "labels", "model", "input"):
        v = getattr(args, key, None)
        if v is not None:
            cfg.paths[key] = v
    return cfg


def _normal_cfg(syn: dict) -> NormalTrafficConfig:
    return NormalTrafficConfig(mean_rate=float(syn.get("normal_rate", 4.5)))


def _attack_cfg(syn: dict) -> PulseAttackConfig | str:
    preset = syn.get("preset", "hping-like")
    custom = {k: syn[k] for k in ("peak", "pulse", "period") if k in syn}
    if not custom:
        return preset
    base = get_preset(preset) if preset != ALL_UNITED else PulseAttackConfig()
    return replace(
        base,
        peak_rate=float(custom.get("peak", base.peak_rate)),
        pulse_len=float(custom.get("pulse", base.pulse_len)),
        period=float(custom.get("period", base.period)),
    )


def _synth_dataset(syn: dict, seed: int) -> LabeledDataset:
    attack = _attack_cfg(syn)
    normal = _normal_cfg(syn)
    if syn.get("schedule"):
        if attack == ALL_UNITED:
            raise UsageError("--schedule needs a single attack preset")
        return scheduled_dataset(attack, float(syn.get("duration", 3600.0)), seed, normal)
    n_normal, n_attack = int(syn.get("n_normal", 2160)), int(syn.get("n_attack", 360))
    if "duration" in syn:
        # keep the standard 6:1 normal-to-attack proportion
        total = int(float(syn["duration"]) // 10)
        n_attack = round(total / 7)
        n_normal = total - n_attack
    if attack == ALL_UNITED:
        return table2_dataset(list(PRESETS), seed, n_normal=n_normal, n_attack=2 * n_attack, normal_cfg=normal)
    return table2_dataset(attack, seed, n_normal=n_normal, n_attack=n_attack, normal_cfg=normal)


def _load_segments(paths: dict):
    """Segments of the configured trace and, when a labels file is given, their labels."""
    if "trace" not in paths:
        raise UsageError("no input trace (use --trace or paths.trace in the config)")
    packets = read_packets(paths["trace"])
    if "labels" in paths:
        labels = read_labels(paths["labels"])
        segs = segment_stream(packets, origin=0.0, n_windows=len(labels))
        missing = [s.segment_id for s in segs if s.segment_id not in labels]
        if missing:
            raise CorruptFile(f"labels file has no entry for {missing[0]}")
        return segs, [labels[s.segment_id] for s in segs]
    return segment_stream(packets), None


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth(cfg: RunConfig, args) -> int:
    ds = _synth_dataset(cfg.synth, cfg.seed)
    out = Path(cfg.out)
    trace = write_dataset(ds, out, extra={**cfg.provenance(), "synth": cfg.synth})
    summary = {"trace": str(trace), **ds.composition(), **cfg.provenance()}
    print(json.dumps(summary, sort_keys=True) if args.json else
          f"wrote {trace} ({ds.n_normal} normal, {ds.n_attack} attack segments)")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    hp = cfg.hp()
    segs, labels = _load_segments(cfg.paths)
    normal = segs if labels is None else [s for s, lab in zip(segs, labels) if lab == NORMAL]
    if not normal:
        raise EmptyTrainingSet("trace contains no normal segments")
    train_segs, valid_segs = split_train_valid(normal, 0.7, seed=hp.seed)
    raw = features_array(train_segs)
    norm = fit_normalization(raw)
    fitted = fit_detector(apply_normalization(raw, norm), apply_normalization(features_array(valid_segs), norm), norm, hp)
    det = fitted.detector
    det.meta = {**cfg.provenance(), "hyperparams": hp.to_dict(),
                "n_train": len(train_segs), "n_valid": len(valid_segs)}
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = Path(cfg.paths.get("model", out / "model.tfd"))
    save_model(det, model_path)
    prov = cfg.provenance()
    with open(out / "training_trace.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# seed={prov['seed']} config_hash={prov['config_hash']}\n")
        fh.write("model,run,epoch,train_loss,valid_error\n")
        for cal in (fitted.time_calibration, fitted.freq_calibration):
            for i, tr in enumerate(cal.traces):
                for e, (a, b) in enumerate(zip(tr.train_loss, tr.valid_error)):
                    fh.write(f"{cal.kind},{i},{e + 1},{a!r},{b!r}\n")
    th = det.thresholds
    summary = {"model": str(model_path), "R_t": th.R_t, "R_f": th.R_f, **prov}
    print(json.dumps(summary, sort_keys=True) if args.json else
          f"wrote {model_path}: R_t={th.R_t:.6g} R_f={th.R_f:.6g}")
    return EXIT_OK


def cmd_detect(cfg: RunConfig, args) -> int:
    if "model" not in cfg.paths:
        raise UsageError("no model file (use --model)")
    det = load_model(cfg.paths["model"])
    segs, _ = _load_segments(cfg.paths)
    results = detect_batch(segs, det)
    n_attack = sum(r.verdict == ATTACK for r in results)
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in results]
    summary = {"summary": {"segments": len(results), "attack": n_attack, "normal": len(results) - n_attack,
                           "flagged_fraction": n_attack / len(results) if results else 0.0,
                           "model_seed": det.meta.get("seed"), "model_config_hash": det.meta.get("config_hash"),
                           **cfg.provenance()}}
    lines.append(json.dumps(summary, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "detections.jsonl").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_ATTACK if n_attack else EXIT_OK


def _eval_datasets(cfg: RunConfig) -> list[LabeledDataset]:
    if "trace" in cfg.paths:
        segs, labels = _load_segments(cfg.paths)
        if labels is None:
            raise UsageError("eval on a trace file needs --labels")
        name = Path(cfg.paths["trace"]).name.split(".")[0]
        return [LabeledDataset(name, list(zip(segs, labels)), cfg.seed)]
    syn = dict(cfg.synth)
    chosen = syn.pop("datasets", None) or [syn.get("preset", "hping-like")]
    if chosen == ["all"]:
        chosen = list(PRESETS) + [ALL_UNITED]
    return [_synth_dataset({**syn, "preset": name}, cfg.seed) for name in chosen]


def _emit_report(results: list[EvalResult], cfg: RunConfig, args) -> int:
    table, doc = report(results)
    doc.update(cfg.provenance())
    if args.out is not None:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "report.json", doc)
        (out / "report.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n" if args.json else table)
    return EXIT_OK


def cmd_eval(cfg: RunConfig, args) -> int:
    if args.datasets:
        cfg.synth["datasets"] = args.datasets
    hp = cfg.hp()
    k = int(cfg.hyperparams.get("eval_runs", args.runs))
    results = [evaluate_runs(ds, hp, k=k) for ds in _eval_datasets(cfg)]
    return _emit_report(results, cfg, args)


def cmd_report(cfg: RunConfig, args) -> int:
    src = cfg.paths.get("input")
    if src is None:
        raise UsageError("report needs --input <report.json>")
    with open(src, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
            results = results_from_json(doc)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorruptFile(f"not a report file: {exc}") from None
    return _emit_report(results, cfg, args)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="root seed (u64)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output only")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="tfd", parents=[common], description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a labeled synthetic trace")
    s.add_argument("--preset", help=f"attack preset ({', '.join(PRESETS)}, {ALL_UNITED})")
    s.add_argument("--duration", type=float, help="trace length in seconds")
    s.add_argument("--n-normal", type=int)
    s.add_argument("--n-attack", type=int)
    s.add_argument("--normal-rate", type=float, help="normal requests per second")
    s.add_argument("--peak", type=float, help="attack burst rate R (requests/s)")
    s.add_argument("--pulse", type=float, help="attack burst length L (s)")
    s.add_argument("--period", type=float, help="attack period T (s)")
    s.add_argument("--schedule", action="store_true", help="one continuous capture with 50 s on / 100 s off")

    t = sub.add_parser("train", parents=[common], help="train both reconstructors and calibrate thresholds")
    t.add_argument("--trace", help="packet CSV of (mostly) normal traffic")
    t.add_argument("--labels", help="labels CSV; only normal segments are used")
    t.add_argument("--model", help="model file to write (default <out>/model.tfd)")
    t.add_argument("--epochs", type=int)
    t.add_argument("--calib-runs", type=int)

    d = sub.add_parser("detect", parents=[common], help="score a trace and emit JSON-lines verdicts")
    d.add_argument("--model", help="trained model file")
    d.add_argument("--trace", help="packet CSV to inspect")

    e = sub.add_parser("eval", parents=[common], help="repeated-run evaluation on labeled data")
    e.add_argument("--datasets", nargs="+", help="preset names, all-united, or 'all'")
    e.add_argument("--trace")
    e.add_argument("--labels")
    e.add_argument("--runs", type=int, default=5)
    e.add_argument("--epochs", type=int)
    e.add_argument("--calib-runs", type=int)

    r = sub.add_parser("report", parents=[common], help="re-render a saved evaluation report")
    r.add_argument("--input", help="report.json written by eval")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name, default in (("config", None), ("seed", None), ("out", None), ("json", False), ("verbose", 0)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    handlers = {"synth": cmd_synth, "train": cmd_train, "detect": cmd_detect, "eval": cmd_eval, "report": cmd_report}
    try:
        cfg = _apply_overrides(RunConfig.from_file(args.config), args)
        return handlers[args.command](cfg, args)
    except (OSError, CorruptFile, MalformedLine, EmptyTrainingSet, ShapeMismatch, json.JSONDecodeError) as exc:
        print(f"tfd: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, BadPreset, InvalidConfig, InsufficientRuns, ValueError, TypeError) as exc:
        print(f"tfd: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
