"""Command-line entry point.

    bilstm-seizure synth    --out DIR [--preictal N --interictal N --seed S ...]
    bilstm-seizure extract  --manifest FILE --out DIR
    bilstm-seizure train    (--features CSV | --manifest FILE) --out DIR
    bilstm-seizure evaluate --checkpoint FILE (--features CSV | --manifest FILE) --out DIR
    bilstm-seizure roc      --scores CSV --out DIR

Settings come from built-in defaults, then ``--config FILE``, then flags.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .dataset import read_manifest
from .evaluation import confusion_at_threshold, roc_curve, write_roc_csv, write_roc_svg
from .features import FrequencyBin, read_feature_csv, write_feature_csv
from .neural import load_checkpoint, save_checkpoint
from .pipeline import (
    RunConfig,
    extract_manifest,
    fit,
    labels_of,
    read_split,
    score,
    select,
    write_epoch_log,
    write_split,
)
from .synth import SynthConfig, generate

log = logging.getLogger("bilstm_seizure")

FEATURES_NAME = "features.csv"
CHECKPOINT_NAME = "model.blsm"
EPOCH_LOG_NAME = "epochs.csv"
SPLIT_NAME = "split.csv"
RUN_CONFIG_NAME = "run_config.ini"


def _band(text: str) -> FrequencyBin:
    lo, sep, hi = text.partition("-")
    if not sep:
        raise argparse.ArgumentTypeError("band must look like LO-HI, e.g. 4-8")
    try:
        return FrequencyBin(float(lo), float(hi))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _shared(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--config", type=Path, help="key = value config file ([run] section)")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out", type=Path, required=out_required, help="output directory")


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-seconds", dest="window_seconds", type=float)
    p.add_argument("--bins", help="comma-separated LO-HI bins in Hz")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilstm-seizure", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic clip dataset")
    _shared(p)
    p.add_argument("--preictal", type=int, default=100)
    p.add_argument("--interictal", type=int, default=100)
    p.add_argument("--channels", type=int, default=16)
    p.add_argument("--duration", type=float, default=600.0, help="clip length in seconds")
    p.add_argument("--sampling-rate", dest="sampling_rate", type=float, default=400.0)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=5.0, help="preictal sinusoid amplitude")
    p.add_argument("--band", type=_band, default=FrequencyBin(4.0, 8.0), help="signature band LO-HI in Hz")

    p = sub.add_parser("extract", help="compute window features for every clip of a manifest")
    _shared(p)
    p.add_argument("--manifest", required=True, type=Path)
    _run_flags(p)

    p = sub.add_parser("train", help="train the classifier")
    _shared(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", type=Path)
    src.add_argument("--manifest", type=Path)
    _run_flags(p)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--hidden-size", dest="hidden_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--class-weighting", dest="class_weighting", action="store_const", const=True)
    p.add_argument("--no-normalize", dest="normalize", action="store_const", const=False)

    p = sub.add_parser("evaluate", help="score clips with a checkpoint and report ROC/AUC")
    _shared(p)
    p.add_argument("--checkpoint", required=True, type=Path)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", type=Path)
    src.add_argument("--manifest", type=Path)
    _run_flags(p)
    p.add_argument("--split", type=Path, help="split.csv written by train")
    p.add_argument("--subset", choices=["train", "test", "all"], help="default: test with --split, else all")
    p.add_argument("--threshold", type=float, default=0.5)

    p = sub.add_parser("roc", help="ROC curve and AUC from a scores CSV (columns score,label)")
    _shared(p)
    p.add_argument("--scores", required=True, type=Path)
    return parser


def _base_config(args, *fallback_dirs: Path) -> RunConfig:
    """``--config`` if given, else the first run_config.ini found in ``fallback_dirs``."""
    if args.config:
        return RunConfig.from_file(args.config)
    for d in fallback_dirs:
        if (d / RUN_CONFIG_NAME).exists():
            return RunConfig.from_file(d / RUN_CONFIG_NAME)
    return RunConfig()


def _run_config(args, *fallback_dirs: Path, **extra) -> RunConfig:
    base = _base_config(args, *fallback_dirs)
    names = {f.name for f in dataclasses.fields(RunConfig)}
    overrides = {k: v for k, v in vars(args).items() if k in names}
    overrides.update(extra)
    return base.merged(overrides)


def _load_features(args, run: RunConfig):
    if getattr(args, "features", None):
        return read_feature_csv(args.features)
    return extract_manifest(read_manifest(args.manifest), run.window_seconds, run.bin_set)


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_preictal=args.preictal,
        n_interictal=args.interictal,
        channels=args.channels,
        duration_s=args.duration,
        sampling_rate_hz=args.sampling_rate,
        noise_sigma=args.noise_sigma,
        signature_band=args.band,
        signature_amplitude=args.amplitude,
        seed=args.seed if args.seed is not None else _run_config(args).seed,
    )
    manifest = generate(cfg, args.out)
    (args.out / "synth_config.json").write_text(json.dumps(dataclasses.asdict(cfg), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(manifest)} clips and {args.out / 'manifest.tsv'}")
    return 0


def cmd_extract(args) -> int:
    run = _run_config(args, manifest=str(args.manifest))
    seqs = extract_manifest(read_manifest(args.manifest), run.window_seconds, run.bin_set)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / FEATURES_NAME
    write_feature_csv(seqs, path, n_bins=len(run.bin_set))
    run.write(args.out / RUN_CONFIG_NAME)
    print(f"wrote {sum(len(s) for s in seqs)} rows for {len(seqs)} clips to {path}")
    return 0


def cmd_train(args) -> int:
    run = _run_config(
        args,
        *([args.features.parent] if args.features else []),
        features=str(args.features) if args.features else None,
        manifest=str(args.manifest) if args.manifest else None,
    )
    seqs = _load_features(args, run)
    result = fit(seqs, run)
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt = args.out / CHECKPOINT_NAME
    save_checkpoint(result.model, ckpt, result.norm)
    write_epoch_log(result.history, args.out / EPOCH_LOG_NAME)
    write_split(seqs, result.split, args.out / SPLIT_NAME)
    run.merged({"checkpoint": str(ckpt)}).write(args.out / RUN_CONFIG_NAME)
    if result.history:
        last = result.history[-1]
        print(f"epoch {last.epoch}: mean_loss={last.mean_loss:.6f} train_auc={last.train_auc!r}")
    print(f"checkpoint: {ckpt}")
    return 0


def cmd_evaluate(args) -> int:
    base = _base_config(args, args.checkpoint.parent)
    run = base.merged({"window_seconds": args.window_seconds, "bins": args.bins, "seed": args.seed})
    model, norm = load_checkpoint(args.checkpoint)
    seqs = _load_features(args, run)
    subset = args.subset or ("test" if args.split else "all")
    if subset != "all":
        if not args.split:
            raise ValueError(f"--subset {subset} needs --split")
        seqs = select(seqs, read_split(args.split), subset)
    scores = score(model, norm, seqs)
    labels = labels_of(seqs)
    curve = roc_curve(scores, labels)
    cc = confusion_at_threshold(scores, labels, args.threshold)
    args.out.mkdir(parents=True, exist_ok=True)
    area = write_roc_csv(curve, args.out / "roc.csv")
    write_roc_svg(curve, args.out / "roc.svg")
    _write_scores(args.out / "scores.csv", [s.clip_id for s in seqs], scores, labels)
    metrics = {"subset": subset, "n": len(seqs), "auc": area, "threshold": args.threshold,
               "tp": cc.tp, "fp": cc.fp, "fn": cc.fn, "tn": cc.tn, "tpr": cc.tpr, "fpr": cc.fpr}
    (args.out / "metrics.json").write_text(json.dumps(metrics, indent=2) + "\n", encoding="utf-8")
    print(f"auc={area!r}")
    print(f"threshold={args.threshold} tp={cc.tp} fp={cc.fp} fn={cc.fn} tn={cc.tn}")
    return 0


def _write_scores(path: Path, ids, scores, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["clip_id", "score", "label"])
        for cid, s, y in zip(ids, scores, labels):
            w.writerow([cid, repr(float(s)), int(y)])


def cmd_roc(args) -> int:
    scores, labels = [], []
    with open(args.scores, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"score", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{args.scores}: needs 'score' and 'label' columns")
        for row in reader:
            scores.append(float(row["score"]))
            labels.append(int(row["label"]))
    curve = roc_curve(np.array(scores), np.array(labels))
    args.out.mkdir(parents=True, exist_ok=True)
    area = write_roc_csv(curve, args.out / "roc.csv")
    write_roc_svg(curve, args.out / "roc.svg")
    print(f"auc={area!r}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
