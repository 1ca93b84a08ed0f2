"""Command-line entry point: synth, split, train, align, retrieve,
evaluate, gradcheck. Every run writes a JSON run manifest (command,
config, seed, timestamps, outputs, metric summary) atomically.

Exit codes: 0 success, 1 validation error, 2 numerical failure."""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint
from .data import (
    Dataset,
    EmbeddingTable,
    EmbeddingFormatError,
    ManifestError,
    load_manifest,
    manifest_to_dict,
    read_embedding_table,
    save_manifest,
    validate_dataset,
    write_embedding_table,
)
from .gradcheck import run_gradcheck
from .inference import evaluate_run, predict_split, retrieve
from .metrics import report_csv, report_table
from .model import AlignmentModel
from .sampling import split_dataset
from .setmatch import DEFAULT_ALPHA, DEFAULT_EPSILON
from .synth import SynthConfig, generate
from .train import TrainConfig, train


class NumericalFailure(RuntimeError):
    pass


def _write_run_manifest(out_dir, command, config, seed, started, outputs, metrics=None):
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "outputs": outputs,
        "metrics": metrics or {},
    }
    path = os.path.join(out_dir, "run_manifest.json")
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
    os.replace(tmp, path)
    return path


def _load_inputs(args):
    ds = load_manifest(args.manifest)
    diagram_table = read_embedding_table(args.diagrams)
    clip_table = read_embedding_table(args.clips)
    report = validate_dataset(ds, diagram_table, clip_table)
    if not report.ok:
        problems = report.missing_embeddings + report.dim_mismatches + report.leakage
        raise ManifestError("dataset failed validation: " + "; ".join(problems[:10]))
    return ds, diagram_table, clip_table


def _add_data_args(p):
    p.add_argument("--manifest", required=True)
    p.add_argument("--diagrams", required=True, help=".emb file of diagram features")
    p.add_argument("--clips", required=True, help=".emb file of clip features")


def cmd_synth(args):
    cfg = SynthConfig(
        n_manuals=args.manuals,
        min_steps=args.min_steps,
        max_steps=args.max_steps,
        d_raw=args.d_raw,
        noise_sigma=args.sigma,
        drift=args.drift,
        seed=args.seed,
    )
    ds, diagram_table, clip_table = generate(cfg)
    os.makedirs(args.out, exist_ok=True)
    manifest = os.path.join(args.out, "manifest.json")
    diagrams = os.path.join(args.out, "diagrams.emb")
    clips = os.path.join(args.out, "clips.emb")
    save_manifest(ds, manifest)
    write_embedding_table(diagram_table, diagrams)
    write_embedding_table(clip_table, clips)
    summary = ds.summary()
    print(f"wrote {summary['manuals']} manuals, {summary['videos']} videos, "
          f"{summary['segments']} segments to {args.out}")
    return args.out, vars(args), args.seed, [manifest, diagrams, clips], summary


def cmd_split(args):
    ds = load_manifest(args.manifest)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    assignment = split_dataset(list(ds.videos.values()), ratios, args.seed)
    ds = Dataset(manuals=ds.manuals, videos=ds.videos, splits=assignment,
                 split_pairs=tuple(assignment.items()))
    save_manifest(ds, args.manifest)
    counts = {}
    for split in assignment.values():
        counts[split] = counts.get(split, 0) + 1
    print("split sizes (videos):", json.dumps(counts, sort_keys=True))
    out_dir = os.path.dirname(os.path.abspath(args.manifest))
    return out_dir, vars(args), args.seed, [args.manifest], counts


def cmd_train(args):
    ds, diagram_table, clip_table = _load_inputs(args)
    cfg = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    if args.losses:
        cfg.losses = tuple(args.losses.split(","))
    if args.epochs is not None:
        cfg.epochs = args.epochs
    if args.batch_size is not None:
        cfg.batch_size = args.batch_size
    if args.seed is not None:
        cfg.seed = args.seed
    if args.d_out is not None:
        cfg.d_out = args.d_out
    os.makedirs(args.out, exist_ok=True)
    checkpoint = os.path.join(args.out, "checkpoint.emb")
    log = os.path.join(args.out, "train_log.csv")
    result = train(cfg, ds, diagram_table, clip_table, checkpoint, log)
    if not np.isfinite(result.history[-1].get("val_top1", 0.0)):
        raise NumericalFailure("training diverged")
    print(f"best epoch {result.best_epoch} with val top-1 {result.best_val_top1:.2f}")
    print(f"config: {json.dumps(cfg.to_dict(), sort_keys=True)}")
    return args.out, cfg.to_dict(), cfg.seed, [checkpoint, log], {
        "best_epoch": result.best_epoch, "best_val_top1": result.best_val_top1}


def cmd_align(args):
    ds, diagram_table, clip_table = _load_inputs(args)
    model = load_checkpoint(args.checkpoint)
    preds, gts, per_video = predict_split(
        model, ds, diagram_table, clip_table, args.split, args.granularity,
        args.method, args.epsilon, args.alpha,
    )
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, f"alignment_{args.method}.csv")
    outputs = [out_csv]
    with open(out_csv, "w", encoding="utf-8") as f:
        f.write("video_id,segment_id,predicted_index,score\n")
        for vid in sorted(per_video):
            seg_ids, diag_ids, S, T = per_video[vid]
            scores = T if T is not None else S
            for row, sid in enumerate(seg_ids):
                j = preds[sid]
                f.write(f"{vid},{sid},{j},{scores[row, j - 1]:.6f}\n")
    if args.dump_matrices:
        for vid in sorted(per_video):
            seg_ids, diag_ids, S, T = per_video[vid]
            entries = {sid: S[row].astype(np.float32) for row, sid in enumerate(seg_ids)}
            path = os.path.join(args.out, f"{vid.replace('/', '_')}_S.emb")
            write_embedding_table(EmbeddingTable(S.shape[1], entries), path)
            outputs.append(path)
            if T is not None:
                entries = {sid: T[row].astype(np.float32) for row, sid in enumerate(seg_ids)}
                path = os.path.join(args.out, f"{vid.replace('/', '_')}_T.emb")
                write_embedding_table(EmbeddingTable(T.shape[1], entries), path)
                outputs.append(path)
    n_correct = sum(1 for k in gts if preds[k] == gts[k])
    summary = {"segments": len(preds), "labeled": len(gts),
               "top1": 100.0 * n_correct / len(gts) if gts else None}
    print(f"aligned {len(per_video)} videos with method {args.method}; "
          f"top-1 {summary['top1']:.2f}" if gts else f"aligned {len(per_video)} videos")
    return args.out, vars(args), 0, outputs, summary


def cmd_retrieve(args):
    ds, diagram_table, clip_table = _load_inputs(args)
    model = load_checkpoint(args.checkpoint)
    ranked, truncated = retrieve(
        model, ds, diagram_table, clip_table, args.query, args.direction, args.k,
        args.split, args.granularity,
    )
    if truncated:
        print(f"warning: k={args.k} exceeds pool size {len(ranked)}; truncated", file=sys.stderr)
    for cid, score in ranked:
        print(f"{cid}\t{score:.6f}")
    return args.out, vars(args), 0, [], {"results": len(ranked)}


def cmd_evaluate(args):
    ds, diagram_table, clip_table = _load_inputs(args)
    model = load_checkpoint(args.checkpoint)
    grans = tuple(args.granularity.split(","))
    report = evaluate_run(model, ds, diagram_table, clip_table, args.split, grans,
                          args.method, args.epsilon, args.alpha)
    print(report_table(report))
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, f"report_{args.split}_{args.method}.csv")
    with open(out_csv, "w", encoding="utf-8") as f:
        f.write(report_csv(report) + "\n")
    metrics = {g: vars(r) for g, r in report.per_granularity.items()}
    return args.out, vars(args), 0, [out_csv], metrics


def cmd_gradcheck(args):
    results = run_gradcheck(seed=args.seed, n_instances=args.instances, tol=args.tol)
    failed = [r for r in results if not r[3]]
    for name, seed, err, ok in results:
        print(f"{'PASS' if ok else 'FAIL'} {name:<28} seed={seed} max_rel_err={err:.3e}")
    if failed:
        raise NumericalFailure(f"{len(failed)} gradient checks failed")
    return args.out, vars(args), args.seed, [], {"checks": len(results), "failed": len(failed)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepalign",
                                     description="Align video segments to instruction-manual diagrams")
    parser.add_argument("--threads", type=int, default=1, help="worker cap for parallel regions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--manuals", type=int, default=20)
    p.add_argument("--min-steps", type=int, default=4)
    p.add_argument("--max-steps", type=int, default=12)
    p.add_argument("--steps", help="range like 4..12 (overrides min/max)")
    p.add_argument("--d-raw", type=int, default=32)
    p.add_argument("--sigma", type=float, default=0.8)
    p.add_argument("--drift", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="greedy balanced train/val/test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratios", default="0.6,0.2,0.2")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train projection heads")
    _add_data_args(p)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--losses", help="comma list from infonce,cossim,vi,vm,m")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--d-out", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("align", help="whole-video to manual alignment")
    _add_data_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--method", choices=("raw", "ot", "dtw"), default="ot")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--alpha", type=int, default=DEFAULT_ALPHA)
    p.add_argument("--split", default="test")
    p.add_argument("--granularity", default="step")
    p.add_argument("--dump-matrices", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("retrieve", help="top-k retrieval for one query")
    _add_data_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--direction", choices=("V2I", "I2V"), default="V2I")
    p.add_argument("-k", type=int, default=1)
    p.add_argument("--split", default="test")
    p.add_argument("--granularity", default="step")
    p.add_argument("--out")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("evaluate", help="full metric report")
    _add_data_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--granularity", default="step,page")
    p.add_argument("--method", choices=("raw", "ot", "dtw"), default="raw")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--alpha", type=int, default=DEFAULT_ALPHA)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "steps", None):
        lo, _, hi = args.steps.partition("..")
        args.min_steps, args.max_steps = int(lo), int(hi)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    try:
        out_dir, config, seed, outputs, metrics = args.func(args)
    except (ManifestError, EmbeddingFormatError, ValueError, KeyError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (NumericalFailure, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2
    config = {k: v for k, v in config.items() if k != "func"}
    if out_dir is not None:
        _write_run_manifest(out_dir, args.command, config, seed, started, outputs, metrics)
    return 0


if __name__ == "__main__":
    sys.exit(main())
