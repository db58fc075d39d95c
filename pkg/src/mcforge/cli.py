"""Command-line entry point.

Subcommands: generate, corrupt, train, evaluate, infer, report. All
randomness flows from the --seed flag through named sub-seeds, so every
subcommand is reproducible bit-for-bit. Exit codes: 0 success, 1 runtime
failure (message on stderr), 2 usage error.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import (CorruptionOptions, McforgeError, NetSpec, SingularFitError,
               TrainConfig, build_dataset, corrupt, evaluate_manifest,
               fit_line, load_checkpoint, load_image, load_pairs, load_pgm,
               load_trajectory, predict_batch, read_report, save_checkpoint,
               save_image, save_pgm, train_two_stage, write_report)
from .network import save_history

SEVERITY_BINS = ((0.0, 5.0), (5.0, 10.0), (10.0, 15.0))


def _add_engine_flags(p):
    p.add_argument("--engine", choices=["gridding", "direct"], default="gridding")
    p.add_argument("--oversampling", type=float, default=2.0)
    p.add_argument("--kernel-width", type=int, default=3)


def _options(args):
    return CorruptionOptions(engine=args.engine, oversampling=args.oversampling,
                             kernel_width=args.kernel_width)


def _parse_split(text):
    parts = [float(p) for p in text.split(",")]
    return tuple(int(p) if p.is_integer() and p > 1 else p for p in parts)


def build_parser():
    ap = argparse.ArgumentParser(prog="mcforge")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a clean/corrupted phantom dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--images", type=int, required=True)
    g.add_argument("--trajectories", type=int, required=True)
    g.add_argument("--size", type=int, default=48)
    g.add_argument("--severity-min", type=float, default=0.0)
    g.add_argument("--severity-max", type=float, default=15.0)
    g.add_argument("--split", default="0.6,0.2,0.2",
                   help="train,val,test as fractions or absolute counts")
    g.add_argument("--phantom", choices=["random_ellipses", "shepp_logan"],
                   default="random_ellipses")
    g.add_argument("--seed", type=int, required=True)
    _add_engine_flags(g)

    c = sub.add_parser("corrupt", help="apply a motion trajectory to one image")
    c.add_argument("--in", dest="input", required=True, help=".mcf or .pgm image")
    c.add_argument("--traj", required=True, help="trajectory text file")
    c.add_argument("--out", required=True, help="output .mcf image")
    c.add_argument("--pgm", help="also write an 8-bit graymap dump here")
    _add_engine_flags(c)

    t = sub.add_parser("train", help="train the two-stage corrector")
    t.add_argument("--data", required=True, help="dataset manifest.csv")
    t.add_argument("--out", required=True, help="output checkpoint (.mcp)")
    t.add_argument("--history", help="write per-epoch training history CSV")
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--base-channels", type=int, default=8)
    t.add_argument("--variant", choices=["u", "u+o"], default="u")
    t.add_argument("--stage1-epochs", type=int, default=60)
    t.add_argument("--stage2-epochs", type=int, default=60)
    t.add_argument("--batch", type=int, default=8)
    t.add_argument("--lr", type=float, default=1e-4)
    t.add_argument("--decay", type=float, default=0.96)
    t.add_argument("--patience", type=int, default=10)
    t.add_argument("--seed", type=int, required=True)

    e = sub.add_parser("evaluate", help="score a manifest and fit SSIM-vs-severity")
    e.add_argument("--data", required=True, help="dataset manifest.csv")
    e.add_argument("--model", help="checkpoint; fills the corrected columns")
    e.add_argument("--split", choices=["train", "val", "test"])
    e.add_argument("--out", help="write the metric report CSV here")

    i = sub.add_parser("infer", help="run a trained model over images")
    i.add_argument("--model", required=True)
    i.add_argument("--in", dest="inputs", nargs="+", required=True)
    i.add_argument("--out-dir", required=True)
    i.add_argument("--pgm", action="store_true", help="also dump graymaps")

    r = sub.add_parser("report", help="summarize a metric report by severity bin")
    r.add_argument("--metrics", required=True, help="report CSV from `evaluate`")
    return ap


def _load_any_image(path):
    if path.endswith(".pgm"):
        return load_pgm(path)
    return load_image(path)


def _cmd_generate(args):
    records = build_dataset(
        args.out, args.images, args.trajectories, size=args.size,
        severity_range=(args.severity_min, args.severity_max), seed=args.seed,
        split=_parse_split(args.split), options=_options(args),
        phantom_kind=args.phantom)
    counts = {}
    for rec in records:
        counts[rec.split] = counts.get(rec.split, 0) + 1
    print(f"wrote {len(records)} pairs to {args.out} "
          f"({', '.join(f'{k}: {v}' for k, v in counts.items())})")


def _cmd_corrupt(args):
    img = _load_any_image(args.input)
    m = load_trajectory(args.traj)
    out = corrupt(img, m, _options(args))
    save_image(args.out, out)
    if args.pgm:
        save_pgm(args.pgm, np.clip(out, 0.0, 1.0))
    print(f"wrote {args.out}")


def _cmd_train(args):
    train_pairs = load_pairs(args.data, "train")
    val_pairs = load_pairs(args.data, "val")
    spec = NetSpec(depth=args.depth, base_channels=args.base_channels,
                   variant=args.variant)
    tcfg = TrainConfig(stage1_epochs=args.stage1_epochs,
                       stage2_epochs=args.stage2_epochs, batch_size=args.batch,
                       lr0=args.lr, decay=args.decay, patience=args.patience,
                       seed=args.seed)
    params, history = train_two_stage(train_pairs, val_pairs, spec, tcfg)
    save_checkpoint(args.out, params)
    if args.history:
        save_history(args.history, history)
    for s in history.stages:
        print(f"{s.stage}: {s.epochs_run} epochs"
              f"{' (stopped early)' if s.stopped_early else ''}")
    print(f"wrote {args.out}")


def _fit_or_na(xs, ys):
    try:
        slope, intercept = fit_line(xs, ys)
        return f"slope {slope:+.6f}, intercept {intercept:.6f}"
    except SingularFitError:
        return "n/a (severities do not vary)"


def _cmd_evaluate(args):
    model = load_checkpoint(args.model) if args.model else None
    rows, summary = evaluate_manifest(args.data, model=model, split=args.split)
    if not rows:
        raise McforgeError("no manifest rows matched")
    if args.out:
        write_report(args.out, rows)
    for col in ("ssim_in", "ssim_out", "psnr_in", "psnr_out"):
        mean, std = summary[col]
        if math.isnan(mean):
            continue
        print(f"{col}: {mean:.4f} +/- {std:.4f}")
    sev = [r.severity for r in rows]
    print("ssim_in vs severity:  " + _fit_or_na(sev, [r.ssim_in for r in rows]))
    if model is not None:
        print("ssim_out vs severity: " + _fit_or_na(sev, [r.ssim_out for r in rows]))


def _cmd_infer(args):
    params = load_checkpoint(args.model)
    images = [_load_any_image(p) for p in args.inputs]
    outs, per_image = predict_batch(params, images)
    os.makedirs(args.out_dir, exist_ok=True)
    for path, out in zip(args.inputs, outs):
        base = os.path.splitext(os.path.basename(path))[0]
        save_image(os.path.join(args.out_dir, base + ".mcf"), out)
        if args.pgm:
            save_pgm(os.path.join(args.out_dir, base + ".pgm"),
                     np.clip(out, 0.0, 1.0))
    print(f"{len(outs)} images, {per_image * 1e3:.2f} ms/image")


def _bin_rows(rows):
    bins = {b: [] for b in SEVERITY_BINS}
    overflow = []
    for r in rows:
        for lo, hi in SEVERITY_BINS:
            if (lo <= r.severity <= hi) if lo == 0.0 else (lo < r.severity <= hi):
                bins[(lo, hi)].append(r)
                break
        else:
            overflow.append(r)
    return bins, overflow


def _cmd_report(args):
    rows = read_report(args.metrics)
    if not rows:
        raise McforgeError(f"{args.metrics}: empty report")
    bins, overflow = _bin_rows(rows)
    has_out = any(not math.isnan(r.ssim_out) for r in rows)
    cols = ["bin", "n", "ssim_in", "psnr_in"] + (["ssim_out", "psnr_out"] if has_out else [])
    print(" ".join(f"{c:>12}" for c in cols))

    def line(tag, group):
        vals = [tag, str(len(group))]
        for col in cols[2:]:
            if group:
                vals.append(f"{np.mean([getattr(r, col) for r in group]):.4f}")
            else:
                vals.append("-")
        print(" ".join(f"{v:>12}" for v in vals))

    for (lo, hi) in SEVERITY_BINS:
        tag = f"[{lo:g},{hi:g}]" if lo == 0.0 else f"({lo:g},{hi:g}]"
        line(tag, bins[(lo, hi)])
    if overflow:
        line(">15", overflow)
    line("all", rows)


_COMMANDS = {
    "generate": _cmd_generate,
    "corrupt": _cmd_corrupt,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "infer": _cmd_infer,
    "report": _cmd_report,
}


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (McforgeError, OSError) as exc:
        print(f"mcforge {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
