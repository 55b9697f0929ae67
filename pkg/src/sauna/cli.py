"""Command-line entry point: ``sauna <subcommand> ...``.

Exit codes: 0 success, 1 I/O error, 2 invalid input or configuration,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import verify as verify_mod
from .errors import InputError, SaunaError
from .grid import (
    FIELD_KINDS,
    atomic_write_bytes,
    load_field,
    load_mask,
    render_heatmap,
    save_field,
    save_mask,
)
from .losses import LossConfig, combined_loss, focal_l1_reference
from .metrics import evaluate, report_csv
from .synth import SynthConfig, generate_one
from .transforms import SaunaParams, sauna_components, sauna_transform

log = logging.getLogger("sauna")

EXIT_OK, EXIT_IO, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SAUNA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"SAUNA_THREADS must be an integer, got {env!r}") from exc
    return 1


def _seed(args, default: int) -> int:
    return default if args.seed is None else args.seed


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_bytes(out, text.encode())
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


# ---------------------------------------------------------------------------


def cmd_transform(args) -> int:
    params = SaunaParams(
        include_boundary_map=not args.no_boundary,
        include_thickness_map=not args.no_thickness,
    )
    mask = load_mask(args.mask, args.fg_threshold)
    field = sauna_transform(mask, params)
    save_field(field, args.out)
    if args.render:
        render_heatmap(field, args.render)
    if args.profile:
        from .report import plot_sauna_profile

        row = args.row if args.row is not None else mask.height // 2
        if not 0 <= row < mask.height:
            raise InputError(f"--row {row} outside the mask height {mask.height}")
        c = sauna_components(mask, params)
        plot_sauna_profile(mask.data[row], c.boundary.data[row], c.thickness_map.data[row], c.sauna.data[row],
                           args.profile)
    log.info("wrote %s (%dx%d)", args.out, *field.shape)
    return EXIT_OK


def cmd_loss(args) -> int:
    cfg = LossConfig(gamma=args.gamma, weight_gjml=args.w_gjml, weight_sfl1=args.w_sfl1)
    pred = load_field(args.pred)
    target = load_field(args.target)
    total, parts = combined_loss(pred, target, cfg)
    record = {
        "gjml": parts["gjml"],
        "sfl1": parts["sfl1"],
        "focal_l1": focal_l1_reference(pred, target, cfg),
        "total": total,
    }
    text = "{" + ", ".join(f'"{k}": {_fmt(v)}' for k, v in record.items()) + "}\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    if len(args.pred) != len(args.gt):
        raise InputError(f"got {len(args.pred)} --pred files but {len(args.gt)} --gt files")
    with ThreadPoolExecutor(_threads(args)) as pool:
        preds = list(pool.map(load_field, args.pred))
        gts = list(pool.map(lambda p: load_mask(p, args.fg_threshold), args.gt))
    ids = [Path(p).stem for p in args.pred]
    report = evaluate(preds, gts, ids, threshold=args.threshold)
    _emit(report_csv(report), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    field = load_field(args.field, args.kind)
    render_heatmap(field, args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=_seed(args, 0),
        size=args.size,
        n_branches=(args.min_branches, args.max_branches),
        thickness_range=(args.min_thickness, args.max_thickness),
        noise_sigma=args.noise_sigma,
        blur_radius=args.blur_radius,
    )
    if args.count < 1:
        raise InputError("--count must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def one(k):
        image, mask = generate_one(cfg, k)
        save_field(image, out / f"img_{k:04d}.field")
        save_mask(mask, out / f"mask_{k:04d}.pgm")
        return k

    with ThreadPoolExecutor(_threads(args)) as pool:
        for k in pool.map(one, range(args.count)):
            log.debug("sample %d", k)
    manifest = {"seed": cfg.seed, "config": cfg.to_dict(), "count": args.count}
    atomic_write_bytes(out / "manifest.json", (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    log.info("wrote %d samples to %s", args.count, out)
    return EXIT_OK


def cmd_train_demo(args) -> int:
    from .trainer import VARIANTS, run_experiment

    variants = tuple(v.strip() for v in args.variants.split(",")) if args.variants else tuple(VARIANTS)
    result = run_experiment(
        seed=_seed(args, 7),
        n_train=args.n_train,
        n_test=args.n_test,
        variants=variants,
        epochs=args.epochs,
        learning_rate=args.lr,
        gamma=args.gamma,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["variant", "iou_mean", "iou_se", "dice_mean", "ba_mean", "final_loss"]
    w.writerow(cols)
    for row in result.rows:
        w.writerow([row["variant"], *(_fmt(row[c]) for c in cols[1:])])
    atomic_write_bytes(out / "comparison.csv", buf.getvalue().encode())

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(result.curves)
    w.writerow(["epoch", *names])
    for epoch in range(len(result.curves[names[0]])):
        w.writerow([epoch, *(_fmt(result.curves[n][epoch]) for n in names)])
    atomic_write_bytes(out / "loss_curves.csv", buf.getvalue().encode())

    if not args.no_figures:
        from .report import plot_ablation, plot_loss_curves

        plot_loss_curves(result.curves, out / "loss_curves.png")
        plot_ablation(result.rows, out / "ablation_iou.png")
    if not args.quiet:
        for row in result.rows:
            print(f"{row['variant']:<18} IoU {row['iou_mean']:.6f} +- {row['iou_se']:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify_mod.run_all(trials=args.trials, seed=_seed(args, 0))
    print(verify_mod.format_table(results))
    if args.figures:
        from .report import plot_focal_slice

        Path(args.figures).mkdir(parents=True, exist_ok=True)
        plot_focal_slice(Path(args.figures) / "focal_slice.png")
    failed = [r for r in results if not r.passed]
    if failed:
        for r in failed:
            print(f"FAILED: {r.name} (seed={r.seed}, trial={r.trial}): {r.detail}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # argparse exits with 2 on usage errors, matching EXIT_INPUT
    p = argparse.ArgumentParser(prog="sauna", description="SAUNA soft labels, losses and evaluation.")
    p.add_argument("--seed", type=int, default=None, help="random seed (synth: 0, train-demo: 7, verify: 0)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (env SAUNA_THREADS)")
    p.add_argument("--quiet", action="store_true", help="only warnings and errors")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("transform", help="mask -> SAUNA field file")
    s.add_argument("--mask", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-thickness", action="store_true", help="drop the thickness map")
    s.add_argument("--no-boundary", action="store_true", help="drop the boundary map")
    s.add_argument("--render", metavar="PNG", help="also write a heatmap")
    s.add_argument("--profile", metavar="PNG", help="also plot the maps along one row")
    s.add_argument("--row", type=int, default=None, help="row for --profile (default: middle)")
    s.add_argument("--fg-threshold", type=int, default=127)
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("loss", help="losses between two field files (JSON)")
    s.add_argument("--pred", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--w-gjml", type=float, default=1.0)
    s.add_argument("--w-sfl1", type=float, default=1.0)
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_loss)

    s = sub.add_parser("eval", help="binarize predictions and score them (CSV)")
    s.add_argument("--pred", nargs="+", required=True, help="prediction field files")
    s.add_argument("--gt", nargs="+", required=True, help="ground-truth masks, same order")
    s.add_argument("--threshold", type=float, default=0.0)
    s.add_argument("--fg-threshold", type=int, default=127)
    s.add_argument("--out", help="write CSV here instead of stdout")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("render", help="field file -> heatmap PNG")
    s.add_argument("--field", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--kind", choices=sorted(FIELD_KINDS), default="sauna")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("synth", help="write synthetic image/mask pairs")
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--size", type=int, default=128)
    s.add_argument("--min-branches", type=int, default=3)
    s.add_argument("--max-branches", type=int, default=8)
    s.add_argument("--min-thickness", type=float, default=1.0)
    s.add_argument("--max-thickness", type=float, default=6.0)
    s.add_argument("--noise-sigma", type=float, default=0.1)
    s.add_argument("--blur-radius", type=int, default=1)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train-demo", help="train the ablation variants on synthetic data")
    s.add_argument("--out", required=True)
    s.add_argument("--n-train", type=int, default=20)
    s.add_argument("--n-test", type=int, default=10)
    s.add_argument("--epochs", type=int, default=200)
    s.add_argument("--lr", type=float, default=1e-2)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--variants", help="comma-separated subset (default: all)")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_train_demo)

    s = sub.add_parser("verify", help="run the property suites")
    s.add_argument("--trials", type=int, default=None, help="cap random trials per suite (quick mode)")
    s.add_argument("--figures", metavar="DIR", help="also write the Focal-L1 slice plot")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SaunaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
