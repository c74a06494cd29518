"""``sysnoise`` command line.

Exit status: 0 success, 1 some items failed, 2 configuration or usage error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import GenConfig, generate, resolved_jobs
from .errors import JpegError, SysNoiseError
from .fileio import ppm_bytes, read_ppm, read_tensor_file, tensor_file_bytes, to_channel_first, to_channel_last
from .jpeg.decoder import canonical_decoder_name, decode
from .report import DiffStats, pixel_diff_stats, render_report, table_from_csv, table_to_csv

EXIT_OK = 0
EXIT_ITEM_FAILURES = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _write_image(img, path, fmt):
    fmt = fmt or Path(path).suffix.lstrip(".").lower()
    if fmt in ("ppm", "pgm", "pnm"):
        data = ppm_bytes(img)
    elif fmt == "npy":
        data = tensor_file_bytes(to_channel_first(img))
    else:
        raise UsageError(f"unknown output format {fmt!r}; use ppm or npy")
    Path(path).write_bytes(data)


def _read_image(path):
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"\xff\xd8":
        return decode(data)
    if data[:6] == b"\x93NUMPY":
        return to_channel_last(read_tensor_file(path))
    return read_ppm(path)


def cmd_decode(args):
    decoder = canonical_decoder_name(args.decoder)
    try:
        img = decode(Path(args.input).read_bytes(), decoder)
    except JpegError as exc:
        print(f"decode failed: {exc}", file=sys.stderr)
        return EXIT_ITEM_FAILURES
    _write_image(img, args.output, args.format)
    return EXIT_OK


def cmd_resize(args):
    from .resize import resize, resize_variant

    img = _read_image(args.input)
    out = resize(img, resize_variant(args.resize_type, args.width, args.height))
    _write_image(out, args.output, args.format)
    return EXIT_OK


def cmd_generate(args):
    if not Path(args.meta_file).is_file():
        raise UsageError(f"meta file not found: {args.meta_file}")
    if not Path(args.root_dir).is_dir():
        raise UsageError(f"root dir not found: {args.root_dir}")
    cfg = GenConfig(args.root_dir, args.meta_file, args.save_dir, args.decoder_type, args.resize_type,
                    args.transform_type, args.seed)
    manifest = generate(cfg, jobs=resolved_jobs(args.jobs))
    print(json.dumps({"variant": manifest.variant, "records": len(manifest.records),
                      "failures": len(manifest.failures), "dir": str(cfg.variant_dir)}, sort_keys=True))
    return EXIT_ITEM_FAILURES if manifest.failures else EXIT_OK


_IMAGE_SUFFIXES = (".npy", ".ppm", ".pgm", ".jpg", ".jpeg")


def _diff_pairs(a, b):
    a, b = Path(a), Path(b)
    if a.is_file() and b.is_file():
        return [(a.name, a, b)]
    if a.is_dir() and b.is_dir():
        names_a = sorted(p.name for p in a.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES)
        names_b = sorted(p.name for p in b.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES)
        if names_a != names_b:
            raise UsageError(f"file sets differ: {len(names_a)} vs {len(names_b)} images "
                             f"({len(set(names_a) ^ set(names_b))} unmatched names)")
        if not names_a:
            raise UsageError("no image files to compare")
        return [(n, a / n, b / n) for n in names_a]
    raise UsageError("--a and --b must both be files or both be directories")


def cmd_diff(args):
    per_file = {}
    for name, pa, pb in _diff_pairs(args.a, args.b):
        ia, ib = _read_image(pa), _read_image(pb)
        if ia.shape != ib.shape:
            raise UsageError(f"{name}: shape {ia.shape} vs {ib.shape}")
        per_file[name] = pixel_diff_stats(ia, ib)
    total = DiffStats.merge(per_file.values())
    if args.histogram:
        from .plots import diff_histogram
        diff_histogram(total, args.histogram)
    if args.json:
        out = {"total": total.to_dict(),
               "files": {k: {x: v for x, v in s.to_dict().items() if x != "histogram"} for k, s in per_file.items()}}
        print(json.dumps(out, sort_keys=True))
    else:
        print(f"files={len(per_file)} linf={total.linf} mean_l1={total.mean_l1:.6f} "
              f"pct_nonzero={100 * total.pct_nonzero:.4f}%")
    return EXIT_OK


def _split_columns(values):
    out = []
    for v in values or []:
        out.extend(c for c in v.split(",") if c)
    return out


def cmd_report(args):
    try:
        text = Path(args.table).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(str(exc)) from None
    table = table_from_csv(text, _split_columns(args.exclude))
    rendered, csv_text = render_report(table)
    sys.stdout.write(rendered)
    if args.csv_out:
        Path(args.csv_out).write_text(csv_text, encoding="utf-8")
    if args.figure:
        from .plots import accuracy_heatmap
        accuracy_heatmap(table, args.figure)
    return EXIT_OK


def cmd_make_corpus(args):
    from .fixtures import fixture_corpus, toy_corpus

    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "meta").mkdir(parents=True, exist_ok=True)
    if args.kind == "fixture":
        _, jpegs = fixture_corpus(n=args.train, seed=args.seed)
        splits = {"val": (jpegs, [0] * len(jpegs))}
    else:
        splits = {"train": toy_corpus(args.train, args.classes, seed=2 * args.seed),
                  "test": toy_corpus(args.test, args.classes, seed=2 * args.seed + 1)}
    for split, (jpegs, labels) in splits.items():
        lines = []
        for i, (data, label) in enumerate(zip(jpegs, labels)):
            rel = f"images/{split}_{i:05d}.jpg"
            (out / rel).write_bytes(data)
            lines.append(f"{rel} {int(label)}\n")
        (out / "meta" / f"{split}.txt").write_text("".join(lines), encoding="utf-8")
    print(json.dumps({k: len(v[0]) for k, v in splits.items()}, sort_keys=True))
    return EXIT_OK


def _load_split(corpus, split, side):
    from .dataset import load_meta, resolve_entry
    from .mixtrain import FeatureBank

    meta = Path(corpus) / "meta" / f"{split}.txt"
    if not meta.is_file():
        raise UsageError(f"corpus split not found: {meta}")
    entries = load_meta(meta)
    jpegs = [resolve_entry(corpus, e.path).read_bytes() for e in entries]
    return FeatureBank(jpegs, [e.label for e in entries], side=side)


def cmd_mixtrain(args):
    from .mixtrain import Strategy, eval_variants_for, history_json, run_experiment, save_model
    from .report import robustness_report

    strategies = [Strategy.parse(s) for s in args.strategy]
    train_bank = _load_split(args.corpus, "train", args.side)
    test_bank = _load_split(args.corpus, "test", args.side)
    out = Path(args.out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    stds = {s.name: [] for s in strategies}
    for seed in args.seed:
        table, results = run_experiment(train_bank, test_bank, strategies, eval_variants_for(args.axis), seed,
                                        lr=args.lr, epochs=args.epochs, batch_size=args.batch_size,
                                        per_epoch_sampling=args.per_epoch)
        (out / f"table_seed{seed}.csv").write_text(table_to_csv(table, row_header="train"), encoding="utf-8")
        (out / f"history_seed{seed}.json").write_text(history_json(results), encoding="utf-8")
        for name, res in results.items():
            save_model(res.model, out / "models" / f"{name.replace(':', '_').replace('/', '_')}_seed{seed}.bin")
        for row in robustness_report(table):
            stds[row.label].append(row.std)
        if args.figure:
            from .plots import accuracy_heatmap
            accuracy_heatmap(table, out / f"table_seed{seed}.png", title=f"seed {seed}")
        rendered, _ = render_report(table)
        sys.stdout.write(f"seed {seed}\n{rendered}")
    summary = {k: {"median_std": float(np.median(v)), "stds": v} for k, v in stds.items()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_checkerboard(args):
    from .fixtures import parity_checkerboard, upscale_nearest
    from .plots import image_grid
    from .resize import ResizeSpec, resize

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    board = parity_checkerboard(6)
    panels, labels, result = [board], ["input 6x6"], {}
    for conv, lib in (("A", "opencv"), ("B", "pil")):
        small = resize(board, ResizeSpec("nearest", conv, 3, 3))
        (out / f"{lib}-nearest.ppm").write_bytes(ppm_bytes(small))
        panels.append(small)
        labels.append(f"{lib}-nearest 3x3")
        result[f"{lib}-nearest"] = small[:, :, 0].tolist()
    (out / "input.ppm").write_bytes(ppm_bytes(board))
    big = upscale_nearest(board, 512, 512)
    for conv, lib in (("A", "opencv"), ("B", "pil")):
        small = resize(big, ResizeSpec("nearest", conv, 3, 3))
        result[f"{lib}-nearest-from-512"] = small[:, :, 0].tolist()
    image_grid(panels, labels, out / "checkerboard.png", scale=32)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="sysnoise", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", help="decode one JPEG with a decoder preset")
    d.add_argument("--input", required=True)
    d.add_argument("--decoder", default="preset-pil")
    d.add_argument("--output", required=True)
    d.add_argument("--format", choices=("ppm", "npy"), help="default: from the output extension")
    d.set_defaults(func=cmd_decode)

    r = sub.add_parser("resize", help="resize one image (JPEG, PPM or .npy)")
    r.add_argument("--input", required=True)
    r.add_argument("--resize-type", default="pil-bilinear")
    r.add_argument("--width", type=int, required=True)
    r.add_argument("--height", type=int, required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--format", choices=("ppm", "npy"))
    r.set_defaults(func=cmd_resize)

    g = sub.add_parser("generate", help="write one dataset variant")
    g.add_argument("--root-dir", required=True)
    g.add_argument("--meta-file", required=True)
    g.add_argument("--save-dir", required=True)
    g.add_argument("--decoder-type", default="pil")
    g.add_argument("--resize-type", default="pil-bilinear")
    g.add_argument("--transform-type", default="val", choices=("train", "val"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jobs", type=int, default=1, help="worker processes; 0 = all cores")
    g.set_defaults(func=cmd_generate)

    df = sub.add_parser("diff", help="pixel-difference statistics between two files or directories")
    df.add_argument("--a", required=True)
    df.add_argument("--b", required=True)
    df.add_argument("--json", action="store_true")
    df.add_argument("--histogram", help="write a difference histogram figure")
    df.set_defaults(func=cmd_diff)

    rp = sub.add_parser("report", help="mean and sample std per row of an accuracy CSV")
    rp.add_argument("--table", required=True)
    rp.add_argument("--exclude", action="append", help="column(s) left out of mean/std; repeat or comma-separate")
    rp.add_argument("--csv-out")
    rp.add_argument("--figure")
    rp.set_defaults(func=cmd_report)

    m = sub.add_parser("mixtrain", help="train toy models per strategy and tabulate cross-variant accuracy")
    m.add_argument("--corpus", required=True)
    m.add_argument("--strategy", action="append", required=True,
                   help="fixed:<resize> | fixed:<decoder>/<resize> | mix-decoder | mix-resize | mix-both")
    m.add_argument("--seed", type=int, nargs="+", default=[0])
    m.add_argument("--epochs", type=int, default=20)
    m.add_argument("--lr", type=float, default=0.05)
    m.add_argument("--batch-size", type=int, default=32)
    m.add_argument("--side", type=int, default=16)
    m.add_argument("--axis", choices=("decoder", "resize", "both"), default="resize")
    m.add_argument("--per-epoch", action="store_true", help="sample the variant once per epoch")
    m.add_argument("--figure", action="store_true", help="also render table heatmaps")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mixtrain)

    mc = sub.add_parser("make-corpus", help="write a synthetic JPEG corpus with meta files")
    mc.add_argument("--out", required=True)
    mc.add_argument("--kind", choices=("toy", "fixture"), default="toy")
    mc.add_argument("--train", type=int, default=400, help="train images (fixture: corpus size)")
    mc.add_argument("--test", type=int, default=400)
    mc.add_argument("--classes", type=int, default=2)
    mc.add_argument("--seed", type=int, default=0)
    mc.set_defaults(func=cmd_make_corpus)

    cb = sub.add_parser("checkerboard", help="checkerboard nearest-resize comparison")
    cb.add_argument("--out", required=True)
    cb.set_defaults(func=cmd_checkerboard)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SysNoiseError) as exc:
        if isinstance(exc, JpegError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ITEM_FAILURES
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
