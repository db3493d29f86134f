"""Command-line interface: sequence ingestion, orchestration, report emission.

Subcommands: tfc, wtfr, metrics, ffc, heatmap.  Exit codes: 0 success,
2 usage/validation error, 3 I/O or format error, 4 internal numerical error.
All outputs are deterministic for fixed inputs and any thread count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FormatError, InvalidInputError, InvalidStateError, NumericalError
from .spectral import Layout, load_frame
from .tfc import band_energy, export_heatmap, read_grid_dump, tfc_pair, write_grid_dump
from .wtfr import WtfrConfig, load_config, wtfr_loss
from .ffc import read_tensor, read_weights, run_blocks, write_tensor
from .metrics import read_flo, video_metrics

_NUM_RE = re.compile(r"(\d+)")


def _numeric_key(path: Path) -> int:
    runs = _NUM_RE.findall(path.stem)
    if not runs:
        raise InvalidInputError(f"filename {path.name!r} has no numeric index")
    return int(runs[-1])


def resolve_sequence(spec: str, frame_range=None) -> list[Path]:
    """Resolve a directory or glob pattern into a numerically ordered file list."""
    p = Path(spec)
    if p.is_dir():
        files = [f for f in p.iterdir()
                 if f.is_file() and f.suffix.lower() in (".png", ".ppm", ".pgm")]
    else:
        files = [f for f in p.parent.glob(p.name) if f.is_file()]
    if not files:
        raise InvalidInputError(f"no frames found for {spec!r}")
    keyed = sorted((_numeric_key(f), f) for f in files)
    keys = [k for k, _ in keyed]
    if len(set(keys)) != len(keys):
        dup = next(k for i, k in enumerate(keys[1:]) if k == keys[i])
        raise InvalidInputError(f"duplicate numeric index {dup} in {spec!r}")
    if frame_range is not None:
        lo, hi = frame_range
        keyed = [(k, f) for k, f in keyed if lo <= k <= hi]
        if not keyed:
            raise InvalidInputError(f"frame range {lo}..{hi} matched nothing in {spec!r}")
    return [f for _, f in keyed]


def load_sequence(spec: str, channels: str = "rgb", frame_range=None) -> list[np.ndarray]:
    files = resolve_sequence(spec, frame_range)
    frames = [load_frame(f, channels) for f in files]
    shape = frames[0].shape
    for f, arr in zip(files, frames):
        if arr.shape != shape:
            raise InvalidInputError(
                f"dimension drift: {files[0].name} is {shape}, {f.name} is {arr.shape}"
            )
    return frames


def _config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _parallel_map(fn, items, threads: int):
    # per-transition work is pure; collection stays in index order so results
    # are identical at any thread count
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def cmd_tfc(args) -> int:
    frames = load_sequence(args.ref, args.channels, args.range)
    if len(frames) < 2:
        raise InvalidInputError(f"need at least 2 frames, got {len(frames)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    pairs = _parallel_map(
        lambda t: tfc_pair(frames[t - 1], frames[t], args.phase_mode),
        list(range(1, len(frames))),
        args.threads,
    )
    n = len(pairs)
    mtac = sum(p.tac for p in pairs) / n
    mtpc = sum(p.tpc for p in pairs) / n

    export_heatmap(mtac, Layout.UNSHIFTED, out / "mean_tac.pgm", log_scale=True)
    export_heatmap(mtpc, Layout.UNSHIFTED, out / "mean_tpc.pgm", log_scale=False)
    write_grid_dump(mtac, Layout.UNSHIFTED, out / "mean_tac.tfcg")
    write_grid_dump(mtpc, Layout.UNSHIFTED, out / "mean_tpc.tfcg")

    tac_low, tac_high = band_energy(mtac, args.band_fraction)
    tpc_low, tpc_high = band_energy(mtpc, args.band_fraction)
    config = {
        "band_fraction": args.band_fraction,
        "channels": args.channels,
        "phase_mode": args.phase_mode,
    }
    summary = {
        "schema": "freqvid-tfc-summary-v1",
        "tool_version": __version__,
        "config": config,
        "config_hash": _config_hash(config),
        "video_id": Path(args.ref).name,
        "frames": len(frames),
        "transitions": n,
        "band_energy": {
            "tac": {"low": tac_low, "high": tac_high},
            "tpc": {"low": tpc_low, "high": tpc_high},
        },
        "outputs": ["mean_tac.pgm", "mean_tpc.pgm", "mean_tac.tfcg", "mean_tpc.tfcg"],
    }
    _write_json(out / "tfc_summary.json", summary)
    print(f"tfc: {len(frames)} frames, {n} transitions -> {out}")
    return 0


def cmd_wtfr(args) -> int:
    ref = load_sequence(args.ref, args.channels, args.range)
    syn = load_sequence(args.syn, args.channels, args.range)
    if len(ref) != len(syn):
        raise InvalidInputError(
            f"sequence lengths differ: ref has {len(ref)}, syn has {len(syn)}"
        )
    if len(ref) < 2:
        raise InvalidInputError(f"need at least 2 frames, got {len(ref)}")
    cfg = load_config(args.config) if args.config else WtfrConfig()
    if args.no_weighting:
        cfg = WtfrConfig(cfg.alpha, cfg.beta, cfg.delta, cfg.phase_mode, weighting=False)
    if args.phase_mode_set:
        cfg = WtfrConfig(cfg.alpha, cfg.beta, cfg.delta, args.phase_mode, cfg.weighting)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    results = _parallel_map(
        lambda t: wtfr_loss(ref[t - 1], ref[t], syn[t - 1], syn[t], cfg),
        list(range(1, len(ref))),
        args.threads,
    )
    per_transition = [
        {"t": t + 2, "l_tac": r.l_tac, "l_tpc": r.l_tpc, "total": r.total}
        for t, r in enumerate(results)
    ]
    config = asdict(cfg)
    report = {
        "schema": "freqvid-wtfr-report-v1",
        "tool_version": __version__,
        "config": config,
        "config_hash": _config_hash(config),
        "video_id": Path(args.ref).name,
        "frames": len(ref),
        "per_transition": per_transition,
        "means": {
            "l_tac": float(np.mean([r.l_tac for r in results])),
            "l_tpc": float(np.mean([r.l_tpc for r in results])),
            "total": float(np.mean([r.total for r in results])),
        },
    }
    _write_json(out / "wtfr_report.json", report)
    print(f"wtfr: mean total {report['means']['total']:.6g} -> {out}")
    return 0


def cmd_metrics(args) -> int:
    ref = load_sequence(args.ref, args.channels, args.range)
    syn = load_sequence(args.syn, args.channels, args.range)
    flows = None
    if args.flow != "auto":
        flow_dir = Path(args.flow)
        flows = []
        for t in range(2, len(ref) + 1):
            path = flow_dir / f"flow_{t:04d}.flo"
            if not path.exists():
                raise InvalidInputError(f"missing flow file for transition {t}: {path}")
            flows.append(read_flo(path))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = video_metrics(ref, syn, flows, video_id=Path(args.ref).name)
    config = {"channels": args.channels, "flow": args.flow}
    report = {
        "schema": "freqvid-metrics-report-v1",
        "tool_version": __version__,
        "config": config,
        "config_hash": _config_hash(config),
        **report,
    }
    _write_json(out / "metrics_report.json", report)
    m = report["means"]
    print(f"metrics: tcm {m['tcm']:.5f}, psnr {m['psnr']:.2f}, ssim {m['ssim']:.5f} -> {out}")
    return 0


def cmd_ffc(args) -> int:
    weights = read_weights(args.weights)
    x = read_tensor(args.input)
    if x.ndim != 3:
        raise InvalidInputError(f"input tensor must be rank 3 (C, H, W), got rank {x.ndim}")
    y, trace = run_blocks(x, weights)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(y, out / "output.ffct")
    for i, shape in enumerate(trace):
        label = "input" if i == 0 else f"block {i - 1}"
        print(f"{label}: {'x'.join(map(str, shape))}")
    print(f"ffc: wrote {out / 'output.ffct'}")
    return 0


def cmd_heatmap(args) -> int:
    grid, layout = read_grid_dump(args.input)
    export_heatmap(grid, layout, args.out_file, log_scale=args.log)
    print(f"heatmap: wrote {args.out_file}")
    return 0


def _range_arg(text: str):
    lo, _, hi = text.partition(":")
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqvid",
        description="Frequency-domain analysis, losses, and temporal-consistency "
        "metrics for frame sequences",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, syn=False):
        p.add_argument("--ref", required=True, help="reference frame directory or glob")
        if syn:
            p.add_argument("--syn", required=True, help="synthetic frame directory or glob")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--channels", choices=("rgb", "luma"), default="rgb")
        p.add_argument("--range", type=_range_arg, default=None, metavar="LO:HI",
                       help="inclusive numeric frame-index range")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for per-transition work (results are "
                       "identical at any thread count)")

    p_tfc = sub.add_parser("tfc", help="mean temporal frequency change of a sequence")
    add_common(p_tfc)
    p_tfc.add_argument("--band-fraction", type=float, default=0.5,
                       help="low/high radial split for band energies; heatmaps are "
                       "per-image min-max normalized, so compare videos via band "
                       "energies or raw grid dumps, not heatmap gray levels")
    p_tfc.add_argument("--phase-mode", choices=("raw", "wrapped"), default="wrapped")
    p_tfc.set_defaults(func=cmd_tfc)

    p_wtfr = sub.add_parser("wtfr", help="weighted temporal frequency regularization loss")
    add_common(p_wtfr, syn=True)
    p_wtfr.add_argument("--config", default=None, help="flat key=value loss config file")
    p_wtfr.add_argument("--phase-mode", choices=("raw", "wrapped"), default="wrapped")
    p_wtfr.add_argument("--no-weighting", action="store_true",
                        help="drop the radial weighting term (w = 1)")
    p_wtfr.set_defaults(func=cmd_wtfr)

    p_met = sub.add_parser("metrics", help="TCM / PSNR / SSIM evaluation")
    add_common(p_met, syn=True)
    p_met.add_argument("--flow", default="auto",
                       help='directory of flow_NNNN.flo files, or "auto" for the '
                       "phase-correlation fallback")
    p_met.set_defaults(func=cmd_metrics)

    p_ffc = sub.add_parser("ffc", help="run an FFC block list on a tensor")
    p_ffc.add_argument("--weights", required=True, help="FFCW weight file")
    p_ffc.add_argument("--input", required=True, help="FFCT input tensor")
    p_ffc.add_argument("--out", required=True, help="output directory")
    p_ffc.set_defaults(func=cmd_ffc)

    p_hm = sub.add_parser("heatmap", help="render a raw grid dump as PGM/PNG")
    p_hm.add_argument("--input", required=True, help="TFCG grid dump")
    p_hm.add_argument("--out-file", required=True, help="output image (.pgm or .png)")
    p_hm.add_argument("--log", action="store_true", help="apply log(1+x) before scaling")
    p_hm.set_defaults(func=cmd_heatmap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.phase_mode_set = any(
        a.startswith("--phase-mode") for a in (argv if argv is not None else sys.argv[1:])
    )
    try:
        return args.func(args)
    except (InvalidInputError, InvalidStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
