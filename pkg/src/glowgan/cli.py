"""Command-line entry point: ``glowgan <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or file-format error,
3 numerical failure (non-finite values).
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys

import numpy as np

from .camera import CameraPriors, CrfParams, ev_sweep, merge_exposures, preview_tonemap, read_merge_manifest
from .image import ImageFormatError, LdrImage, RadianceImage, histogram, read_pfm, read_ppm, write_histogram_csv, write_pfm, write_ppm
from .itm import InversionConfig, invert_multimodal, write_inversion
from .metrics import dr_percentiles, fraction_above, hist_chi2, write_metrics_csv
from .nn.checkpoint import CheckpointError, load_checkpoint
from .nn.networks import NetConfig
from .scenes import SceneConfig, build_ldr_dataset, load_dataset, write_dataset
from .training import HIST_BINS, TrainConfig, generator_from_checkpoint, interpolate, ldr_batch, sample_hdr, train

log = logging.getLogger("glowgan")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- config ------------------------------------------------------------------------

DEFAULT_CONFIG = {
    "seed": 0,
    "scene": SceneConfig().to_dict(),
    "priors": CameraPriors().to_dict(),
    "dataset": {"n": 5000},
    "net": NetConfig().to_dict(),
    "train": {k: v for k, v in TrainConfig().to_dict().items() if k not in ("priors", "net")},
    "inversion": InversionConfig().to_dict(),
}


def load_config(path=None) -> dict:
    """Defaults overlaid with the JSON file at ``path`` (section by section)."""
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    if path is None:
        return cfg
    with open(path) as f:
        try:
            user = json.load(f)
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad config {path}: {exc}") from exc
    for key, value in user.items():
        if key not in cfg:
            raise UsageError(f"unknown config section {key!r}")
        if isinstance(cfg[key], dict):
            unknown = set(value) - set(cfg[key])
            if unknown:
                raise UsageError(f"unknown keys in {key!r}: {sorted(unknown)}")
            cfg[key].update(value)
        else:
            cfg[key] = value
    return cfg


def _override(cfg, section, **values):
    for k, v in values.items():
        if v is not None:
            if section is None:
                cfg[k] = v
            else:
                cfg[section][k] = v


def train_config(cfg: dict) -> TrainConfig:
    d = dict(cfg["train"])
    d["priors"] = cfg["priors"]
    d["net"] = {**cfg["net"], "height": cfg["scene"]["height"], "img_width": cfg["scene"]["width"], "channels": cfg["scene"]["channels"]}
    return TrainConfig.from_dict(d)


def _dump_json(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_generator(path):
    net, params, meta = load_checkpoint(path)
    return generator_from_checkpoint(params, net), meta


# -- subcommands ------------------------------------------------------------------------


def cmd_synth_dataset(args):
    cfg = load_config(args.config)
    _override(cfg, None, seed=args.seed)
    _override(cfg, "dataset", n=args.n)
    scene = SceneConfig.from_dict(cfg["scene"])
    priors = CameraPriors.from_dict(cfg["priors"])
    ds = build_ldr_dataset(scene, priors, int(cfg["dataset"]["n"]), np.random.default_rng(cfg["seed"]))
    write_dataset(ds, args.out)
    _dump_json(cfg, os.path.join(args.out, "config.json"))
    print(f"wrote {len(ds)} images to {args.out}")


def cmd_train(args):
    cfg = load_config(args.config)
    _override(cfg, "train", steps=args.steps, seed=args.seed, mode=args.mode, ckpt_every=args.ckpt_every, log_every=args.log_every)
    tcfg = train_config(cfg)
    ds = load_dataset(args.data)
    os.makedirs(args.out, exist_ok=True)
    result = train(ds, tcfg, out_dir=args.out)
    write_metrics_csv(result.log, os.path.join(args.out, "trainlog.csv"))
    if not result.log:
        with open(os.path.join(args.out, "trainlog.csv"), "w") as f:
            f.write("step,g_loss,d_loss,dr50,dr90,hist_chi2\n")
    _dump_json({**cfg, "train": tcfg.to_dict(), "data": args.data}, os.path.join(args.out, "config.json"))
    print(f"trained {tcfg.steps} steps; checkpoint {os.path.join(args.out, 'final.bin')}")


def cmd_sample(args):
    gen, _ = _load_generator(args.ckpt)
    os.makedirs(args.out, exist_ok=True)
    want_hdr = args.hdr or not args.preview
    want_preview = args.preview or not args.hdr
    for i, img in enumerate(sample_hdr(gen, args.n, np.random.default_rng(args.seed))):
        stem = os.path.join(args.out, f"sample_{i:05d}")
        if isinstance(img, LdrImage):
            write_ppm(img, stem + ".ppm")
            continue
        if want_hdr:
            write_pfm(img, stem + ".pfm")
        if want_preview:
            write_ppm(preview_tonemap(img), stem + ".ppm")
    print(f"wrote {args.n} samples to {args.out}")


def parse_evs(text: str) -> list:
    """``"-3..3"`` (integer range, inclusive) or a comma list ``"-1,0,0.5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return [float(v) for v in range(lo, hi + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse EV list {text!r}") from exc


def cmd_ev_sweep(args):
    evs = parse_evs(args.evs)
    if not evs:
        raise UsageError("empty EV list")
    r = read_pfm(args.input)
    os.makedirs(args.out, exist_ok=True)
    for ev, ldr in zip(evs, ev_sweep(r, evs, CrfParams(args.beta, args.gamma))):
        write_ppm(ldr, os.path.join(args.out, f"ev_{ev:+g}.ppm"))
    print(f"wrote {len(evs)} exposures to {args.out}")


def cmd_invert(args):
    cfg = load_config(args.config)
    _override(cfg, "inversion", restarts=args.restarts, seed=args.seed, stage1_iters=args.stage1_iters, stage2_iters=args.stage2_iters)
    icfg = InversionConfig.from_dict(cfg["inversion"])
    l_hat = read_ppm(args.input)
    gen, _ = _load_generator(args.ckpt)
    results = invert_multimodal(l_hat, gen, icfg)
    os.makedirs(args.out, exist_ok=True)
    for res in results:
        write_inversion(res, os.path.join(args.out, f"restart_{res.restart:02d}"))
    ranking = [{"restart": r.restart, "psnr": r.psnr, "e_star": r.e_star} for r in results]
    _dump_json({"config": icfg.to_dict(), "ranking": ranking}, os.path.join(args.out, "summary.json"))
    for row in ranking:
        print(f"restart {row['restart']}: psnr {row['psnr']:.2f} dB, e* {row['e_star']:+.3f}")


def cmd_merge(args):
    stack = read_merge_manifest(args.manifest)
    merged = merge_exposures(stack, CrfParams(args.beta, args.gamma))
    parent = os.path.dirname(args.out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_pfm(merged, args.out)
    print(f"merged {len(stack)} exposures into {args.out}")


def _image_files(folder):
    files = sorted(glob.glob(os.path.join(folder, "*.pfm")) + glob.glob(os.path.join(folder, "*.ppm")))
    if not files:
        raise ValueError(f"no .pfm or .ppm images in {folder}")
    return [read_pfm(p) if p.endswith(".pfm") else read_ppm(p) for p in files]


def cmd_metrics(args):
    out = args.out or args.run or args.images
    os.makedirs(out, exist_ok=True)
    report = {}
    if args.run:
        gen, _ = _load_generator(os.path.join(args.run, "final.bin"))
        rng = np.random.default_rng(args.seed)
        images = sample_hdr(gen, args.n, rng)
        run_cfg_path = os.path.join(args.run, "config.json")
        if os.path.exists(run_cfg_path):
            with open(run_cfg_path) as f:
                run_cfg = json.load(f)
            data = run_cfg.get("data")
            if data and os.path.isdir(data):
                reals = load_dataset(data).array()
                priors = CameraPriors.from_dict(run_cfg["priors"])
                fake = ldr_batch(gen, priors, args.n, rng)
                h_fake = histogram(fake, bins=HIST_BINS, value_range=(0.0, 1.0))
                h_real = histogram(reals, bins=HIST_BINS, value_range=(0.0, 1.0))
                report["hist_chi2"] = hist_chi2(h_fake, h_real)
    else:
        images = _image_files(args.images)
    dr = dr_percentiles(images)
    report.update(
        {
            "n": len(images),
            "dr50": dr.dr50,
            "dr90": dr.dr90,
            "fraction_above_1": fraction_above(images),
        }
    )
    scale = "linear" if all(isinstance(im, LdrImage) for im in images) else "log2"
    values = np.concatenate([np.asarray(im.data, dtype=np.float64).ravel() for im in images])
    write_histogram_csv(histogram(values, scale=scale, bins=HIST_BINS), os.path.join(out, "histogram.csv"))
    write_metrics_csv([{"image": i, "dr": float(v)} for i, v in enumerate(dr.values)], os.path.join(out, "dr.csv"))
    _dump_json(report, os.path.join(out, "metrics.json"))
    print(json.dumps(report, sort_keys=True))


def cmd_interpolate(args):
    gen, _ = _load_generator(args.ckpt)
    k = gen.cfg.latent_dim
    z1 = np.random.default_rng(args.seed1).normal(size=k)
    z2 = np.random.default_rng(args.seed2).normal(size=k)
    os.makedirs(args.out, exist_ok=True)
    for i, img in enumerate(interpolate(gen, z1, z2, args.steps)):
        stem = os.path.join(args.out, f"frame_{i:03d}")
        if isinstance(img, RadianceImage):
            write_pfm(img, stem + ".pfm")
            write_ppm(preview_tonemap(img), stem + ".ppm")
        else:
            write_ppm(img, stem + ".ppm")
    print(f"wrote {args.steps} frames to {args.out}")


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="glowgan", description="HDR generation from LDR images and unsupervised inverse tone mapping.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth-dataset", help="build a synthetic LDR dataset with ground truth")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth_dataset)

    s = sub.add_parser("train", help="train a generator on an LDR dataset")
    s.add_argument("--config")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--steps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=("glowgan", "vanilla"))
    s.add_argument("--ckpt-every", type=int)
    s.add_argument("--log-every", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="draw images from a checkpoint")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--n", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--hdr", action="store_true", help="write PFM radiance")
    s.add_argument("--preview", action="store_true", help="write tone-mapped PPM previews")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("ev-sweep", help="render an HDR image at a series of exposures")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--evs", default="-3..3")
    s.add_argument("--beta", type=float, default=0.6)
    s.add_argument("--gamma", type=float, default=0.9)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ev_sweep)

    s = sub.add_parser("invert", help="reconstruct HDR from one LDR image")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--ckpt", required=True)
    s.add_argument("--config")
    s.add_argument("--restarts", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--stage1-iters", type=int)
    s.add_argument("--stage2-iters", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("merge", help="merge an exposure stack with a known response curve")
    s.add_argument("--manifest", required=True)
    s.add_argument("--beta", type=float, default=0.6)
    s.add_argument("--gamma", type=float, default=0.9)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_merge)

    s = sub.add_parser("metrics", help="dynamic-range statistics and histograms")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--run")
    g.add_argument("--images")
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("interpolate", help="frames along a latent path")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--seed1", type=int, required=True)
    s.add_argument("--seed2", type=int, required=True)
    s.add_argument("--steps", type=int, default=8)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_interpolate)
    return p


def _join_option_values(argv):
    # "--evs -3..3" would otherwise be read as an unknown option
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--evs":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--evs={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = _join_option_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            args.func(args)
    except UsageError as exc:
        print(f"glowgan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FloatingPointError as exc:  # NonFiniteError, TrainingDiverged
        print(f"glowgan: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ImageFormatError, CheckpointError, OSError, ValueError, KeyError) as exc:
        print(f"glowgan: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
