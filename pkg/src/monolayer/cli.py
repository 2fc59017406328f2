"""``monolayer`` command line.

Subcommands: transform, degrade, ssim-report, train, grid. Each one writes a
``manifest.json`` next to its outputs. Exit codes: 0 success, 1 internal
error, 2 usage or configuration error.
"""
import argparse
import csv
import hashlib
import json
import logging
import os
import shutil
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import set_threads
from .degrade import (
    AIRLIGHT_RANGE,
    DARK_CHANNEL_WEIGHT,
    KINDS,
    LEVELS,
    DegradationSpec,
    canonical_kind,
    degrade,
    level_params,
)
from .imagecore import FORMATS, ImageError, load_image, normalize_minmax, save_image, to_grayscale_mean
from .m6 import PARAM_NAMES, M6Params, m6_forward, m6_init
from .metrics import ssim_m6_batch
from .spectral import local_amplitude, local_orientation, local_phase, monogenic_transform

log = logging.getLogger("monolayer")

THREADS_ENV = "MONOLAYER_THREADS"
MANIFEST = "manifest.json"
IMAGE_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm", ".f64", ".raw")
REPORT_FIELDS = ("image_id", "kind", "level", "raw_index", "phi_index", "theta_index")
SSIM_CHUNK = 500


class UsageError(Exception):
    """Bad input or configuration; maps to exit code 2."""


# -- manifest -----------------------------------------------------------------

def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def write_manifest(outdir, command, config, seed, inputs, outputs, started, extra=None):
    """One manifest per run. Outputs are listed relative to ``outdir`` with
    their sha256; only the ``timestamps`` block varies between reruns."""
    outdir = Path(outdir)
    manifest = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "version": __version__,
        "inputs": [str(p) for p in inputs],
        "outputs": {str(Path(p).relative_to(outdir)): _sha256(p) for p in sorted(outputs)},
        "timestamps": {"started": started, "finished": _now()},
    }
    if extra:
        manifest.update(extra)
    (outdir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _prepare_outdir(path):
    outdir = Path(path)
    if outdir.exists() and not outdir.is_dir():
        raise UsageError(f"output path {outdir} exists and is not a directory")
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


# -- transform ----------------------------------------------------------------

def _params_from_args(args):
    base = m6_init()
    return M6Params(
        s=base.s if args.s is None else args.s,
        f=base.f if args.f is None else args.f,
        omega=base.omega if args.omega is None else args.omega,
        sigma=base.sigma if args.sigma is None else args.sigma,
    )


def cmd_transform(args):
    started = _now()
    src = Path(args.input)
    if not src.is_file():
        raise UsageError(f"input image not found: {src}")
    try:
        img = load_image(src, args.format)
        params = _params_from_args(args)
    except (ImageError, ValueError) as exc:
        raise UsageError(str(exc)) from exc

    # compute everything before touching the output directory
    out = m6_forward(img, params)
    resp = monogenic_transform(to_grayscale_mean(img)[..., 0], params)
    maps = {
        "rgb_phi": out.rgb_phi,
        "rgb_theta": out.rgb_theta,
        "filtered": resp.i_prime,
        "amplitude": local_amplitude(resp),
        "phase": local_phase(resp),
        "orientation": local_orientation(resp),
    }
    outdir = _prepare_outdir(args.outdir)
    written = []
    for name, arr in maps.items():
        png = arr if arr.ndim == 3 else normalize_minmax(arr)
        save_image(png, outdir / f"{name}.png")
        save_image(arr, outdir / f"{name}.f64")
        written += [outdir / f"{name}.png", outdir / f"{name}.f64"]
    config = {"params": dict(zip(PARAM_NAMES, params.as_array().tolist()))}
    write_manifest(outdir, "transform", config, None, [src], written, started)
    log.info("wrote %d maps to %s", len(maps), outdir)
    return 0


# -- degrade ------------------------------------------------------------------

def _list_images(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"input directory not found: {directory}")
    files = sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise UsageError(f"no images in {directory}")
    return files


def cmd_degrade(args):
    started = _now()
    try:
        kind = canonical_kind(args.kind)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    files = _list_images(args.input)
    spec = DegradationSpec(kind, args.level, rng_seed=args.seed)
    outdir = _prepare_outdir(args.outdir)
    if outdir.resolve() == Path(args.input).resolve():
        raise UsageError("output directory must differ from the input directory")
    written, records = [], []
    for index, src in enumerate(files):
        dst = outdir / src.name
        record = {"file": src.name, "index": index}
        if spec.params is None:
            shutil.copyfile(src, dst)
        else:
            try:
                img = load_image(src)
            except ImageError as exc:
                raise UsageError(str(exc)) from exc
            out, airlight = degrade(img, spec, index)
            save_image(out, dst)
            if airlight is not None:
                record["seed"] = [args.seed, index]
                record["airlight"] = airlight.tolist()
        records.append(record)
        written.append(dst)
    presets = {lvl: level_params(kind, lvl) for lvl in LEVELS}
    config = {"kind": kind, "level": args.level, "seed": args.seed}
    if kind == "haze":
        config["haze"] = {"transmission": "min-max rescaled into the level interval",
                          "dark_channel_weight": DARK_CHANNEL_WEIGHT, "airlight_range": list(AIRLIGHT_RANGE),
                          "patch": "3 if max(H, W) <= 64 else 15"}
    write_manifest(outdir, "degrade", config, args.seed, files, written, started,
                   extra={"images": records, "presets": presets})
    log.info("degraded %d images (%s %s) into %s", len(files), kind, args.level, outdir)
    return 0


# -- ssim-report ----------------------------------------------------------------

def _dataset_from_args(args, n):
    from .learn.data import DatasetError, DatasetSpec, load_dataset

    try:
        ds = DatasetSpec(mnist_dir=args.mnist_dir, labels_csv=args.labels_csv, n_train=0, n_val=0, n_test=n)
        return load_dataset(ds, args.seed).test.x
    except (DatasetError, OSError) as exc:
        raise UsageError(str(exc)) from exc


def _quartiles(values):
    q = np.percentile(values, [0, 25, 50, 75, 100])
    return dict(zip(("min", "q1", "median", "q3", "max"), (float(v) for v in q)))


def cmd_ssim_report(args):
    started = _now()
    if args.n < 1:
        raise UsageError("n must be at least 1")
    kinds = KINDS if args.kind == "all" else (canonical_kind(args.kind),)
    out_csv = Path(args.out)
    images = _dataset_from_args(args, args.n)
    params = m6_init()
    rows, summary = [], {}
    for kind in kinds:
        for level in LEVELS[1:]:
            spec = DegradationSpec(kind, level, rng_seed=args.seed)
            parts = [ssim_m6_batch(images[s:s + SSIM_CHUNK], spec, params) for s in range(0, len(images), SSIM_CHUNK)]
            raw, phi, theta = (np.concatenate(col) for col in zip(*parts))
            for i in range(len(images)):
                rows.append((i, kind, level, raw[i], phi[i], theta[i]))
            summary[f"{kind}/{level}"] = {"raw": _quartiles(raw), "phi": _quartiles(phi), "theta": _quartiles(theta)}
    outdir = _prepare_outdir(out_csv.parent)
    with out_csv.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_FIELDS)
        for i, kind, level, r, p, t in rows:
            w.writerow([i, kind, level, repr(float(r)), repr(float(p)), repr(float(t))])
    summary_path = out_csv.with_suffix(".summary.json")
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    source = args.mnist_dir or args.labels_csv
    config = {"kinds": list(kinds), "n": args.n, "seed": args.seed, "source": str(source)}
    write_manifest(outdir, "ssim-report", config, args.seed, [source], [out_csv, summary_path], started)
    log.info("wrote %d rows to %s", len(rows), out_csv)
    return 0


# -- train / grid -------------------------------------------------------------

def load_schema():
    return json.loads(resources.files("monolayer").joinpath("schemas/train_config.schema.json").read_text())


def load_config(path):
    """Read and validate a training config. Raises UsageError naming every
    offending key."""
    import jsonschema

    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise UsageError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    problems = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        if err.validator == "additionalProperties":
            allowed = set(err.schema.get("properties", {}))
            extra = sorted(set(err.instance) - allowed)
            problems += [f"{where + '/' if err.absolute_path else ''}{k}: unknown key" for k in extra]
        else:
            problems.append(f"{where}: {err.message}")
    if problems:
        raise UsageError(f"{path}: invalid config\n  " + "\n  ".join(problems))
    return raw


def _resolved_dataset(raw, base):
    ds = dict(raw["dataset"])
    for key in ("mnist_dir", "labels_csv"):
        if key in ds and not Path(ds[key]).is_absolute():
            ds[key] = str((base / ds[key]).resolve())
    return ds


def _train_setup(args):
    from .learn.data import DatasetError, DatasetSpec, load_dataset
    from .learn.train import TrainConfig

    raw = load_config(args.config)
    config = TrainConfig.from_dict(raw)
    try:
        splits = load_dataset(DatasetSpec(**_resolved_dataset(raw, Path(args.config).parent)), config.seed)
    except (DatasetError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    return raw, config, splits


def cmd_train(args):
    from .learn.train import degrade_splits, evaluate, save_checkpoint, train, write_history

    started = _now()
    raw, config, splits = _train_setup(args)
    degraded = degrade_splits(splits, config.kind, config.train_level, config.seed)
    outdir = _prepare_outdir(args.outdir)
    spec, state, history = train(config, degraded)
    test_acc, test_loss = evaluate(spec, state, degraded.test.x, degraded.test.y)
    ckpt = outdir / "checkpoint"
    digest = save_checkpoint(ckpt, spec, state, meta={"config_hash": config.hash(), "version": __version__})
    write_history(history, outdir / "history.csv")
    written = [ckpt / "model.json", ckpt / "weights.f64", outdir / "history.csv"]
    write_manifest(outdir, "train", raw, config.seed, [args.config], written, started,
                   extra={"resolved_config": config.to_dict(), "checkpoint_sha256": digest,
                          "test_accuracy": test_acc, "test_loss": test_loss})
    log.info("test accuracy %.4f, checkpoint %s", test_acc, digest[:12])
    return 0


def cmd_grid(args):
    from .learn.train import run_grid

    started = _now()
    raw, config, splits = _train_setup(args)
    outdir = _prepare_outdir(args.outdir)
    result = run_grid(config.kind, config, splits)
    result.write(outdir)
    write_manifest(outdir, "grid", raw, config.seed, [args.config], [outdir / "grid.json", outdir / "grid.csv"],
                   started, extra={"resolved_config": config.to_dict()})
    for lvl, row in zip(result.levels, result.matrix):
        log.info("train %s: %s", lvl, " ".join(f"{v:.4f}" for v in row))
    return 0


# -- entry point --------------------------------------------------------------

def _threads(value):
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="monolayer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=_threads, default=None,
                        help=f"cap worker threads (default: ${THREADS_ENV} or library default)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="monogenic maps and the two M6 RGB images of one image")
    p.add_argument("input")
    p.add_argument("--outdir", required=True)
    p.add_argument("--format", choices=FORMATS, default=None, help="input format (default: from suffix)")
    for name in PARAM_NAMES:
        p.add_argument(f"--{name}", type=float, default=None, help="filter parameter (default: initial value)")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("degrade", help="degrade every image of a directory")
    p.add_argument("input", help="directory of png/ppm/f64 images")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--level", required=True, choices=LEVELS)
    p.add_argument("--seed", type=int, default=0, help="haze airlight seed (default: 0)")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("ssim-report", help="SSIM of images vs. their degradations, raw and after M6")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mnist-dir")
    src.add_argument("--labels-csv")
    p.add_argument("--kind", default="all", choices=KINDS + ("all",))
    p.add_argument("-n", "--n", type=int, default=1000, help="images from the test split (default: 1000)")
    p.add_argument("--seed", type=int, default=0, help="split and degradation seed (default: 0)")
    p.add_argument("--out", required=True, help="CSV path; the quartile summary goes next to it")
    p.set_defaults(func=cmd_ssim_report)

    for name, func, help_ in (("train", cmd_train, "train one model from a JSON config"),
                              ("grid", cmd_grid, "train/test grid over the four levels of one degradation")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="JSON config, see docs/train_config.schema.json")
        p.add_argument("--outdir", required=True)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = _threads(os.environ[THREADS_ENV])
        except argparse.ArgumentTypeError as exc:
            parser.error(f"{THREADS_ENV}: {exc}")
    if threads is not None:
        set_threads(threads)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"monolayer {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"monolayer {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
