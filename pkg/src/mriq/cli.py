"""``mriq`` command line: distort, score, gen-dataset, report, info.

Exit codes: 0 success, 1 usage or parameter-range error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import distortion, jsonfmt, pipeline
from .distortion import DistortionKind
from .errors import ParameterError, VolumeFormatError
from .nifti import load_volume, save_volume
from .volume import normalize_intensity

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

VOLUME_SUFFIXES = (".nii", ".nii.gz", ".f32raw")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _triple(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected X,Y,Z, got {text!r}")
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mriq", description="MRI artifact simulation and quality scores")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("distort", help="apply one artifact to a volume")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--kind", required=True, choices=[k.value for k in DistortionKind])
    d.add_argument("--gamma", type=float)
    d.add_argument("--center", type=_triple)
    d.add_argument("--fc", type=int)
    d.add_argument("--alpha", type=float)
    d.add_argument("--axis", type=int)
    d.add_argument("--variance", type=float)
    d.add_argument("--blur-mode", choices=["resample", "gaussian"])
    d.add_argument("--scale", type=float)
    d.add_argument("--kernel", type=int)
    d.add_argument("--sigma", type=float)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--json", help="write the distortion record here")

    s = sub.add_parser("score", help="reference-based scores for one pair")
    s.add_argument("--ref", required=True)
    s.add_argument("--img", required=True)
    s.add_argument("--json")

    g = sub.add_parser("gen-dataset", help="generate a scored training set")
    g.add_argument("--refs", required=True, help="directory of reference volumes")
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--mix-prob", type=float, default=0.5)
    g.add_argument("--size", type=int, default=224)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--no-augment", action="store_true")

    r = sub.add_parser("report", help="summarise a manifest or score a list of pairs")
    grp = r.add_mutually_exclusive_group(required=True)
    grp.add_argument("--manifest")
    grp.add_argument("--pairs", help="CSV with ref,img columns")
    r.add_argument("--json")

    i = sub.add_parser("info", help="print volume header facts")
    i.add_argument("--in", dest="inp", required=True)
    return p


def _distort_params(args, kind: DistortionKind) -> dict:
    # unspecified parameters are drawn from the seed
    params = distortion.sample_params(kind, np.random.default_rng(args.seed))
    if kind is DistortionKind.CONTRAST and args.gamma is not None:
        params["gamma"] = args.gamma
    elif kind is DistortionKind.BIAS and args.center is not None:
        params["center"] = args.center
    elif kind is DistortionKind.RING and args.fc is not None:
        params["f_c"] = args.fc
    elif kind is DistortionKind.GHOST:
        if args.alpha is not None:
            params["alpha"] = args.alpha
        if args.axis is not None:
            params["axis"] = args.axis
    elif kind is DistortionKind.NOISE:
        params["seed"] = args.seed
        if args.variance is not None:
            params["variance"] = args.variance
    elif kind is DistortionKind.BLUR and args.blur_mode is not None:
        params = {"mode": args.blur_mode, "scale": args.scale, "kernel": args.kernel,
                  "sigma": args.sigma}
    return params


def _load_unit(path):
    v = load_volume(path)
    if v.source_dtype.startswith(("int", "uint")) or v.data.min() < 0 or v.data.max() > 1:
        v = normalize_intensity(v)
    return v


def cmd_distort(args) -> int:
    kind = DistortionKind(args.kind)
    params = _distort_params(args, kind)
    v = _load_unit(args.inp)
    out, rec = distortion.apply(kind, v, params)
    save_volume(out, args.out)
    text = jsonfmt.dumps(rec.to_dict())
    if args.json:
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_score(args) -> int:
    ref, img = load_volume(args.ref), load_volume(args.img)
    row = pipeline.score_pair(ref, img)
    scores = {k: row[k] for k in pipeline.SCORE_COLUMNS}
    if args.json:
        Path(args.json).write_text(jsonfmt.dumps(scores) + "\n", encoding="utf-8")
    for k in pipeline.REPORT_COLUMNS:
        val = row[k]
        print(f"{k:<10} {'-' if val is None else f'{val:.6f}'}")
    return EXIT_OK


def cmd_gen_dataset(args) -> int:
    refs_dir = Path(args.refs)
    if not refs_dir.is_dir():
        raise OSError(f"{refs_dir} is not a directory")
    refs = sorted(str(p) for p in refs_dir.iterdir()
                  if p.is_file() and p.name.endswith(VOLUME_SUFFIXES))
    if not refs:
        raise OSError(f"no volumes found in {refs_dir}")
    if not 0.0 <= args.mix_prob <= 1.0:
        raise ParameterError(f"--mix-prob {args.mix_prob} outside [0, 1]")
    if args.n < 0 or args.workers < 1 or args.size < 1:
        raise ParameterError("--n must be >= 0, --workers and --size >= 1")
    manifest = pipeline.generate_dataset(refs, args.n, args.seed, args.mix_prob, args.out,
                                         size=args.size, workers=args.workers,
                                         do_augment=not args.no_augment)
    print(f"wrote {len(manifest.records)} samples to {args.out}")
    return EXIT_OK


def _read_pairs(path):
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) < 2:
                raise VolumeFormatError(f"{path}: expected ref,img per line, got {row}")
            if not pairs and row[0].strip().lower() == "ref":
                continue
            pairs.append((row[0].strip(), row[1].strip()))
    return pairs


def cmd_report(args) -> int:
    if args.manifest:
        rep = pipeline.summarize_manifest(pipeline.load_manifest(args.manifest))
        print(pipeline.format_table(rep["summary"], pipeline.SCORE_COLUMNS))
    else:
        rep = pipeline.score_report(_read_pairs(args.pairs))
        for row in rep["pairs"]:
            if "error" in row:
                print(f"error: {row['ref']} vs {row['img']}: {row['error']}", file=sys.stderr)
        print(pipeline.format_table(rep["summary"], pipeline.REPORT_COLUMNS))
    if args.json:
        Path(args.json).write_text(jsonfmt.dumps(rep) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_info(args) -> int:
    v = load_volume(args.inp)
    print(f"dims     {v.dims[0]} x {v.dims[1]} x {v.dims[2]}")
    print(f"spacing  {v.spacing[0]:g} x {v.spacing[1]:g} x {v.spacing[2]:g} mm")
    print(f"dtype    {v.source_dtype}")
    print(f"min/max  {v.data.min():.6g} / {v.data.max():.6g}")
    return EXIT_OK


COMMANDS = {
    "distort": cmd_distort,
    "score": cmd_score,
    "gen-dataset": cmd_gen_dataset,
    "report": cmd_report,
    "info": cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"mriq: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, KeyError) as exc:
        print(f"mriq: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
