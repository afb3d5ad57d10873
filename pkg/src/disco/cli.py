"""``disco`` command line: build and verify bases, probe the lemma, measure equivariance and cost.

Exit codes: 0 success, 1 verification failed, 2 bad input, 3 numerical failure.
"""
import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .basis import Provenance, build_basis, build_interp_baseline
from .complexity import analytic_profile, profile
from .equivariance import constraint_residuals, equivariance_error
from .errors import DiscoError, NumericalError
from .io import dumps, load_basis, save_basis, write_json
from .resample import InterpMethod, make_downscale
from .scaleconv import random_network, synthetic_images
from .scales import Scale, ScaleSet
from .solve import SolveConfig
from .spectral import solve_lemma_residual

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3
INTEGER_TOL = 1e-6
IMAGE_SUFFIXES = {".pgm", ".png"}


class InputError(DiscoError):
    """Bad command-line input (exit code 2)."""


def _seed(args, required=False):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DISCO_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"DISCO_SEED must be an integer, got {env!r}") from None
    if required:
        raise InputError("a seed is required (--seed or DISCO_SEED)")
    return 0


def _emit(args, report):
    if getattr(args, "out", None):
        write_json(args.out, report)
    else:
        sys.stdout.write(dumps(report))


def cmd_basis_build(args):
    ss = ScaleSet.parse(args.scales, args.size)
    cfg = SolveConfig(seed=_seed(args, required=True), num_samples=args.samples, method=args.method,
                      gd_steps=args.gd_steps, interp=args.interp, boundary=args.boundary,
                      sample_size=args.sample_size)
    basis = build_basis(ss, cfg)
    save_basis(args.out, basis)
    for s, prov in enumerate(basis.provenance):
        if prov is Provenance.OPTIMIZED:
            obj = basis.objectives.get(s)
            print(f"slot {s} (scale {ss.tokens[s]}): mean objective {float(np.mean(obj)):.6g}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_basis_verify(args):
    basis = load_basis(args.basis)
    pairs = constraint_residuals(basis, num_samples=args.samples, seed=_seed(args))
    ok = all(p["max"] < INTEGER_TOL for p in pairs if p["integer_ratio"])
    report = {
        "report": "basis-verify",
        "basis": str(args.basis),
        "label": basis.label,
        "provenance": [p.value for p in basis.provenance],
        "pairs": pairs,
        "integer_tolerance": INTEGER_TOL,
        "passed": ok,
    }
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_lemma(args):
    if not 1 <= args.nout <= args.nin:
        raise InputError(f"need 1 <= nout <= nin, got nin={args.nin}, nout={args.nout}")
    if args.length % 2 == 0 or args.length > args.nout:
        raise InputError(f"kernel length must be odd and <= nout, got {args.length}")
    L = make_downscale(args.nin, args.nout, args.interp, "circular")
    rng = np.random.default_rng(_seed(args))
    res = [solve_lemma_residual(rng.standard_normal(args.length), L).residual for _ in range(args.trials)]
    report = {
        "report": "lemma",
        "nin": args.nin,
        "nout": args.nout,
        "interp": L.method.value,
        "integer_factor": L.integer_factor,
        "trials": args.trials,
        "kernel_length": args.length,
        "min": float(np.min(res)),
        "median": float(np.median(res)),
        "max": float(np.max(res)),
    }
    _emit(args, report)
    return EXIT_OK


def load_images(source, count, size, seed):
    """``synthetic`` or ``dir:<path>`` of grayscale PGM/PNG, center-cropped and resized to ``size``."""
    if source == "synthetic":
        return synthetic_images(count, size, seed)
    if not source.startswith("dir:"):
        raise InputError(f"--input must be 'synthetic' or 'dir:<path>', got {source!r}")
    root = Path(source[4:])
    if not root.is_dir():
        raise InputError(f"input directory {root} does not exist")
    files = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)[:count]
    if not files:
        raise InputError(f"no .pgm/.png images in {root}")
    out = []
    for p in files:
        with Image.open(p) as im:
            im = im.convert("L")
            side = min(im.size)
            left, top = (im.width - side) // 2, (im.height - side) // 2
            im = im.crop((left, top, left + side, top + side)).resize((size, size), Image.BICUBIC)
            out.append(np.asarray(im, dtype=np.float64) / 255.0)
    return np.stack(out)


def cmd_equivariance(args):
    if args.basis:
        basis = load_basis(args.basis)
    else:
        if not args.scales:
            raise InputError("--baseline needs --scales")
        ss = ScaleSet.parse(args.scales, args.kernel_size)
        basis = build_interp_baseline(None, ss, args.baseline)
    ss = basis.scale_set
    interp = args.interp or (basis.config.interp.value if basis.config else InterpMethod.BICUBIC.value)
    seed = _seed(args)
    images = load_images(args.input, args.num_inputs, args.size, seed)
    net = random_network(basis, args.layers, args.channels, extent=args.extent,
                         nonlinearity=args.nonlinearity, seed=seed)
    rep = equivariance_error(net, images, ss, test_indices=args.test_indices, interp=interp)
    report = {"report": "equivariance", "basis": basis.label, "scales": list(ss.tokens),
              "layers": args.layers, "channels": args.channels, "extent": min(args.extent, len(ss)),
              "nonlinearity": args.nonlinearity, "input": args.input, "size": args.size, "seed": seed}
    report.update(rep.to_dict())
    _emit(args, report)
    return EXIT_OK


def cmd_bench(args):
    ss = ScaleSet.parse(args.scales, args.size)
    if ss.step is None:
        step = Scale.parse(args.step)
        if ss.scales[0] != Scale():
            raise InputError("a single-scale bench set must be '1'")
    else:
        step = ss.step
    if args.analytic_only:
        prof = analytic_profile(step, len(ss), args.size)
    else:
        basis = build_basis(ss, SolveConfig(seed=_seed(args), num_samples=256)) if ss.step else None
        prof = profile(step, len(ss), args.size, spatial=args.spatial, channels=args.channels,
                       repeats=args.repeats, seed=_seed(args), backend=args.backend, basis=basis)
    report = {"report": "bench"}
    report.update(prof.to_dict())
    _emit(args, report)
    return EXIT_OK


def _odd(text):
    v = int(text)
    if v < 1 or v % 2 == 0:
        raise argparse.ArgumentTypeError(f"expected an odd positive integer, got {text}")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser():
    interp_choices = [m.value for m in InterpMethod]
    p = argparse.ArgumentParser(prog="disco", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    basis = sub.add_parser("basis", help="build or verify a multi-scale basis")
    bsub = basis.add_subparsers(dest="basis_command", required=True)

    b = bsub.add_parser("build", help="solve a basis and write it to a file")
    b.add_argument("--size", type=_odd, default=3, help="smallest kernel side (odd)")
    b.add_argument("--scales", required=True, help="comma-separated scales, e.g. 1,sqrt2,2,2sqrt2")
    b.add_argument("--interp", choices=interp_choices, default="bicubic")
    b.add_argument("--boundary", choices=["circular", "zero"], default="circular")
    b.add_argument("--samples", type=_positive, default=4096, help="Monte Carlo images")
    b.add_argument("--sample-size", type=_positive, default=None, help="side of the noise images")
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--method", choices=["ne", "gd"], default="ne")
    b.add_argument("--gd-steps", type=int, default=5000)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_basis_build)

    v = bsub.add_parser("verify", help="per-pair constraint residuals of a basis file")
    v.add_argument("--basis", required=True)
    v.add_argument("--samples", type=_positive, default=50)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--out", default=None, help="report path (default: stdout)")
    v.set_defaults(func=cmd_basis_verify)

    lm = sub.add_parser("lemma", help="least-squares residual of the 1D constraint for one downscaler")
    lm.add_argument("--nin", type=_positive, required=True)
    lm.add_argument("--nout", type=_positive, required=True)
    lm.add_argument("--interp", choices=interp_choices, default="bilinear")
    lm.add_argument("--trials", type=_positive, default=20)
    lm.add_argument("--length", type=_odd, default=3, help="random kernel length")
    lm.add_argument("--seed", type=int, default=None)
    lm.add_argument("--out", default=None)
    lm.set_defaults(func=cmd_lemma)

    e = sub.add_parser("equivariance", help="equivariance error of a random network")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--basis", help="basis file")
    src.add_argument("--baseline", choices=interp_choices, help="interpolated pixel-basis baseline")
    e.add_argument("--scales", help="scale set for --baseline")
    e.add_argument("--kernel-size", type=_odd, default=3, help="smallest kernel side for --baseline")
    e.add_argument("--layers", type=int, default=3)
    e.add_argument("--channels", type=_positive, default=4)
    e.add_argument("--extent", type=_positive, default=2, help="scale offsets per layer")
    e.add_argument("--nonlinearity", choices=["relu", "identity"], default="relu")
    e.add_argument("--input", default="synthetic", help="'synthetic' or 'dir:<path>'")
    e.add_argument("--num-inputs", type=_positive, default=8)
    e.add_argument("--size", type=_positive, default=48, help="input image side")
    e.add_argument("--interp", choices=interp_choices, default=None,
                   help="group action interpolation (default: the basis solve's, else bicubic)")
    e.add_argument("--test-indices", type=int, nargs="+", default=None)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_equivariance)

    bn = sub.add_parser("bench", help="MAC counts and dense vs sparse timings")
    bn.add_argument("--scales", default="1,sqrt2,2,2sqrt2")
    bn.add_argument("--step", default="sqrt2", help="step assumed when --scales has one entry")
    bn.add_argument("--size", type=_odd, default=3)
    bn.add_argument("--spatial", type=_positive, default=64)
    bn.add_argument("--channels", type=_positive, default=4)
    bn.add_argument("--repeats", type=_positive, default=7)
    bn.add_argument("--backend", choices=["numba", "numpy"], default=None)
    bn.add_argument("--analytic-only", action="store_true", help="skip timing")
    bn.add_argument("--seed", type=int, default=None)
    bn.add_argument("--out", default=None)
    bn.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"disco: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DiscoError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"disco: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
