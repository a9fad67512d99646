"""Command-line front end: ``dualrefine <subcommand> ...``.

Exit codes: 0 success, 1 validation or usage error, 2 I/O or format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import evalkit, fileio, objectives, scene
from .alignment import DEFAULT_K, DEFAULT_THETA, lu_kss
from .errors import DualRefineError
from .field_core import DisparityField, UncertaintyField
from .refinement import RefineConfig, run_refinement
from .uncertainty import masking_sweep

logger = logging.getLogger("dualrefine")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
DEFAULT_FRACTIONS = (0.0, 5.0, 10.0, 20.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _parse_override(item: str):
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise UsageError(f"--set expects key=value, got {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path, overrides) -> RefineConfig:
    data = fileio.read_json(path) if path else {}
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    data.update(_parse_override(item) for item in overrides or ())
    return RefineConfig.from_dict(data)


def _mask(path) -> np.ndarray:
    return fileio.read_pfm_array(path) > 0.5


# -- sample directories -----------------------------------------------------

SAMPLE_FILES = {"left": "left.pfm", "right": "right.pfm", "d_gt": "disp_gt.pfm",
                "occ": "occ.pfm", "labels": "labels.pfm", "spec": "spec.json"}


def save_sample(sample: scene.SceneSample, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_pfm(sample.left, out / SAMPLE_FILES["left"])
    fileio.write_pfm(sample.right, out / SAMPLE_FILES["right"])
    fileio.write_pfm(sample.d_gt, out / SAMPLE_FILES["d_gt"])
    fileio.write_pfm(sample.occ_mask.astype(np.float32), out / SAMPLE_FILES["occ"])
    fileio.write_pfm(sample.region_labels.astype(np.float32), out / SAMPLE_FILES["labels"])
    fileio.write_json(sample.spec.to_dict(), out / SAMPLE_FILES["spec"])


def load_sample(sample_dir) -> scene.SceneSample:
    d = Path(sample_dir)
    spec_path = d / SAMPLE_FILES["spec"]
    spec = scene.SceneSpec.from_dict(fileio.read_json(spec_path)) if spec_path.exists() else None
    return scene.SceneSample(
        left=fileio.read_image(d / SAMPLE_FILES["left"]),
        right=fileio.read_image(d / SAMPLE_FILES["right"]),
        d_gt=fileio.read_pfm(d / SAMPLE_FILES["d_gt"]),
        occ_mask=_mask(d / SAMPLE_FILES["occ"]),
        region_labels=fileio.read_pfm_array(d / SAMPLE_FILES["labels"]).astype(np.uint8),
        spec=spec,
    )


# -- subcommands ------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.random is not None:
        spec = scene.random_scene_spec(args.random)
    elif args.spec:
        spec = scene.SceneSpec.from_dict(fileio.read_json(args.spec))
    else:
        raise UsageError("gen needs a spec file or --random SEED")
    sample = scene.gen_scene(spec)
    save_sample(sample, args.outdir)
    print(f"wrote {spec.height}x{spec.width} sample to {args.outdir}")
    return EXIT_OK


def cmd_refine(args) -> int:
    cfg = load_config(args.config, args.set)
    cognition = fileio.read_featc(args.cognition) if args.cognition else None
    d_gt = None
    if args.sample:
        sample = load_sample(args.sample)
        pair = (sample.left, sample.right)
        d_gt = sample.d_gt
    elif args.left and args.right:
        pair = (fileio.read_image(args.left), fileio.read_image(args.right))
        if args.gt:
            d_gt = fileio.read_pfm(args.gt)
    else:
        raise UsageError("refine needs --sample DIR or both --left and --right")
    traj = run_refinement(pair, cfg, d_gt=d_gt, cognition=cognition)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k, d in enumerate(traj.fields):
        fileio.write_pfm(d, out / f"disp_{k}.pfm")
    fileio.write_pfm(traj.uncertainty.grid, out / "uncertainty.pfm")
    fileio.write_json({"config": cfg.to_dict(), "epe": traj.epe, "alignment": traj.alignment},
                      out / "trajectory.json")
    if traj.epe:
        print(f"epe initial {traj.epe[0]:.6f} final {traj.epe[-1]:.6f}")
    print(f"wrote {len(traj.fields)} fields to {out}")
    return EXIT_OK


def cmd_align(args) -> int:
    d_next = fileio.read_pfm(args.d_next)
    d_prev = fileio.read_pfm(args.d_prev)
    U = UncertaintyField.from_array(fileio.read_pfm_array(args.uncertainty))
    res = lu_kss(d_next, d_prev, U, theta=args.theta, K=args.K)
    fileio.write_pfm(res.aligned, args.out)
    print(f"anchors {len(res.anchors)} s* {res.global_fit.s:.9g} t* {res.global_fit.t:.9g}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = fileio.read_pfm(args.pred)
    gt = fileio.read_pfm(args.gt)
    occ = _mask(args.occ) if args.occ else None
    report = evalkit.compute_metrics(pred, gt, occ, args.bp)
    print(report.to_table())
    if args.json:
        fileio.write_json(report.as_dict(), args.json)
    return EXIT_OK


def cmd_mask_sweep(args) -> int:
    pred = fileio.read_pfm(args.pred)
    gt = fileio.read_pfm(args.gt)
    U = UncertaintyField.from_array(fileio.read_pfm_array(args.uncertainty))
    curve = masking_sweep(pred, gt, U, args.fractions)
    print("fraction epe")
    for f, e in curve:
        print(f"{f:g} {e:.6f}")
    if args.json:
        fileio.write_json([{"fraction": f, "epe": e} for f, e in curve], args.json)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    problem = objectives.make_problem(args.loss, seed=args.seed)
    err = objectives.grad_check(problem, samples=args.samples, step=args.step, seed=args.seed)
    print(f"max_relative_error {err:.3e}")
    return EXIT_OK if err <= args.tol else EXIT_INVALID


def cmd_loss(args) -> int:
    d0 = fileio.read_pfm(args.init)
    gt = fileio.read_pfm(args.gt)
    aligned = [fileio.read_pfm(p) for p in args.aligned]
    logvar = UncertaintyField.from_array(fileio.read_pfm_array(args.logvar))
    breakdown = objectives.total_loss(d0, aligned, gt, logvar, gamma=args.gamma)
    text = json.dumps(breakdown.as_dict(), indent=2)
    print(text)
    if args.json:
        fileio.write_json(breakdown.as_dict(), args.json)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dualrefine", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="render a synthetic scene to a sample directory")
    g.add_argument("spec", nargs="?", help="scene spec JSON")
    g.add_argument("--random", type=int, metavar="SEED", help="use the stock random scene layout")
    g.add_argument("-o", "--outdir", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("refine", help="run the refinement loop")
    r.add_argument("--sample", help="sample directory written by gen")
    r.add_argument("--left")
    r.add_argument("--right")
    r.add_argument("--gt", help="ground-truth PFM for the EPE trace")
    r.add_argument("--cognition", help="COGFEAT1 feature file")
    r.add_argument("--config", help="JSON config")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")
    r.add_argument("-o", "--out", required=True, help="output directory")
    r.set_defaults(func=cmd_refine)

    a = sub.add_parser("align", help="scale-shift align d_next to d_prev")
    a.add_argument("d_next")
    a.add_argument("d_prev")
    a.add_argument("uncertainty")
    a.add_argument("-o", "--out", required=True)
    a.add_argument("--theta", type=float, default=DEFAULT_THETA)
    a.add_argument("--K", type=int, default=DEFAULT_K)
    a.set_defaults(func=cmd_align)

    e = sub.add_parser("eval", help="EPE / BP / D1 report")
    e.add_argument("pred")
    e.add_argument("gt")
    e.add_argument("--occ", help="occlusion mask PFM (nonzero = occluded)")
    e.add_argument("--bp", type=_floats, default=list(evalkit.DEFAULT_BP_THRESHOLDS))
    e.add_argument("--json", help="also write the report as JSON")
    e.set_defaults(func=cmd_eval)

    m = sub.add_parser("mask-sweep", help="EPE after masking the most uncertain pixels")
    m.add_argument("pred")
    m.add_argument("gt")
    m.add_argument("uncertainty")
    m.add_argument("--fractions", type=_floats, default=list(DEFAULT_FRACTIONS))
    m.add_argument("--json")
    m.set_defaults(func=cmd_mask_sweep)

    c = sub.add_parser("gradcheck", help="finite-difference check of a loss gradient")
    c.add_argument("loss", choices=objectives.LOSS_NAMES)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=100)
    c.add_argument("--step", type=float, default=1e-3)
    c.add_argument("--tol", type=float, default=1e-4)
    c.set_defaults(func=cmd_gradcheck)

    lo = sub.add_parser("loss", help="total training loss breakdown")
    lo.add_argument("init", help="initial disparity PFM")
    lo.add_argument("gt")
    lo.add_argument("--aligned", nargs="+", required=True, help="aligned iterates, in order")
    lo.add_argument("--logvar", required=True, help="log-variance PFM")
    lo.add_argument("--gamma", type=float, default=objectives.DEFAULT_GAMMA)
    lo.add_argument("--json")
    lo.set_defaults(func=cmd_loss)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"dualrefine: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DualRefineError, ValueError) as exc:
        print(f"dualrefine: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
