"""Command-line entry point: segmentation runs, metrics, benchmarks and
phantom generation."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .metrics import MetricsError, compute_report, dice
from .phantom import (
    SUITE_PARAMS,
    PhantomError,
    default_suite,
    generate_phantom,
    load_spec,
    spec_to_json,
    suite_spec,
    tube_seed,
)
from .postprocess import postprocess
from .preprocess import PreprocessConfig
from .solver import BlowupError, SeedError, SolverConfig, evolve
from .speed import DegenerateSpeedError, Model
from .volumes import BinaryMask, VolumeError, VoxelIndex, load_mask, load_volume, store_volume


def _log(msg):
    print(msg, file=sys.stderr)


@dataclass
class RunManifest:
    """Everything needed to reproduce a segmentation run."""

    input: str
    out: str
    model: str
    seed_left: tuple
    seed_right: tuple
    mu: float = 1.0
    eta: float = 0.25
    epsilon: float = 0.05
    p: int = 2
    sigma: float = 0.0
    dx: float = 0.1
    n_max: int = 400
    seed_radius_voxels: float = 5.0
    curvature_delta: float = 1e-8
    early_stop: str = "off"
    stagnation_window: int = 50
    hu_clip_threshold: float = 120.0
    tissue_interval: tuple = (5.0, 120.0)
    equalization_bins: int = 256
    postprocess: bool = False
    start_slice: int = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        doc = json.loads(text)
        doc["seed_left"] = tuple(doc["seed_left"])
        doc["seed_right"] = tuple(doc["seed_right"])
        doc["tissue_interval"] = tuple(doc["tissue_interval"])
        return cls(**doc)

    def solver_config(self, seed: VoxelIndex) -> SolverConfig:
        return SolverConfig(
            model=Model(self.model),
            mu=self.mu,
            eta=self.eta,
            epsilon=self.epsilon,
            p=self.p,
            sigma=self.sigma,
            dx=self.dx,
            n_max=self.n_max,
            seed=seed,
            seed_radius_voxels=self.seed_radius_voxels,
            curvature_delta=self.curvature_delta,
            early_stop=self.early_stop,
            stagnation_window=self.stagnation_window,
        )

    def preprocess_config(self) -> PreprocessConfig:
        return PreprocessConfig(
            hu_clip_threshold=self.hu_clip_threshold,
            tissue_interval=self.tissue_interval,
            sigma=self.sigma,
            equalization_bins=self.equalization_bins,
        )


def _parse_seed(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"seed must be x,y,z — got '{text}'")
    try:
        return tuple(int(p) for p in parts)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"seed must be integers x,y,z — got '{text}'") from e


def _parse_spacing(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"spacing must be sx,sy,sz — got '{text}'")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"spacing must be numbers — got '{text}'") from e


def _slice_contours(mask: BinaryMask):
    """(slice, i, j) rows for the 4-neighbor in-plane boundary of each slice."""
    m = mask.values
    rows = []
    for k in range(m.shape[2]):
        sl = m[:, :, k]
        if not sl.any():
            continue
        padded = np.pad(sl, 1, mode="constant")
        interior = (
            padded[2:, 1:-1] & padded[:-2, 1:-1] & padded[1:-1, 2:] & padded[1:-1, :-2]
        )
        for i, j in np.argwhere(sl & ~interior):
            rows.append((k, int(i), int(j)))
    return rows


def cmd_segment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        input=args.input,
        out=args.out,
        model=args.model,
        seed_left=args.seed_left,
        seed_right=args.seed_right,
        mu=args.mu,
        eta=args.eta,
        epsilon=args.epsilon,
        p=args.p,
        sigma=args.sigma,
        dx=args.dx,
        n_max=args.nmax,
        postprocess=args.postprocess,
        start_slice=args.start_slice,
    )
    raw = load_volume(args.input)
    if args.model == "gmfd2":
        _log(f"parabolic CFL: dt = 0.25*dx^2 = {0.25 * args.dx * args.dx}")

    timing = {"model": args.model, "n_max": args.nmax, "sides": {}}
    merged = np.zeros(raw.dims, dtype=bool)
    for side, coords in (("left", args.seed_left), ("right", args.seed_right)):
        seed = VoxelIndex(*coords)
        result = evolve(raw, manifest.solver_config(seed), manifest.preprocess_config())
        mask = result.mask
        if args.postprocess:
            start = args.start_slice if args.start_slice is not None else seed.k
            mask = postprocess(mask, seed, start_slice=start)
        store_volume(mask, out / f"{side}.mask.json")
        with open(out / f"{side}.contours.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["slice", "i", "j"])
            writer.writerows(_slice_contours(mask))
        merged |= mask.values
        timing["sides"][side] = {
            "iterations": result.iterations,
            "seconds": result.seconds,
            "dt": result.dt,
            "voxels": mask.count(),
        }
        _log(f"{side}: {result.iterations} iterations, {result.seconds:.2f}s, "
             f"dt={result.dt:.6g}, {mask.count()} voxels")
    store_volume(BinaryMask(merged, raw.spacing), out / "merged.mask.json")
    (out / "manifest.json").write_text(manifest.to_json())
    (out / "timing.json").write_text(json.dumps(timing, indent=2))
    return 0


def cmd_metrics(args) -> int:
    a = load_mask(args.mask_a)
    b = load_mask(args.mask_b)
    report = compute_report(a, b, args.spacing)
    print(report.to_json())
    return 0


def cmd_bench(args) -> int:
    specs = default_suite()
    if args.phantom:
        specs = [s for s in specs if s.name == args.phantom]
        if not specs:
            _log(f"unknown phantom '{args.phantom}'")
            return 1
    header = f"{'phantom':<8} {'model':<10} {'n_max':>6} {'iters':>6} {'wall_s':>8} {'dice_L':>7} {'dice_R':>7}"
    print(header)
    print("-" * len(header))
    for spec in specs:
        raw, truth_left, truth_right = generate_phantom(spec)
        params = SUITE_PARAMS[spec.name]
        for model in Model:
            # classical and gmfd1 share the first-order budget; the
            # parabolic time step needs its own, larger one
            n_max = (params["n_max_second_order"] if model is Model.GEODESIC2
                     else params["n_max"])
            dices = {}
            iters = wall = 0
            for side, truth in (("L", truth_left), ("R", truth_right)):
                seed = tube_seed(spec, "left" if side == "L" else "right")
                cfg = SolverConfig(model=model, seed=seed, n_max=n_max,
                                   sigma=params["sigma"])
                result = evolve(raw, cfg)
                dices[side] = dice(result.mask, truth)
                iters = result.iterations
                wall += result.seconds
            print(f"{spec.name:<8} {model.value:<10} {n_max:>6} {iters:>6} "
                  f"{wall:>8.2f} {dices['L']:>7.4f} {dices['R']:>7.4f}")
    return 0


def cmd_phantom(args) -> int:
    if args.spec:
        spec = load_spec(args.spec)
    else:
        spec = suite_spec(args.name)
    raw, truth_left, truth_right = generate_phantom(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store_volume(raw, out / "volume.json", dtype="f32")
    store_volume(truth_left, out / "truth_left.json")
    store_volume(truth_right, out / "truth_right.json")
    (out / "spec.json").write_text(spec_to_json(spec))
    _log(f"wrote phantom '{spec.name}' ({spec.dims[0]}x{spec.dims[1]}x{spec.dims[2]}) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levelseg",
                                     description="3D level-set muscle segmentation")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment both muscles from a volume")
    seg.add_argument("--input", required=True)
    seg.add_argument("--seed-left", required=True, type=_parse_seed)
    seg.add_argument("--seed-right", required=True, type=_parse_seed)
    seg.add_argument("--model", required=True, choices=[m.value for m in Model])
    seg.add_argument("--nmax", required=True, type=int)
    seg.add_argument("--p", type=int, default=2)
    seg.add_argument("--sigma", type=float, default=0.0)
    seg.add_argument("--mu", type=float, default=1.0)
    seg.add_argument("--eta", type=float, default=0.25)
    seg.add_argument("--epsilon", type=float, default=0.05)
    seg.add_argument("--dx", type=float, default=0.1)
    seg.add_argument("--out", required=True)
    seg.add_argument("--postprocess", action="store_true")
    seg.add_argument("--start-slice", type=int, default=None)
    seg.set_defaults(func=cmd_segment)

    met = sub.add_parser("metrics", help="compare two masks")
    met.add_argument("mask_a")
    met.add_argument("mask_b")
    met.add_argument("--spacing", type=_parse_spacing, default=None)
    met.set_defaults(func=cmd_metrics)

    ben = sub.add_parser("bench", help="run the model x phantom benchmark")
    ben.add_argument("--phantom", default=None,
                     help="restrict to one suite phantom (easy/medium/hard)")
    ben.set_defaults(func=cmd_bench)

    pha = sub.add_parser("phantom", help="generate a phantom volume")
    pha.add_argument("name", nargs="?", default="easy",
                     help="suite phantom name (ignored with --spec)")
    pha.add_argument("--spec", default=None, help="phantom spec JSON path")
    pha.add_argument("--out", required=True)
    pha.set_defaults(func=cmd_phantom)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VolumeError, PhantomError, SeedError, BlowupError,
            DegenerateSpeedError, MetricsError, ValueError) as e:
        _log(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
