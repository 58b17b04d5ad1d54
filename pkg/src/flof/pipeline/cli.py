"""Command-line pipeline: scene generation, SDF assembly, matching,
error reporting, interpolation and the HTTP service.

Contract violations exit nonzero after printing one machine-readable JSON
error line on stderr. ``FLOF_THREADS`` caps the parallelism of the numeric
backends and of the service.
"""

import os

# Thread caps must land before the numeric stack is imported.
if os.environ.get("FLOF_THREADS"):
    _cap = os.environ["FLOF_THREADS"]
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _cap)

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .. import levelset
from ..flow import FlofParams
from ..registration import match_pair
from ..deformation import error_metric
from . import io, scenes
from .runtime import SpaceRuntime, render_png


class CliError(Exception):
    pass


def _fail(message):
    raise CliError(message)


def cmd_gen_scene(args):
    frames, info = scenes.gen_scene(
        args.scene, args.res, args.frames, offset=args.offset, seed=args.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        path = out / f"frame_{i:04d}.flof"
        io.write_volume(path, frame, io.KIND_SCALAR)
        paths.append(path.name)
    manifest = {
        "name": args.name or f"{args.scene}",
        "scene": args.scene,
        "r": list(args.offset),
        "frames": args.frames,
        "spatial_dims": [args.res, args.res],
        "kind": info["kind"],
        "files": paths,
        "seed": args.seed,
    }
    if "masses" in info:
        manifest["masses"] = info["masses"]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(json.dumps({"scene": args.scene, "frames": len(paths), "out": str(out)}))


def cmd_build_sdf(args):
    scene_dir = Path(args.in_dir)
    manifest_path = scene_dir / "manifest.json"
    if not manifest_path.exists():
        _fail(f"no manifest.json in {scene_dir}")
    scene = json.loads(manifest_path.read_text())
    frames = []
    for name in scene["files"]:
        arr, kind = io.read_volume(scene_dir / name)
        if kind != io.KIND_SCALAR:
            _fail(f"{name} is not a scalar volume")
        frames.append(np.asarray(arr, dtype=np.float64))

    smoke = scene["kind"] == "smoke-density"
    if smoke:
        level_sets = [levelset.iso_from_density(f, args.iso_fraction) for f in frames]
    else:
        level_sets = frames
    sdf = levelset.assemble_spacetime(
        level_sets,
        gamma_max=args.gamma,
        margin=args.margin,
        repeat_first=args.repeat_first,
    )

    # the data volume the deformations get applied to shares the SDF's grid
    if smoke:
        pad = [
            ((sdf.field.shape[ax] - frames[0].shape[ax]) // 2,) * 2
            for ax in range(frames[0].ndim)
        ]
        padded = [np.pad(f, pad, constant_values=0.0) for f in frames]
        stack = [padded[0]] * sdf.frames_repeated + padded
        data = np.stack(stack, axis=-1)
    else:
        data = sdf.field

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    sdf_path = stem.with_suffix(".sdf.flof")
    data_path = stem.with_suffix(".data.flof")
    io.write_volume(sdf_path, sdf.field, io.KIND_SCALAR)
    io.write_volume(data_path, data, io.KIND_SCALAR)

    masses = None
    density_max = None
    if smoke:
        stored = io.read_volume(data_path)[0]
        rep = sdf.frames_repeated
        masses = [
            float(stored[..., rep + i].sum(dtype=np.float64))
            for i in range(scene["frames"])
        ]
        density_max = float(stored.max())
    manifest = io.DatasetManifest(
        name=scene["name"],
        r=scene.get("r", [0.0]),
        frames=scene["frames"],
        spatial_dims=scene["spatial_dims"],
        kind=scene["kind"],
        volume=data_path.name,
        sdf_volume=sdf_path.name,
        frames_repeated=sdf.frames_repeated,
        margin=sdf.margin,
        gamma_max=sdf.gamma_max,
        masses=masses,
        density_max=density_max,
    )
    manifest.save(out)
    print(json.dumps({"dataset": str(out), "dims": list(sdf.field.shape)}))


def _load_params(path):
    if path is None:
        return FlofParams()
    return FlofParams.from_dict(json.loads(Path(path).read_text()))


def _load_sdf_volume(dataset_path):
    manifest = io.DatasetManifest.load(dataset_path)
    arr, kind = io.read_volume(manifest.resolve("sdf_volume", dataset_path))
    if kind != io.KIND_SCALAR:
        _fail(f"{manifest.sdf_volume} is not a scalar volume")
    return manifest, np.asarray(arr, dtype=np.float64)


def cmd_match(args):
    from ..grid import downsample

    params = _load_params(args.params)
    src_manifest, phi1 = _load_sdf_volume(args.src)
    dst_manifest, phi2 = _load_sdf_volume(args.dst)
    if phi1.shape != phi2.shape:
        _fail(f"volume dims differ: {phi1.shape} vs {phi2.shape}")
    data_dims = phi1.shape
    for _ in range(args.solve_levels):
        phi1 = downsample(phi1)
        phi2 = downsample(phi2)

    started = time.perf_counter()
    forward, backward = match_pair(phi1, phi2, params)
    elapsed = time.perf_counter() - started

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_volume(out / "forward.flof", forward.deformation.field, io.KIND_DEFORMATION)
    io.write_volume(out / "backward.flof", backward.deformation.field, io.KIND_DEFORMATION)
    report = {
        "src": src_manifest.name,
        "dst": dst_manifest.name,
        "data_dims": list(data_dims),
        "solve_dims": list(phi1.shape),
        "solve_levels": args.solve_levels,
        "params": params.to_dict(),
        "seconds": elapsed,
        "forward": {
            "error_initial": forward.error_initial,
            "error_final": forward.error_final,
            "level_trace": _trace_json(forward.level_trace),
        },
        "backward": {
            "error_initial": backward.error_initial,
            "error_final": backward.error_final,
            "level_trace": _trace_json(backward.level_trace),
        },
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(
        json.dumps(
            {
                "out": str(out),
                "error_initial": forward.error_initial,
                "error_final": forward.error_final,
            }
        )
    )


def _trace_json(trace):
    out = []
    for entry in trace:
        entry = dict(entry)
        entry["level"] = list(entry["level"])
        out.append(entry)
    return out


def cmd_error(args):
    a, kind_a = io.read_volume(args.a)
    b, kind_b = io.read_volume(args.b)
    if io.KIND_SCALAR not in (kind_a, kind_b) or kind_a != kind_b:
        _fail("error expects two scalar volumes")
    if a.shape != b.shape:
        _fail(f"volume dims differ: {a.shape} vs {b.shape}")
    print(f"{error_metric(a, b):.10g}")


def cmd_interp(args):
    rt = SpaceRuntime(args.space)
    weights = [float(w) for w in args.weights.split(",")]
    slab, report = rt.synthesize(
        weights, args.frame, mode=args.mode, filter_time=args.temporal_filter
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix.lower() == ".png":
        density_max = rt.manifests[0].density_max
        out.write_bytes(render_png(slab, rt.kind, density_max))
    else:
        io.write_volume(out, slab, io.KIND_SCALAR)
    print(json.dumps({"out": str(out), **report}))


def cmd_serve(args):
    from .server import serve

    serve(args.space, host=args.host, port=args.port, ui_dir=args.ui)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flof",
        description="Space-time registration and interpolation of simulation volumes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="write procedural test-scene frames")
    p.add_argument("--scene", required=True, choices=scenes.SCENES)
    p.add_argument("--res", type=int, default=64)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--out", required=True)
    p.add_argument("--offset", type=_pair, default=(0.0, 0.0), help="dx,dy scene shift")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default=None)
    p.set_defaults(func=cmd_gen_scene)

    p = sub.add_parser("build-sdf", help="assemble frames into a space-time SDF dataset")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--gamma", type=float, default=levelset.DEFAULT_GAMMA_MAX)
    p.add_argument("--margin", type=float, default=levelset.DEFAULT_MARGIN)
    p.add_argument("--repeat-first", type=int, default=levelset.DEFAULT_REPEAT_FIRST)
    p.add_argument("--iso-fraction", type=float, default=0.1)
    p.add_argument("--out", required=True, help="dataset manifest path (.json)")
    p.set_defaults(func=cmd_build_sdf)

    p = sub.add_parser("match", help="register two datasets in both directions")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--params", default=None, help="JSON file of parameter overrides")
    p.add_argument("--solve-levels", type=int, default=0, help="box halvings before solving")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("error", help="print the volumetric error metric of two volumes")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_error)

    p = sub.add_parser("interp", help="synthesize one interpolated slice")
    p.add_argument("--space", required=True)
    p.add_argument("--weights", required=True, help="parameter coordinates, comma separated")
    p.add_argument("--frame", type=float, required=True)
    p.add_argument("--mode", default="linear", choices=("linear", "union", "nearest"))
    p.add_argument("--temporal-filter", action="store_true")
    p.add_argument("--out", required=True, help=".flof volume or .png image")
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("serve", help="run the interpolation HTTP service")
    p.add_argument("--space", required=True)
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", default=None, help="directory of static explorer files")
    p.set_defaults(func=cmd_serve)
    return parser


def _pair(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected dx,dy")
    return tuple(parts)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CliError, ValueError, OSError, io.VolumeFormatError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
