"""Procedural desk-scale test scenes.

Every scene is a deterministic analytic construction: per-frame 2D level-set
fields (true distances where cheap, valid level sets otherwise; the assembly
redistances anyway) or density frames for the smoke path. An ``offset``
shifts the whole scene so parameter variants of the same setup can be
generated for matching.
"""

import numpy as np

SCENES = (
    "translating-circle",
    "falling-drop",
    "star",
    "quadrant-star",
    "gaussian-smoke",
)


def _grid2d(resolution):
    x = np.arange(resolution, dtype=np.float64)
    return np.meshgrid(x, x, indexing="ij")


def _circle(px, py, cx, cy, radius):
    return np.hypot(px - cx, py - cy) - radius


def _star(px, py, cx, cy, radius, points=5, amplitude=0.35):
    dx, dy = px - cx, py - cy
    rr = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    return rr - radius * (1.0 + amplitude * np.cos(points * theta))


def gen_scene(name, resolution, frames, offset=(0.0, 0.0), seed=0):
    """Generate a scene; returns ``(frames, info)``.

    ``frames`` is a list of 2D arrays (level sets, or densities for smoke);
    ``info`` carries ``kind`` and, for smoke, per-frame masses. Identical
    arguments always produce bit-identical output.
    """
    if resolution < 32:
        raise ValueError("resolution must be at least 32 cells per axis")
    if frames < 2:
        raise ValueError("need at least two frames")
    ox, oy = (float(offset[0]), float(offset[1])) if offset is not None else (0.0, 0.0)
    px, py = _grid2d(resolution)
    n = float(resolution)
    duration = float(frames - 1)

    if name == "translating-circle":
        radius = 0.15 * n
        speed = 0.75
        cx0, cy0 = 0.28 * n + ox, 0.5 * n + oy
        out = [_circle(px, py, cx0 + speed * t, cy0, radius) for t in range(frames)]
        return out, {"kind": "liquid-sdf"}

    if name == "star":
        radius = 0.14 * n
        speed = 0.75
        cx0, cy0 = 0.3 * n + ox, 0.5 * n + oy
        out = [_star(px, py, cx0 + speed * t, cy0, radius) for t in range(frames)]
        return out, {"kind": "liquid-sdf"}

    if name == "quadrant-star":
        radius = 0.12 * n
        cx, cy = 0.75 * n + ox, 0.25 * n + oy
        field = _star(px, py, cx, cy, radius)
        return [field.copy() for _ in range(frames)], {"kind": "liquid-sdf"}

    if name == "falling-drop":
        pool_h = 0.28 * n + oy
        radius = 0.11 * n
        cx = 0.5 * n + ox
        y0 = 0.82 * n + oy
        # constant-acceleration fall timed to impact ~40% into the sequence
        t_impact = 0.4 * duration
        g = 2.0 * (y0 - pool_h - radius) / t_impact**2
        out = []
        for t in range(frames):
            cy = y0 - 0.5 * g * min(t, duration) ** 2
            drop = _circle(px, py, cx, cy, radius)
            bump = 0.0
            if t > t_impact:
                dt = t - t_impact
                amp = 0.25 * radius * dt * np.exp(-dt / (0.15 * duration + 1.0))
                bump = amp * np.exp(-((px - cx) / (2.5 * radius)) ** 2)
            pool = py - (pool_h + bump)
            out.append(np.minimum(drop, pool))
        return out, {"kind": "liquid-sdf"}

    if name == "gaussian-smoke":
        rng = np.random.default_rng(seed)
        wobble = 0.015 * n * rng.standard_normal(2)
        sigma = 0.10 * n
        amp = 1.0
        out = []
        for t in range(frames):
            s = t / duration
            cx = 0.5 * n + ox + wobble[0] * np.sin(4.0 * np.pi * s)
            cy = 0.22 * n + oy + 0.5 * n * s + wobble[1] * np.sin(6.0 * np.pi * s)
            rho = amp * np.exp(-((px - cx) ** 2 + (py - cy) ** 2) / (2.0 * sigma**2))
            out.append(rho)
        masses = [float(np.asarray(f, dtype="<f4").sum(dtype=np.float64)) for f in out]
        return out, {"kind": "smoke-density", "masses": masses}

    raise ValueError(f"unknown scene {name!r}, expected one of {SCENES}")
