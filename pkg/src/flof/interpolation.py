"""Runtime synthesis of in-betweens over 1D and 2D parameter spaces.

Sample simulations sit at parameter points connected by simplices (segments
or triangles). Each simplex carries a directed cycle of precomputed
deformations spanning all its sides, so a d-simplex needs only d+1 fields.
To synthesize a slice, the inputs are deformed along their (aligned) chains,
optionally combined through pointwise-minimum unions for liquid SDFs, and
blended with barycentric weights. Only the time slabs actually needed are
evaluated.
"""

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .validation import check_same_dims
from .deformation import advect_slab, align_velocity
from .levelset import extract_time_slice

MODES = ("linear", "union", "nearest")

KIND_LIQUID = "liquid-sdf"
KIND_SMOKE = "smoke-density"


class OutsideHullError(ValueError):
    """The requested parameter point lies outside every simplex."""


def barycentric(x_tilde, vertices):
    """Convex weights of a point with respect to a simplex's vertices.

    Solves the (n-1)x(n-1) system of the affine map; the last weight closes
    the partition of unity. Weights are returned even for points outside the
    simplex (some then negative) so the caller can decide.
    """
    x = np.atleast_1d(np.asarray(x_tilde, dtype=np.float64))
    verts = [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in vertices]
    n = len(verts)
    if n < 2:
        raise ValueError("a simplex needs at least two vertices")
    if any(v.shape != (n - 1,) for v in verts):
        raise ValueError(f"{n} vertices must have dimension {n - 1}")
    if x.shape != (n - 1,):
        raise ValueError(f"point has dimension {x.shape[0]}, expected {n - 1}")
    mat = np.stack([v - verts[-1] for v in verts[:-1]], axis=-1)
    det = np.linalg.det(mat)
    if abs(det) < 1e-12:
        raise ValueError("degenerate simplex: vertex matrix is singular")
    p = np.linalg.solve(mat, x - verts[-1])
    return np.append(p, 1.0 - p.sum())


def in_simplex(weights, tol=1e-9):
    return bool(np.min(weights) >= -tol)


def union_weights_1d(alpha):
    """Blend weights for two inputs and their union along a 1D parameter.

    ``w1 = clamp(1 - 2 alpha)``, ``w2 = clamp(2 alpha - 1)`` and the union
    takes the rest, so the midpoint shows the pure union.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    w1 = min(1.0, max(0.0, 1.0 - 2.0 * alpha))
    w2 = min(1.0, max(0.0, 2.0 * alpha - 1.0))
    return w1, 1.0 - w1 - w2, w2


# Union subdivision in reduced barycentric coordinates (the first d weights of
# the parent simplex). Data points are frozensets of vertex positions; union
# points sit at the centers of every face of dimension >= 1.
_SUBDIVISION = {
    1: {
        "points": {
            frozenset({0}): (1.0,),
            frozenset({0, 1}): (0.5,),
            frozenset({1}): (0.0,),
        },
        "cells": (
            (frozenset({0}), frozenset({0, 1})),
            (frozenset({0, 1}), frozenset({1})),
        ),
        "order": (frozenset({0}), frozenset({0, 1}), frozenset({1})),
    },
    2: {
        "points": {
            frozenset({0}): (1.0, 0.0),
            frozenset({1}): (0.0, 1.0),
            frozenset({2}): (0.0, 0.0),
            frozenset({0, 1}): (0.5, 0.5),
            frozenset({1, 2}): (0.0, 0.5),
            frozenset({0, 2}): (0.5, 0.0),
            frozenset({0, 1, 2}): (1.0 / 3.0, 1.0 / 3.0),
        },
        "cells": (
            (frozenset({0}), frozenset({0, 1}), frozenset({0, 2})),
            (frozenset({0, 1}), frozenset({1}), frozenset({1, 2})),
            (frozenset({0, 2}), frozenset({1, 2}), frozenset({2})),
            (frozenset({0, 1}), frozenset({1, 2}), frozenset({0, 1, 2})),
            (frozenset({1, 2}), frozenset({0, 2}), frozenset({0, 1, 2})),
            (frozenset({0, 2}), frozenset({0, 1}), frozenset({0, 1, 2})),
        ),
        "order": (
            frozenset({0}),
            frozenset({1}),
            frozenset({2}),
            frozenset({0, 1}),
            frozenset({1, 2}),
            frozenset({0, 2}),
            frozenset({0, 1, 2}),
        ),
    },
}


def union_point_labels(d):
    """Canonical data-point order for a d-simplex union subdivision."""
    return _SUBDIVISION[d]["order"]


def locate_union_point(weights, tol=1e-9):
    """Find the sub-simplex containing a barycentric point and its local weights.

    Returns ``(labels, local_weights)`` where each label is the frozenset of
    parent-vertex positions whose union forms the data point. Points that miss
    every sub-simplex by no more than a numerical tolerance are snapped to the
    closest one.
    """
    w = np.asarray(weights, dtype=np.float64)
    d = w.size - 1
    if d not in _SUBDIVISION:
        raise ValueError(f"union subdivision supports 1D and 2D simplices, got d={d}")
    table = _SUBDIVISION[d]
    x = w[:d]
    best = None
    for cell in table["cells"]:
        verts = [table["points"][label] for label in cell]
        local = barycentric(x, verts)
        lowest = float(local.min())
        if best is None or lowest > best[0]:
            best = (lowest, cell, local)
        if lowest >= -tol:
            break
    lowest, cell, local = best
    if lowest < -1e-6:
        raise ValueError(f"barycentric point {w} lies outside the subdivision")
    local = np.clip(local, 0.0, None)
    local /= local.sum()
    return cell, local


def smoke_normalize(deformed, original_mass):
    """Rescale a deformed density so its total matches the input's mass."""
    rho = np.asarray(deformed)
    if original_mass <= 0:
        raise ValueError("original_mass must be positive")
    total = float(np.asarray(rho, dtype=np.float64).sum())
    if total <= 0:
        raise ValueError("deformed density has no mass to normalize")
    scale = original_mass / total
    if scale == 1.0:
        return rho.copy()
    return rho * scale


def temporal_filter(slice_t, slice_t_next):
    """Union of two adjacent extracted time slices (pointwise minimum)."""
    a = np.asarray(slice_t)
    b = np.asarray(slice_t_next)
    check_same_dims(a, b, "slice_t", "slice_t_next")
    return np.minimum(a, b)


@dataclass
class SpaceSample:
    """One input data set: parameter point plus its space-time data volume."""

    r: np.ndarray
    name: str
    volume: np.ndarray
    kind: str = KIND_LIQUID
    frame_masses: np.ndarray | None = None

    def __post_init__(self):
        self.r = np.atleast_1d(np.asarray(self.r, dtype=np.float64))
        if self.kind not in (KIND_LIQUID, KIND_SMOKE):
            raise ValueError(f"unknown sample kind {self.kind!r}")

    def mass_at(self, t):
        if self.frame_masses is None:
            raise ValueError(f"sample {self.name!r} has no mass table")
        m = np.asarray(self.frame_masses, dtype=np.float64)
        return float(np.interp(t, np.arange(m.size), m))


@dataclass
class ParameterSpace:
    """Samples, simplices and the directed deformation edges covering them.

    Every d-simplex lists its vertices in chain order; the edges dict must
    contain the directed cycle ``v0 -> v1 -> ... -> vd -> v0`` for each, with
    deformation fields living on the data volumes' grid.
    """

    samples: list
    simplices: list
    edges: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        self.simplices = [tuple(int(i) for i in s) for s in self.simplices]
        self.validate()

    def validate(self):
        if not self.samples:
            raise ValueError("parameter space has no samples")
        dim = self.samples[0].r.size
        for s in self.samples:
            if s.r.size != dim:
                raise ValueError("all samples must share the parameter dimension")
        for simplex in self.simplices:
            if len(simplex) != dim + 1:
                raise ValueError(
                    f"simplex {simplex} has {len(simplex)} vertices, expected {dim + 1}"
                )
            verts = [self.samples[i].r for i in simplex]
            barycentric(verts[0], verts)  # raises on degeneracy
            for a, b in self._cycle_edges(simplex):
                if (a, b) not in self.edges:
                    raise ValueError(f"missing deformation for edge {a} -> {b}")

    @staticmethod
    def _cycle_edges(simplex):
        n = len(simplex)
        return [(simplex[i], simplex[(i + 1) % n]) for i in range(n)]

    def locate(self, x_tilde, tol=1e-9):
        """Containing simplex index plus barycentric weights, or raise."""
        x = np.atleast_1d(np.asarray(x_tilde, dtype=np.float64))
        best = None
        for idx, simplex in enumerate(self.simplices):
            verts = [self.samples[i].r for i in simplex]
            w = barycentric(x, verts)
            lowest = float(w.min())
            if best is None or lowest > best[0]:
                best = (lowest, idx, w)
            if lowest >= -tol:
                break
        lowest, idx, w = best
        if lowest < -tol:
            raise OutsideHullError(f"{x.tolist()} lies outside the parameter hull")
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        return idx, w


def _chain_for_vertex(space, simplex, weights, position):
    """Deformation fields and accumulation weights moving one input to x."""
    d = len(simplex) - 1
    if d == 1:
        other = 1 - position
        fields = [space.edges[(simplex[position], simplex[other])]]
        alphas = [max(0.0, 1.0 - weights[position])]
    else:
        k1 = (position + 1) % 3
        k2 = (position + 2) % 3
        fields = [
            space.edges[(simplex[position], simplex[k1])],
            space.edges[(simplex[k1], simplex[k2])],
        ]
        alphas = [
            max(0.0, 1.0 - weights[position]),
            max(0.0, 1.0 - weights[position] - weights[k1]),
        ]
    return fields, alphas


def _deformed_vertex_slab(space, simplex, weights, position, t):
    sample = space.samples[simplex[position]]
    fields, alphas = _chain_for_vertex(space, simplex, weights, position)
    if not any(alphas):
        return extract_time_slice(sample.volume, t)
    combined = align_velocity(fields, alphas)
    return advect_slab(sample.volume, combined, 1.0, t)


def _blend(parts):
    """Weighted sum of slabs; a lone unit weight passes its slab through."""
    parts = [(w, slab) for w, slab in parts if w > 0.0]
    if not parts:
        raise ValueError("no active blend weights")
    if len(parts) == 1 and parts[0][0] == 1.0:
        return parts[0][1]
    out = None
    for w, slab in parts:
        out = w * slab if out is None else out + w * slab
    return out


def interp_linear_1d(b1, b2, u12, u21, weights, t):
    """Two-input blend: deform each input toward the other and mix.

    Each input is advected with one minus its own weight, then the deformed
    slabs are combined with the barycentric weights.
    """
    x1, x2 = float(weights[0]), float(weights[1])
    parts = []
    if x1 > 0.0:
        s1 = extract_time_slice(b1, t) if x1 == 1.0 else advect_slab(b1, u12, 1.0 - x1, t)
        parts.append((x1, s1))
    if x2 > 0.0:
        s2 = extract_time_slice(b2, t) if x2 == 1.0 else advect_slab(b2, u21, 1.0 - x2, t)
        parts.append((x2, s2))
    return _blend(parts)


def interp_union(volumes, chain, weights, t):
    """Union blending of liquid SDF inputs over one simplex.

    ``chain`` is the directed cycle of deformations matching the vertex
    order. The point's sub-simplex selects at most three active data points
    (inputs and pointwise-minimum unions of the deformed inputs) which are
    blended with the local barycentric weights.
    """
    w = np.asarray(weights, dtype=np.float64)
    d = w.size - 1
    simplex = tuple(range(d + 1))
    edges = {}
    for i, (a, b) in enumerate(ParameterSpace._cycle_edges(simplex)):
        edges[(a, b)] = chain[i]
    space = _AdHocSpace(volumes, edges)
    labels, local = locate_union_point(w)
    slab, _ = _union_blend(space, simplex, w, labels, local, t)
    return slab


class _AdHocSpace:
    """Duck-typed stand-in so the union path can run without a full space."""

    def __init__(self, volumes, edges):
        self.samples = [SpaceSample(r=[0.0], name=f"b{i}", volume=v) for i, v in enumerate(volumes)]
        self.edges = edges


def _union_blend(space, simplex, weights, labels, local, t):
    slabs = {}

    def vertex_slab(position):
        if position not in slabs:
            slabs[position] = _deformed_vertex_slab(space, simplex, weights, position, t)
        return slabs[position]

    parts = []
    for label, lw in zip(labels, local):
        if lw <= 0.0:
            continue
        members = sorted(label)
        field = vertex_slab(members[0])
        for m in members[1:]:
            field = np.minimum(field, vertex_slab(m))
        parts.append((float(lw), field))
    return _blend(parts), slabs


def synthesize_slab(space, x_tilde, t, mode="linear"):
    """One interpolated spatial slab at parameters ``x_tilde`` and frame ``t``.

    Returns ``(slab, report)``; the report carries the active simplex, the
    data-point labels and their blend weights.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    simplex_idx, w = space.locate(x_tilde)
    simplex = space.simplices[simplex_idx]
    kinds = {space.samples[i].kind for i in simplex}
    if len(kinds) > 1:
        raise ValueError("cannot blend samples of different kinds")
    kind = kinds.pop()

    report = {"simplex": simplex_idx, "mode": mode}
    if mode == "nearest":
        position = int(np.argmax(w))
        slab = _deformed_vertex_slab(space, simplex, w, position, t)
        report["labels"] = [f"w{i + 1}" for i in range(len(simplex))]
        report["weights"] = [1.0 if k == position else 0.0 for k in range(len(simplex))]
        return slab, report

    if mode == "union":
        if kind != KIND_LIQUID:
            raise ValueError("union blending requires liquid SDF inputs")
        labels, local = locate_union_point(w)
        slab, _ = _union_blend(space, simplex, w, labels, local, t)
        order = union_point_labels(len(simplex) - 1)
        by_label = dict(zip(labels, local))
        report["labels"] = [_label_name(lbl) for lbl in order]
        report["weights"] = [float(by_label.get(lbl, 0.0)) for lbl in order]
        return slab, report

    parts = []
    for position in range(len(simplex)):
        wk = float(w[position])
        if wk <= 0.0:
            continue
        slab = _deformed_vertex_slab(space, simplex, w, position, t)
        if kind == KIND_SMOKE:
            sample = space.samples[simplex[position]]
            chain_active = any(_chain_for_vertex(space, simplex, w, position)[1])
            if chain_active:
                slab = smoke_normalize(slab, sample.mass_at(t))
        parts.append((wk, slab))
    report["labels"] = [f"w{i + 1}" for i in range(len(simplex))]
    report["weights"] = [float(v) for v in w]
    return _blend(parts), report


def _label_name(label):
    return "w" + "u".join(str(i + 1) for i in sorted(label))
