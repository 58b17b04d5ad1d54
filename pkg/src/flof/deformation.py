"""Applying, composing, refining and scoring Eulerian deformation fields.

Deformations are backward-lookup displacement fields in cell units: applying
``v`` to a field pulls each cell's value from ``x - v(x)``. Combining two such
fields is not additive; the earlier field has to be aligned (resampled) by the
later one first, because its vectors live where the content ends up, not where
it currently is.
"""

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .validation import as_scalar_field, as_vector_field, check_same_dims, check_grid_match
from . import grid


@dataclass
class Deformation:
    """A deformation field plus provenance: the grid dims of the matched pair.

    ``field`` may live on a coarser grid than the data it is applied to; it is
    then upsampled on application.
    """

    field: np.ndarray
    source_dims: tuple = dataclass_field(default=None)
    target_dims: tuple = dataclass_field(default=None)

    def __post_init__(self):
        self.field = as_vector_field(self.field)
        dims = self.field.shape[:-1]
        if self.source_dims is None:
            self.source_dims = dims
        if self.target_dims is None:
            self.target_dims = dims
        self.source_dims = tuple(self.source_dims)
        self.target_dims = tuple(self.target_dims)

    @property
    def dims(self):
        return self.field.shape[:-1]


def advect(a, v, alpha=1.0):
    """Semi-Lagrangian transport: ``a'(x) = a(x - alpha * v(x))``.

    Single first-order step, linear interpolation, clamped lookups outside the
    domain. ``alpha = 0`` or a zero field returns the input unchanged.
    """
    arr = np.asarray(a)
    vec = as_vector_field(v)
    check_grid_match(arr, vec)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0.0 or not vec.any():
        return arr.copy()
    pos = grid.cell_positions(arr.shape) - alpha * vec
    out = grid.sample_linear(arr, pos.reshape(-1, arr.ndim))
    return out.reshape(arr.shape).astype(arr.dtype, copy=False)


def advect_slab(volume, v, alpha, t):
    """Transport evaluated only for the time slab at frame coordinate ``t``.

    Equivalent to slicing ``advect(volume, v, alpha)`` at ``t`` but touches
    only the slabs the lookups actually reach. ``t`` may be fractional.
    """
    arr = volume if hasattr(volume, "shape") else np.asarray(volume)
    vec = as_vector_field(v)
    check_grid_match(arr, vec, "volume")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    t_max = arr.shape[-1] - 1
    if not 0 <= t <= t_max:
        raise ValueError(f"frame {t} outside [0, {t_max}]")
    spatial = arr.shape[:-1]
    pos = np.empty((int(np.prod(spatial)), arr.ndim), dtype=np.float64)
    pos[:, :-1] = grid.cell_positions(spatial).reshape(-1, len(spatial))
    pos[:, -1] = t
    if alpha != 0.0:
        pos -= alpha * grid.sample_linear(vec, pos, vector=True)
    np.clip(pos[:, -1], 0.0, t_max, out=pos[:, -1])
    lo = int(np.floor(pos[:, -1].min()))
    hi = min(int(np.floor(pos[:, -1].max())) + 1, t_max)
    window = np.asarray(arr[..., lo : hi + 1])
    pos[:, -1] -= lo
    out = grid.sample_linear(window, pos)
    return out.reshape(spatial).astype(arr.dtype, copy=False)


def align_velocity(deformations, alphas=None):
    """Collapse an ordered sequence of deformations into a single field.

    The fields are listed in application order. Each step resamples the
    combined field at ``x - u_i(x)`` (unscaled lookup) before accumulating
    ``alpha_i * u_i``; the scaling factors enter only in the accumulation.
    """
    if not deformations:
        raise ValueError("need at least one deformation")
    fields = [as_vector_field(u, f"deformation {i}") for i, u in enumerate(deformations)]
    dims = fields[0].shape
    for i, u in enumerate(fields):
        if u.shape != dims:
            raise ValueError(f"deformation {i} has shape {u.shape}, expected {dims}")
    if alphas is None:
        alphas = [1.0] * len(fields)
    if len(alphas) != len(fields):
        raise ValueError("alphas and deformations must have the same length")

    combined = alphas[0] * fields[0]
    positions = grid.cell_positions(dims[:-1])
    for alpha_i, u_i in zip(alphas[1:], fields[1:]):
        lookup = (positions - u_i).reshape(-1, len(dims) - 1)
        aligned = grid.sample_linear(combined, lookup, vector=True).reshape(dims)
        combined = alpha_i * u_i + aligned
    return combined


def error_metric(phi1, phi2):
    """Volume mismatch of two SDFs: per-cell penalty where the signs disagree.

    Agreeing signs contribute nothing; disagreeing cells contribute
    ``min(1, |s1 - s2|)`` so the metric stays sensitive to sub-cell shifts but
    caps at the cell volume. Zero counts as non-negative.
    """
    a = as_scalar_field(phi1, "phi1")
    b = as_scalar_field(phi2, "phi2")
    check_same_dims(a, b, "phi1", "phi2")
    disagree = (a >= 0) != (b >= 0)
    h = np.minimum(1.0, np.abs(a - b), where=disagree, out=np.zeros_like(a))
    return float(h.sum())


def _extrapolate_faded(delta, assigned, iterations):
    """Spread band values outward with Jacobi averaging, fading linearly to zero."""
    if iterations < 1:
        return delta
    delta = delta.copy()
    known = assigned.copy()
    naxes = delta.ndim - 1
    for k in range(1, iterations + 1):
        weights = known.astype(np.float64)
        summed = np.zeros_like(delta)
        counts = np.zeros(delta.shape[:-1], dtype=np.float64)
        masked = delta * weights[..., None]
        for ax in range(naxes):
            lo = [slice(None)] * naxes
            hi = [slice(None)] * naxes
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            lo, hi = tuple(lo), tuple(hi)
            summed[lo] += masked[hi]
            summed[hi] += masked[lo]
            counts[lo] += weights[hi]
            counts[hi] += weights[lo]
        front = ~known & (counts > 0)
        fade = 1.0 - k / float(iterations)
        if front.any():
            delta[front] = summed[front] / counts[front][..., None] * fade
            known |= front
    return delta


def project_surface(phi_src, phi_tgt, u, sigma_proj=4.0, tau_proj=4.0):
    """Per-cell snap of the deformed surface onto the target's iso-contours.

    For every cell whose current position ``p = x + u(x)`` lies within
    ``tau_proj`` of the target surface, a bracketed bisection marches from
    ``p`` along the target gradient (inverted inside) to the point where the
    target reaches the source cell's own iso-value, and records the required
    displacement. The band result is extrapolated outward for ``tau_proj``
    iterations with a linear fade and smoothed with ``sigma_proj``. The
    returned field is an update to be added to ``u`` by the caller.
    """
    src = as_scalar_field(phi_src, "phi_src")
    tgt = as_scalar_field(phi_tgt, "phi_tgt")
    check_same_dims(src, tgt, "phi_src", "phi_tgt")
    vec = as_vector_field(u)
    check_grid_match(src, vec)
    neg = tgt < 0
    if neg.all() or (~neg).all():
        raise ValueError("target has no zero crossing, cannot project onto its surface")

    naxes = src.ndim
    tgt_gradient = grid.gradient(tgt)
    positions = grid.cell_positions(src.shape).reshape(-1, naxes)
    p = positions + vec.reshape(-1, naxes)
    tgt_at_p = grid.sample_linear(tgt, p)
    band = np.abs(tgt_at_p) < tau_proj

    delta = np.zeros_like(vec).reshape(-1, naxes)
    assigned = np.zeros(src.size, dtype=bool)
    idx = np.nonzero(band)[0]
    if idx.size:
        pb = p[idx]
        iso = src.reshape(-1)[idx]
        normal = grid.sample_linear(tgt_gradient, pb, vector=True)
        length = np.linalg.norm(normal, axis=-1)
        ok = length > 1e-9
        idx, pb, iso, normal = idx[ok], pb[ok], iso[ok], normal[ok] / length[ok, None]
        f0 = tgt_at_p[idx] - iso
        direction = -np.sign(f0)[:, None] * normal
        live = f0 != 0.0

        # bracket by marching half-cell steps up to 2 * tau_proj along the ray
        step = 0.5
        nsteps = int(np.ceil(2.0 * tau_proj / step))
        s_lo = np.zeros(idx.size)
        s_hi = np.zeros(idx.size)
        f_lo = f0.copy()
        bracketed = ~live  # exact hits are a zero-length bracket
        active = live.copy()
        for i in range(1, nsteps + 1):
            if not active.any():
                break
            s = i * step
            rows = np.nonzero(active)[0]
            f = grid.sample_linear(tgt, pb[rows] + s * direction[rows]) - iso[rows]
            hit = np.sign(f) != np.sign(f_lo[rows])
            hit_rows = rows[hit]
            s_lo[hit_rows] = s - step
            s_hi[hit_rows] = s
            bracketed[hit_rows] = True
            active[hit_rows] = False
            f_lo[rows[~hit]] = f[~hit]

        rows = np.nonzero(bracketed & live)[0]
        if rows.size:
            lo = s_lo[rows]
            hi = s_hi[rows]
            f_at_lo = grid.sample_linear(tgt, pb[rows] + lo[:, None] * direction[rows]) - iso[rows]
            for _ in range(16):
                mid = 0.5 * (lo + hi)
                f_mid = grid.sample_linear(tgt, pb[rows] + mid[:, None] * direction[rows]) - iso[rows]
                same = np.sign(f_mid) == np.sign(f_at_lo)
                lo = np.where(same, mid, lo)
                f_at_lo = np.where(same, f_mid, f_at_lo)
                hi = np.where(same, hi, mid)
            s_star = 0.5 * (lo + hi)
            delta[idx[rows]] = s_star[:, None] * direction[rows]
        assigned[idx[bracketed]] = True

    delta = delta.reshape(vec.shape)
    delta = _extrapolate_faded(delta, assigned.reshape(src.shape), int(round(tau_proj)))
    return grid.gaussian_blur(delta, sigma_proj, vector=True)
