"""Truncated signed-distance construction and space-time assembly.

A simulation sequence becomes one higher-dimensional implicit shape: per-frame
fields are padded with an empty margin, the first frame is repeated a few
times so it carries weight in the registration, the frames are stacked along
a trailing time axis, and the stack is redistanced in full N-dimensional
space with equal spatial and temporal cell spacing.
"""

from dataclasses import dataclass

import numpy as np

from .validation import as_scalar_field

DEFAULT_GAMMA_MAX = 40.0
DEFAULT_MARGIN = 0.10
DEFAULT_REPEAT_FIRST = 5


@dataclass(frozen=True)
class SpaceTimeSDF:
    """A truncated signed-distance volume over spatial axes plus time.

    ``field`` holds values in [-gamma_max, gamma_max]; negative is inside.
    ``frames_repeated`` leading time slabs duplicate the first input frame and
    ``margin`` is the empty boundary fraction added per spatial side.
    """

    field: np.ndarray
    gamma_max: float
    frames_repeated: int
    margin: float

    @property
    def dims(self):
        return self.field.shape

    @property
    def time_extent(self):
        return self.field.shape[-1]


def iso_from_density(density, level_fraction=0.1):
    """Level-set function of a density iso-surface: ``level - density``.

    The result is negative where the density exceeds ``level_fraction`` of
    its maximum (inside the smoke surface) and is ready for redistancing.
    """
    rho = as_scalar_field(density, "density")
    if rho.min() < 0:
        raise ValueError("density must be non-negative")
    if not 0 < level_fraction < 1:
        raise ValueError("level_fraction must lie in (0, 1)")
    peak = rho.max()
    if peak <= 0:
        raise ValueError("density is identically zero, no surface exists")
    levelset = level_fraction * peak - rho
    if levelset.max() <= 0:
        raise ValueError("density never drops below the iso level, no surface exists")
    return levelset


def _eikonal_step(dist, frozen, far):
    """One Jacobi pass of the first-order Godunov update for |grad d| = 1."""
    naxes = dist.ndim
    neighbor_min = np.empty(dist.shape + (naxes,), dtype=np.float64)
    for ax in range(naxes):
        lo = np.full_like(dist, far)
        hi = np.full_like(dist, far)
        src = [slice(None)] * naxes
        dst = [slice(None)] * naxes
        src[ax] = slice(0, -1)
        dst[ax] = slice(1, None)
        lo[tuple(dst)] = dist[tuple(src)]
        hi[tuple(src)] = dist[tuple(dst)]
        neighbor_min[..., ax] = np.minimum(lo, hi)
    a = np.sort(neighbor_min, axis=-1)
    # grow the update through the sorted neighbor values: with the k smallest
    # of them active, t solves sum_i (t - a_i)^2 = 1 and is valid while t > a_k
    t = a[..., 0] + 1.0
    s = a[..., 0].copy()
    q = a[..., 0] ** 2
    for k in range(1, naxes):
        ak = a[..., k]
        needs_more = t > ak
        if not needs_more.any():
            break
        s = s + ak
        q = q + ak**2
        m = k + 1.0
        disc = np.maximum(s * s - m * (q - 1.0), 0.0)
        t = np.where(needs_more, (s + np.sqrt(disc)) / m, t)
    updated = np.minimum(dist, t)
    return np.where(frozen, dist, updated)


def redistance(levelset, gamma_max=DEFAULT_GAMMA_MAX, tol=1e-3, max_iter=None):
    """Rebuild signed Euclidean distance from a level-set function.

    Zero crossings of the input are preserved to sub-cell accuracy: cells next
    to a sign change are frozen at their interpolated interface distance, then
    first-order Godunov upwind updates are relaxed to convergence and the
    result is clamped to ``[-gamma_max, gamma_max]``.
    """
    phi = as_scalar_field(levelset, "levelset")
    if gamma_max <= 0:
        raise ValueError("gamma_max must be positive")
    neg = phi < 0
    if neg.all() or (~neg).all():
        raise ValueError("level set has no zero crossing")

    naxes = phi.ndim
    far = 10.0 * gamma_max + max(phi.shape)
    # per-axis interface offsets from linear interpolation across sign changes;
    # a cell crossed along several axes combines them as 1/sqrt(sum 1/theta^2),
    # the first-order distance to the local interface plane
    theta_sq_inv = np.zeros(phi.shape + (naxes,), dtype=np.float64)
    for ax in range(naxes):
        lo = [slice(None)] * naxes
        hi = [slice(None)] * naxes
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        a, b = phi[lo], phi[hi]
        cross = (a < 0) != (b < 0)
        if not cross.any():
            continue
        theta = np.abs(a) / np.maximum(np.abs(a) + np.abs(b), 1e-300)
        theta = np.maximum(theta, 1e-9)
        inv_lo = np.where(cross, 1.0 / theta**2, 0.0)
        inv_hi = np.where(cross, 1.0 / (1.0 - theta + 1e-9) ** 2, 0.0)
        theta_sq_inv[lo + (ax,)] = np.maximum(theta_sq_inv[lo + (ax,)], inv_lo)
        theta_sq_inv[hi + (ax,)] = np.maximum(theta_sq_inv[hi + (ax,)], inv_hi)
    inv_total = theta_sq_inv.sum(axis=-1)
    frozen = (inv_total > 0.0) | (phi == 0.0)
    dist = np.full(phi.shape, gamma_max, dtype=np.float64)
    crossed = inv_total > 0.0
    dist[crossed] = 1.0 / np.sqrt(inv_total[crossed])
    dist[phi == 0.0] = 0.0

    if max_iter is None:
        max_iter = 2 * int(np.ceil(gamma_max)) + 16
    for _ in range(max_iter):
        new = _eikonal_step(dist, frozen, far)
        change = np.max(np.abs(new - dist))
        dist = new
        if change < tol:
            break
    return np.where(neg, -np.minimum(dist, gamma_max), np.minimum(dist, gamma_max))


def assemble_spacetime(
    frames,
    gamma_max=DEFAULT_GAMMA_MAX,
    margin=DEFAULT_MARGIN,
    repeat_first=DEFAULT_REPEAT_FIRST,
):
    """Stack per-frame level sets into one space-time SDF.

    Each frame is padded so ``margin`` of every spatial side is empty
    (positive distance), ``repeat_first`` copies of the first frame are
    prepended, and the stack is redistanced in full space-time before
    truncation at ``gamma_max``.
    """
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    arrs = [as_scalar_field(f, f"frame {i}") for i, f in enumerate(frames)]
    dims = arrs[0].shape
    for i, f in enumerate(arrs):
        if f.shape != dims:
            raise ValueError(f"frame {i} has dims {f.shape}, expected {dims}")
    if not 0 <= margin < 0.5:
        raise ValueError("margin must lie in [0, 0.5)")
    if repeat_first < 0:
        raise ValueError("repeat_first must be non-negative")

    pad = [(int(round(margin * n)),) * 2 for n in dims]
    padded = [np.pad(f, pad, constant_values=gamma_max) for f in arrs]
    stack = [padded[0]] * repeat_first + padded
    volume = np.stack(stack, axis=-1)
    volume = redistance(volume, gamma_max)
    field = np.clip(volume, -gamma_max, gamma_max)
    return SpaceTimeSDF(
        field=field,
        gamma_max=float(gamma_max),
        frames_repeated=int(repeat_first),
        margin=float(margin),
    )


def scale_for_flow(sdf):
    """Scale distance values for the flow solve: multiply by -0.2/gamma_max.

    The sign flip makes the inside positive; the truncation band maps to
    [-0.2, 0.2].
    """
    if isinstance(sdf, SpaceTimeSDF):
        return sdf.field * (-0.2 / sdf.gamma_max)
    raise TypeError("scale_for_flow expects a SpaceTimeSDF")


def extract_time_slice(volume, t):
    """Spatial slab at frame coordinate ``t`` of a space-time field.

    Integer ``t`` returns the stored slab; fractional ``t`` blends the two
    adjacent slabs linearly. Indexing stays lazy so memory-mapped volumes
    only load the slabs they need.
    """
    if isinstance(volume, SpaceTimeSDF):
        field = volume.field
    else:
        field = volume if hasattr(volume, "shape") else np.asarray(volume)
    t_max = field.shape[-1] - 1
    if not 0 <= t <= t_max:
        raise ValueError(f"frame {t} outside [0, {t_max}]")
    lo = int(np.floor(t))
    frac = t - lo
    if frac == 0:
        return np.array(field[..., lo])
    return (1.0 - frac) * np.asarray(field[..., lo]) + frac * np.asarray(field[..., lo + 1])
