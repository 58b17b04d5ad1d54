"""Dense N-dimensional grid numerics: sampling, stencils, filtering, resampling.

All other modules build on these few operations. Conventions:

- a scalar field is an ndarray with one value per cell,
- a vector field carries one trailing component axis of length ``ndim``,
- cell size is 1 in every axis (time included), so displacements are in cells,
- samples live at cell centers; integer coordinate ``i`` is the center of cell ``i``.
"""

import math

import numpy as np
from scipy import ndimage

from .validation import as_scalar_field, as_vector_field


def cell_positions(dims):
    """Cell-center coordinates as an array of shape dims + (len(dims),)."""
    grids = np.meshgrid(*[np.arange(n, dtype=np.float64) for n in dims], indexing="ij")
    return np.stack(grids, axis=-1)


def sample_linear(field, pos, vector=False):
    """Multilinear interpolation at fractional cell coordinates.

    ``pos`` is one coordinate vector or an (npts, naxes) batch. Positions
    outside the grid are clamped to the boundary sample, which makes the
    operation total. With ``vector=True`` the trailing axis of ``field`` is
    treated as components and each is interpolated independently.
    """
    f = np.asarray(field)
    naxes = f.ndim - 1 if vector else f.ndim
    p = np.asarray(pos, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[-1] != naxes:
        raise ValueError(f"positions have {p.shape[-1]} coordinates, grid has {naxes} axes")
    if not np.all(np.isfinite(p)):
        raise ValueError("sample positions must be finite")
    upper = np.asarray(f.shape[:naxes], dtype=np.float64) - 1.0
    coords = np.clip(p, 0.0, upper).T
    if vector:
        out = np.stack(
            [
                ndimage.map_coordinates(f[..., c], coords, order=1, mode="nearest")
                for c in range(f.shape[-1])
            ],
            axis=-1,
        )
    else:
        out = ndimage.map_coordinates(f, coords, order=1, mode="nearest")
    return out[0] if single else out


def gradient(field):
    """Per-axis first derivatives: central differences in the interior,
    one-sided at the domain faces. Exact for affine fields."""
    f = as_scalar_field(field)
    if min(f.shape) < 2:
        raise ValueError(f"gradient needs every axis extent >= 2, got dims {f.shape}")
    parts = np.gradient(f, edge_order=1)
    if f.ndim == 1:
        parts = [parts]
    return np.stack(parts, axis=-1)


def gaussian_kernel(sigma):
    """Unit-sum 1D Gaussian, truncated at radius ceil(3 sigma)."""
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(field, sigma, vector=False):
    """Separable Gaussian filter of radius ceil(3 sigma).

    Near the domain faces the kernel is renormalized over the in-domain taps,
    so constants are preserved exactly. ``sigma=0`` returns a copy of the
    input. Vector fields are blurred per component.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    f = as_vector_field(field) if vector else as_scalar_field(field)
    if sigma == 0:
        return f.copy()
    kernel = gaussian_kernel(sigma)
    naxes = f.ndim - 1 if vector else f.ndim
    out = f.copy()
    norm = np.ones(f.shape[:naxes], dtype=np.float64)
    for ax in range(naxes):
        out = ndimage.correlate1d(out, kernel, axis=ax, mode="constant", cval=0.0)
        norm = ndimage.correlate1d(norm, kernel, axis=ax, mode="constant", cval=0.0)
    return out / (norm[..., None] if vector else norm)


def _halve_axis(a, axis):
    """Average adjacent pairs along one axis; an odd tail cell stays as is."""
    n = a.shape[axis]
    starts = np.arange(0, n, 2)
    summed = np.add.reduceat(a, starts, axis=axis)
    counts = np.diff(np.append(starts, n)).astype(np.float64)
    shape = [1] * a.ndim
    shape[axis] = counts.size
    return summed / counts.reshape(shape)


def downsample(field):
    """Box-average each axis down to ceil(n/2) cells."""
    f = as_scalar_field(field)
    if min(f.shape) < 2:
        raise ValueError(f"downsample needs every axis extent >= 2, got dims {f.shape}")
    out = f
    for ax in range(f.ndim):
        out = _halve_axis(out, ax)
    return out


def downsample_vector(u):
    """Box-average a vector field and halve its components.

    Displacements are measured in cells; a coarse cell is twice as large, so
    the same physical displacement is half as many coarse cells.
    """
    v = as_vector_field(u)
    if min(v.shape[:-1]) < 2:
        raise ValueError(f"downsample needs every axis extent >= 2, got dims {v.shape[:-1]}")
    out = v
    for ax in range(v.ndim - 1):
        out = _halve_axis(out, ax)
    return 0.5 * out


def upsample(defo, target_dims=None):
    """Double each axis of a deformation by multilinear interpolation and
    scale the components by 2 (cells shrink by half).

    ``target_dims`` pins the exact fine extents; axis ``i`` must be ``2n`` or
    ``2n - 1`` for a coarse extent ``n``, which inverts the ceil-halving of
    :func:`downsample`.
    """
    v = as_vector_field(defo)
    coarse = v.shape[:-1]
    if target_dims is None:
        target_dims = tuple(2 * n for n in coarse)
    target_dims = tuple(int(n) for n in target_dims)
    if len(target_dims) != len(coarse):
        raise ValueError("target_dims rank does not match the deformation")
    for nf, nc in zip(target_dims, coarse):
        if nf not in (2 * nc, 2 * nc - 1):
            raise ValueError(
                f"target extent {nf} is not reachable by doubling a coarse extent {nc}"
            )
    # fine cell i sits at coarse coordinate (i + 0.5)/2 - 0.5
    axes = [(np.arange(n, dtype=np.float64) + 0.5) / 2.0 - 0.5 for n in target_dims]
    mesh = np.meshgrid(*axes, indexing="ij")
    pos = np.stack([m.ravel() for m in mesh], axis=-1)
    fine = sample_linear(v, pos, vector=True)
    return 2.0 * fine.reshape(target_dims + (v.shape[-1],))
