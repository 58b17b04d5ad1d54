"""Regularized optical flow on one resolution level.

Matching two scalar volumes under the value-transport assumption leads to a
linear system ``A u = b`` per solve, with

    A = G^T G + beta_s * L + beta_t * I,      b = -G^T (phi2 - phi1),

where ``G`` holds the discrete gradient of the target volume, ``L`` is the
(negative) Laplacian with the standard 2N+1 stencil, and the Tikhonov term
keeps the system positive definite. The deformation is pinned to zero at the
domain boundary, realized by masking boundary rows to identity with zero
right-hand side. The operator is applied matrix-free; a dense materialization
exists for tiny test instances only.
"""

from dataclasses import dataclass, asdict, fields

import numpy as np

from .validation import as_scalar_field, check_same_dims
from . import grid


@dataclass
class FlofParams:
    """Tuning constants of the full matching algorithm.

    Defaults are the recommended set: iteration caps ``l_max = k_max = 3``,
    coarsest-level threshold ``s_max = 10``, smoothness weight 1e-3, Tikhonov
    weight 1e-4, truncation ``gamma_max = 40`` with input scaling
    ``-0.2/gamma_max``, blur radii ``sigma_of = sigma_proj = 4``, projection
    band ``tau_proj = 4`` and a CG relative-residual threshold of 1e-2.
    """

    beta_s: float = 1e-3
    beta_t: float = 1e-4
    sigma_of: float = 4.0
    sigma_proj: float = 4.0
    tau_proj: float = 4.0
    s_max: int = 10
    l_max: int = 3
    k_max: int = 3
    gamma_max: float = 40.0
    beta_image: float | None = None
    cg_tol: float = 1e-2
    cg_max_iter: int = 600

    def __post_init__(self):
        if self.beta_image is None:
            self.beta_image = -0.2 / self.gamma_max
        for name in ("beta_s", "beta_t", "sigma_of", "sigma_proj", "tau_proj"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.s_max < 2:
            raise ValueError("s_max must be at least 2")
        for name in ("l_max", "k_max", "cg_max_iter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.gamma_max <= 0:
            raise ValueError("gamma_max must be positive")
        if self.cg_tol <= 0:
            raise ValueError("cg_tol must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameters: {sorted(unknown)}")
        return cls(**d)


class FlowSolveError(RuntimeError):
    pass


def _interior_mask(dims):
    mask = np.ones(dims, dtype=bool)
    for ax in range(len(dims)):
        face = [slice(None)] * len(dims)
        face[ax] = 0
        mask[tuple(face)] = False
        face[ax] = -1
        mask[tuple(face)] = False
    return mask


def _neighbor_sum(v):
    """Sum of the 2N axis neighbors per cell, zero beyond the boundary.

    ``v`` carries a trailing component axis.
    """
    out = np.zeros_like(v)
    for ax in range(v.ndim - 1):
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        out[lo] += v[hi]
        out[hi] += v[lo]
    return out


class FlowSystem:
    """Matrix-free application of ``A = G^T G + beta_s L + beta_t I``.

    Boundary cells are identity rows with zero right-hand side, and the
    stencil reads boundary values as zero, which keeps the operator symmetric
    and positive definite on the whole vector space.
    """

    def __init__(self, phi2_gradient, rhs, beta_s, beta_t):
        self.phi2_gradient = phi2_gradient
        self.rhs = rhs
        self.beta_s = float(beta_s)
        self.beta_t = float(beta_t)
        self.dims = phi2_gradient.shape[:-1]
        self.ncomp = phi2_gradient.shape[-1]
        self.interior = _interior_mask(self.dims)

    def apply(self, u):
        naxes = len(self.dims)
        v = u * self.interior[..., None]
        g = self.phi2_gradient
        out = g * (g * v).sum(axis=-1)[..., None]
        out += self.beta_s * (2.0 * naxes * v - _neighbor_sum(v))
        out += self.beta_t * v
        return np.where(self.interior[..., None], out, u)

    def diagonal(self):
        naxes = len(self.dims)
        d = self.phi2_gradient**2 + self.beta_s * 2.0 * naxes + self.beta_t
        return np.where(self.interior[..., None], d, 1.0)

    def materialize(self):
        """Dense matrix for oracle tests; guarded to tiny instances."""
        ncells = int(np.prod(self.dims))
        if ncells > 4**4:
            raise ValueError("dense materialization is limited to <= 256-cell systems")
        n = ncells * self.ncomp
        mat = np.empty((n, n), dtype=np.float64)
        basis = np.zeros(self.dims + (self.ncomp,), dtype=np.float64)
        flat = basis.reshape(-1)
        for j in range(n):
            flat[j] = 1.0
            mat[:, j] = self.apply(basis).reshape(-1)
            flat[j] = 0.0
        return mat


def assemble(phi1, phi2, params):
    """Build the flow system for one pair of already-scaled volumes."""
    f1 = as_scalar_field(phi1, "phi1")
    f2 = as_scalar_field(phi2, "phi2")
    check_same_dims(f1, f2, "phi1", "phi2")
    g = grid.gradient(f2)
    rhs = -g * (f2 - f1)[..., None]
    interior = _interior_mask(f1.shape)
    rhs *= interior[..., None]
    return FlowSystem(g, rhs, params.beta_s, params.beta_t)


@dataclass
class CGReport:
    residual: float
    iterations: int
    converged: bool


def solve_cg(system, params, callback=None):
    """Diagonally preconditioned conjugate gradient.

    Stops once the relative residual ``|b - A u| / |b|`` falls below
    ``params.cg_tol`` or after ``params.cg_max_iter`` iterations; hitting the
    cap is reported, not fatal. Returns ``(u, CGReport)``.
    """
    b = system.rhs
    b_norm = float(np.linalg.norm(b.reshape(-1)))
    x = np.zeros_like(b)
    if b_norm == 0.0:
        return x, CGReport(residual=0.0, iterations=0, converged=True)

    inv_diag = 1.0 / system.diagonal()
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(np.dot(r.reshape(-1), z.reshape(-1)))
    rel = 1.0
    iterations = 0
    for iterations in range(1, params.cg_max_iter + 1):
        ap = system.apply(p)
        p_ap = float(np.dot(p.reshape(-1), ap.reshape(-1)))
        if not np.isfinite(p_ap) or p_ap <= 0.0:
            raise FlowSolveError(
                f"conjugate gradient broke down at iteration {iterations}: p.Ap = {p_ap}"
            )
        alpha = rz / p_ap
        x += alpha * p
        r -= alpha * ap
        rel = float(np.linalg.norm(r.reshape(-1))) / b_norm
        if callback is not None:
            callback(iterations, x, rel)
        if rel <= params.cg_tol:
            break
        z = inv_diag * r
        rz_new = float(np.dot(r.reshape(-1), z.reshape(-1)))
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    if not np.all(np.isfinite(x)):
        raise FlowSolveError("conjugate gradient produced non-finite values")
    true_rel = float(np.linalg.norm((b - system.apply(x)).reshape(-1))) / b_norm
    return x, CGReport(residual=true_rel, iterations=iterations, converged=true_rel <= params.cg_tol)


def flow_single_level(phi1, phi2, sigma_of, params):
    """One flow solve: assemble, solve with CG, then smooth the solution.

    Inputs must already be scaled for the flow solve. The smoothed deformation
    is re-pinned to zero at the boundary.
    """
    system = assemble(phi1, phi2, params)
    u, _ = solve_cg(system, params)
    u = grid.gaussian_blur(u, sigma_of, vector=True)
    u *= system.interior[..., None]
    return u
