"""Full registration driver: hierarchy, residual iterations, projection.

One call matches two space-time SDF volumes. The solve recurses to coarser
grids first, upsamples the coarse deformation, then runs up to ``l_max``
residual flow solves on the warped source, accepting a step only if the
volumetric error metric does not get worse and shrinking the blur kernel by
3/4 after each accepted step. At the finest level only, up to ``k_max``
surface-projection passes snap the result onto the target, with the
projection blur annealed the same way.
"""

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import grid
from .deformation import Deformation, advect, align_velocity, error_metric, project_surface
from .flow import FlofParams, flow_single_level
from .levelset import SpaceTimeSDF
from .validation import as_scalar_field, check_same_dims, check_fitted


@dataclass
class MatchResult:
    """Outcome of one directed match.

    The deformation maps the first volume onto the second in unscaled cell
    units at full input resolution. ``level_trace`` logs every flow iteration
    (accepted or rejected) and every projection pass per hierarchy level.
    """

    deformation: Deformation
    error_initial: float
    error_final: float
    level_trace: list = dataclass_field(default_factory=list)


def _as_volume(phi):
    if isinstance(phi, SpaceTimeSDF):
        return phi.field
    return as_scalar_field(phi)


def _flof_level(phi1, phi2, u, params, trace, is_finest, projection):
    dims = phi1.shape
    if min(dims) >= 2 * params.s_max:
        coarse1 = grid.downsample(phi1)
        coarse2 = grid.downsample(phi2)
        coarse_u = grid.downsample_vector(u)
        coarse_u = _flof_level(
            coarse1, coarse2, coarse_u, params, trace, is_finest=False, projection=projection
        )
        u = u + grid.upsample(coarse_u, target_dims=dims)

    scale = params.beta_image
    phi2_scaled = scale * phi2
    sigma_of = params.sigma_of
    error_current = error_metric(advect(phi1, u), phi2)
    for iteration in range(1, params.l_max + 1):
        warped = advect(phi1, u)
        increment = flow_single_level(scale * warped, phi2_scaled, sigma_of, params)
        candidate = align_velocity([u, increment])
        error_candidate = error_metric(advect(phi1, candidate), phi2)
        accepted = error_candidate <= error_current
        trace.append(
            {
                "level": dims,
                "stage": "flow",
                "iteration": iteration,
                "sigma_of": sigma_of,
                "error_before": error_current,
                "error_candidate": error_candidate,
                "accepted": accepted,
            }
        )
        if not accepted:
            break
        u = candidate
        error_current = error_candidate
        sigma_of = 0.75 * sigma_of

    if is_finest and projection:
        sigma_proj = params.sigma_proj
        for iteration in range(1, params.k_max + 1):
            u = u + project_surface(phi1, phi2, u, sigma_proj, params.tau_proj)
            error_current = error_metric(advect(phi1, u), phi2)
            trace.append(
                {
                    "level": dims,
                    "stage": "project",
                    "iteration": iteration,
                    "sigma_proj": sigma_proj,
                    "error_after": error_current,
                }
            )
            sigma_proj = 0.75 * sigma_proj
    return u


def flof(phi1, phi2, params=None, projection=True):
    """Match two space-time SDF volumes; returns the deformation and its trace.

    Both inputs are unscaled distance volumes on the same grid. Flow solves
    internally consume inputs scaled by ``beta_image``; the error metric and
    the projection operate on the raw distances.
    """
    f1 = _as_volume(phi1)
    f2 = _as_volume(phi2)
    check_same_dims(f1, f2, "phi1", "phi2")
    if params is None:
        params = FlofParams()

    trace = []
    u0 = np.zeros(f1.shape + (f1.ndim,), dtype=np.float64)
    error_initial = error_metric(f1, f2)
    u = _flof_level(f1, f2, u0, params, trace, is_finest=True, projection=projection)
    error_final = error_metric(advect(f1, u), f2)
    return MatchResult(
        deformation=Deformation(u, source_dims=f1.shape, target_dims=f2.shape),
        error_initial=error_initial,
        error_final=error_final,
        level_trace=trace,
    )


def match_pair(phi1, phi2, params=None):
    """Run the match in both directions; the two results are independent."""
    forward = flof(phi1, phi2, params)
    backward = flof(phi2, phi1, params)
    return forward, backward


class FlofMatcher:
    """Estimator interface around :func:`flof`.

    Parameters mirror :class:`FlofParams`; ``fit(phi1, phi2)`` computes the
    deformation mapping the first volume onto the second, ``transform``
    applies it to a field on the same grid (upsampling the stored deformation
    when the field is at a higher resolution).
    """

    def __init__(
        self,
        beta_s=1e-3,
        beta_t=1e-4,
        sigma_of=4.0,
        sigma_proj=4.0,
        tau_proj=4.0,
        s_max=10,
        l_max=3,
        k_max=3,
        gamma_max=40.0,
        beta_image=None,
        cg_tol=1e-2,
        cg_max_iter=600,
        projection=True,
    ):
        self.beta_s = beta_s
        self.beta_t = beta_t
        self.sigma_of = sigma_of
        self.sigma_proj = sigma_proj
        self.tau_proj = tau_proj
        self.s_max = s_max
        self.l_max = l_max
        self.k_max = k_max
        self.gamma_max = gamma_max
        self.beta_image = beta_image
        self.cg_tol = cg_tol
        self.cg_max_iter = cg_max_iter
        self.projection = projection
        self.deformation_ = None

    _param_names = (
        "beta_s",
        "beta_t",
        "sigma_of",
        "sigma_proj",
        "tau_proj",
        "s_max",
        "l_max",
        "k_max",
        "gamma_max",
        "beta_image",
        "cg_tol",
        "cg_max_iter",
        "projection",
    )

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **updates):
        for name, value in updates.items():
            if name not in self._param_names:
                raise ValueError(f"unknown parameter {name!r} for FlofMatcher")
            setattr(self, name, value)
        return self

    def _flof_params(self):
        kwargs = {k: v for k, v in self.get_params().items() if k != "projection"}
        return FlofParams(**kwargs)

    def fit(self, phi1, phi2):
        result = flof(phi1, phi2, self._flof_params(), projection=self.projection)
        self.deformation_ = result.deformation
        self.error_initial_ = result.error_initial
        self.error_final_ = result.error_final
        self.level_trace_ = result.level_trace
        return self

    def transform(self, field, alpha=1.0):
        check_fitted(self, "deformation_")
        arr = np.asarray(field)
        u = self.deformation_.field
        while u.shape[:-1] != arr.shape:
            if any(c > f for c, f in zip(u.shape[:-1], arr.shape)):
                raise ValueError(
                    f"field dims {arr.shape} are below the deformation grid {u.shape[:-1]}"
                )
            target = tuple(
                min(f, 2 * c) for f, c in zip(arr.shape, u.shape[:-1])
            )
            u = grid.upsample(u, target_dims=target)
        return advect(arr, u, alpha)

    def fit_transform(self, phi1, phi2, alpha=1.0):
        return self.fit(phi1, phi2).transform(np.asarray(_as_volume(phi1)), alpha)
