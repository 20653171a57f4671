"""Derivative-based global sensitivity measures.

For each input the estimator averages, over a Monte Carlo sample of the input
space, the absolute partial derivative (``mu``), its square (``nu``), and its
log magnitude (``l``). All three are computed from one shared derivative
sample so that the chain ``exp(l) <= mu <= sqrt(nu)`` holds per sample set
(Jensen / Cauchy-Schwarz) up to machine rounding. A group variant averages
the log of the directional derivative along a common perturbation of all
group members.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import (DEFAULT_FD_STEP, Model, fd_directional_batch,
                    fd_gradient_batch, sample_inputs)

__all__ = ["DerivMeasures", "GroupLogDerivative", "estimate_deriv_measures",
           "estimate_group_l", "GRAD_FLOOR"]

# hard lower floor for log-derivative magnitudes; the effective floor per
# sample is the finite-difference resolution eps*|g(x)|/h, so a measured zero
# contributes the log of the smallest derivative the scheme could have seen
# rather than an arbitrarily large negative outlier
GRAD_FLOOR = 1e-300


@dataclass(frozen=True)
class DerivMeasures:
    mu: np.ndarray                        # E[|dg/dx_i|]
    nu: np.ndarray                        # E[(dg/dx_i)^2]
    l: np.ndarray                         # E[ln|dg/dx_i|], -inf if all floored
    zero_derivative_fraction: np.ndarray  # share of samples at/below the floor
    n_samples: int
    h: float

    @property
    def dim(self) -> int:
        return self.mu.size


def estimate_deriv_measures(model: Model, n: int, h: float = DEFAULT_FD_STEP,
                            rng: np.random.Generator | None = None) -> DerivMeasures:
    """Monte Carlo estimate of mu_i, nu_i, l_i over ``n`` input draws.

    Costs (d+1) * n model evaluations via forward differences. Samples with
    non-finite gradient entries are dropped per coordinate.
    """
    if n < 10:
        raise ConfigurationError(f"derivative estimation needs n >= 10, got {n}")
    if rng is None:
        raise ConfigurationError("an explicit rng stream is required")
    x = sample_inputs(model, n, rng)
    grad, resolution = fd_gradient_batch(model, x, h, return_resolution=True)
    floor = np.maximum(resolution, GRAD_FLOOR)

    d = model.dim
    mu = np.empty(d)
    nu = np.empty(d)
    l = np.empty(d)
    zfrac = np.empty(d)
    for i in range(d):
        col = np.abs(grad[:, i])
        keep = np.isfinite(col)
        col = col[keep]
        if col.size == 0:
            mu[i] = nu[i] = np.nan
            l[i] = np.nan
            zfrac[i] = np.nan
            continue
        mu[i] = col.mean()
        nu[i] = (col * col).mean()
        col_floor = floor[keep]
        floored = col <= col_floor
        zfrac[i] = floored.mean()
        if floored.all():
            l[i] = -np.inf
        else:
            l[i] = np.log(np.maximum(col, col_floor)).mean()
    return DerivMeasures(mu=mu, nu=nu, l=l, zero_derivative_fraction=zfrac,
                         n_samples=n, h=h)


@dataclass(frozen=True)
class GroupLogDerivative:
    group: tuple[int, ...]
    l: float
    zero_derivative_fraction: float
    n_samples: int
    h: float


def estimate_group_l(model: Model, group: tuple[int, ...], n: int,
                     h: float = DEFAULT_FD_STEP,
                     rng: np.random.Generator | None = None) -> GroupLogDerivative:
    """E[ln|dg/dz|] for a variable group, with dg/dz the directional
    derivative along the common perturbation of all group members
    (the sum of the group's partials)."""
    group = tuple(group)
    if not group or len(set(group)) != len(group):
        raise ConfigurationError(f"group must be non-empty with distinct indices, got {group}")
    if any(not 0 <= i < model.dim for i in group):
        raise ConfigurationError(f"group index out of range for dim {model.dim}: {group}")
    if n < 10:
        raise ConfigurationError(f"group derivative estimation needs n >= 10, got {n}")
    if rng is None:
        raise ConfigurationError("an explicit rng stream is required")

    x = sample_inputs(model, n, rng)
    deriv, resolution = fd_directional_batch(model, x, group, h,
                                             return_resolution=True)
    deriv = np.abs(deriv)
    keep = np.isfinite(deriv)
    deriv = deriv[keep]
    floor = np.maximum(resolution[keep], GRAD_FLOOR)
    floored = deriv <= floor
    l = -np.inf if floored.all() else float(np.log(np.maximum(deriv, floor)).mean())
    return GroupLogDerivative(group=group, l=l,
                              zero_derivative_fraction=float(floored.mean()),
                              n_samples=n, h=h)
