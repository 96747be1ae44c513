"""Link geometry, large-scale path loss, and alpha-mu power fading.

The alpha-mu family describes the squared envelope (power gain) of a
generalized fading channel through two shape parameters: alpha controls the
nonlinearity of the propagation medium and mu the number of multipath
clusters. It contains Rayleigh (alpha=2, mu=1), Nakagami-m (alpha=2, mu=m)
and Weibull (mu=1) power fading as special cases.

With W ~ Gamma(mu, 1), the power gain

    Y = beta * W**(2/alpha),   beta = mean_power * Gamma(mu) / Gamma(mu + 2/alpha)

has density

    f(y) = alpha * y**(alpha*mu/2 - 1) / (2 * beta**(alpha*mu/2) * Gamma(mu))
           * exp(-(y / beta)**(alpha/2))

and mean `mean_power`, which is the exact sampling route used here. The CDF
is the regularized lower incomplete gamma P(mu, (y/beta)**(alpha/2)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator


class DegenerateGeometryError(ValueError):
    """Raised when the two endpoints of a link coincide."""


@dataclass(frozen=True)
class Position3D:
    """A point in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError("coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Position3D") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


@dataclass(frozen=True)
class LinkGeometry:
    """A propagation link between two distinct positions."""

    endpoint_a: Position3D
    endpoint_b: Position3D
    path_loss_exponent: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.path_loss_exponent) or self.path_loss_exponent < 0:
            raise ValueError("path loss exponent must be finite and >= 0")
        if self.endpoint_a.distance_to(self.endpoint_b) == 0.0:
            raise DegenerateGeometryError("link endpoints coincide")

    @property
    def distance(self) -> float:
        return self.endpoint_a.distance_to(self.endpoint_b)


def path_gain(geometry: LinkGeometry) -> float:
    """Large-scale power gain D**(-exponent) of a link (linear, unitless)."""
    return geometry.distance ** (-geometry.path_loss_exponent)


@dataclass(frozen=True)
class AlphaMuParams:
    """Shape (alpha, mu) and mean power of an alpha-mu power-gain law."""

    alpha: float
    mu: float
    mean_power: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be finite and > 0")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError("mu must be finite and > 0")
        if not (math.isfinite(self.mean_power) and self.mean_power > 0):
            raise ValueError("mean_power must be finite and > 0")

    @property
    def beta(self) -> float:
        """Scale parameter fixing E[Y] = mean_power."""
        return self.mean_power * math.exp(
            math.lgamma(self.mu) - math.lgamma(self.mu + 2.0 / self.alpha)
        )


def alpha_mu_sample(
    params: AlphaMuParams, rng: Generator, size: int | tuple[int, ...] | None = None
) -> np.ndarray | float:
    """Draw power gains exactly via the gamma representation.

    Args:
        params: distribution parameters.
        rng: numpy Generator; consumed draws equal `size`.
        size: numpy-style output shape (None gives a scalar).
    """
    w = rng.gamma(shape=params.mu, scale=1.0, size=size)
    return params.beta * w ** (2.0 / params.alpha)


def alpha_mu_cdf(params: AlphaMuParams, gamma_value) -> np.ndarray | float:
    """CDF of the power gain, P(mu, (y/beta)**(alpha/2)). Vectorized in y."""
    arr = np.asarray(gamma_value, dtype=float)
    if np.any(arr < 0):
        raise ValueError("power gain must be >= 0")
    half = params.alpha / 2.0
    x = (arr / params.beta) ** half
    out = np.empty(arr.shape, dtype=float)
    flat_x = np.atleast_1d(x)
    flat_out = np.atleast_1d(out)
    for i, xi in enumerate(flat_x.ravel()):
        flat_out.ravel()[i] = regularized_lower_gamma(params.mu, float(xi))
    if np.isscalar(gamma_value) or arr.ndim == 0:
        return float(np.atleast_1d(out).ravel()[0])
    return out


_MAX_ITER = 600


def regularized_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) to ~1e-12 absolute.

    Power series for x < a + 1, Lentz continued fraction for the upper
    tail otherwise; the switch point balances the convergence rates of
    the two expansions.
    """
    if not (math.isfinite(a) and a > 0):
        raise ValueError("shape parameter must be > 0")
    if not (math.isfinite(x) and x >= 0):
        raise ValueError("argument must be finite and >= 0")
    if x == 0.0:
        return 0.0
    log_prefactor = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(_MAX_ITER):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        else:
            raise ArithmeticError("incomplete gamma series did not converge")
        return min(1.0, math.exp(log_prefactor) * total)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return max(0.0, 1.0 - math.exp(log_prefactor) * h)
