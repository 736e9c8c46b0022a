"""Angular priors on the target location and their information moments.

Two density families are supported (a mixture of disjoint uniform
intervals and a common-width Gaussian mixture) plus a point mass used by
the deterministic-angle benchmark. The moments ``xi0 ... xi3`` are the
steering-vector integrals that enter the Fisher information of the
received signal, and ``lam`` is the Fisher information carried by the
prior itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .ula import (
    HALF_DOMAIN,
    ArrayConfig,
    receive_derivative_norm2,
    steering,
    steering_derivative,
    steering_derivative_matrix,
    steering_matrix,
)

__all__ = [
    "MixtureUniform",
    "MixtureGaussian",
    "PointMass",
    "TargetDistribution",
    "DistributionMoments",
    "compute_moments",
]

_WEIGHT_TOL = 1e-12
# Gaussian quadrature windows extend this many sigmas around each mean.
_GAUSS_WINDOW = 5.0


def _check_weights(weights) -> tuple[float, ...]:
    w = tuple(float(v) for v in weights)
    if not w:
        raise ValueError("at least one mixture component is required")
    if any(v <= 0 for v in w):
        raise ValueError("mixture weights must be positive")
    if abs(sum(w) - 1.0) > _WEIGHT_TOL:
        raise ValueError("mixture weights must sum to 1")
    return w


@dataclass(frozen=True)
class MixtureUniform:
    """Mixture of uniform densities on disjoint angular intervals."""

    intervals: tuple[tuple[float, float], ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "weights", _check_weights(self.weights))
        if len(ivs) != len(self.weights):
            raise ValueError("one weight per interval is required")
        for lo, hi in ivs:
            if not lo < hi:
                raise ValueError("interval endpoints must satisfy lo < hi")
            if lo < -HALF_DOMAIN - 1e-12 or hi > HALF_DOMAIN + 1e-12:
                raise ValueError("interval outside [-pi/2, pi/2]")
        ordered = sorted(ivs)
        for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
            if lo < hi:
                raise ValueError("intervals must be pairwise disjoint")

    def _levels(self) -> np.ndarray:
        return np.array(
            [w / (hi - lo) for (lo, hi), w in zip(self.intervals, self.weights)]
        )

    def pdf(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        out = np.zeros_like(th)
        for (lo, hi), level in zip(self.intervals, self._levels()):
            out = out + np.where((th >= lo) & (th <= hi), level, 0.0)
        return float(out) if np.ndim(theta) == 0 else out

    def log_pdf_grad(self, theta: float) -> float:
        if self.pdf(float(theta)) <= 0.0:
            raise ValueError("log-density gradient undefined where the density is zero")
        # Piecewise-constant density: zero slope on interval interiors.
        return 0.0

    def sample(self, rng: np.random.Generator, size: int | None = None):
        n = 1 if size is None else int(size)
        ks = rng.choice(len(self.weights), size=n, p=self.weights)
        los = np.array([iv[0] for iv in self.intervals])
        his = np.array([iv[1] for iv in self.intervals])
        draws = los[ks] + (his[ks] - los[ks]) * rng.random(n)
        return float(draws[0]) if size is None else draws

    def quadrature_windows(self) -> list[tuple[float, float]]:
        return sorted(self.intervals)

    def prior_fisher(self, ramp_halfwidth: float = np.pi / 720,
                     ramp_floor: float = 1e-3) -> float:
        """Prior Fisher information with linear-ramp edge smoothing.

        The exact density has step edges whose squared score is not
        integrable, so each edge is replaced by a linear ramp of
        half-width ``ramp_halfwidth``; the ramp itself still produces a
        logarithmically divergent score integral at its foot, so the
        closed-form edge contribution ``slope * log(level / floor)`` is
        cut off at ``ramp_floor`` times the interval density level. Both
        knobs are reporting conventions only; the solvers never use this
        value.
        """
        if not ramp_halfwidth > 0 or not 0 < ramp_floor < 1:
            raise ValueError("ramp parameters out of range")
        total = 0.0
        for level in self._levels():
            slope = level / (2.0 * ramp_halfwidth)
            total += 2.0 * slope * np.log(1.0 / ramp_floor)
        return total


@dataclass(frozen=True)
class MixtureGaussian:
    """Gaussian mixture with per-component means and one shared sigma."""

    means: tuple[float, ...]
    sigma: float
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "weights", _check_weights(self.weights))
        if len(self.means) != len(self.weights):
            raise ValueError("one weight per mean is required")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for m in self.means:
            if m < -HALF_DOMAIN or m > HALF_DOMAIN:
                raise ValueError("component mean outside [-pi/2, pi/2]")

    def pdf(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        z = (th[..., None] - np.array(self.means)) / self.sigma
        dens = np.exp(-0.5 * z**2) / (np.sqrt(2.0 * np.pi) * self.sigma)
        out = dens @ np.array(self.weights)
        return float(out) if np.ndim(theta) == 0 else out

    def log_pdf_grad(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        means = np.array(self.means)
        ll = -0.5 * ((th[..., None] - means) / self.sigma) ** 2
        ll -= ll.max(axis=-1, keepdims=True)  # keeps the ratio finite in the tails
        w = np.array(self.weights) * np.exp(ll)
        num = np.sum(w * (means - th[..., None]), axis=-1) / self.sigma**2
        out = num / np.sum(w, axis=-1)
        return float(out) if np.ndim(theta) == 0 else out

    def sample(self, rng: np.random.Generator, size: int | None = None):
        n = 1 if size is None else int(size)
        ks = rng.choice(len(self.weights), size=n, p=self.weights)
        draws = np.array(self.means)[ks] + self.sigma * rng.standard_normal(n)
        # Rejection against the angle domain; the density is deliberately
        # not renormalized for this truncation.
        bad = (draws < -HALF_DOMAIN) | (draws > HALF_DOMAIN)
        while bad.any():
            redraw = np.array(self.means)[ks[bad]]
            draws[bad] = redraw + self.sigma * rng.standard_normal(bad.sum())
            bad = (draws < -HALF_DOMAIN) | (draws > HALF_DOMAIN)
        return float(draws[0]) if size is None else draws

    def quadrature_windows(self) -> list[tuple[float, float]]:
        raw = sorted(
            (m - _GAUSS_WINDOW * self.sigma, m + _GAUSS_WINDOW * self.sigma)
            for m in self.means
        )
        merged: list[tuple[float, float]] = []
        for lo, hi in raw:
            lo = max(lo, -HALF_DOMAIN)
            hi = min(hi, HALF_DOMAIN)
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        return merged

    def prior_fisher(self) -> float:
        """Prior Fisher information of the mixture.

        ``1/sigma**2`` minus a pairwise overlap correction; the correction
        vanishes for a single component, and the integral runs over the
        whole line because the tail mass outside the angle domain is
        negligible for the supported geometries.
        """
        if len(self.means) == 1:
            return 1.0 / self.sigma**2
        means = np.array(self.means)
        weights = np.array(self.weights)
        lo = means.min() - 8.0 * self.sigma
        hi = means.max() + 8.0 * self.sigma
        n = int(min(max(8001, round((hi - lo) / (self.sigma / 40.0))), 400001))
        th = np.linspace(lo, hi, n)
        comp = np.exp(-0.5 * ((th[:, None] - means) / self.sigma) ** 2)
        comp /= np.sqrt(2.0 * np.pi) * self.sigma
        f = comp @ weights
        num = np.zeros_like(th)
        for i in range(len(means)):
            for j in range(len(means)):
                if i == j:
                    continue
                gap = (means[j] - means[i]) / self.sigma**2
                num += weights[i] * weights[j] * comp[:, i] * comp[:, j] * gap**2
        integrand = np.divide(num, 2.0 * f, out=np.zeros_like(num), where=f > 1e-300)
        correction = np.trapezoid(integrand, th)
        return max(1.0 / self.sigma**2 - float(correction), 0.0)


@dataclass(frozen=True)
class PointMass:
    """Degenerate prior at a single known angle (deterministic benchmark)."""

    theta0: float

    def __post_init__(self) -> None:
        th = float(self.theta0)
        object.__setattr__(self, "theta0", th)
        if th < -HALF_DOMAIN or th > HALF_DOMAIN:
            raise ValueError("angle outside [-pi/2, pi/2]")

    def pdf(self, theta):
        raise ValueError("a point mass has no density; use an interval or Gaussian prior")

    def log_pdf_grad(self, theta):
        raise ValueError("a point mass has no density; use an interval or Gaussian prior")

    def sample(self, rng: np.random.Generator, size: int | None = None):
        if size is None:
            return self.theta0
        return np.full(int(size), self.theta0)

    def prior_fisher(self) -> float:
        # The deterministic benchmark carries no prior information term.
        return 0.0


TargetDistribution = Union[MixtureUniform, MixtureGaussian, PointMass]


@dataclass(frozen=True)
class DistributionMoments:
    """Steering-vector moments of a prior plus its Fisher scalar.

    ``xi0`` weights the transmit outer product by the receive-derivative
    energy; ``xi1 = xi0 + m_r * int f da da^H``; ``xi2 = m_r * int f da a^H``;
    ``xi3 = m_r * int f a a^H``. ``lam`` is the prior Fisher information.
    """

    xi0: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    xi3: np.ndarray
    lam: float
    grid_size: int


def _window_grid(windows: list[tuple[float, float]], grid_size: int):
    """Trapezoid nodes/weights on a union of disjoint intervals.

    Points are allocated proportionally to interval length (at least 9
    each) and the reduction order is fixed, so results do not depend on
    any parallel split.
    """
    lengths = np.array([hi - lo for lo, hi in windows])
    total = float(lengths.sum())
    if not total > 0:
        raise ValueError("quadrature support is empty")
    nodes = []
    weights = []
    for (lo, hi), length in zip(windows, lengths):
        n = max(9, int(round(grid_size * length / total)))
        th = np.linspace(lo, hi, n)
        w = np.full(n, (hi - lo) / (n - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        nodes.append(th)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _point_mass_moments(dist: PointMass, cfg: ArrayConfig, lam: float) -> DistributionMoments:
    a = steering(dist.theta0, cfg.m_t, cfg.spacing)
    da = steering_derivative(dist.theta0, cfg.m_t, cfg.spacing)
    r2 = float(receive_derivative_norm2(dist.theta0, cfg.m_r, cfg.spacing))
    aa = np.outer(a, a.conj())
    xi0 = r2 * aa
    xi1 = xi0 + cfg.m_r * np.outer(da, da.conj())
    xi2 = cfg.m_r * np.outer(da, a.conj())
    xi3 = cfg.m_r * aa
    return DistributionMoments(xi0=xi0, xi1=xi1, xi2=xi2, xi3=xi3, lam=lam, grid_size=0)


def compute_moments(
    dist: TargetDistribution,
    cfg: ArrayConfig,
    grid_size: int = 2001,
    *,
    lambda_override: float | None = None,
    ramp_halfwidth: float = np.pi / 720,
    ramp_floor: float = 1e-3,
) -> DistributionMoments:
    """Integrate the steering moments of ``dist`` for the array ``cfg``.

    Composite trapezoid quadrature on a uniform grid restricted to the
    support of the prior (Gaussian components contribute +-5 sigma
    windows). ``lambda_override`` replaces the prior Fisher scalar, e.g.
    to force the interior-only convention ``lam = 0`` for interval priors.

    Raises
    ------
    ValueError
        If ``grid_size`` is too small or the quadrature does not
        reproduce unit prior mass (a non-normalized distribution).
    """
    if lambda_override is not None:
        lam = float(lambda_override)
    elif isinstance(dist, MixtureUniform):
        lam = dist.prior_fisher(ramp_halfwidth, ramp_floor)
    else:
        lam = dist.prior_fisher()

    if isinstance(dist, PointMass):
        return _point_mass_moments(dist, cfg, lam)

    if grid_size < 91:
        raise ValueError("grid_size must be at least 91")

    th, wq = _window_grid(dist.quadrature_windows(), grid_size)
    f = dist.pdf(th)
    mass = float(wq @ f)
    if abs(mass - 1.0) > 1e-4:
        raise ValueError(f"prior mass integrates to {mass:.6f}, not 1; "
                         "distribution is not normalized on its support")

    at = steering_matrix(th, cfg.m_t, cfg.spacing)
    dat = steering_derivative_matrix(th, cfg.m_t, cfg.spacing)
    r2 = receive_derivative_norm2(th, cfg.m_r, cfg.spacing)
    u = wq * f

    def _herm(z: np.ndarray) -> np.ndarray:
        # Exact Hermitian symmetrization of the accumulated quadrature.
        return 0.5 * (z + z.conj().T)

    xi0 = _herm(np.einsum("in,n,kn->ik", at, u * r2, at.conj()))
    xi3 = cfg.m_r * _herm(np.einsum("in,n,kn->ik", at, u, at.conj()))
    xi2 = cfg.m_r * np.einsum("in,n,kn->ik", dat, u, at.conj())
    xi1 = xi0 + cfg.m_r * _herm(np.einsum("in,n,kn->ik", dat, u, dat.conj()))
    return DistributionMoments(xi0=xi0, xi1=xi1, xi2=xi2, xi3=xi3, lam=lam,
                               grid_size=int(grid_size))
