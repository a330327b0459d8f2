"""Conditional intrinsic prior for the encompassing design of a constrained model.

Given null-model parameters (alpha0, sigma0), the prior on the collapsed
design's parameters (gamma, sigma) factors as a half-Cauchy with scale sigma0
on sigma times a q-variate normal on gamma centred at alpha0 along the
intercept direction, with covariance (sigma^2 + sigma0^2) * Winv where
Winv = (n / (q + 1)) * (Z'Z)^{-1}.  Equivalently sigma^2 follows an inverted
beta law with shapes (1/2, 1/2) and scale sigma0^2, and
eta = sigma^2 / (sigma^2 + sigma0^2) follows Beta(1/2, 1/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import EncompassingDesign, build_design
from .gaussian import mvn_logpdf, sample_eta_half


@dataclass(frozen=True)
class NullParams:
    """Grand mean and residual scale of the all-means-equal model."""

    alpha0: float
    sigma0: float

    def __post_init__(self) -> None:
        if not self.sigma0 > 0.0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")


@dataclass
class CipSpec:
    """Design and prior scale matrix shared by every factor of one comparison.

    e is the first standard basis vector, so Z @ e is the all-ones column;
    that identity is asserted at build time.  w stores the exact inverse
    ((q+1)/n) * Z'Z of winv, and chol_winv its Cholesky factor.
    """

    Z: np.ndarray
    winv: np.ndarray
    e: np.ndarray
    n: int
    q: int
    ztz: np.ndarray = field(init=False)
    w: np.ndarray = field(init=False)
    chol_winv: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        if not np.array_equal(self.Z @ self.e, np.ones(self.n)):
            raise ValueError("Z @ e must be the all-ones column")
        self.ztz = self.Z.T @ self.Z
        self.w = ((self.q + 1) / self.n) * self.ztz
        self.chol_winv = np.linalg.cholesky(self.winv)


def estimate_null_params(data) -> NullParams:
    """Null-model maximum likelihood fit: grand mean and rms deviation (divisor n)."""
    y = np.asarray(data.responses, dtype=float)
    if y.size < 2:
        raise ValueError("need at least two observations")
    alpha0 = float(np.mean(y))
    sigma0 = float(np.sqrt(np.mean((y - alpha0) ** 2)))
    if sigma0 <= 0.0:
        raise ValueError("responses are constant; null residual scale is zero")
    return NullParams(alpha0=alpha0, sigma0=sigma0)


def make_cip(design: EncompassingDesign, group_sizes) -> CipSpec:
    """Build the prior spec for a collapsed design with the given group sizes."""
    Z = build_design(design, group_sizes)
    n, q = Z.shape
    ztz = Z.T @ Z
    try:
        winv = (n / (q + 1)) * np.linalg.inv(ztz)
    except np.linalg.LinAlgError as exc:
        raise ValueError("design matrix is rank deficient") from exc
    winv = 0.5 * (winv + winv.T)
    e = np.zeros(q)
    e[0] = 1.0
    return CipSpec(Z=Z, winv=winv, e=e, n=n, q=q)


def cip_logpdf(gamma: np.ndarray, sigma: float, theta0: NullParams, spec: CipSpec) -> float:
    """Log prior density at (gamma, sigma), sigma > 0."""
    if sigma <= 0.0:
        return -np.inf
    s0 = theta0.sigma0
    log_half_cauchy = np.log(2.0) - np.log(np.pi * s0) - np.log1p((sigma / s0) ** 2)
    cov = (sigma**2 + s0**2) * spec.winv
    return float(log_half_cauchy) + mvn_logpdf(gamma, theta0.alpha0 * spec.e, cov)


@dataclass
class PriorDraws:
    """Joint prior draws; sigma2[t] equals sigma0^2 * eta[t] / (1 - eta[t])."""

    T: int
    gamma: np.ndarray
    eta: np.ndarray
    sigma2: np.ndarray


def cip_sample(theta0: NullParams, spec: CipSpec, T: int, rng: np.random.Generator) -> PriorDraws:
    """T joint draws of (gamma, eta, sigma2) from the prior."""
    if T < 1:
        raise ValueError("T must be positive")
    s0sq = theta0.sigma0**2
    eta = sample_eta_half(T, rng)
    sigma2 = s0sq * eta / (1.0 - eta)
    scale = np.sqrt(sigma2 + s0sq)
    z = rng.standard_normal((T, spec.q))
    gamma = theta0.alpha0 * spec.e + scale[:, None] * (z @ spec.chol_winv.T)
    return PriorDraws(T=T, gamma=gamma, eta=eta, sigma2=sigma2)
