"""First-order behavior of equidistant rules under gap perturbations.

Small shifts of the eigenvalues away from exact equidistance perturb the
unitary-normalized design system (E + eps*R) b(eps) = mu + eps*r.  This
module builds the canonical (R, r) pair for the equidistant phases,
propagates the first-order solution, and evaluates the condition-number
error bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equidistant import EquidistantStructure, normalized_system
from .synthesis import condition_number as _cond


@dataclass(frozen=True)
class PerturbationData:
    """Unit-scale perturbation pair (R, r) for the normalized system.

    The gap-0 row of R is identically zero (the diagonal gap never
    moves); the remaining rows follow the sign of their gap.
    """

    matrix: np.ndarray
    vector: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be non-negative")
        if np.abs(self.matrix[0]).max() != 0.0:
            raise ValueError("the gap-0 row of the perturbation matrix must be zero")


def perturbation_matrices(es: EquidistantStructure) -> PerturbationData:
    """Canonical unit-epsilon perturbation of the normalized system.

    Row for gap +-k*delta, column x (x = 1..2n-1):
    +-(i*tau/delta) * x * exp(-+ i*k*x*tau), divided by sqrt(2n-1);
    the right-hand side perturbation is i * ones / sqrt(2n-1).
    """
    n, d, tau, m = es.n, es.delta, es.tau, es.m
    R = np.zeros((m, m), dtype=complex)
    x = np.arange(1, m + 1)
    for k in range(1, n):
        R[2 * k - 1] = (1j * tau / d) * x * np.exp(-1j * k * x * tau)
        R[2 * k] = -(1j * tau / d) * x * np.exp(1j * k * x * tau)
    R /= np.sqrt(m)
    r = 1j * np.ones(m) / np.sqrt(m)
    return PerturbationData(matrix=R, vector=r, scale=1.0)


def linearized_solution(
    E: np.ndarray,
    pd: PerturbationData,
    b0: np.ndarray,
    eps: float,
) -> np.ndarray:
    """First-order solution b0 + eps * E^{-1} (r - R b0).

    E must be the nonsingular (normalized) unperturbed matrix and b0 its
    exact solution; the quadratic remainder is o(eps).
    """
    db = np.linalg.solve(E, pd.vector - pd.matrix @ np.asarray(b0, dtype=complex))
    out = np.asarray(b0, dtype=complex) + eps * db
    return out


def exact_perturbed_solution(
    E: np.ndarray,
    pd: PerturbationData,
    rhs: np.ndarray,
    eps: float,
) -> np.ndarray:
    """Solve the exactly perturbed system (E + eps R) b = rhs + eps r."""
    return np.linalg.solve(E + eps * pd.matrix, rhs + eps * pd.vector)


def condition_number(E: np.ndarray, norm: str = "l2") -> float:
    """l2 condition number sigma_max / sigma_min; +inf when singular."""
    if norm != "l2":
        raise ValueError("only the l2 norm is implemented")
    return _cond(np.asarray(E))


@dataclass(frozen=True)
class PerturbationBound:
    """First-order error bounds on the coefficient deviation.

    ``relative``: k(E) * (eps*|r|/|mu| + eps*|R|/|E|), bounding the
    relative deviation |b(eps)-b(0)| / |b(0)|.
    ``absolute``: eps * (|r| + |R|) * |b0|, the unitary-system estimate.
    ``loose``: the closed-form upper bound
    4*eps*delta*(1 + sqrt(2n-1)*R_max) * (n-1)*(2^n-1)^2 / sqrt(2n-1),
    with R_max the largest entry magnitude of the unnormalized R.
    """

    relative: float
    absolute: float
    loose: float


def error_bound(
    es: EquidistantStructure,
    pd: PerturbationData,
    b0: np.ndarray,
    eps: float,
) -> PerturbationBound:
    """Evaluate the perturbation bounds for the unitary equidistant system."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    E, mu = normalized_system(es)
    b0 = np.asarray(b0, dtype=float)
    kE = condition_number(E)
    norm_E = float(np.linalg.norm(E, 2))
    norm_R = float(np.linalg.norm(pd.matrix, 2))
    norm_r = float(np.linalg.norm(pd.vector))
    norm_mu = float(np.linalg.norm(mu))
    relative = kE * (eps * norm_r / norm_mu + eps * norm_R / norm_E)
    absolute = eps * (norm_r + norm_R) * float(np.linalg.norm(b0))
    n, m, d = es.n, es.m, es.delta
    r_max = float(np.abs(pd.matrix).max()) * np.sqrt(m)
    loose = 4 * eps * d * (1 + np.sqrt(m) * r_max) * (n - 1) * (2**n - 1) ** 2 / np.sqrt(m)
    return PerturbationBound(relative=relative, absolute=absolute, loose=loose)
