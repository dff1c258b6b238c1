"""Design-matrix construction and well-posed shift-rule solving.

A shift rule expresses a target combination of derivatives of the
expectation function as a weighted sum of shifted evaluations.  The
coefficients solve a linear system whose rows are indexed by the distinct
eigenvalue gaps and whose columns are the shift phases: row mu, column x
holds exp(i * mu * phi_x), and the right-hand side for derivative order p
is (i * mu) ** p.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spectrum import FrequencySet, gap_generator

CONDITION_CAP = 1e8
IMAG_TOL = 1e-9
CRAMER_SIZE_CAP = 9

Orders = tuple[tuple[int, float], ...]
FIRST_DERIVATIVE: Orders = ((1, 1.0),)


class IllPosedError(RuntimeError):
    """The shift-rule system cannot be solved stably at these phases."""

    def __init__(self, message: str, condition_number: float | None = None):
        super().__init__(message)
        self.condition_number = condition_number


@dataclass(frozen=True)
class LinearSystem:
    """The design system E b = mu for a fixed gap set and phase vector."""

    matrix: np.ndarray          # (rows, cols) complex, E[r, x] = exp(i g_r phi_x)
    rhs: np.ndarray             # (rows,) complex
    row_gaps: np.ndarray        # gap value per row
    phases: np.ndarray          # phase per column

    @property
    def is_square(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1]


@dataclass(frozen=True)
class ShiftRule:
    """Phases, real coefficients, target orders, and solve diagnostics.

    ``orders`` lists (derivative order p, weight) pairs defining the
    target sum_p w_p f^(p).  ``frequencies`` records the positive gap
    values the rule is valid for.  ``diagnostics`` carries at least
    condition_number, residual, and max_imag_discarded.
    """

    phases: np.ndarray
    coefficients: np.ndarray
    orders: Orders
    frequencies: tuple[float, ...]
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.phases) != len(self.coefficients):
            raise ValueError("phases and coefficients must have equal length")

    @property
    def square_norm(self) -> float:
        b = np.asarray(self.coefficients)
        return float(b @ b)


def _normalize_orders(orders) -> Orders:
    out = tuple((int(p), float(w)) for p, w in orders)
    if not out:
        raise ValueError("need at least one derivative order")
    if any(p < 0 for p, _ in out):
        raise ValueError("derivative orders must be non-negative")
    if not all(np.isfinite(w) for _, w in out):
        raise ValueError("order weights must be finite")
    return out


def derivative_rhs(freq: FrequencySet, p: int) -> np.ndarray:
    """Right-hand side for an order-p rule: (i * gap) ** p per distinct gap.

    p = 1 reproduces the plain first-derivative system; p = 0 gives the
    all-ones vector whose solution reconstructs the function itself.
    """
    if p < 0:
        raise ValueError("derivative order must be non-negative")
    gaps = freq.distinct_gaps
    if p == 0:
        return np.ones(len(gaps), dtype=complex)
    return (1j * gaps) ** p


def _combined_rhs(freq: FrequencySet, orders: Orders) -> np.ndarray:
    rhs = np.zeros(freq.m, dtype=complex)
    for p, w in orders:
        rhs += w * derivative_rhs(freq, p)
    return rhs


def build_system(freq: FrequencySet, phases, orders=FIRST_DERIVATIVE) -> LinearSystem:
    """Build the design system with one row per distinct gap value.

    The row order is (0, +w1, -w1, +w2, -w2, ...), so the first row is
    the all-ones row with right-hand side 0 for pure derivative targets,
    and rows come in conjugate pairs.  The number of phases may differ
    from freq.m; only the direct solver insists on a square system.
    """
    phases = np.asarray(phases, dtype=float)
    if phases.ndim != 1 or len(phases) == 0:
        raise ValueError("phases must be a non-empty 1-d sequence")
    if not np.isfinite(phases).all():
        raise ValueError("phases must be finite")
    orders = _normalize_orders(orders)
    gaps = freq.distinct_gaps
    E = np.exp(1j * np.outer(gaps, phases))
    return LinearSystem(matrix=E, rhs=_combined_rhs(freq, orders), row_gaps=gaps, phases=phases)


def build_full_system(freq: FrequencySet, phases, orders=FIRST_DERIVATIVE) -> LinearSystem:
    """Design system with one row per signed eigenvalue pair (no dedup).

    Coincident gaps then produce duplicate rows and a singular square
    matrix; this variant exists for ill-posedness experiments and for
    the regularized path, which tolerates rank deficiency.
    """
    phases = np.asarray(phases, dtype=float)
    orders = _normalize_orders(orders)
    entries = sorted(
        ((abs(g), -np.sign(g), g) for _, g in freq.signed_gaps),
        key=lambda e: (e[0], e[1]),
    )
    gaps = np.asarray([g for _, _, g in entries])
    E = np.exp(1j * np.outer(gaps, phases))
    rhs = np.zeros(len(gaps), dtype=complex)
    for p, w in orders:
        if p == 0:
            rhs += w * np.ones(len(gaps))
        else:
            rhs += w * (1j * gaps) ** p
    return LinearSystem(matrix=E, rhs=rhs, row_gaps=gaps, phases=phases)


def check_phase_distinctness(phases, frequencies) -> None:
    """Reject duplicate phases (equal modulo the column period).

    When the positive gaps share a generator g, every matrix column is
    periodic in its phase with period 2*pi/g, so phases equal modulo that
    period produce identical columns; the constraint is
    phi_i != phi_j + 2*pi*c / g for every integer c.
    """
    phases = np.asarray(phases, dtype=float)
    g = gap_generator(frequencies)
    tol = 1e-12 * max(1.0, float(np.abs(phases).max()))
    for i in range(len(phases)):
        for j in range(i + 1, len(phases)):
            d = abs(phases[i] - phases[j])
            if g is not None:
                period = 2 * np.pi / g
                d = min(d % period, period - d % period)
            if d < tol:
                raise IllPosedError(
                    f"duplicate shift phases: phi_{i} and phi_{j} coincide "
                    "(phi_i != phi_j + 2*pi*c violated)"
                )


def condition_number(matrix: np.ndarray) -> float:
    """Spectral (l2) condition number; +inf for (numerically) singular matrices."""
    s = np.linalg.svd(matrix, compute_uv=False)
    rank_tol = s[0] * max(matrix.shape) * np.finfo(float).eps
    if s[-1] <= rank_tol or not np.isfinite(s[-1]):
        return float("inf")
    return float(s[0] / s[-1])


def _extract_real(b: np.ndarray, context: str) -> tuple[np.ndarray, float]:
    scale = max(float(np.linalg.norm(b)), 1e-300)
    max_imag = float(np.abs(b.imag).max())
    if max_imag > IMAG_TOL * scale:
        raise ValueError(
            f"{context}: solution has non-negligible imaginary part "
            f"({max_imag:.3g} vs norm {scale:.3g})"
        )
    return b.real.copy(), max_imag


def solve_direct(
    sys: LinearSystem,
    orders: Orders = FIRST_DERIVATIVE,
    condition_cap: float = CONDITION_CAP,
) -> ShiftRule:
    """Solve the square system E b = rhs and return the real coefficients.

    Raises IllPosedError when the system is not square, contains
    duplicate phases, or has a condition number above ``condition_cap``
    (ill-posed spectra must go through the equidistant or regularized
    paths instead).
    """
    E = sys.matrix
    if not sys.is_square:
        raise IllPosedError(
            f"system is not square ({E.shape[0]} gap rows, {E.shape[1]} phases); "
            "the direct solver needs exactly one phase per distinct gap"
        )
    pos = sys.row_gaps[sys.row_gaps > 0]
    check_phase_distinctness(sys.phases, pos)
    cond = condition_number(E)
    if not np.isfinite(cond) or cond > condition_cap:
        raise IllPosedError(
            f"condition number {cond:.3g} exceeds cap {condition_cap:.3g}",
            condition_number=cond,
        )
    b = np.linalg.solve(E, sys.rhs)
    coeffs, max_imag = _extract_real(b, "solve_direct")
    residual = float(np.linalg.norm(E @ b - sys.rhs))
    return ShiftRule(
        phases=sys.phases.copy(),
        coefficients=coeffs,
        orders=_normalize_orders(orders),
        frequencies=tuple(sorted(pos)),
        diagnostics={
            "method": "direct",
            "condition_number": cond,
            "residual": residual,
            "max_imag_discarded": max_imag,
        },
    )


def cramer_coefficient(sys: LinearSystem, x: int) -> float:
    """Coefficient b_x via Cramer's rule: det E(phi/phi_x) / det E.

    Restricted to systems of size <= 9 (determinant cost guard).
    """
    E = sys.matrix
    if not sys.is_square:
        raise ValueError("Cramer's rule needs a square system")
    m = E.shape[0]
    if m > CRAMER_SIZE_CAP:
        raise ValueError(f"Cramer path limited to m <= {CRAMER_SIZE_CAP}, got {m}")
    if not 0 <= x < m:
        raise IndexError("column index out of range")
    det = np.linalg.det(E)
    if det == 0 or not np.isfinite(abs(det)):
        raise IllPosedError("singular design matrix in Cramer's rule")
    M = E.copy()
    M[:, x] = sys.rhs
    value = np.linalg.det(M) / det
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value)):
        raise ValueError("Cramer coefficient came out non-real")
    return float(value.real)


def jacobi_coefficient(sys: LinearSystem, x: int, step: float = 1e-4) -> float:
    """Coefficient b_x from the determinant-derivative form.

    Numerator: d/ds det E with column x evaluated at phase s, at s = 0
    (Richardson-extrapolated central differences); denominator: det E at
    the given phases.  Agrees with cramer_coefficient because the
    phase-derivative of a column at zero phase is exactly the
    first-derivative right-hand side.
    """
    E = sys.matrix
    if not sys.is_square:
        raise ValueError("Jacobi form needs a square system")
    det = np.linalg.det(E)
    if det == 0:
        raise IllPosedError("singular design matrix in Jacobi form")

    def det_at(s: float) -> complex:
        M = E.copy()
        M[:, x] = np.exp(1j * sys.row_gaps * s)
        return np.linalg.det(M)

    def central(h: float) -> complex:
        return (det_at(h) - det_at(-h)) / (2 * h)

    deriv = (4 * central(step / 2) - central(step)) / 3
    value = deriv / det
    return float(value.real)


def synthesize_rule(
    freq: FrequencySet,
    phases,
    orders=FIRST_DERIVATIVE,
    condition_cap: float = CONDITION_CAP,
) -> ShiftRule:
    """Build and solve the system for any combination of derivative orders.

    The resulting rule satisfies sum_p w_p f^(p)(t) = sum_x b_x f(t+phi_x)
    for every model whose frequencies lie in ``freq``, at every t.
    """
    orders = _normalize_orders(orders)
    sys = build_system(freq, phases, orders)
    return solve_direct(sys, orders=orders, condition_cap=condition_cap)


def apply_rule(rule: ShiftRule, f: Callable[[float], float], t: float) -> float:
    """Evaluate sum_x b_x f(t + phi_x)."""
    return float(
        sum(b * f(t + p) for b, p in zip(rule.coefficients, rule.phases))
    )


def compatibility_residual(rule: ShiftRule, freq: FrequencySet, orders=None) -> float:
    """Defining residual max over gaps |sum_x b_x e^{i mu phi_x} - target(mu)|.

    Independent of any test function: a rule is exact for every in-band
    model precisely when this vanishes.
    """
    orders = _normalize_orders(orders if orders is not None else rule.orders)
    gaps = freq.distinct_gaps
    E = np.exp(1j * np.outer(gaps, rule.phases))
    target = np.zeros(len(gaps), dtype=complex)
    for p, w in orders:
        target += w * (np.ones(len(gaps)) if p == 0 else (1j * gaps) ** p)
    return float(np.abs(E @ rule.coefficients - target).max())
