"""Localized stationary states of the double-step operator.

On the reduced lattice (index ``n`` labels physical site ``2n``) the bound
state of branch ``s`` (``s = +1`` or ``-1``) has eigenvalue

    lambda_s = (w - 2w^2 + w^3 + s*i*w*(1 - w + w^2)) / (1 - 2w + 2w^2)

with ``w = exp(2 pi i phi)``, decays geometrically with ratio

    x_s = 1 / (2 cos(2 pi phi) - 2 s sin(2 pi phi) - 3)

and is normalizable iff ``|x_s| < 1``. Node-0 and tail amplitudes are
returned by :func:`amplitude_at`.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .walk import NORM_TOL, CoinSpinor, NormalizationError, WalkState

__all__ = [
    "Branch",
    "BoundState",
    "OverlapReport",
    "DomainError",
    "SingularityError",
    "ToleranceError",
    "NODE0_BETA",
    "omega_of",
    "lambda_pm",
    "x_pm",
    "x_pm_omega",
    "exists",
    "bound_state",
    "amplitude_at",
    "materialize",
    "tail_norm2",
    "overlap_F",
    "total_overlap",
]


class DomainError(ValueError):
    pass


class SingularityError(ArithmeticError):
    pass


class ToleranceError(ValueError):
    pass


class Branch(enum.Enum):
    PLUS = 1
    MINUS = -1

    @property
    def sign(self) -> int:
        return self.value

    def __str__(self) -> str:
        return "plus" if self is Branch.PLUS else "minus"

    @classmethod
    def parse(cls, name: str) -> "Branch":
        return {"plus": cls.PLUS, "+": cls.PLUS, "minus": cls.MINUS, "-": cls.MINUS}[name]


# Node-0 coin amplitude beta_0 / C per branch. This fixes which coin state is
# orthogonal to which bound state; the verification oracle re-derives it from
# the eigen-residual and from the dynamics (``oracle.resolve_sign_pairing``).
NODE0_BETA = {Branch.PLUS: -1j, Branch.MINUS: 1j}


def _check_phi(phi: float) -> float:
    if not (0 < phi < 1):
        raise DomainError(f"phi must lie in (0, 1), got {phi}")
    return float(phi)


def omega_of(phi: float) -> complex:
    return cmath.exp(2j * math.pi * _check_phi(phi))


def lambda_pm(branch: Branch, phi: float) -> complex:
    w = omega_of(phi)
    den = 1 - 2 * w + 2 * w * w
    if abs(den) <= 1e-12:
        raise SingularityError(f"eigenvalue denominator vanishes at phi={phi}")
    num = w - 2 * w**2 + w**3 + branch.sign * 1j * w * (1 - w + w**2)
    return num / den


def x_pm(branch: Branch, phi: float) -> float:
    t = 2 * math.pi * _check_phi(phi)
    return 1.0 / (2 * math.cos(t) - branch.sign * 2 * math.sin(t) - 3)


def x_pm_omega(branch: Branch, phi: float) -> complex:
    """Decay parameter in rational form in ``w``; equals :func:`x_pm` up to rounding."""
    w = omega_of(phi)
    return w / (w * w - 3 * w + 1 + branch.sign * 1j * (w * w - 1))


def exists(branch: Branch, phi: float) -> bool:
    """True iff ``|x_pm(branch, phi)| < 1``.

    The denominator of ``x`` equals ``2*sqrt(2)*cos(2 pi phi + s pi/4) - 3``, which
    drops below -1 exactly off the arc ``phi`` in ``[3/4, 1)`` (plus) or
    ``(0, 1/4]`` (minus). Comparing against those endpoints keeps the
    boundary points exact instead of leaving them to rounding in ``x``.
    """
    phi = _check_phi(phi)
    if branch is Branch.PLUS:
        return phi < 0.75
    return phi > 0.25


@dataclass(frozen=True)
class BoundState:
    branch: Branch
    phi: float
    lam: complex
    x: float
    c_norm: float

    def __post_init__(self) -> None:
        if not abs(self.x) < 1:
            raise DomainError(f"branch {self.branch} is not normalizable at phi={self.phi} (x={self.x})")

    @property
    def omega(self) -> complex:
        return omega_of(self.phi)

    @property
    def node0_weight(self) -> float:
        """Probability the bound state assigns to physical node 0."""
        return 2 * self.c_norm**2


def _series_norm2(branch: Branch, phi: float, x: float, c: float) -> float:
    # Explicit geometric sums over the tail coefficients, independent of c = sqrt((1+x)/2).
    w = omega_of(phi)
    s = branch.sign
    right = abs(1) ** 2 + abs(1 - w - s * 1j * w) ** 2
    left = abs(w - s * 1j * w + s * 1j) ** 2 + abs(-s * 1j) ** 2
    node0 = 1 + abs(NODE0_BETA[branch]) ** 2
    g = x * x / (1 - x * x)
    return c * c * (node0 + (right + left) * g)


def bound_state(branch: Branch, phi: float) -> BoundState:
    if not exists(branch, phi):
        raise DomainError(f"no {branch} bound state at phi={phi}")
    x = x_pm(branch, phi)
    c = math.sqrt((1 + x) / 2)
    err = abs(_series_norm2(branch, phi, x, c) - 1)
    if err > 1e-10:
        raise ArithmeticError(f"normalization check failed at phi={phi}: |norm^2 - 1| = {err:.3e}")
    return BoundState(branch, float(phi), lambda_pm(branch, phi), x, c)


def _coefficients(bound: BoundState, beta0: Optional[complex] = None) -> tuple[complex, complex, complex, complex, complex, complex]:
    """(a_right, b_right, a0, b0, a_left, b_left) multiplying ``x^|n|``."""
    w, s, c = bound.omega, bound.branch.sign, bound.c_norm
    b0 = NODE0_BETA[bound.branch] if beta0 is None else beta0
    return (
        c,
        c * (1 - w - s * 1j * w),
        c,
        c * b0,
        c * (w - s * 1j * w + s * 1j),
        -s * 1j * c,
    )


def amplitude_at(bound: BoundState, n: int) -> CoinSpinor:
    ar, br, a0, b0, al, bl = _coefficients(bound)
    if n == 0:
        return CoinSpinor(a0, b0)
    g = bound.x ** abs(n)
    if n > 0:
        return CoinSpinor(ar * g, br * g)
    return CoinSpinor(al * g, bl * g)


def tail_norm2(bound: BoundState, window: int) -> float:
    """Exact probability the bound state holds outside ``|n| <= window``.

    The tail weights sum to ``-x`` (x is always negative), so the part beyond
    ``window`` is ``|x|^(2 window + 1)``.
    """
    return abs(bound.x) ** (2 * window + 1)


def materialize(
    bound: BoundState,
    window: int,
    tol: Optional[float] = None,
    *,
    beta0: Optional[complex] = None,
) -> WalkState:
    """Embed the bound state on physical sites ``2n`` for ``|n| <= window``.

    ``tol`` bounds the probability lost to truncation. ``beta0`` overrides the
    node-0 coefficient ``beta_0 / C`` and exists only for negative controls.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if tol is not None and tail_norm2(bound, window) > tol:
        raise ToleranceError(
            f"window {window} loses {tail_norm2(bound, window):.3e} > {tol:.3e} of the norm at phi={bound.phi}"
        )
    ar, br, a0, b0, al, bl = _coefficients(bound, beta0)
    n = np.arange(1, window + 1)
    g = bound.x**n
    alpha = np.zeros(4 * window + 1, dtype=complex)
    beta = np.zeros_like(alpha)
    mid = 2 * window
    alpha[mid], beta[mid] = a0, b0
    alpha[mid + 2 * n], beta[mid + 2 * n] = ar * g, br * g
    alpha[mid - 2 * n], beta[mid - 2 * n] = al * g, bl * g
    state = WalkState(alpha, beta, -mid)
    if beta0 is None:
        assert abs(state.norm() ** 2 - 1) <= 2 * abs(bound.x) ** (2 * window) + 1e-13
    return state


def overlap_F(branch: Branch, phi: float, alpha: complex, beta: complex) -> float:
    """``|<Phi|psi0>|^2`` for the coin state ``alpha|0> + beta|1>`` at node 0.

    Returns 0 when the branch does not exist at ``phi``. Only the node-0
    spinor of the bound state enters, so this is
    ``C^2 |alpha + conj(beta_0/C) beta|^2 = ((1 + x)/2) |alpha + s i beta|^2``.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > NORM_TOL:
        raise NormalizationError("coin state is not normalized")
    if not exists(branch, phi):
        return 0.0
    b = bound_state(branch, phi)
    amp = b.c_norm * (alpha + NODE0_BETA[branch].conjugate() * beta)
    return abs(amp) ** 2


@dataclass(frozen=True)
class OverlapReport:
    phi: float
    f_plus: float
    f_minus: float
    exists_plus: bool
    exists_minus: bool

    @property
    def total(self) -> float:
        return (self.f_plus if self.exists_plus else 0.0) + (self.f_minus if self.exists_minus else 0.0)


def total_overlap(phi: float, alpha: complex, beta: complex) -> OverlapReport:
    return OverlapReport(
        phi=float(phi),
        f_plus=overlap_F(Branch.PLUS, phi, alpha, beta),
        f_minus=overlap_F(Branch.MINUS, phi, alpha, beta),
        exists_plus=exists(Branch.PLUS, phi),
        exists_minus=exists(Branch.MINUS, phi),
    )
