"""Coined Hadamard walk on the line with a phase defect at the origin.

Coin |0> moves the walker to n-1 and coin |1> to n+1. Whenever amplitude
leaves node 0 it picks up the factor ``omega = exp(2 pi i phi)``.

States are stored as two dense complex arrays over a contiguous window of
positions that grows by one site on each side per step.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "NormalizationError",
    "CoinSpinor",
    "PhaseDefect",
    "NO_DEFECT",
    "WalkState",
    "initial_state",
    "hadamard_coin",
    "step",
    "step_adjoint",
    "double_step",
    "evolve",
    "position_distribution",
    "origin_probability",
    "EMISSION_FLOOR",
]

SQRT1_2 = 1.0 / math.sqrt(2.0)
EMISSION_FLOOR = 1e-16
NORM_TOL = 1e-12


class NormalizationError(ValueError):
    """Raised when a coin state or walk state is not unit-normalized."""


@dataclass(frozen=True)
class CoinSpinor:
    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        if not (cmath.isfinite(self.alpha) and cmath.isfinite(self.beta)):
            raise ValueError(f"non-finite coin amplitudes ({self.alpha}, {self.beta})")

    def norm2(self) -> float:
        return abs(self.alpha) ** 2 + abs(self.beta) ** 2


@dataclass(frozen=True)
class PhaseDefect:
    """Phase defect at node 0; ``phi=None`` means the translation-invariant walk."""

    phi: float | None

    def __post_init__(self) -> None:
        if self.phi is not None and not (0 < self.phi < 1):
            raise ValueError(f"defect phase must lie in (0, 1), got {self.phi}")

    @property
    def omega(self) -> complex:
        if self.phi is None:
            return 1.0 + 0.0j
        return cmath.exp(2j * math.pi * float(self.phi))


NO_DEFECT = PhaseDefect(None)


@dataclass(frozen=True)
class WalkState:
    """Amplitudes on positions ``offset, offset+1, ..., offset+len-1``."""

    alpha: np.ndarray
    beta: np.ndarray
    offset: int
    steps_taken: int = 0

    def __post_init__(self) -> None:
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 1:
            raise ValueError("alpha and beta must be 1-D arrays of equal length")
        if self.steps_taken < 0:
            raise ValueError("steps_taken must be non-negative")
        self.alpha.setflags(write=False)
        self.beta.setflags(write=False)

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.alpha.size)

    def _index(self, n: int) -> int | None:
        i = n - self.offset
        return i if 0 <= i < self.alpha.size else None

    def spinor(self, n: int) -> CoinSpinor:
        i = self._index(n)
        if i is None:
            return CoinSpinor(0j, 0j)
        return CoinSpinor(complex(self.alpha[i]), complex(self.beta[i]))

    def __getitem__(self, n: int) -> CoinSpinor:
        return self.spinor(n)

    def items(self) -> Iterator[tuple[int, CoinSpinor]]:
        """Yield ``(position, spinor)`` over the support."""
        for n in self.support():
            yield n, self.spinor(n)

    def support(self) -> list[int]:
        nz = np.flatnonzero((self.alpha != 0) | (self.beta != 0))
        return [int(i) + self.offset for i in nz]

    def probabilities(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2 + np.abs(self.beta) ** 2

    def norm(self) -> float:
        return float(math.sqrt(self.probabilities().sum()))

    def vector(self, lo: int, hi: int) -> np.ndarray:
        """Flatten onto positions ``lo..hi`` as ``[alpha_lo, beta_lo, alpha_lo+1, ...]``."""
        out = np.zeros((hi - lo + 1, 2), dtype=complex)
        first = max(lo, self.offset)
        last = min(hi, self.offset + self.alpha.size - 1)
        if first <= last:
            src = slice(first - self.offset, last - self.offset + 1)
            out[first - lo : last - lo + 1, 0] = self.alpha[src]
            out[first - lo : last - lo + 1, 1] = self.beta[src]
        return out.ravel()

    @classmethod
    def from_mapping(cls, amplitudes: dict[int, CoinSpinor | tuple[complex, complex]], steps_taken: int = 0) -> "WalkState":
        if not amplitudes:
            raise ValueError("empty state")
        lo, hi = min(amplitudes), max(amplitudes)
        alpha = np.zeros(hi - lo + 1, dtype=complex)
        beta = np.zeros_like(alpha)
        for n, s in amplitudes.items():
            a, b = (s.alpha, s.beta) if isinstance(s, CoinSpinor) else s
            alpha[n - lo], beta[n - lo] = a, b
        return cls(alpha, beta, lo, steps_taken)


def initial_state(alpha: complex, beta: complex) -> WalkState:
    """Walker at node 0 with coin ``alpha|0> + beta|1>``."""
    s = CoinSpinor(complex(alpha), complex(beta))
    if abs(s.norm2() - 1.0) > NORM_TOL:
        raise NormalizationError(f"|alpha|^2 + |beta|^2 = {s.norm2()!r}, expected 1")
    return WalkState(np.array([s.alpha]), np.array([s.beta]), 0, 0)


def hadamard_coin(s: CoinSpinor) -> CoinSpinor:
    return CoinSpinor((s.alpha + s.beta) * SQRT1_2, (s.alpha - s.beta) * SQRT1_2)


def apply_step(alpha: np.ndarray, beta: np.ndarray, origin: int, omega: complex) -> tuple[np.ndarray, np.ndarray]:
    """One walk step on arrays whose last axis is position.

    ``origin`` is the array index of node 0 (may fall outside the array).
    The returned arrays are two sites longer; node 0 sits at ``origin + 1``.
    """
    up = (alpha + beta) * SQRT1_2
    down = (alpha - beta) * SQRT1_2
    if omega != 1 and 0 <= origin < alpha.shape[-1]:
        up[..., origin] *= omega
        down[..., origin] *= omega
    pad = [(0, 0)] * (alpha.ndim - 1)
    # coin 0 from index i lands on new index i (one site left); coin 1 on i + 2.
    new_alpha = np.pad(up, pad + [(0, 2)])
    new_beta = np.pad(down, pad + [(2, 0)])
    return new_alpha, new_beta


def apply_step_adjoint(alpha: np.ndarray, beta: np.ndarray, origin: int, omega: complex) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`apply_step`: pull the shifted amplitudes back, undo the
    phase on arrivals at node 0, then apply the (self-inverse) Hadamard coin.

    Arrays grow by one site on each side; node 0 sits at ``origin + 1``.
    """
    pad = [(0, 0)] * (alpha.ndim - 1)
    up = np.pad(alpha, pad + [(2, 0)])
    down = np.pad(beta, pad + [(0, 2)])
    o = origin + 1
    if omega != 1 and 0 <= o < up.shape[-1]:
        up[..., o] *= omega.conjugate()
        down[..., o] *= omega.conjugate()
    return (up + down) * SQRT1_2, (up - down) * SQRT1_2


def step(state: WalkState, defect: PhaseDefect) -> WalkState:
    a, b = apply_step(state.alpha, state.beta, -state.offset, defect.omega)
    return WalkState(a, b, state.offset - 1, state.steps_taken + 1)


def step_adjoint(state: WalkState, defect: PhaseDefect) -> WalkState:
    a, b = apply_step_adjoint(state.alpha, state.beta, -state.offset, defect.omega)
    return WalkState(a, b, state.offset - 1, max(state.steps_taken - 1, 0))


def double_step(state: WalkState, defect: PhaseDefect) -> WalkState:
    return step(step(state, defect), defect)


def evolve(state: WalkState, defect: PhaseDefect, n_steps: int) -> WalkState:
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    a, b, origin = state.alpha, state.beta, -state.offset
    omega = defect.omega
    for _ in range(n_steps):
        a, b = apply_step(a, b, origin, omega)
        origin += 1
    if n_steps == 0:
        return state
    return WalkState(a, b, -origin, state.steps_taken + n_steps)


def position_distribution(state: WalkState, floor: float = EMISSION_FLOOR) -> list[tuple[int, float]]:
    p = state.probabilities()
    return [(int(n), float(q)) for n, q in zip(state.positions, p) if q > floor]


def origin_probability(state: WalkState) -> float:
    s = state.spinor(0)
    return s.norm2()
