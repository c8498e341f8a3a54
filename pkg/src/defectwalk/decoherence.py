"""Coin-measurement decoherence by trajectory sampling.

After every unitary step the coin is measured in the {|0>, |1>} basis with
probability ``p_measure``. At ``p_measure = 1`` the walker is always in a
single (position, coin) basis state and the walk is the classical symmetric
random walk; at 0 it is the unitary walk.

Trajectory ``i`` draws its random numbers from
``SeedSequence(seed, spawn_key=(i,))``, so any single trajectory can be
replayed from ``(seed, i)`` independently of batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .walk import EMISSION_FLOOR, NO_DEFECT, PhaseDefect, apply_step, evolve, initial_state

__all__ = ["DecoherenceConfig", "DecoheredDistribution", "evolve_decohered", "trajectory_uniforms", "classical_reference"]

MAX_STEPS = 200


@dataclass(frozen=True)
class DecoherenceConfig:
    p_measure: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_measure <= 1.0):
            raise ValueError(f"p_measure must lie in [0, 1], got {self.p_measure}")


@dataclass(frozen=True)
class DecoheredDistribution:
    positions: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    seed: Optional[int]
    n_trajectories: int
    p_measure: float
    steps: int

    def rows(self, floor: float = EMISSION_FLOOR) -> list[tuple[int, float, float]]:
        return [
            (int(n), float(m), float(e))
            for n, m, e in zip(self.positions, self.mean, self.std_error)
            if m > floor
        ]

    def as_dict(self) -> dict[int, float]:
        return {int(n): float(m) for n, m in zip(self.positions, self.mean)}


def trajectory_uniforms(seed: int, index: int, steps: int) -> np.ndarray:
    """``(steps, 2)`` uniforms for one trajectory: column 0 decides whether the
    coin is measured, column 1 picks the outcome."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    return rng.random((steps, 2))


def _run_batch(alpha0: complex, beta0: complex, omega: complex, p: float, u: np.ndarray) -> np.ndarray:
    n, steps = u.shape[0], u.shape[1]
    a = np.full((n, 1), alpha0, dtype=complex)
    b = np.full((n, 1), beta0, dtype=complex)
    origin = 0
    for k in range(steps):
        a, b = apply_step(a, b, origin, omega)
        origin += 1
        measured = u[:, k, 0] < p
        if not measured.any():
            continue
        p0 = np.sum(np.abs(a) ** 2, axis=1)
        to0 = measured & (u[:, k, 1] < p0)
        to1 = measured & ~to0
        if to0.any():
            a[to0] /= np.sqrt(p0[to0])[:, None]
            b[to0] = 0
        if to1.any():
            b[to1] /= np.sqrt(1 - p0[to1])[:, None]
            a[to1] = 0
    return np.abs(a) ** 2 + np.abs(b) ** 2


def evolve_decohered(
    alpha: complex,
    beta: complex,
    phi: Optional[float],
    p_measure: float,
    t: int,
    n_trajectories: int,
    seed: int = 0,
    batch_size: int = 20000,
) -> DecoheredDistribution:
    """Average position distribution over ``n_trajectories`` measured walks.

    Returns the per-site mean and its standard error. With ``p_measure == 0``
    no randomness is involved and the result is the unitary distribution with
    zero error.
    """
    cfg = DecoherenceConfig(p_measure)
    if not (0 <= t <= MAX_STEPS):
        raise ValueError(f"t must lie in [0, {MAX_STEPS}], got {t}")
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    defect = NO_DEFECT if phi is None else PhaseDefect(phi)
    psi = initial_state(alpha, beta)

    if cfg.p_measure == 0:
        out = evolve(psi, defect, t)
        return DecoheredDistribution(
            out.positions, out.probabilities(), np.zeros(out.alpha.size), seed, n_trajectories, 0.0, t
        )

    total = np.zeros(2 * t + 1)
    total_sq = np.zeros(2 * t + 1)
    for start in range(0, n_trajectories, batch_size):
        idx = range(start, min(start + batch_size, n_trajectories))
        u = np.stack([trajectory_uniforms(seed, i, t) for i in idx]) if t else np.zeros((len(idx), 0, 2))
        probs = _run_batch(psi.alpha[0], psi.beta[0], defect.omega, cfg.p_measure, u)
        total += probs.sum(axis=0)
        total_sq += (probs**2).sum(axis=0)

    n = n_trajectories
    mean = total / n
    if n > 1:
        var = np.maximum(total_sq / n - mean**2, 0.0) * n / (n - 1)
        se = np.sqrt(var / n)
    else:
        se = np.full_like(mean, np.nan)
    return DecoheredDistribution(np.arange(-t, t + 1), mean, se, seed, n, cfg.p_measure, t)


def classical_reference(t: int) -> list[tuple[int, float]]:
    """Symmetric binomial walk after ``t`` unit steps."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return [(2 * k - t, math.comb(t, k) / 2**t) for k in range(t + 1)]
