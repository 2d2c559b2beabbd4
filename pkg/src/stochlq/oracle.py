"""Brute-force best responses over stacked node controls.

Each player's cost with the opponent frozen is an exact finite-dimensional
quadratic J(U) = c0 + g0'U + U'HU / 2.  Everything is assembled from direct
cost, derivative and second-variation evaluations on the simulator, never from
the Riccati recursion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IndefiniteHessian, OracleTooLarge
from .game import _player, control_width, cost, cost_homogeneous, gateaux
from .model import ControlPair, GameSpec

MAX_DIM = 512


@dataclass(frozen=True, eq=False)
class StackedQuadratic:
    player: int
    c0: float
    g0: np.ndarray
    H: np.ndarray
    index: tuple  # (level, node, component) per stacked coordinate

    @property
    def dim(self) -> int:
        return len(self.g0)

    def __call__(self, U: np.ndarray) -> float:
        U = np.asarray(U, dtype=float)
        return float(self.c0 + self.g0 @ U + 0.5 * U @ self.H @ U)


@dataclass(frozen=True)
class NashGap:
    gap_u: float
    gap_v: float
    cost_gap_1: float
    cost_gap_2: float

    def __iter__(self):
        return iter((self.gap_u, self.gap_v, self.cost_gap_1, self.cost_gap_2))

    def as_dict(self) -> dict:
        return {"gap_u": self.gap_u, "gap_v": self.gap_v,
                "cost_gap_1": self.cost_gap_1, "cost_gap_2": self.cost_gap_2}


def stacked_dim(spec: GameSpec, player) -> int:
    width = control_width(spec, player)
    return width * sum(spec.tree.num_nodes(k) for k in range(spec.dims.N))


def stack(levels) -> np.ndarray:
    return np.concatenate([np.asarray(a, dtype=float).ravel() for a in levels])


def unstack(spec: GameSpec, U: np.ndarray, player) -> tuple:
    width = control_width(spec, player)
    out, pos = [], 0
    for k in range(spec.dims.N):
        size = spec.tree.num_nodes(k) * width
        out.append(np.asarray(U[pos:pos + size], dtype=float).reshape(-1, width))
        pos += size
    return tuple(out)


def _index(spec: GameSpec, player) -> tuple:
    width = control_width(spec, player)
    return tuple((k, key, c) for k in range(spec.dims.N) for key in spec.tree.keys(k) for c in range(width))


def _basis(spec: GameSpec, player, i: int, j: int | None = None) -> tuple:
    e = np.zeros(stacked_dim(spec, player))
    e[i] += 1.0
    if j is not None:
        e[j] += 1.0
    return unstack(spec, e, player)


def assemble_quadratic(spec: GameSpec, fixed_other, player) -> StackedQuadratic:
    """Exact quadratic model of ``player``'s cost with the opponent's control fixed."""
    player = _player(player)
    M = stacked_dim(spec, player)
    if M > MAX_DIM:
        raise OracleTooLarge(f"stacked dimension {M} exceeds the oracle cap {MAX_DIM}")
    zeros = ControlPair.zeros(spec)
    base = zeros.with_player(3 - player, fixed_other)
    c0 = cost(spec, base, player)
    g0 = np.array([gateaux(spec, base, _basis(spec, player, i), player) for i in range(M)])
    diag = np.array([cost_homogeneous(spec, _basis(spec, player, i), player) for i in range(M)])
    H = np.diag(diag)
    for i in range(M):
        for j in range(i + 1, M):
            H[i, j] = 0.5 * (cost_homogeneous(spec, _basis(spec, player, i, j), player) - diag[i] - diag[j])
            H[j, i] = H[i, j]
    return StackedQuadratic(player, c0, g0, H, _index(spec, player))


def minimize(quad: StackedQuadratic) -> np.ndarray:
    try:
        factor = scipy.linalg.cho_factor(quad.H, lower=True)
    except np.linalg.LinAlgError:
        raise IndefiniteHessian(f"player {quad.player}: stacked Hessian is not positive definite") from None
    return -scipy.linalg.cho_solve(factor, quad.g0)


def best_response(spec: GameSpec, fixed_other, player) -> tuple:
    """Unique minimizer of ``player``'s cost given the opponent's control."""
    player = _player(player)
    return unstack(spec, minimize(assemble_quadratic(spec, fixed_other, player)), player)


def nash_gap(spec: GameSpec, candidate: ControlPair) -> NashGap:
    """Distance of each player's control from its best response, and the cost improvement."""
    candidate.check(spec)
    gaps, cost_gaps = [], []
    for player in (1, 2):
        other = candidate.player(3 - player)
        br = best_response(spec, other, player)
        gaps.append(float(np.max(np.abs(stack(candidate.player(player)) - stack(br)))))
        J_cand = cost(spec, candidate, player)
        J_best = cost(spec, candidate.with_player(player, br), player)
        cost_gaps.append(J_cand - J_best)
    return NashGap(gaps[0], gaps[1], cost_gaps[0], cost_gaps[1])
