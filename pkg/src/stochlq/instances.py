"""Small hand-solvable games used for regression and demonstration."""
from __future__ import annotations

import numpy as np

from .filtration import build_tree
from .model import Dims, GameSpec, make_spec

_SCALAR = Dims(n=1, m=1, l=1, N=1)


def symmetric_scalar() -> GameSpec:
    """Scalar game on one Rademacher step with unit weights and no noise channel.

    Equilibrium: u = v = -1/3, x_1 = 1/3, both costs 11/18.
    """
    tree = build_tree(1)
    one = np.eye(1)
    return make_spec(tree, _SCALAR, xi=[1.0], A=one, B=one, C=one, Q=one, P=one, R=one, S=one, G=one, H=one)


def noisy_control_scalar() -> GameSpec:
    """Like ``symmetric_scalar`` but player 1 also drives the noise and G_N = 1 + omega.

    The stacked Upsilon at the root is [[5, 2], [1, 2]]; equilibrium u = -1/4, v = -3/8.
    """
    tree = build_tree(1)
    one = np.eye(1)
    G = (1.0 + tree.omega[1]).reshape(-1, 1, 1)
    return make_spec(tree, _SCALAR, xi=[1.0], A=one, B=one, C=one, E=one, Q=one, P=one, R=one, S=one, G=G, H=one)


def singular_upsilon() -> GameSpec:
    """Convex game whose stacked Upsilon at the root is exactly [[2, 2], [2, 2]].

    On the two leaves the player-1 channel B + E w takes values (1, 2) and the
    player-2 channel C + F w takes (2, 1); player 1 is charged only on the
    first leaf and player 2 only on the second, so the cross terms of Upsilon
    exactly cancel its determinant.
    """
    tree = build_tree(1)
    up = tree.omega[1] > 0
    G = np.where(up, 2.0, 0.0).reshape(-1, 1, 1)
    H = np.where(up, 0.0, 2.0).reshape(-1, 1, 1)
    one = np.eye(1)
    return make_spec(
        tree, _SCALAR, xi=[1.0],
        B=[[1.5]], E=[[-0.5]], C=[[1.5]], F=[[0.5]],
        R=one, S=one, G=G, H=H,
    )


def zero_game(dims: Dims, branch_spec="rademacher") -> GameSpec:
    """All coefficients zero except R = S = I."""
    tree = build_tree(dims.N, branch_spec)
    return make_spec(tree, dims, R=np.eye(dims.m), S=np.eye(dims.l))


NAMED = {
    "symmetric_scalar": symmetric_scalar,
    "noisy_control_scalar": noisy_control_scalar,
    "singular_upsilon": singular_upsilon,
}
