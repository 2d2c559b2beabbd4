"""Stacked two-player coefficients and the node-level Riccati operators.

Every array carries a leading node axis; the operators broadcast over it, so
they work equally on one node (no leading axis) or on a whole level.

Operator conventions (``ET``, ``ETw``, ``ETww`` are the conditional moments
E[T'], E[T' w], E[T' w^2] of the next-level T, and ``Ephi``, ``Ephiw`` those
of phi)::

    Delta  = Lam5 + At' ET A + At' ETw D + Dt' ETw A + Dt' ETww D
    LT     = Lam6' + At' ET Lam2 + At' ETw Lam4 + Dt' ETw Lam2 + Dt' ETww Lam4
    Ups    = Lam7 + Lam1' ET Lam2 + Lam1' ETw Lam4 + Lam3' ETw Lam2 + Lam3' ETww Lam4
    Gamma  = Lam6 In + Lam1' ET A + Lam3' ETw A + Lam1' ETw D + Lam3' ETww D
    Theta  = lam1 + At' (ET b + ETw s + Ephi) + Dt' (ETw b + ETww s + Ephiw)
    Phi    = lam2 + Lam1' (ET b + ETw s + Ephi) + Lam3' (ETw b + ETww s + Ephiw)

``LT`` is the transpose of the cross operator, i.e. the coefficient of the
stacked control in the adjoint recursion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .filtration import ScenarioTree, Weight
from .model import GameSpec


def tr(X: np.ndarray) -> np.ndarray:
    return np.swapaxes(X, -1, -2)


def mv(X: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Batched matrix-vector product."""
    return (X @ x[..., None])[..., 0]


def blockdiag(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Batched ``[[X, 0], [0, Y]]``."""
    batch = X.shape[:-2]
    (a, b), (c, d) = X.shape[-2:], Y.shape[-2:]
    out = np.zeros(batch + (a + c, b + d))
    out[..., :a, :b] = X
    out[..., a:, b:] = Y
    return out


@dataclass(frozen=True, eq=False)
class CompactLevel:
    """Stacked coefficients on the nodes of one level ``k < N``."""

    Lambda1: np.ndarray  # blockdiag(B, C)      2n x (m+l)
    Lambda2: np.ndarray  # [B C]                 n x (m+l)
    Lambda3: np.ndarray  # blockdiag(E, F)      2n x (m+l)
    Lambda4: np.ndarray  # [E F]                 n x (m+l)
    Lambda5: np.ndarray  # [Q; P]               2n x n
    Lambda6: np.ndarray  # blockdiag(L, M)   (m+l) x 2n
    Lambda7: np.ndarray  # blockdiag(R, S)   (m+l) x (m+l)
    Atilde: np.ndarray
    Dtilde: np.ndarray
    lambda1: np.ndarray  # [q; p]
    lambda2: np.ndarray  # [rho; theta]
    boldIn: np.ndarray   # [I; I]
    A: np.ndarray
    D: np.ndarray
    b: np.ndarray
    sigma: np.ndarray

    def node(self, i: int) -> "CompactLevel":
        return CompactLevel(*(getattr(self, f)[i] if f != "boldIn" else self.boldIn
                              for f in self.__dataclass_fields__))


@dataclass(frozen=True, eq=False)
class CompactCoefficients:
    levels: tuple  # CompactLevel for k = 0..N-1
    G: np.ndarray  # [G_N; H_N] on the leaves, 2n x n
    g: np.ndarray  # [g_N; h_N] on the leaves, 2n

    @property
    def boldIn(self) -> np.ndarray:
        return self.levels[0].boldIn


@dataclass(frozen=True, eq=False)
class RiccatiOperands:
    ET: np.ndarray
    ETw: np.ndarray
    ETww: np.ndarray
    Ephi: np.ndarray
    Ephiw: np.ndarray

    def node(self, i: int) -> "RiccatiOperands":
        return RiccatiOperands(self.ET[i], self.ETw[i], self.ETww[i], self.Ephi[i], self.Ephiw[i])


def assemble(spec: GameSpec) -> CompactCoefficients:
    n = spec.dims.n
    In = np.vstack([np.eye(n), np.eye(n)])
    levels = []
    for k in range(spec.dims.N):
        c = {name: spec[name][k] for name in
             ("A", "B", "C", "D", "E", "F", "b", "sigma", "Q", "L", "R", "q", "rho", "P", "M", "S", "p", "theta")}
        levels.append(CompactLevel(
            Lambda1=blockdiag(c["B"], c["C"]),
            Lambda2=np.concatenate([c["B"], c["C"]], axis=-1),
            Lambda3=blockdiag(c["E"], c["F"]),
            Lambda4=np.concatenate([c["E"], c["F"]], axis=-1),
            Lambda5=np.concatenate([c["Q"], c["P"]], axis=-2),
            Lambda6=blockdiag(c["L"], c["M"]),
            Lambda7=blockdiag(c["R"], c["S"]),
            Atilde=blockdiag(c["A"], c["A"]),
            Dtilde=blockdiag(c["D"], c["D"]),
            lambda1=np.concatenate([c["q"], c["p"]], axis=-1),
            lambda2=np.concatenate([c["rho"], c["theta"]], axis=-1),
            boldIn=In,
            A=c["A"], D=c["D"], b=c["b"], sigma=c["sigma"],
        ))
    G = np.concatenate([spec["G"], spec["H"]], axis=-2)
    g = np.concatenate([spec["g"], spec["h"]], axis=-1)
    return CompactCoefficients(tuple(levels), G, g)


def moment_operands(tree: ScenarioTree, level: int, T_next: np.ndarray, phi_next: np.ndarray) -> RiccatiOperands:
    """The five conditional moments of (T, phi) at ``level + 1`` seen from ``level``."""
    return RiccatiOperands(
        ET=tree.expect(T_next, level, Weight.ONE),
        ETw=tree.expect(T_next, level, Weight.OMEGA),
        ETww=tree.expect(T_next, level, Weight.OMEGA_SQ),
        Ephi=tree.expect(phi_next, level, Weight.ONE),
        Ephiw=tree.expect(phi_next, level, Weight.OMEGA),
    )


def _check(cc: CompactLevel, ops: RiccatiOperands) -> None:
    n2 = cc.Atilde.shape[-1]
    n = cc.A.shape[-1]
    for name in ("ET", "ETw", "ETww"):
        if getattr(ops, name).shape[-2:] != (n2, n):
            raise DimensionMismatch(f"{name} has shape {getattr(ops, name).shape}, expected (..., {n2}, {n})")
    for name in ("Ephi", "Ephiw"):
        if getattr(ops, name).shape[-1:] != (n2,):
            raise DimensionMismatch(f"{name} has shape {getattr(ops, name).shape}")


def op_Delta(cc: CompactLevel, ops: RiccatiOperands) -> np.ndarray:
    _check(cc, ops)
    At, Dt = tr(cc.Atilde), tr(cc.Dtilde)
    return (cc.Lambda5 + At @ ops.ET @ cc.A + At @ ops.ETw @ cc.D
            + Dt @ ops.ETw @ cc.A + Dt @ ops.ETww @ cc.D)


def op_L(cc: CompactLevel, ops: RiccatiOperands) -> np.ndarray:
    """Transposed cross operator, shape 2n x (m+l)."""
    _check(cc, ops)
    At, Dt = tr(cc.Atilde), tr(cc.Dtilde)
    return (tr(cc.Lambda6) + At @ ops.ET @ cc.Lambda2 + At @ ops.ETw @ cc.Lambda4
            + Dt @ ops.ETw @ cc.Lambda2 + Dt @ ops.ETww @ cc.Lambda4)


def op_Upsilon(cc: CompactLevel, ops: RiccatiOperands) -> np.ndarray:
    _check(cc, ops)
    L1, L3 = tr(cc.Lambda1), tr(cc.Lambda3)
    return (cc.Lambda7 + L1 @ ops.ET @ cc.Lambda2 + L1 @ ops.ETw @ cc.Lambda4
            + L3 @ ops.ETw @ cc.Lambda2 + L3 @ ops.ETww @ cc.Lambda4)


def op_Gamma(cc: CompactLevel, ops: RiccatiOperands) -> np.ndarray:
    _check(cc, ops)
    L1, L3 = tr(cc.Lambda1), tr(cc.Lambda3)
    return (cc.Lambda6 @ cc.boldIn + L1 @ ops.ET @ cc.A + L3 @ ops.ETw @ cc.A
            + L1 @ ops.ETw @ cc.D + L3 @ ops.ETww @ cc.D)


def _affine_terms(ops: RiccatiOperands, b: np.ndarray, sigma: np.ndarray):
    first = mv(ops.ET, b) + mv(ops.ETw, sigma) + ops.Ephi
    second = mv(ops.ETw, b) + mv(ops.ETww, sigma) + ops.Ephiw
    return first, second


def op_Theta(cc: CompactLevel, ops: RiccatiOperands, b: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    _check(cc, ops)
    first, second = _affine_terms(ops, b, sigma)
    return cc.lambda1 + mv(tr(cc.Atilde), first) + mv(tr(cc.Dtilde), second)


def op_Phi(cc: CompactLevel, ops: RiccatiOperands, b: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    _check(cc, ops)
    first, second = _affine_terms(ops, b, sigma)
    return cc.lambda2 + mv(tr(cc.Lambda1), first) + mv(tr(cc.Lambda3), second)


def all_operators(cc: CompactLevel, ops: RiccatiOperands) -> dict[str, np.ndarray]:
    return {
        "Delta": op_Delta(cc, ops),
        "LT": op_L(cc, ops),
        "Upsilon": op_Upsilon(cc, ops),
        "Gamma": op_Gamma(cc, ops),
        "Theta": op_Theta(cc, ops, cc.b, cc.sigma),
        "Phi": op_Phi(cc, ops, cc.b, cc.sigma),
    }
