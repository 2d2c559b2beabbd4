"""Backward non-symmetric stochastic Riccati recursion and feedback gains."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dgecon

from .compact import (
    RiccatiOperands,
    assemble,
    moment_operands,
    mv,
    op_Delta,
    op_Gamma,
    op_L,
    op_Phi,
    op_Theta,
    op_Upsilon,
    tr,
)
from .errors import AssumptionViolated, SingularUpsilon
from .filtration import Weight
from .model import GameSpec, validate

log = logging.getLogger(__name__)

DEFAULT_RCOND_MIN = 1e-10
DEFAULT_DELTA = 1e-8


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """Per-level arrays with a leading node axis.

    ``T`` and ``phi`` cover levels 0..N; the gains ``Pi`` ((m+l) x n) and
    ``Sigma`` ((m+l),) cover levels 0..N-1 and act on the state at their own
    level.  ``rcond`` holds the reciprocal 1-norm condition estimate of Upsilon
    at each node and ``gain_residual`` the re-substituted sup norm of
    ``Ups Pi + Gamma`` and ``Ups Sigma + Phi``.
    """

    T: tuple
    phi: tuple
    Pi: tuple
    Sigma: tuple
    rcond: tuple
    gain_residual: tuple
    operands: tuple

    @property
    def horizon(self) -> int:
        return len(self.Pi)

    def split_gains(self, m: int):
        """``(Pi_u, Pi_v, Sigma_u, Sigma_v)`` as per-level tuples."""
        return (
            tuple(P[:, :m] for P in self.Pi),
            tuple(P[:, m:] for P in self.Pi),
            tuple(S[:, :m] for S in self.Sigma),
            tuple(S[:, m:] for S in self.Sigma),
        )


@dataclass(frozen=True, eq=False)
class FGHCoefficients:
    f: tuple  # 2n
    g: tuple  # 2n x 2n
    h: tuple  # 2n x 2n


def _factor(U: np.ndarray, k: int, key: str, rcond_min: float):
    anorm = np.linalg.norm(U, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(U, check_finite=True)
        except ValueError:
            raise SingularUpsilon(k, key, float("nan")) from None
    if anorm == 0.0 or not np.all(np.isfinite(lu)):
        rcond = 0.0
    else:
        rcond, info = dgecon(lu, anorm, norm="1")
        rcond = float(rcond) if info == 0 else 0.0
    if not rcond >= rcond_min:
        raise SingularUpsilon(k, key, rcond)
    return (lu, piv), rcond


def sufficient_conditions(spec: GameSpec) -> list[str]:
    """Advisory sufficient conditions for an invertible Upsilon.

    Checks that the stacked control weight is positive definite and the
    stacked terminal weight blocks are positive semidefinite.  Only emits
    warnings; the rcond gate in ``solve_backward`` is what decides.
    """
    cc = assemble(spec)
    notes = []
    for k, lev in enumerate(cc.levels):
        for i, key in enumerate(spec.tree.keys(k)):
            if np.linalg.eigvalsh(0.5 * (lev.Lambda7[i] + lev.Lambda7[i].T))[0] <= 0:
                notes.append(f"stacked control weight not positive definite at k={k}, node {key!r}")
    n = spec.dims.n
    for i, key in enumerate(spec.tree.keys(spec.dims.N)):
        for blk, name in ((cc.G[i, :n], "G_N"), (cc.G[i, n:], "H_N")):
            if np.linalg.eigvalsh(0.5 * (blk + blk.T))[0] < -1e-10:
                notes.append(f"terminal weight {name} not positive semidefinite at leaf {key!r}")
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return notes


def solve_backward(
    spec: GameSpec,
    rcond_min: float = DEFAULT_RCOND_MIN,
    *,
    delta: float = DEFAULT_DELTA,
    check_assumptions: bool = True,
) -> RiccatiSolution:
    """Run the coupled recursion for (T, phi) from the leaves to the root.

    At each node: Pi = -Ups^{-1} Gamma, Sigma = -Ups^{-1} Phi,
    T = Delta + LT Pi, phi = Theta + LT Sigma.  Raises ``SingularUpsilon`` at
    the first node whose condition estimate falls below ``rcond_min``.
    """
    if check_assumptions:
        report = validate(spec, delta)
        if not report.passed:
            raise AssumptionViolated(report)
    tree, N = spec.tree, spec.dims.N
    cc = assemble(spec)

    T = [None] * (N + 1)
    phi = [None] * (N + 1)
    Pi, Sigma, rconds, resid, operands = [None] * N, [None] * N, [None] * N, [None] * N, [None] * N
    T[N] = cc.G.copy()
    phi[N] = cc.g.copy()
    for k in range(N - 1, -1, -1):
        lev = cc.levels[k]
        ops = moment_operands(tree, k, T[k + 1], phi[k + 1])
        Ups = op_Upsilon(lev, ops)
        Gam = op_Gamma(lev, ops)
        Dlt = op_Delta(lev, ops)
        LT = op_L(lev, ops)
        Tht = op_Theta(lev, ops, lev.b, lev.sigma)
        Ph = op_Phi(lev, ops, lev.b, lev.sigma)

        nk = tree.num_nodes(k)
        P_k = np.empty_like(Gam)
        S_k = np.empty_like(Ph)
        rc = np.empty(nk)
        res = np.empty(nk)
        for i, key in enumerate(tree.keys(k)):
            fac, rc[i] = _factor(Ups[i], k, key, rcond_min)
            rhs = np.column_stack([Gam[i], Ph[i]])
            sol = -scipy.linalg.lu_solve(fac, rhs)
            P_k[i], S_k[i] = sol[:, :-1], sol[:, -1]
            res[i] = np.max(np.abs(Ups[i] @ sol + rhs))
        T[k] = Dlt + LT @ P_k
        phi[k] = Tht + mv(LT, S_k)
        Pi[k], Sigma[k], rconds[k], resid[k], operands[k] = P_k, S_k, rc, res, ops
        log.debug("level %d: min rcond %.3e, max gain residual %.3e", k, rc.min(), res.max())

    return RiccatiSolution(tuple(T), tuple(phi), tuple(Pi), tuple(Sigma), tuple(rconds), tuple(resid), tuple(operands))


def extract_fgh(spec: GameSpec, sol: RiccatiSolution, rcond_min: float = DEFAULT_RCOND_MIN) -> FGHCoefficients:
    """Coefficients of the phi recursion phi_k = f + g E[phi'] + h E[phi' w]."""
    tree, cc = spec.tree, assemble(spec)
    fs, gs, hs = [], [], []
    for k, lev in enumerate(cc.levels):
        ops = moment_operands(tree, k, sol.T[k + 1], np.zeros_like(sol.phi[k + 1]))
        Ups = op_Upsilon(lev, ops)
        LT = op_L(lev, ops)
        # phi-free parts of Theta and Phi
        theta0 = op_Theta(lev, ops, lev.b, lev.sigma)
        phi0 = op_Phi(lev, ops, lev.b, lev.sigma)
        f = np.empty_like(theta0)
        g = np.empty(theta0.shape + theta0.shape[-1:])
        h = np.empty_like(g)
        for i, key in enumerate(tree.keys(k)):
            fac, _ = _factor(Ups[i], k, key, rcond_min)
            K1 = scipy.linalg.lu_solve(fac, lev.Lambda1[i].T)
            K3 = scipy.linalg.lu_solve(fac, lev.Lambda3[i].T)
            f[i] = theta0[i] - LT[i] @ scipy.linalg.lu_solve(fac, phi0[i])
            g[i] = lev.Atilde[i].T - LT[i] @ K1
            h[i] = lev.Dtilde[i].T - LT[i] @ K3
        fs.append(f)
        gs.append(g)
        hs.append(h)
    return FGHCoefficients(tuple(fs), tuple(gs), tuple(hs))


def reconstruct_phi(spec: GameSpec, fgh: FGHCoefficients) -> tuple:
    """Run the linear phi recursion from the terminal value using given coefficients."""
    tree, N = spec.tree, spec.dims.N
    phi = [None] * (N + 1)
    phi[N] = np.concatenate([spec["g"], spec["h"]], axis=-1)
    for k in range(N - 1, -1, -1):
        Ephi = tree.expect(phi[k + 1], k, Weight.ONE)
        Ephiw = tree.expect(phi[k + 1], k, Weight.OMEGA)
        phi[k] = fgh.f[k] + mv(fgh.g[k], Ephi) + mv(fgh.h[k], Ephiw)
    return tuple(phi)


def solve_single_player(spec: GameSpec) -> tuple:
    """Feedback gains of player 1 alone, with player 2 removed from the model.

    Standard stochastic LQ recursion on (K, kappa) with y1 = K x + kappa;
    written independently of the stacked two-player operators.  Returns
    ``(gains, offsets)`` per level with shapes ``(m, n)`` and ``(m,)``.
    """
    tree, N = spec.tree, spec.dims.N
    K = spec["G"].copy()
    kap = spec["g"].copy()
    gains, offsets = [None] * N, [None] * N
    for k in range(N - 1, -1, -1):
        A, B, D, E = spec["A"][k], spec["B"][k], spec["D"][k], spec["E"][k]
        b, s = spec["b"][k], spec["sigma"][k]
        Q, L, R, q, rho = spec["Q"][k], spec["L"][k], spec["R"][k], spec["q"][k], spec["rho"][k]
        EK = tree.expect(K, k)
        EKw = tree.expect(K, k, Weight.OMEGA)
        EKww = tree.expect(K, k, Weight.OMEGA_SQ)
        Ek = tree.expect(kap, k)
        Ekw = tree.expect(kap, k, Weight.OMEGA)
        # E[K' (A x + B u + b + (D x + E u + s) w)] and the w-weighted version
        Bt, Et, At, Dt = tr(B), tr(E), tr(A), tr(D)
        H_uu = R + Bt @ EK @ B + Bt @ EKw @ E + Et @ EKw @ B + Et @ EKww @ E
        H_ux = L + Bt @ EK @ A + Bt @ EKw @ D + Et @ EKw @ A + Et @ EKww @ D
        h_u = (rho + mv(Bt, mv(EK, b) + mv(EKw, s) + Ek) + mv(Et, mv(EKw, b) + mv(EKww, s) + Ekw))
        H_xx = Q + At @ EK @ A + At @ EKw @ D + Dt @ EKw @ A + Dt @ EKww @ D
        H_xu = tr(L) + At @ EK @ B + At @ EKw @ E + Dt @ EKw @ B + Dt @ EKww @ E
        h_x = q + mv(At, mv(EK, b) + mv(EKw, s) + Ek) + mv(Dt, mv(EKw, b) + mv(EKww, s) + Ekw)
        gain = -np.linalg.solve(H_uu, H_ux)
        off = -np.linalg.solve(H_uu, h_u[..., None])[..., 0]
        K = H_xx + H_xu @ gain
        kap = h_x + mv(H_xu, off)
        gains[k], offsets[k] = gain, off
    return tuple(gains), tuple(offsets)


def operands_at(spec: GameSpec, sol: RiccatiSolution, k: int) -> RiccatiOperands:
    return moment_operands(spec.tree, k, sol.T[k + 1], sol.phi[k + 1])

