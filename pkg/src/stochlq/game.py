"""Forward/backward simulation on the tree and the first-order objects built on it.

Players are numbered 1 and 2.  A "direction" for player 1 is a tuple of
per-level arrays shaped like ``controls.u``; for player 2 like ``controls.v``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compact import mv, tr
from .errors import DimensionMismatch, NonAdaptedProcess
from .filtration import Weight
from .model import ControlPair, GameSpec

# (terminal quad, terminal lin, state quad, cross, control quad, state lin, control lin)
_WEIGHTS = {1: ("G", "g", "Q", "L", "R", "q", "rho"), 2: ("H", "h", "P", "M", "S", "p", "theta")}
# (drift channel, noise channel)
_CHANNELS = {1: ("B", "E"), 2: ("C", "F")}


@dataclass(frozen=True, eq=False)
class Trajectory:
    x: tuple
    controls: ControlPair
    y1: tuple
    y2: tuple
    Y: tuple


def _player(player) -> int:
    p = {1: 1, 2: 2, "one": 1, "two": 2, "One": 1, "Two": 2}.get(player)
    if p is None:
        raise ValueError(f"player must be 1 or 2, got {player!r}")
    return p


def control_width(spec: GameSpec, player) -> int:
    return spec.dims.m if _player(player) == 1 else spec.dims.l


def _check_direction(spec: GameSpec, w, player: int) -> tuple:
    width = control_width(spec, player)
    if len(w) != spec.dims.N:
        raise NonAdaptedProcess(f"direction given on {len(w)} levels, need {spec.dims.N}")
    out = []
    for k, a in enumerate(w):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != spec.tree.num_nodes(k):
            raise NonAdaptedProcess(f"direction at level {k} has shape {a.shape}")
        if a.shape[1] != width:
            raise DimensionMismatch(f"direction at level {k} has width {a.shape[1]}, expected {width}")
        out.append(a)
    return tuple(out)


def _rollout(spec: GameSpec, u, v, x0, homogeneous: bool) -> tuple:
    tree = spec.tree
    x = [np.broadcast_to(np.asarray(x0, dtype=float), (1, spec.dims.n)).copy()]
    for k in range(spec.dims.N):
        xk = x[k]
        drift = mv(spec["A"][k], xk) + mv(spec["B"][k], u[k]) + mv(spec["C"][k], v[k])
        noise = mv(spec["D"][k], xk) + mv(spec["E"][k], u[k]) + mv(spec["F"][k], v[k])
        if not homogeneous:
            drift = drift + spec["b"][k]
            noise = noise + spec["sigma"][k]
        om = tree.omega[k + 1][:, None]
        x.append(tree.lift(drift, k) + tree.lift(noise, k) * om)
    return tuple(x)


def simulate_forward(spec: GameSpec, controls: ControlPair) -> tuple:
    """State on every level from the full (inhomogeneous) dynamics started at xi."""
    controls.check(spec)
    return _rollout(spec, controls.u, controls.v, spec.xi, homogeneous=False)


def variational_state(spec: GameSpec, w, player) -> tuple:
    """State of the homogeneous system from 0 when only ``player`` acts, with control ``w``."""
    player = _player(player)
    w = _check_direction(spec, w, player)
    zeros = ControlPair.zeros(spec)
    u, v = (w, zeros.v) if player == 1 else (zeros.u, w)
    return _rollout(spec, u, v, np.zeros(spec.dims.n), homogeneous=True)


def solve_adjoints(spec: GameSpec, x: tuple, controls: ControlPair) -> tuple:
    """Backward adjoint recursions for both players; returns ``(y1, y2, Y)``."""
    controls.check(spec)
    tree, N = spec.tree, spec.dims.N
    out = []
    for player, ctrl in ((1, controls.u), (2, controls.v)):
        Gn, gn, Qn, Ln, _, qn, _ = _WEIGHTS[player]
        y = [None] * (N + 1)
        y[N] = mv(spec[Gn], x[N]) + spec[gn]
        for k in range(N - 1, -1, -1):
            Ey = tree.expect(y[k + 1], k, Weight.ONE)
            Eyw = tree.expect(y[k + 1], k, Weight.OMEGA)
            y[k] = (mv(tr(spec["A"][k]), Ey) + mv(tr(spec["D"][k]), Eyw)
                    + mv(spec[Qn][k], x[k]) + mv(tr(spec[Ln][k]), ctrl[k]) + spec[qn][k])
        out.append(tuple(y))
    y1, y2 = out
    Y = tuple(np.concatenate([a, b], axis=-1) for a, b in zip(y1, y2))
    return y1, y2, Y


def trajectory(spec: GameSpec, controls: ControlPair) -> Trajectory:
    x = simulate_forward(spec, controls)
    y1, y2, Y = solve_adjoints(spec, x, controls)
    return Trajectory(x, controls, y1, y2, Y)


def simulate_feedback(spec: GameSpec, sol) -> Trajectory:
    """Closed-loop rollout with pi_k = Pi_k x_k + Sigma_k, then the adjoints."""
    tree, N, m = spec.tree, spec.dims.N, spec.dims.m
    x = [spec.xi[None, :].copy()]
    us, vs = [], []
    for k in range(N):
        pi = mv(sol.Pi[k], x[k]) + sol.Sigma[k]
        u, v = pi[:, :m], pi[:, m:]
        us.append(u)
        vs.append(v)
        drift = mv(spec["A"][k], x[k]) + mv(spec["B"][k], u) + mv(spec["C"][k], v) + spec["b"][k]
        noise = mv(spec["D"][k], x[k]) + mv(spec["E"][k], u) + mv(spec["F"][k], v) + spec["sigma"][k]
        x.append(tree.lift(drift, k) + tree.lift(noise, k) * tree.omega[k + 1][:, None])
    controls = ControlPair(tuple(us), tuple(vs))
    y1, y2, Y = solve_adjoints(spec, tuple(x), controls)
    return Trajectory(tuple(x), controls, y1, y2, Y)


def _expect_all(spec: GameSpec, per_level, terminal) -> float:
    """E[terminal + sum_k per_level[k]] for scalar node values."""
    tree = spec.tree
    total = float(tree.node_prob[spec.dims.N] @ terminal)
    for k, vals in enumerate(per_level):
        total += float(tree.node_prob[k] @ vals)
    return total


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def cost(spec: GameSpec, controls: ControlPair, player, x: tuple | None = None) -> float:
    """Exact expected quadratic cost of ``player`` (with the one-half factor)."""
    player = _player(player)
    if x is None:
        x = simulate_forward(spec, controls)
    Gn, gn, Qn, Ln, Rn, qn, rn = _WEIGHTS[player]
    own = controls.player(player)
    N = spec.dims.N
    terminal = _dot(mv(spec[Gn], x[N]), x[N]) + 2 * _dot(spec[gn], x[N])
    running = []
    for k in range(N):
        xk, uk = x[k], own[k]
        running.append(
            _dot(mv(spec[Qn][k], xk), xk)
            + 2 * _dot(mv(tr(spec[Ln][k]), uk), xk)
            + _dot(mv(spec[Rn][k], uk), uk)
            + 2 * _dot(spec[qn][k], xk)
            + 2 * _dot(spec[rn][k], uk)
        )
    return 0.5 * _expect_all(spec, running, terminal)


def cost_homogeneous(spec: GameSpec, w, player) -> float:
    """Second variation of ``player``'s cost along its own direction ``w``.

    This is E[<G x, x>_N + sum(<Q x, x> + 2<L' w, x> + <R w, w>)] on the
    homogeneous state driven by ``w`` alone, *without* a one-half factor, so
    that J(u + e w) = J(u) + e <J'(u), w> + (e^2 / 2) * cost_homogeneous(w).
    """
    player = _player(player)
    w = _check_direction(spec, w, player)
    xw = variational_state(spec, w, player)
    Gn, _, Qn, Ln, Rn, _, _ = _WEIGHTS[player]
    N = spec.dims.N
    terminal = _dot(mv(spec[Gn], xw[N]), xw[N])
    running = [
        _dot(mv(spec[Qn][k], xw[k]), xw[k]) + 2 * _dot(mv(tr(spec[Ln][k]), w[k]), xw[k]) + _dot(mv(spec[Rn][k], w[k]), w[k])
        for k in range(N)
    ]
    return _expect_all(spec, running, terminal)


def gateaux(spec: GameSpec, controls: ControlPair, direction, player, x: tuple | None = None) -> float:
    """Directional derivative of ``player``'s cost along its own ``direction``."""
    player = _player(player)
    w = _check_direction(spec, direction, player)
    if x is None:
        x = simulate_forward(spec, controls)
    xw = variational_state(spec, w, player)
    Gn, gn, Qn, Ln, Rn, qn, rn = _WEIGHTS[player]
    own = controls.player(player)
    N = spec.dims.N
    terminal = _dot(mv(spec[Gn], x[N]) + spec[gn], xw[N])
    running = []
    for k in range(N):
        state_grad = mv(spec[Qn][k], x[k]) + mv(tr(spec[Ln][k]), own[k]) + spec[qn][k]
        ctrl_grad = mv(spec[Ln][k], x[k]) + mv(spec[Rn][k], own[k]) + spec[rn][k]
        running.append(_dot(state_grad, xw[k]) + _dot(ctrl_grad, w[k]))
    return _expect_all(spec, running, terminal)


def _adjoint_moments(spec: GameSpec, y: tuple, k: int):
    return spec.tree.expect(y[k + 1], k, Weight.ONE), spec.tree.expect(y[k + 1], k, Weight.OMEGA)


def stationarity_residuals(spec: GameSpec, traj: Trajectory) -> tuple:
    """Per-level first-order residuals ``(res1, res2)`` of both players."""
    out = []
    for player, y in ((1, traj.y1), (2, traj.y2)):
        Bn, En = _CHANNELS[player]
        _, _, _, Ln, Rn, _, rn = _WEIGHTS[player]
        own = traj.controls.player(player)
        res = []
        for k in range(spec.dims.N):
            Ey, Eyw = _adjoint_moments(spec, y, k)
            res.append(mv(tr(spec[Bn][k]), Ey) + mv(tr(spec[En][k]), Eyw)
                       + mv(spec[Ln][k], traj.x[k]) + mv(spec[Rn][k], own[k]) + spec[rn][k])
        out.append(tuple(res))
    return tuple(out)


def sup_norm(levels) -> float:
    return max((float(np.max(np.abs(a))) for a in levels if np.size(a)), default=0.0)


def explicit_controls(spec: GameSpec, traj: Trajectory) -> ControlPair:
    """Controls recovered from the adjoints by solving each stationarity condition."""
    out = []
    for player, y in ((1, traj.y1), (2, traj.y2)):
        Bn, En = _CHANNELS[player]
        _, _, _, Ln, Rn, _, rn = _WEIGHTS[player]
        ctrl = []
        for k in range(spec.dims.N):
            Ey, Eyw = _adjoint_moments(spec, y, k)
            rhs = mv(tr(spec[Bn][k]), Ey) + mv(tr(spec[En][k]), Eyw) + mv(spec[Ln][k], traj.x[k]) + spec[rn][k]
            ctrl.append(-np.linalg.solve(spec[Rn][k], rhs[..., None])[..., 0])
        out.append(tuple(ctrl))
    return ControlPair(*out)


def duality_sides(spec: GameSpec, traj: Trajectory, w, player=1) -> tuple[float, float]:
    """Both sides of the summation-by-parts identity along direction ``w``.

    left  = E<y_N, x^w_N> + E sum <Q x + L'u + q, x^w_k>
    right = E sum <B' E[y'|F] + E' E[y' w|F], w_k>
    """
    player = _player(player)
    w = _check_direction(spec, w, player)
    xw = variational_state(spec, w, player)
    y = traj.y1 if player == 1 else traj.y2
    Bn, En = _CHANNELS[player]
    _, _, Qn, Ln, _, qn, _ = _WEIGHTS[player]
    own = traj.controls.player(player)
    N = spec.dims.N
    left_run, right_run = [], []
    for k in range(N):
        grad = mv(spec[Qn][k], traj.x[k]) + mv(tr(spec[Ln][k]), own[k]) + spec[qn][k]
        left_run.append(_dot(grad, xw[k]))
        Ey, Eyw = _adjoint_moments(spec, y, k)
        right_run.append(_dot(mv(tr(spec[Bn][k]), Ey) + mv(tr(spec[En][k]), Eyw), w[k]))
    left = _expect_all(spec, left_run, _dot(y[N], xw[N]))
    right = _expect_all(spec, right_run, np.zeros(spec.tree.num_nodes(N)))
    return left, right


def duality_identity_gap(spec: GameSpec, traj: Trajectory, w, player=1) -> float:
    left, right = duality_sides(spec, traj, w, player)
    return abs(left - right)


def ansatz_residual(traj: Trajectory, sol) -> tuple:
    """Per-level sup norm of Y - T x - phi at each node."""
    return tuple(
        np.max(np.abs(Y - mv(T, x) - phi), axis=-1)
        for Y, T, x, phi in zip(traj.Y, sol.T, traj.x, sol.phi)
    )


def random_direction(spec: GameSpec, player, rng: np.random.Generator, scale: float = 1.0) -> tuple:
    width = control_width(spec, player)
    return tuple(rng.uniform(-scale, scale, size=(spec.tree.num_nodes(k), width)) for k in range(spec.dims.N))


def random_controls(spec: GameSpec, rng: np.random.Generator, scale: float = 1.0) -> ControlPair:
    return ControlPair(random_direction(spec, 1, rng, scale), random_direction(spec, 2, rng, scale))


# ---------------------------------------------------------------------------
# certification

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        v = self.value if np.isfinite(self.value) else None
        return {"name": self.name, "value": v, "tol": self.tol, "passed": self.passed}


@dataclass
class CertificationReport:
    checks: list
    skipped: list

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "verdict": "pass" if self.verdict else "fail",
            "failing": self.failing(),
            "checks": [c.as_dict() for c in self.checks],
            "skipped": list(self.skipped),
        }


def _check(name: str, value: float, tol: float) -> Check:
    value = float(value)
    return Check(name, value, tol, bool(value <= tol))


def closed_loop_check(spec: GameSpec, sol) -> dict:
    """Re-substitute the gains into the four closed-loop relations.

    Gains are indexed by the level at which they act, so the operators built
    from (T, phi) at level k+1 are paired with Pi_k and Sigma_k.  Returns
    per-level nodewise residual arrays under the keys ``lyapunov``,
    ``gain_stationarity``, ``offset_recursion`` and ``offset_consistency``.
    """
    from .compact import assemble, moment_operands, op_Delta, op_Gamma, op_L, op_Phi, op_Theta, op_Upsilon

    cc = assemble(spec)
    out = {"lyapunov": [], "gain_stationarity": [], "offset_recursion": [], "offset_consistency": []}
    for k, lev in enumerate(cc.levels):
        ops = moment_operands(spec.tree, k, sol.T[k + 1], sol.phi[k + 1])
        Ups, LT = op_Upsilon(lev, ops), op_L(lev, ops)
        Pi, Sg = sol.Pi[k], sol.Sigma[k]
        r = {
            "lyapunov": sol.T[k] - op_Delta(lev, ops) - LT @ Pi,
            "gain_stationarity": op_Gamma(lev, ops) + Ups @ Pi,
            "offset_recursion": sol.phi[k] - op_Theta(lev, ops, lev.b, lev.sigma) - mv(LT, Sg),
            "offset_consistency": op_Phi(lev, ops, lev.b, lev.sigma) + mv(Ups, Sg),
        }
        for key, val in r.items():
            out[key].append(np.max(np.abs(val.reshape(val.shape[0], -1)), axis=1))
    return out


def xi_independence(spec: GameSpec, sol, xi_other, rcond_min: float = 1e-10) -> tuple[float, float]:
    """Re-solve from another initial state; return (gain difference, stationarity residual).

    Identical gains plus stationarity of the feedback trajectory from the new
    initial state is a sufficient check that the feedback does not depend on xi.
    """
    from .riccati import solve_backward

    other = spec.replace(xi=np.asarray(xi_other, dtype=float))
    sol2 = solve_backward(other, rcond_min, check_assumptions=False)
    diff = max(sup_norm([a - b for a, b in zip(sol.Pi, sol2.Pi)]),
               sup_norm([a - b for a, b in zip(sol.Sigma, sol2.Sigma)]))
    traj = simulate_feedback(other, sol)
    r1, r2 = stationarity_residuals(other, traj)
    return diff, max(sup_norm(r1), sup_norm(r2))


def _first_order_checks(spec, traj, rng, tol, n_directions) -> list:
    checks = []
    r1, r2 = stationarity_residuals(spec, traj)
    checks.append(_check("stationarity_player1", sup_norm(r1), tol))
    checks.append(_check("stationarity_player2", sup_norm(r2), tol))
    for player in (1, 2):
        J = cost(spec, traj.controls, player, traj.x)
        scale = max(1.0, abs(J))
        worst_g, worst_d = 0.0, 0.0
        for _ in range(n_directions):
            w = random_direction(spec, player, rng)
            worst_g = max(worst_g, abs(gateaux(spec, traj.controls, w, player, traj.x)))
            left, right = duality_sides(spec, traj, w, player)
            worst_d = max(worst_d, abs(left - right) / max(1.0, abs(left), abs(right)))
        checks.append(_check(f"gateaux_player{player}", worst_g / scale, tol))
        checks.append(_check(f"duality_player{player}", worst_d, tol))
    return checks


def _oracle_checks(spec, controls, oracle_results, oracle_tol, skipped) -> list:
    from .errors import OracleTooLarge
    from .oracle import nash_gap

    if oracle_results is None:
        try:
            oracle_results = nash_gap(spec, controls)
        except OracleTooLarge as exc:
            skipped.append(f"oracle: {exc}")
            return []
    gap_u, gap_v, cg1, cg2 = oracle_results
    return [
        _check("nash_gap_u", gap_u, oracle_tol),
        _check("nash_gap_v", gap_v, oracle_tol),
        Check("cost_gap_player1", float(cg1), oracle_tol, bool(-1e-10 <= cg1 <= oracle_tol)),
        Check("cost_gap_player2", float(cg2), oracle_tol, bool(-1e-10 <= cg2 <= oracle_tol)),
    ]


def certify(
    spec: GameSpec,
    sol,
    oracle_results=None,
    *,
    tol: float = 1e-8,
    oracle_tol: float = 1e-6,
    seed: int = 0,
    n_directions: int = 16,
    use_oracle: bool = True,
    traj: Trajectory | None = None,
) -> CertificationReport:
    """Aggregate every first-order, closed-loop and oracle certificate into one verdict."""
    rng = np.random.default_rng(seed)
    if traj is None:
        traj = simulate_feedback(spec, sol)
    skipped: list = []
    checks = [_check("gain_residual", sup_norm(sol.gain_residual), tol)]
    checks += _first_order_checks(spec, traj, rng, tol, n_directions)
    checks.append(_check("ansatz", sup_norm(ansatz_residual(traj, sol)), tol))
    for key, levels in closed_loop_check(spec, sol).items():
        checks.append(_check(f"closed_loop_{key}", sup_norm(levels), tol))
    xi2 = spec.xi + rng.uniform(-1.0, 1.0, size=spec.xi.shape)
    diff, stat = xi_independence(spec, sol, xi2)
    checks.append(_check("xi_independence_gains", diff, 0.0))
    checks.append(_check("xi_independence_stationarity", stat, tol))
    if use_oracle:
        checks += _oracle_checks(spec, traj.controls, oracle_results, oracle_tol, skipped)
    else:
        skipped.append("oracle: disabled")
    return CertificationReport(checks, skipped)


def certify_controls(
    spec: GameSpec,
    controls: ControlPair,
    *,
    tol: float = 1e-8,
    oracle_tol: float = 1e-6,
    seed: int = 0,
    n_directions: int = 16,
    use_oracle: bool = True,
) -> CertificationReport:
    """Certify an externally supplied control pair (no Riccati solution needed)."""
    rng = np.random.default_rng(seed)
    traj = trajectory(spec, controls)
    skipped: list = []
    checks = _first_order_checks(spec, traj, rng, tol, n_directions)
    if use_oracle:
        checks += _oracle_checks(spec, controls, None, oracle_tol, skipped)
    else:
        skipped.append("oracle: disabled")
    return CertificationReport(checks, skipped)
