"""Game data: dimensions, adapted coefficients, assumption checks, test instances."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DimensionMismatch, InvalidSpec, NonAdaptedProcess
from .filtration import ScenarioTree, path_key

PSD_TOL = 1e-10
STRICT_TOL = 1e-12
SYM_TOL = 1e-12

DYNAMICS_FIELDS = ("A", "B", "C", "D", "E", "F", "b", "sigma")
RUNNING_COST_FIELDS = ("Q", "L", "R", "q", "rho", "P", "M", "S", "p", "theta")
TERMINAL_FIELDS = ("G", "g", "H", "h")
ALL_FIELDS = DYNAMICS_FIELDS + RUNNING_COST_FIELDS + TERMINAL_FIELDS


@dataclass(frozen=True)
class Dims:
    n: int
    m: int
    l: int
    N: int

    def __post_init__(self):
        for name in ("n", "m", "l", "N"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidSpec(f"dimension {name} must be an integer >= 1, got {v!r}")

    def node_shapes(self) -> dict[str, tuple[int, ...]]:
        n, m, l = self.n, self.m, self.l
        return {
            "A": (n, n), "B": (n, m), "C": (n, l), "D": (n, n), "E": (n, m), "F": (n, l),
            "b": (n,), "sigma": (n,),
            "Q": (n, n), "L": (m, n), "R": (m, m), "q": (n,), "rho": (m,),
            "P": (n, n), "M": (l, n), "S": (l, l), "p": (n,), "theta": (l,),
            "G": (n, n), "g": (n,), "H": (n, n), "h": (n,),
        }


# Per-level tuples: entry k has shape (tree.num_nodes(k), *node_shape).
@dataclass(frozen=True, eq=False)
class DynamicsCoefficients:
    A: tuple
    B: tuple
    C: tuple
    D: tuple
    E: tuple
    F: tuple
    b: tuple
    sigma: tuple


@dataclass(frozen=True, eq=False)
class CostCoefficients:
    """Running weights per level plus terminal weights on the leaves.

    ``G, g`` are player 1's terminal weights (G_N, g_N); ``H, h`` player 2's.
    """

    Q: tuple
    L: tuple
    R: tuple
    q: tuple
    rho: tuple
    P: tuple
    M: tuple
    S: tuple
    p: tuple
    theta: tuple
    G: np.ndarray
    g: np.ndarray
    H: np.ndarray
    h: np.ndarray


@dataclass(frozen=True, eq=False)
class GameSpec:
    dims: Dims
    tree: ScenarioTree
    dynamics: DynamicsCoefficients
    costs: CostCoefficients
    xi: np.ndarray

    def __post_init__(self):
        if self.tree.horizon != self.dims.N:
            raise DimensionMismatch(f"tree horizon {self.tree.horizon} != N = {self.dims.N}")
        shapes = self.dims.node_shapes()
        for name in DYNAMICS_FIELDS + RUNNING_COST_FIELDS:
            levels = self[name]
            if len(levels) != self.dims.N:
                raise NonAdaptedProcess(f"{name} given on {len(levels)} levels, need {self.dims.N}")
            for k, arr in enumerate(levels):
                _check_level(name, arr, self.tree.num_nodes(k), shapes[name], k)
        for name in TERMINAL_FIELDS:
            _check_level(name, self[name], self.tree.num_nodes(self.dims.N), shapes[name], self.dims.N)
        if np.shape(self.xi) != (self.dims.n,):
            raise DimensionMismatch(f"xi has shape {np.shape(self.xi)}, expected ({self.dims.n},)")

    def __getitem__(self, name: str):
        if name in DYNAMICS_FIELDS:
            return getattr(self.dynamics, name)
        if name in RUNNING_COST_FIELDS or name in TERMINAL_FIELDS:
            return getattr(self.costs, name)
        raise KeyError(name)

    def replace(self, **changes) -> "GameSpec":
        """Copy with some coefficients swapped out (same conventions as ``make_spec``)."""
        dyn = {k: changes.pop(k) for k in list(changes) if k in DYNAMICS_FIELDS}
        cost = {k: changes.pop(k) for k in list(changes) if k in RUNNING_COST_FIELDS + TERMINAL_FIELDS}
        dyn = {k: _broadcast(self.tree, self.dims, k, v) for k, v in dyn.items()}
        cost = {k: _broadcast(self.tree, self.dims, k, v) for k, v in cost.items()}
        xi = changes.pop("xi", self.xi)
        if changes:
            raise InvalidSpec(f"unknown fields {sorted(changes)}")
        return GameSpec(
            self.dims,
            self.tree,
            dataclasses.replace(self.dynamics, **dyn),
            dataclasses.replace(self.costs, **cost),
            np.asarray(xi, dtype=float),
        )


def _check_level(name, arr, num_nodes, node_shape, k):
    arr = np.asarray(arr)
    if arr.shape[:1] != (num_nodes,):
        raise NonAdaptedProcess(f"{name} at level {k}: {arr.shape[:1]} node values, need {num_nodes}")
    if arr.shape[1:] != node_shape:
        raise DimensionMismatch(f"{name} at level {k}: node shape {arr.shape[1:]}, expected {node_shape}")


def _broadcast(tree: ScenarioTree, dims: Dims, name: str, value) -> Any:
    """Expand a user-supplied coefficient onto the tree.

    Accepts ``None`` (zero), one node value reused everywhere, a list with one
    node value per level, or a list of per-level arrays with a node axis.
    Terminal fields accept ``None``, one node value, or a leaf array.
    """
    shape = dims.node_shapes()[name]
    if name in TERMINAL_FIELDS:
        n_leaf = tree.num_nodes(dims.N)
        if value is None:
            return np.zeros((n_leaf,) + shape)
        arr = np.asarray(value, dtype=float)
        if arr.shape == shape:
            return np.broadcast_to(arr, (n_leaf,) + shape).copy()
        return arr
    if value is None:
        return tuple(np.zeros((tree.num_nodes(k),) + shape) for k in range(dims.N))
    if isinstance(value, (list, tuple)) and len(value) == dims.N:
        out = []
        for k, v in enumerate(value):
            a = np.asarray(v, dtype=float)
            if a.shape == shape:
                a = np.broadcast_to(a, (tree.num_nodes(k),) + shape).copy()
            elif a.ndim != len(shape) + 1:
                break
            out.append(a)
        else:
            return tuple(out)
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise DimensionMismatch(f"{name}: cannot interpret value of shape {arr.shape} (node shape {shape})")
    return tuple(np.broadcast_to(arr, (tree.num_nodes(k),) + shape).copy() for k in range(dims.N))


def make_spec(tree: ScenarioTree, dims: Dims, xi=None, **coefficients) -> GameSpec:
    """Build a ``GameSpec``; omitted coefficients are zero.

    Each coefficient may be a single node value (constant on the whole tree),
    a list of ``N`` node values (one per level), or a list of ``N`` arrays with
    a leading node axis.
    """
    unknown = set(coefficients) - set(ALL_FIELDS)
    if unknown:
        raise InvalidSpec(f"unknown coefficients {sorted(unknown)}")
    full = {name: _broadcast(tree, dims, name, coefficients.get(name)) for name in ALL_FIELDS}
    xi = np.zeros(dims.n) if xi is None else np.asarray(xi, dtype=float).reshape(-1)
    return GameSpec(
        dims,
        tree,
        DynamicsCoefficients(**{k: full[k] for k in DYNAMICS_FIELDS}),
        CostCoefficients(**{k: full[k] for k in RUNNING_COST_FIELDS + TERMINAL_FIELDS}),
        xi,
    )


@dataclass(frozen=True, eq=False)
class ControlPair:
    """Player controls; ``u[k]`` has shape ``(num_nodes(k), m)``."""

    u: tuple
    v: tuple

    @classmethod
    def zeros(cls, spec: GameSpec) -> "ControlPair":
        t, d = spec.tree, spec.dims
        return cls(
            tuple(np.zeros((t.num_nodes(k), d.m)) for k in range(d.N)),
            tuple(np.zeros((t.num_nodes(k), d.l)) for k in range(d.N)),
        )

    def check(self, spec: GameSpec) -> None:
        d = spec.dims
        for name, proc, dim in (("u", self.u, d.m), ("v", self.v, d.l)):
            if len(proc) != d.N:
                raise NonAdaptedProcess(f"{name} given on {len(proc)} levels, need {d.N}")
            for k, a in enumerate(proc):
                a = np.asarray(a)
                if a.ndim != 2 or a.shape[0] != spec.tree.num_nodes(k):
                    raise NonAdaptedProcess(f"{name} at level {k} has shape {a.shape}")
                if a.shape[1] != dim:
                    raise DimensionMismatch(f"{name} at level {k} has width {a.shape[1]}, expected {dim}")

    def player(self, which: int) -> tuple:
        return self.u if which == 1 else self.v

    def with_player(self, which: int, proc) -> "ControlPair":
        proc = tuple(np.asarray(a, dtype=float) for a in proc)
        return ControlPair(proc, self.v) if which == 1 else ControlPair(self.u, proc)

    def __add__(self, other: "ControlPair") -> "ControlPair":
        return ControlPair(
            tuple(a + b for a, b in zip(self.u, other.u)),
            tuple(a + b for a, b in zip(self.v, other.v)),
        )

    def scale(self, alpha: float) -> "ControlPair":
        return ControlPair(tuple(alpha * a for a in self.u), tuple(alpha * a for a in self.v))


# ---------------------------------------------------------------------------
# assumption checks

@dataclass
class CheckEntry:
    assumption: str
    check: str
    level: int
    node: str
    value: float
    passed: bool

    @property
    def message(self) -> str:
        return self.check if self.passed else f"{self.check} violated"

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["message"] = self.message
        return d


@dataclass
class ValidationReport:
    delta: float
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def add(self, assumption, check, level, node, value, passed):
        self.entries.append(CheckEntry(assumption, check, level, node, float(value), bool(passed)))

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "delta": self.delta,
            "failures": [e.as_dict() for e in self.failures()],
            "num_checks": len(self.entries),
        }


def _min_eig(S: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (S + S.T))[0])


def _asym(S: np.ndarray) -> float:
    return float(np.max(np.abs(S - S.T))) if S.size else 0.0


def validate(spec: GameSpec, delta: float) -> ValidationReport:
    """Check boundedness, symmetry and the uniform convexity conditions nodewise."""
    if not delta > 0:
        raise InvalidSpec(f"delta must be positive, got {delta!r}")
    rep = ValidationReport(delta)
    tree, N = spec.tree, spec.dims.N

    for name in DYNAMICS_FIELDS:
        for k in range(N):
            for i, key in enumerate(tree.keys(k)):
                ok = bool(np.all(np.isfinite(spec[name][k][i])))
                if not ok:
                    rep.add("dynamics", f"{name} finite", k, key, np.nan, False)
    for name in RUNNING_COST_FIELDS:
        for k in range(N):
            for i, key in enumerate(tree.keys(k)):
                if not np.all(np.isfinite(spec[name][k][i])):
                    rep.add("weights", f"{name} finite", k, key, np.nan, False)
    for name in TERMINAL_FIELDS:
        for i, key in enumerate(tree.keys(N)):
            if not np.all(np.isfinite(spec[name][i])):
                rep.add("weights", f"{name} finite", N, key, np.nan, False)
    if rep.failures():
        return rep

    for k in range(N):
        for i, key in enumerate(tree.keys(k)):
            Q, L, R = spec["Q"][k][i], spec["L"][k][i], spec["R"][k][i]
            P, M, S = spec["P"][k][i], spec["M"][k][i], spec["S"][k][i]
            for nm, X in (("Q", Q), ("R", R), ("P", P), ("S", S)):
                a = _asym(X)
                rep.add("weights", f"{nm} symmetric", k, key, a, a <= SYM_TOL)
            for nm, X in (("R", R), ("S", S)):
                ev = _min_eig(X)
                rep.add("convexity", f"{nm} ⪰ δI", k, key, ev, ev >= delta - STRICT_TOL)
            for label, X, W, C in (("Q − LᵀR⁻¹L ⪰ 0", Q, R, L), ("P − MᵀS⁻¹M ⪰ 0", P, S, M)):
                try:
                    schur = X - C.T @ np.linalg.solve(W, C)
                    ev = _min_eig(schur)
                except np.linalg.LinAlgError:
                    ev = -np.inf
                rep.add("convexity", label, k, key, ev, ev >= -PSD_TOL)
    for i, key in enumerate(tree.keys(N)):
        for nm, label in (("G", "G_N"), ("H", "H_N")):
            X = spec[nm][i]
            a = _asym(X)
            rep.add("weights", f"{label} symmetric", N, key, a, a <= SYM_TOL)
            ev = _min_eig(X)
            rep.add("convexity", f"{label} ⪰ 0", N, key, ev, ev >= -PSD_TOL)
    return rep


# ---------------------------------------------------------------------------
# instance factories

def _sym(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def generate_random(dims: Dims, tree: ScenarioTree, seed: int, magnitude: float = 1.0) -> GameSpec:
    """Random instance that satisfies the convexity assumptions with delta = 1.

    Dynamics, cross weights and all inhomogeneous terms are uniform on
    ``[-magnitude, magnitude]`` independently per node.
    """
    if not magnitude > 0:
        raise InvalidSpec("magnitude must be positive")
    if tree.horizon != dims.N:
        raise DimensionMismatch(f"tree horizon {tree.horizon} != N = {dims.N}")
    rng = np.random.default_rng(seed)
    delta = 1.0
    shapes = dims.node_shapes()
    n, m, l = dims.n, dims.m, dims.l

    def unif(num, shape):
        return rng.uniform(-magnitude, magnitude, size=(num,) + shape)

    def gram(num, d):
        W = unif(num, (d, d))
        return _sym(W @ np.swapaxes(W, -1, -2))

    coef: dict[str, Any] = {name: [] for name in DYNAMICS_FIELDS + RUNNING_COST_FIELDS}
    for k in range(dims.N):
        nk = tree.num_nodes(k)
        for name in DYNAMICS_FIELDS + ("L", "M", "q", "rho", "p", "theta"):
            coef[name].append(unif(nk, shapes[name]))
        R = delta * np.eye(m) + gram(nk, m)
        S = delta * np.eye(l) + gram(nk, l)
        L, M = coef["L"][k], coef["M"][k]
        Q = _sym(np.swapaxes(L, -1, -2) @ np.linalg.solve(R, L)) + gram(nk, n)
        P = _sym(np.swapaxes(M, -1, -2) @ np.linalg.solve(S, M)) + gram(nk, n)
        coef["R"].append(R)
        coef["S"].append(S)
        coef["Q"].append(_sym(Q))
        coef["P"].append(_sym(P))
    nN = tree.num_nodes(dims.N)
    coef["G"] = gram(nN, n)
    coef["H"] = gram(nN, n)
    coef["g"] = unif(nN, (n,))
    coef["h"] = unif(nN, (n,))
    xi = rng.uniform(-magnitude, magnitude, size=n)
    return make_spec(tree, dims, xi, **coef)


def zero_noise_reduction(spec: GameSpec) -> GameSpec:
    """Deterministic counterpart: noise channels zeroed, coefficients frozen to the first path.

    Every coefficient at level k is replaced by its value at the node reached
    by always taking branch 0, so it no longer depends on the noise history.
    """
    tree, N = spec.tree, spec.dims.N
    coef = {}
    for name in DYNAMICS_FIELDS + RUNNING_COST_FIELDS:
        levels = spec[name]
        if name in ("D", "E", "F", "sigma"):
            coef[name] = [np.zeros_like(a) for a in levels]
        else:
            coef[name] = [np.broadcast_to(a[0], a.shape).copy() for a in levels]
    for name in TERMINAL_FIELDS:
        a = spec[name]
        coef[name] = np.broadcast_to(a[0], a.shape).copy()
    return make_spec(tree, spec.dims, spec.xi.copy(), **coef)


def describe_node(tree: ScenarioTree, level: int, index: int) -> str:
    return path_key(tree.paths[level][index])


def remove_player_two(spec: GameSpec) -> GameSpec:
    """Zero every channel through which player 2 acts or is charged."""
    return spec.replace(C=None, F=None, M=None, theta=None, P=None, H=None, h=None, p=None)


def scale_coefficient(spec: GameSpec, name: str, factor: float) -> GameSpec:
    value = spec[name]
    if name in TERMINAL_FIELDS:
        return spec.replace(**{name: factor * value})
    return spec.replace(**{name: [factor * a for a in value]})


def coefficient_arrays(spec: GameSpec) -> dict[str, list]:
    """Flat name -> list-of-level-arrays view, mostly for serialization and comparisons."""
    out: dict[str, list] = {}
    for name in DYNAMICS_FIELDS + RUNNING_COST_FIELDS:
        out[name] = list(spec[name])
    for name in TERMINAL_FIELDS:
        out[name] = [spec[name]]
    return out


def specs_equal(a: GameSpec, b: GameSpec) -> bool:
    """Bitwise equality of all coefficients and the initial state."""
    if a.dims != b.dims or not np.array_equal(a.xi, b.xi):
        return False
    ca, cb = coefficient_arrays(a), coefficient_arrays(b)
    return all(
        len(ca[k]) == len(cb[k]) and all(np.array_equal(x, y) for x, y in zip(ca[k], cb[k]))
        for k in ca
    )

