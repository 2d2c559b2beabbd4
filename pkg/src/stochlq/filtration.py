"""Finite scenario trees realizing the noise filtration.

A level-k node is identified with a noise history (omega_0, ..., omega_{k-1});
anything indexed by time k that is known before omega_k is drawn lives on the
level-k nodes.  The root (level 0) carries the trivial sigma-algebra.

Node values are stored as numpy arrays with a leading node axis, so a process
at level k with per-node shape ``(r, c)`` is an array of shape
``(tree.num_nodes(k), r, c)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import InvalidSpec, LevelMismatch, MomentViolation, ShapeMismatch

MOMENT_TOL = 1e-12

BranchList = Sequence[tuple[float, float]]

PRESETS: dict[str, list[tuple[float, float]]] = {
    "rademacher": [(1.0, 0.5), (-1.0, 0.5)],
    "three_point": [(-math.sqrt(2.0), 0.25), (0.0, 0.5), (math.sqrt(2.0), 0.25)],
    "trinomial": [(-math.sqrt(3.0), 1.0 / 6.0), (0.0, 2.0 / 3.0), (math.sqrt(3.0), 1.0 / 6.0)],
}


class Weight(enum.Enum):
    ONE = "one"
    OMEGA = "omega"
    OMEGA_SQ = "omega_sq"


def path_key(path: Sequence[int]) -> str:
    return ".".join(str(i) for i in path)


def parse_path(key: str) -> tuple[int, ...]:
    if key == "":
        return ()
    try:
        return tuple(int(part) for part in key.split("."))
    except ValueError as exc:
        raise InvalidSpec(f"bad node key {key!r}") from exc


@dataclass(frozen=True, eq=False)
class ScenarioTree:
    """Rooted tree with levels ``0..horizon``.

    ``parent[k]``, ``omega[k]`` and ``cond_prob[k]`` describe, for each level-k
    node (k >= 1), the parent index at level k-1 and the branch that leads to
    it.  Entries at index 0 are empty placeholders for the root level.
    """

    horizon: int
    paths: tuple[tuple[tuple[int, ...], ...], ...]
    parent: tuple[np.ndarray, ...]
    omega: tuple[np.ndarray, ...]
    cond_prob: tuple[np.ndarray, ...]
    node_prob: tuple[np.ndarray, ...]

    def num_nodes(self, level: int) -> int:
        return len(self.paths[level])

    @property
    def levels(self) -> range:
        return range(self.horizon + 1)

    def keys(self, level: int) -> list[str]:
        return [path_key(p) for p in self.paths[level]]

    def index(self, key: str) -> tuple[int, int]:
        """Map a node key like ``"0.1"`` to ``(level, index)``."""
        path = parse_path(key)
        level = len(path)
        if level > self.horizon:
            raise InvalidSpec(f"node key {key!r} deeper than the horizon")
        try:
            return level, self._lookup[level][path]
        except KeyError:
            raise InvalidSpec(f"unknown node key {key!r}") from None

    @property
    def _lookup(self) -> list[dict[tuple[int, ...], int]]:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = [{p: i for i, p in enumerate(ps)} for ps in self.paths]
            object.__setattr__(self, "_lookup_cache", cache)
        return cache

    def children(self, level: int, index: int) -> np.ndarray:
        return np.flatnonzero(self.parent[level + 1] == index)

    def branches(self, level: int, index: int) -> list[tuple[float, float, int]]:
        """Ordered ``(omega, cond_prob, child_index)`` triples of a node."""
        kids = self.children(level, index)
        om, pr = self.omega[level + 1], self.cond_prob[level + 1]
        return [(float(om[c]), float(pr[c]), int(c)) for c in kids]

    def fourth_moments(self, level: int) -> np.ndarray:
        """Conditional E[omega^4] at each level-``level`` node (diagnostic only)."""
        w = self.cond_prob[level + 1] * self.omega[level + 1] ** 4
        out = np.zeros(self.num_nodes(level))
        np.add.at(out, self.parent[level + 1], w)
        return out

    def expect(self, values: np.ndarray, level: int, weight: Weight = Weight.ONE) -> np.ndarray:
        """Conditional expectation of level-``level+1`` node values.

        Returns ``sum_i p_i w_i z(child_i)`` at every level-``level`` node with
        ``w_i`` equal to 1, omega_i or omega_i**2.
        """
        if not 0 <= level < self.horizon:
            raise LevelMismatch(f"no children below level {level}")
        values = np.asarray(values, dtype=float)
        if values.shape[:1] != (self.num_nodes(level + 1),):
            raise LevelMismatch(
                f"expected {self.num_nodes(level + 1)} level-{level + 1} values, got shape {values.shape}"
            )
        w = self.cond_prob[level + 1]
        if weight is Weight.OMEGA:
            w = w * self.omega[level + 1]
        elif weight is Weight.OMEGA_SQ:
            w = w * self.omega[level + 1] ** 2
        weighted = values * w.reshape((-1,) + (1,) * (values.ndim - 1))
        out = np.zeros((self.num_nodes(level),) + values.shape[1:])
        np.add.at(out, self.parent[level + 1], weighted)
        return out

    def mean(self, values: np.ndarray, level: int) -> np.ndarray:
        """Unconditional expectation of a level-``level`` process."""
        values = np.asarray(values, dtype=float)
        p = self.node_prob[level]
        return np.tensordot(p, values, axes=(0, 0))

    def lift(self, values: np.ndarray, level: int) -> np.ndarray:
        """Copy level-``level`` node values onto their children."""
        return np.asarray(values)[self.parent[level + 1]]


@dataclass(frozen=True, eq=False)
class TreeProcess:
    """Values of an F_{k-1}-measurable quantity on the level-k nodes."""

    level: int
    values: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    @classmethod
    def from_mapping(cls, tree: ScenarioTree, level: int, mapping: Mapping[str, object]) -> "TreeProcess":
        keys = tree.keys(level)
        missing = [k for k in keys if k not in mapping]
        if missing:
            raise LevelMismatch(f"process undefined at level-{level} nodes {missing[:3]}")
        arrays = [np.asarray(mapping[k], dtype=float) for k in keys]
        shapes = {a.shape for a in arrays}
        if len(shapes) > 1:
            raise ShapeMismatch(f"inconsistent node shapes at level {level}: {sorted(shapes)}")
        return cls(level, np.stack(arrays))

    def to_mapping(self, tree: ScenarioTree) -> dict[str, np.ndarray]:
        return dict(zip(tree.keys(self.level), self.values))


def cond_expect(tree: ScenarioTree, z: TreeProcess, weight: Weight = Weight.ONE) -> TreeProcess:
    """E[z | F], E[z omega | F] or E[z omega^2 | F] one level up the tree."""
    if not 1 <= z.level <= tree.horizon:
        raise LevelMismatch(f"cannot condition a level-{z.level} process")
    return TreeProcess(z.level - 1, tree.expect(z.values, z.level - 1, weight))


def _check_branches(branches: BranchList, where: str) -> tuple[np.ndarray, np.ndarray]:
    if len(branches) < 2:
        raise InvalidSpec(f"{where}: need at least two branches, got {len(branches)}")
    try:
        om = np.array([float(o) for o, _ in branches])
        pr = np.array([float(p) for _, p in branches])
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"{where}: branches must be (omega, prob) pairs") from exc
    if not (np.all(np.isfinite(om)) and np.all(np.isfinite(pr))):
        raise InvalidSpec(f"{where}: non-finite branch data")
    if np.any(pr <= 0):
        raise InvalidSpec(f"{where}: probabilities must be positive")
    if abs(pr.sum() - 1.0) > MOMENT_TOL:
        raise InvalidSpec(f"{where}: probabilities sum to {pr.sum()!r}")
    mean = float(pr @ om)
    var = float(pr @ om**2)
    if abs(mean) > MOMENT_TOL:
        raise MomentViolation(f"{where}: conditional mean {mean!r} != 0")
    if abs(var - 1.0) > MOMENT_TOL:
        raise MomentViolation(f"{where}: conditional second moment {var!r} != 1")
    return om, pr


def _per_level(horizon: int, branch_spec) -> list[BranchList]:
    if isinstance(branch_spec, str):
        try:
            return [PRESETS[branch_spec]] * horizon
        except KeyError:
            raise InvalidSpec(f"unknown tree preset {branch_spec!r}; known: {sorted(PRESETS)}") from None
    spec = list(branch_spec)
    if not spec:
        raise InvalidSpec("empty branch specification")
    first = spec[0]
    if not isinstance(first, str) and len(first) == 2 and np.ndim(first[0]) == 0:
        # one branch list reused at every level
        return [spec] * horizon
    if len(spec) != horizon:
        raise InvalidSpec(f"got branch lists for {len(spec)} levels, horizon is {horizon}")
    return [_per_level(1, s)[0] if isinstance(s, str) else s for s in spec]


def build_tree(horizon: int, branch_spec: Union[str, BranchList, Sequence[BranchList]] = "rademacher") -> ScenarioTree:
    """Build a validated scenario tree.

    ``branch_spec`` is a preset name, a single list of ``(omega, prob)`` pairs
    used at every level, or one such list (or preset name) per level.
    """
    if int(horizon) != horizon or horizon < 1:
        raise InvalidSpec(f"horizon must be an integer >= 1, got {horizon!r}")
    horizon = int(horizon)
    per_level = _per_level(horizon, branch_spec)

    paths: list[tuple[tuple[int, ...], ...]] = [((),)]
    parent = [np.zeros(0, dtype=int)]
    omega = [np.zeros(0)]
    cond_prob = [np.zeros(0)]
    node_prob = [np.ones(1)]
    for k, branches in enumerate(per_level):
        om, pr = _check_branches(branches, f"level {k}")
        n_par, b = len(paths[-1]), len(om)
        paths.append(tuple(p + (j,) for p in paths[-1] for j in range(b)))
        parent.append(np.repeat(np.arange(n_par), b))
        omega.append(np.tile(om, n_par))
        cond_prob.append(np.tile(pr, n_par))
        node_prob.append(node_prob[-1][parent[-1]] * cond_prob[-1])

    for k, p in enumerate(node_prob):
        if abs(p.sum() - 1.0) > MOMENT_TOL:
            raise InvalidSpec(f"level {k} probabilities sum to {p.sum()!r}")
    return ScenarioTree(
        horizon=horizon,
        paths=tuple(paths),
        parent=tuple(parent),
        omega=tuple(omega),
        cond_prob=tuple(cond_prob),
        node_prob=tuple(node_prob),
    )
