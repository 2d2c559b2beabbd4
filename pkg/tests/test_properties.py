import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from stochlq import Dims, build_tree, generate_random, solve_backward, validate
from stochlq.filtration import Weight
from stochlq.game import (
    ansatz_residual,
    cost,
    cost_homogeneous,
    duality_sides,
    explicit_controls,
    gateaux,
    random_controls,
    random_direction,
    simulate_feedback,
    stationarity_residuals,
    sup_norm,
    trajectory,
    variational_state,
)
from stochlq.oracle import nash_gap

SETTINGS = settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def games(draw, max_dim=3, max_N=3):
    n = draw(st.integers(1, max_dim))
    m = draw(st.integers(1, max_dim))
    l = draw(st.integers(1, max_dim))
    N = draw(st.integers(1, max_N))
    preset = draw(st.sampled_from(["rademacher", "three_point", "trinomial"]))
    seed = draw(st.integers(0, 2**32 - 1))
    mag = draw(st.sampled_from([0.5, 1.0, 2.0]))
    return generate_random(Dims(n, m, l, N), build_tree(N, preset), seed, mag)


@st.composite
def two_point(draw):
    # omega = a w.p. p, -b w.p. 1 - p with mean 0 and variance 1
    p = draw(st.floats(0.05, 0.95))
    a = math.sqrt((1 - p) / p)
    return [(a, p), (-p * a / (1 - p), 1 - p)]


@SETTINGS
@given(two_point(), st.integers(0, 1000))
def test_custom_branches_realize_unit_moments(branches, seed):
    tree = build_tree(2, branches)
    z = np.random.default_rng(seed).normal(size=tree.num_nodes(2))
    ones = np.ones_like(z)
    assert np.allclose(tree.expect(ones, 1, Weight.OMEGA), 0.0, atol=1e-12)
    assert np.allclose(tree.expect(ones, 1, Weight.OMEGA_SQ), 1.0, atol=1e-12)
    assert np.isclose(tree.mean(z, 2), tree.mean(tree.expect(z, 1), 1), atol=1e-12)


@SETTINGS
@given(games(), st.floats(0.01, 1.0))
def test_validate_monotone_in_delta(spec, delta):
    assert validate(spec, 1.0).passed
    assert validate(spec, delta).passed


@SETTINGS
@given(games(), st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_variational_map_is_linear(spec, seed, alpha, beta):
    rng = np.random.default_rng(seed)
    for player in (1, 2):
        w1, w2 = random_direction(spec, player, rng), random_direction(spec, player, rng)
        mix = tuple(alpha * a + beta * b for a, b in zip(w1, w2))
        x1, x2, xm = (variational_state(spec, w, player) for w in (w1, w2, mix))
        for a, b, c in zip(x1, x2, xm):
            assert np.allclose(c, alpha * a + beta * b, atol=1e-12 * (1 + np.abs(c).max()))


@SETTINGS
@given(games(), st.integers(0, 10_000), st.sampled_from([1.0, 1e-2, 1e-4]))
def test_quadratic_expansion_is_exact(spec, seed, eps):
    rng = np.random.default_rng(seed)
    c = random_controls(spec, rng)
    for player in (1, 2):
        w = random_direction(spec, player, rng)
        J = cost(spec, c, player)
        moved = c.with_player(player, [a + eps * b for a, b in zip(c.player(player), w)])
        expansion = J + eps * gateaux(spec, c, w, player) + 0.5 * eps**2 * cost_homogeneous(spec, w, player)
        assert abs(cost(spec, moved, player) - expansion) <= 1e-12 * max(1.0, abs(J))


@SETTINGS
@given(games(), st.integers(0, 10_000), st.floats(0.1, 10))
def test_second_variation_is_homogeneous_and_nonnegative(spec, seed, alpha):
    rng = np.random.default_rng(seed)
    w = random_direction(spec, 1, rng)
    q = cost_homogeneous(spec, w, 1)
    assert q >= 0
    assert np.isclose(cost_homogeneous(spec, tuple(alpha * a for a in w), 1), alpha**2 * q, rtol=1e-12)


@SETTINGS
@given(games(), st.integers(0, 10_000))
def test_duality_identity(spec, seed):
    rng = np.random.default_rng(seed)
    traj = trajectory(spec, random_controls(spec, rng))
    for player in (1, 2):
        left, right = duality_sides(spec, traj, random_direction(spec, player, rng), player)
        assert abs(left - right) <= 1e-12 * max(1.0, abs(left), abs(right))


@SETTINGS
@given(games(), st.integers(0, 10_000))
def test_equilibrium_second_order_identity(spec, seed):
    sol = solve_backward(spec)
    traj = simulate_feedback(spec, sol)
    eq = traj.controls
    J = cost(spec, eq, 1)
    rng = np.random.default_rng(seed)
    for _ in range(100 if spec.dims.N == 1 else 20):
        w = random_direction(spec, 1, rng)
        moved = eq.with_player(1, [a + b for a, b in zip(eq.u, w)])
        gain = cost(spec, moved, 1) - J
        half_q = 0.5 * cost_homogeneous(spec, w, 1)
        assert half_q >= 0
        assert abs(gain - half_q) <= 1e-10 * max(1.0, abs(half_q), abs(J))


@SETTINGS
@given(games())
def test_ansatz_and_retraction(spec):
    sol = solve_backward(spec)
    traj = simulate_feedback(spec, sol)
    scale = max(1.0, max(float(np.abs(Y).max()) for Y in traj.Y))
    assert sup_norm(ansatz_residual(traj, sol)) <= 1e-10 * scale
    back = explicit_controls(spec, traj)
    assert sup_norm([a - b for a, b in zip(back.u + back.v, traj.controls.u + traj.controls.v)]) <= 1e-10 * scale
    r1, r2 = stationarity_residuals(spec, trajectory(spec, back))
    assert max(sup_norm(r1), sup_norm(r2)) <= 1e-10 * scale


@settings(max_examples=10, deadline=None)
@given(games(max_dim=2, max_N=2), st.integers(0, 10_000))
def test_cost_gaps_nonnegative(spec, seed):
    gap = nash_gap(spec, random_controls(spec, np.random.default_rng(seed)))
    assert gap.cost_gap_1 >= -1e-10 and gap.cost_gap_2 >= -1e-10
