import numpy as np
import pytest

from stochlq import ControlPair, Dims, build_tree, generate_random
from stochlq.compact import (
    RiccatiOperands,
    all_operators,
    assemble,
    blockdiag,
    moment_operands,
    op_Delta,
    op_Gamma,
    op_L,
    op_Upsilon,
)
from stochlq.errors import DimensionMismatch
from stochlq.game import stationarity_residuals, trajectory


def root_operators(spec):
    cc = assemble(spec)
    ops = moment_operands(spec.tree, 0, cc.G, cc.g)
    return all_operators(cc.levels[0], ops), ops


def test_blockdiag():
    out = blockdiag(np.ones((2, 1)), 2 * np.ones((1, 3)))
    assert out.shape == (3, 4)
    assert out[:2, :1].sum() == 2 and out[2:, 1:].sum() == 6 and out[:2, 1:].sum() == 0


def test_stacked_shapes():
    spec = generate_random(Dims(3, 2, 1, 2), build_tree(2), 0)
    lev = assemble(spec).levels[1]
    assert lev.Lambda1.shape == (2, 6, 3)
    assert lev.Lambda2.shape == (2, 3, 3)
    assert lev.Lambda5.shape == (2, 6, 3)
    assert lev.Lambda6.shape == (2, 3, 6)
    assert lev.Lambda7.shape == (2, 3, 3)
    assert lev.boldIn.shape == (6, 3)
    assert lev.node(1).Atilde.shape == (6, 6)


def test_symmetric_scalar_root_operators(i1):
    op, _ = root_operators(i1)
    assert op["Upsilon"][0].tolist() == [[2.0, 1.0], [1.0, 2.0]]
    assert op["Gamma"][0].ravel().tolist() == [1.0, 1.0]
    assert op["Delta"][0].ravel().tolist() == [2.0, 2.0]
    assert op["LT"][0].tolist() == [[1.0, 1.0], [1.0, 1.0]]
    assert np.all(op["Theta"] == 0) and np.all(op["Phi"] == 0)


def test_noisy_control_root_operators(i2):
    op, ops = root_operators(i2)
    assert ops.ET[0].ravel().tolist() == [1.0, 1.0]
    assert ops.ETw[0].ravel().tolist() == [1.0, 0.0]
    assert ops.ETww[0].ravel().tolist() == [1.0, 1.0]
    assert op["Upsilon"][0].tolist() == [[5.0, 2.0], [1.0, 2.0]]
    assert op["Gamma"][0].ravel().tolist() == [2.0, 1.0]


def test_operators_on_one_node_match_level(i2):
    cc = assemble(i2)
    ops = moment_operands(i2.tree, 0, cc.G, cc.g)
    lev, node_ops = cc.levels[0].node(0), ops.node(0)
    assert np.array_equal(op_Upsilon(lev, node_ops), op_Upsilon(cc.levels[0], ops)[0])


def test_shape_check():
    spec = generate_random(Dims(2, 1, 1, 1), build_tree(1), 0)
    lev = assemble(spec).levels[0]
    bad = RiccatiOperands(np.zeros((1, 3, 2)), np.zeros((1, 4, 2)), np.zeros((1, 4, 2)), np.zeros((1, 4)), np.zeros((1, 4)))
    with pytest.raises(DimensionMismatch):
        op_Delta(lev, bad)


@pytest.mark.parametrize("seed", range(5))
def test_one_step_operators_match_first_order_conditions(seed):
    # with N = 1 the stacked stationarity residual is Ups pi + Gamma x + Phi exactly
    dims = Dims(2, 2, 1, 1)
    spec = generate_random(dims, build_tree(1, "three_point"), seed)
    op, _ = root_operators(spec)
    mp = dims.m + dims.l

    def residual(pi, x0):
        s = spec.replace(xi=x0)
        c = ControlPair((pi[None, :dims.m],), (pi[None, dims.m:],))
        r1, r2 = stationarity_residuals(s, trajectory(s, c))
        return np.concatenate([r1[0][0], r2[0][0]])

    base = residual(np.zeros(mp), np.zeros(2))
    ups = np.column_stack([residual(e, np.zeros(2)) - base for e in np.eye(mp)])
    gam = np.column_stack([residual(np.zeros(mp), e) - base for e in np.eye(2)])
    assert np.allclose(base, op["Phi"][0], atol=1e-12)
    assert np.allclose(ups, op["Upsilon"][0], atol=1e-12)
    assert np.allclose(gam, op["Gamma"][0], atol=1e-12)

