import numpy as np
import pytest

from stochlq import Dims, build_tree, generate_random, make_spec, validate, zero_noise_reduction
from stochlq.errors import DimensionMismatch, InvalidSpec, NonAdaptedProcess
from stochlq.game import simulate_forward
from stochlq.model import ControlPair, remove_player_two, scale_coefficient, specs_equal


def unit_game(R=1.0, Q=1.0, L=0.0, N=2):
    tree = build_tree(N)
    dims = Dims(1, 1, 1, N)
    one = np.eye(1)
    return make_spec(tree, dims, A=one, B=one, C=one, Q=Q * one, P=one, R=R * one, S=one,
                     L=L * one, G=one, H=one)


def test_dims_must_be_positive():
    with pytest.raises(InvalidSpec):
        Dims(0, 1, 1, 1)


def test_identity_weights_pass():
    rep = validate(unit_game(), 0.5)
    assert rep.passed
    assert rep.as_dict()["failures"] == []


def test_small_R_fails_with_eigenvalue():
    rep = validate(unit_game(R=0.1), 0.5)
    assert not rep.passed
    bad = [e for e in rep.failures() if e.check == "R ⪰ δI"]
    assert bad and bad[0].message == "R ⪰ δI violated"
    assert abs(bad[0].value - 0.1) < 1e-12


def test_schur_complement_failure():
    rep = validate(unit_game(Q=0.0, L=1.0), 0.5)
    bad = [e for e in rep.failures() if e.check == "Q − LᵀR⁻¹L ⪰ 0"]
    assert bad and abs(bad[0].value + 1.0) < 1e-12


def test_asymmetric_weight_fails():
    tree = build_tree(1)
    dims = Dims(2, 1, 1, 1)
    Q = np.array([[1.0, 0.5], [0.0, 1.0]])
    spec = make_spec(tree, dims, Q=Q, P=np.eye(2), R=np.eye(1), S=np.eye(1))
    assert "Q symmetric" in [e.check for e in validate(spec, 0.5).failures()]


def test_nonfinite_coefficient_fails():
    spec = unit_game()
    spec = spec.replace(A=[np.array([[[np.nan]]]), np.ones((2, 1, 1))])
    rep = validate(spec, 0.5)
    assert not rep.passed and rep.failures()[0].check == "A finite"


def test_delta_must_be_positive():
    with pytest.raises(InvalidSpec):
        validate(unit_game(), 0.0)


def test_validate_monotone_in_delta():
    spec = unit_game(R=0.7)
    assert validate(spec, 0.7).passed
    assert validate(spec, 0.3).passed
    assert not validate(spec, 0.71).passed


def test_generate_random_validates_and_is_deterministic():
    dims = Dims(2, 2, 1, 3)
    tree = build_tree(3)
    a = generate_random(dims, tree, 7)
    b = generate_random(dims, tree, 7)
    c = generate_random(dims, tree, 8)
    assert validate(a, 1.0).passed
    assert specs_equal(a, b)
    assert not specs_equal(a, c)


def test_generate_random_rejects_bad_magnitude():
    with pytest.raises(InvalidSpec):
        generate_random(Dims(1, 1, 1, 1), build_tree(1), 0, magnitude=0.0)


def test_shape_errors():
    tree = build_tree(2)
    dims = Dims(2, 1, 1, 2)
    with pytest.raises(DimensionMismatch):
        make_spec(tree, dims, A=np.eye(3))
    with pytest.raises(NonAdaptedProcess):
        make_spec(tree, dims, A=[np.zeros((3, 2, 2)), np.zeros((4, 2, 2))])
    with pytest.raises(DimensionMismatch):
        make_spec(build_tree(3), dims)
    with pytest.raises(InvalidSpec):
        make_spec(tree, dims, Z=np.eye(2))


def test_per_level_constant_values():
    tree = build_tree(2)
    spec = make_spec(tree, Dims(1, 1, 1, 2), A=[[[1.0]], [[2.0]]])
    assert spec["A"][0].shape == (1, 1, 1)
    assert np.all(spec["A"][1] == 2.0) and spec["A"][1].shape == (2, 1, 1)


def test_zero_noise_reduction_fields_and_state():
    spec = generate_random(Dims(2, 1, 2, 3), build_tree(3), 3)
    spec = spec.replace(D=np.eye(2))
    red = zero_noise_reduction(spec)
    for name in ("D", "E", "F", "sigma"):
        assert all(np.all(a == 0) for a in red[name])
    rng = np.random.default_rng(0)
    u = tuple(np.broadcast_to(rng.normal(size=(1, 1)), (red.tree.num_nodes(k), 1)).copy() for k in range(3))
    v = tuple(np.broadcast_to(rng.normal(size=(1, 2)), (red.tree.num_nodes(k), 2)).copy() for k in range(3))
    x = simulate_forward(red, ControlPair(u, v))
    for xk in x:
        assert np.all(xk == xk[0])


def test_zero_noise_reduction_commutes_with_scaling():
    spec = generate_random(Dims(2, 1, 1, 2), build_tree(2), 5)
    a = scale_coefficient(zero_noise_reduction(spec), "A", 1.7)
    b = zero_noise_reduction(scale_coefficient(spec, "A", 1.7))
    assert specs_equal(a, b)


def test_remove_player_two_zeroes_channels():
    spec = remove_player_two(generate_random(Dims(2, 2, 2, 2), build_tree(2), 1))
    for name in ("C", "F", "M", "theta", "P", "p"):
        assert all(np.all(a == 0) for a in spec[name])
    assert np.all(spec["H"] == 0) and np.all(spec["h"] == 0)


def test_control_pair_checks():
    spec = unit_game()
    zero = ControlPair.zeros(spec)
    zero.check(spec)
    with pytest.raises(NonAdaptedProcess):
        ControlPair(zero.u[:1], zero.v).check(spec)
    with pytest.raises(DimensionMismatch):
        ControlPair((np.zeros((1, 2)), np.zeros((2, 2))), zero.v).check(spec)
    doubled = (zero + zero.with_player(1, [np.ones((1, 1)), np.ones((2, 1))])).scale(2.0)
    assert doubled.u[1].tolist() == [[2.0], [2.0]]
