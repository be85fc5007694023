"""Plant description: boxes, Lipschitz data, right-hand side assembly."""
import numpy as np
import pytest

from arcbf import (AccParams, Box, ControlAffineModel, LipschitzData,
                   build_acc_model, check_lipschitz_consistency)
from arcbf.errors import ConfigurationError, ContractViolationError


def test_box_basics():
    box = Box.make([0, 0], [3, 4])
    assert box.dim == 2
    assert box.contains([1, 1])
    assert not box.contains([1, 4.5])
    assert box.contains([1, 4.0 + 1e-12], tol=1e-9)
    np.testing.assert_array_equal(box.clamp([-1, 10]), [0, 4])


def test_box_validation():
    with pytest.raises(ConfigurationError):
        Box.make([0, 0], [1])            # shape mismatch
    with pytest.raises(ConfigurationError):
        Box.make([2], [1])               # empty
    with pytest.raises(ConfigurationError):
        Box.make([0], [np.inf])          # non-finite


def test_box_vertices_and_grid():
    box = Box.make([0, -1], [1, 1])
    verts = box.vertices()
    assert verts.shape == (4, 2)
    assert {tuple(v) for v in verts} == {(0, -1), (0, 1), (1, -1), (1, 1)}
    # degenerate axis contributes one coordinate
    flat = Box.make([0, 2], [1, 2])
    assert flat.vertices().shape == (2, 2)
    grid = box.grid(5)
    assert grid.shape == (25, 2)
    # faces included
    assert any(np.all(p == [1, 1]) for p in grid)
    assert any(np.all(p == [0, -1]) for p in grid)
    with pytest.raises(ConfigurationError):
        box.grid(0)


def test_lipschitz_data_validation_and_scaling():
    lip = LipschitzData(l_d=1.0, l_t=2.0, b_d=3.0)
    s = lip.scaled(2.0)
    assert (s.l_d, s.l_t, s.b_d) == (2.0, 4.0, 6.0)
    with pytest.raises(ConfigurationError):
        LipschitzData(l_d=-1.0, l_t=0.0, b_d=0.0)
    with pytest.raises(ConfigurationError):
        lip.scaled(0.5)


def _acc():
    return build_acc_model(AccParams())


def test_acc_rhs_hand_values():
    model, _ = _acc()
    x0 = np.array([18.0, 12.0, 80.0])
    d0 = model.d_true(0.0, x0)
    # drag at v_f=12: (0.1 + 5*12 + 0.25*144)/1650, no grade at t=0
    np.testing.assert_allclose(d0, [0.0, -96.1 / 1650.0, 0.0], rtol=0, atol=1e-15)
    rhs0 = model.rhs(0.0, x0, np.array([0.0]), d0)
    np.testing.assert_allclose(rhs0, [0.0, -0.05824242424242424, 6.0],
                               rtol=0, atol=1e-15)
    rhs1 = model.rhs(0.0, x0, np.array([100.0]), d0)
    np.testing.assert_allclose(rhs1[1], (100.0 - 96.1) / 1650.0, rtol=0, atol=1e-15)


def test_acc_input_clamp():
    model, _ = _acc()
    assert model.clamp_input(np.array([10000.0]))[0] == 6474.6
    assert model.clamp_input(np.array([-10000.0]))[0] == -6474.6
    assert model.clamp_input(np.array([25.0]))[0] == 25.0


def test_rhs_shape_contracts():
    model, _ = _acc()
    x0 = np.array([18.0, 12.0, 80.0])
    with pytest.raises(ContractViolationError):
        model.rhs(0.0, x0[:2], np.array([0.0]), np.zeros(3))
    with pytest.raises(ContractViolationError):
        model.rhs(0.0, x0, np.array([0.0, 1.0]), np.zeros(3))
    with pytest.raises(ContractViolationError):
        model.rhs(0.0, x0, np.array([0.0]), np.zeros(2))
    with pytest.raises(ContractViolationError):
        model.clamp_input(np.zeros(2))


def test_rhs_linear_in_input():
    model, _ = _acc()
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = np.array([rng.uniform(0, 44), rng.uniform(0, 44), rng.uniform(0, 300)])
        u1 = rng.uniform(-6474, 6474, size=1)
        u2 = rng.uniform(-6474, 6474, size=1)
        al = rng.uniform()
        d = model.d_true(0.3, x)
        lhs = model.rhs(0.3, x, al * u1 + (1 - al) * u2, d)
        rhs = al * model.rhs(0.3, x, u1, d) + (1 - al) * model.rhs(0.3, x, u2, d)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-9)


def test_model_dimension_validation():
    f = lambda t, x: np.zeros(2)
    g = lambda x: np.zeros((2, 1))
    d = lambda t, x: np.zeros(2)
    box2 = Box.make([0, 0], [1, 1])
    box1 = Box.make([0], [1])
    ControlAffineModel(n=2, m=1, f=f, g=g, d_true=d, state_box=box2, input_box=box1)
    with pytest.raises(ConfigurationError):
        ControlAffineModel(n=2, m=1, f=f, g=g, d_true=d, state_box=box1, input_box=box1)
    with pytest.raises(ConfigurationError):
        ControlAffineModel(n=2, m=2, f=f, g=g, d_true=d, state_box=box2, input_box=box1)


def test_lipschitz_consistency_check():
    model, lip = _acc()
    report = check_lipschitz_consistency(model, lip, times=(0.0, 0.025, 1.0),
                                         grid_density=6)
    assert report["ok"]
    assert report["ld_margin"] <= 1e-9
    assert report["bd_margin"] <= 1e-9
    # an understated constant is caught
    bad = LipschitzData(l_d=1e-4, l_t=lip.l_t, b_d=lip.b_d)
    assert not check_lipschitz_consistency(model, bad, grid_density=6)["ok"]
