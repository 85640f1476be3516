import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexflow import oracle as orc
from vortexflow.acceptance import sign_lock
from vortexflow.rng import LCG

SCALAR = orc.FinDimModel([[1]], [1.0])


def test_moment_examples():
    assert orc.findim_moment(SCALAR, [0]) == pytest.approx([0.5])
    tau = 1.7
    model = orc.FinDimModel([[1]], [tau])
    assert orc.findim_moment(model, [np.sqrt(tau) * np.exp(0.3j)]) == pytest.approx([0], abs=1e-15)
    pair = orc.FinDimModel([[1, 1]], [2.0])
    assert orc.findim_moment(pair, [1, 1]) == pytest.approx([0], abs=1e-15)


def test_model_validation():
    with pytest.raises(ValueError):
        orc.FinDimModel([[0.5]], [1.0])
    with pytest.raises(ValueError):
        orc.FinDimModel([[1, 1]], [1.0, 2.0])
    with pytest.raises(ValueError):
        orc.FinDimModel([[1]], [np.inf])
    with pytest.raises(ValueError):
        orc.findim_moment(SCALAR, [1, 2])


def test_flow_zero_is_stationary():
    traj = orc.findim_flow(SCALAR, [0], 1e-2, 1.0)
    assert not traj.xs.any()
    assert np.ptp(traj.functional) == 0


def test_flow_scalar_reaches_unit_circle():
    traj = orc.findim_flow(SCALAR, [2.0], 1e-3, 20.0)
    assert abs(abs(traj.xs[-1, 0]) - 1) < 1e-8
    assert traj.times[-1] == pytest.approx(20.0)


def test_flow_rejects_unstable_dt():
    with pytest.raises(ValueError, match="stability"):
        orc.findim_flow(SCALAR, [10.0], 0.1, 1.0)


def test_functional_strictly_decreasing():
    model = orc.FinDimModel([[1, 2, -1], [0, 1, 1]], [2.0, 1.0])
    traj = orc.findim_flow(model, [0.4 + 0.2j, 0.3, 1.1j], 1e-3, 5.0)
    assert np.all(np.diff(traj.functional) < 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 63))
def test_gradient_check_random_points(seed):
    rng = LCG(seed)
    model = orc.FinDimModel([[1, 2, -1], [0, 1, 3]], [1.5, -0.5])
    x = rng.normal(3) + 1j * rng.normal(3)
    assert orc.gradient_check(model, x) < 1e-6


def test_kempf_ness_at_zero():
    rep = orc.kempf_ness_check(SCALAR, [0], [1.0])
    assert np.all(rep.derivatives == 0) and rep.monotone


def test_kempf_ness_scalar_closed_form():
    rep = orc.kempf_ness_check(SCALAR, [1.0], [1.0], samples=2001)
    mid = 0.5 * (rep.ts[1:] + rep.ts[:-1])
    assert rep.monotone and np.all(rep.derivatives > 0)
    assert np.allclose(rep.derivatives, np.exp(-2 * mid), rtol=1e-6)
    with pytest.raises(ValueError):
        orc.kempf_ness_check(SCALAR, [1.0], [0.0])


def test_kempf_ness_single_crossing():
    model = orc.FinDimModel([[1, 1]], [1.0])
    for x in ([2.0, 0.5j], [0.8, 0.8], [0.1, 0.0]):
        rep = orc.kempf_ness_check(model, x, [1.0], samples=401)
        assert rep.monotone and rep.zero_crossings <= 1


def test_sign_convention_lock():
    same, gap = sign_lock()
    assert same and gap < 1e-14
