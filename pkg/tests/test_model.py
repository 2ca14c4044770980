import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agesirs.model import (
    CONTROL_STATE,
    FIG1_STATE,
    PRESETS,
    ControlPair,
    DomainError,
    ModelParams,
    StateVector,
    central_difference_jacobian,
    check_feasible,
    holling_treatment,
    numerical_jacobian,
    params_from_mapping,
    rhs,
)

import oracles


def test_table2_defaults():
    p = ModelParams()
    assert p.to_dict() == pytest.approx(oracles.TABLE2)


def test_presets_differ_only_where_tables_differ():
    assert PRESETS["table3"].b1 == 0.007192
    assert PRESETS["table3"].replace(b1=7.192) == PRESETS["table2"]
    t4 = PRESETS["table4"]
    assert (t4.beta1, t4.mu, t4.alpha, t4.m) == (0.0133, 0.62, 0.5, 0.00182)


@pytest.mark.parametrize("name", ["mu", "b1", "alpha", "m"])
def test_negative_rate_rejected_with_field(name):
    with pytest.raises(DomainError) as err:
        ModelParams().replace(**{name: -1.0})
    assert err.value.field == name


def test_zero_mu_rejected():
    with pytest.raises(DomainError):
        ModelParams(mu=0.0)


def test_nan_state_rejected():
    with pytest.raises(DomainError):
        StateVector(1.0, math.nan, 0, 0, 0, 0)


def test_published_order_mapping():
    s = StateVector.from_published_order(1, 2, 3, 4, 5, 6)
    assert (s.S1, s.S2, s.I1, s.I2, s.R1, s.R2) == (1, 2, 3, 4, 5, 6)
    assert FIG1_STATE.as_array().tolist() == [100, 5, 10, 150, 70, 30]
    assert CONTROL_STATE.total == 230


def test_rhs_matches_hand_transcription():
    p = ModelParams()
    x = FIG1_STATE.as_array()
    np.testing.assert_allclose(rhs(x, p), oracles.field_vec(x, oracles.TABLE2), rtol=1e-13)


def test_rhs_at_zero_state_is_birth_only():
    out = rhs(np.zeros(6), ModelParams())
    assert out.tolist() == [7.192, 0, 0, 0, 0, 0]


def test_rhs_rejects_wrong_shape():
    with pytest.raises((ValueError, DomainError)):
        rhs(np.zeros(5), ModelParams())


def test_holling_limits():
    assert holling_treatment(0.0, 0.1, 0.4) == 0.0
    assert holling_treatment(1e6, 0.1, 0.4) == pytest.approx(0.1 / 0.4, rel=1e-9)
    assert holling_treatment(3.0, 0.1, 0.0) == pytest.approx(0.9)


finite = st.floats(0.0, 200.0, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6), st.floats(0, 1), st.floats(0, 1))
def test_rhs_property_against_oracle(x, u11, u12):
    p = ModelParams()
    got = rhs(np.array(x), p, ControlPair(u11, u12))
    want = oracles.field_vec(np.array(x), oracles.TABLE2, u11, u12)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(finite, min_size=6, max_size=6))
def test_boundary_flows_point_inward(x):
    """Each compartment's derivative is non-negative when that compartment is empty."""
    x = np.array(x)
    p = ModelParams()
    for i in range(6):
        y = x.copy()
        y[i] = 0.0
        assert rhs(y, p)[i] >= -1e-12


def test_jacobian_central_difference_linear_map():
    A = np.arange(9.0).reshape(3, 3)
    J = central_difference_jacobian(lambda v: A @ v, np.ones(3))
    np.testing.assert_allclose(J, A, atol=1e-8)


def test_jacobian_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        central_difference_jacobian(lambda v: v, np.ones(2), h=0.0)


def test_numerical_jacobian_infected_block_at_dfe():
    p = PRESETS["table3"]
    s1 = p.b1 / (p.mu + p.m)
    s2 = p.m * s1 / p.mu
    J = numerical_jacobian(np.array([s1, 0, 0, s2, 0, 0]), p)
    assert J[1, 1] == pytest.approx(p.beta1 * s1 - p.d1 - p.mu - p.u11, rel=1e-6)
    assert J[4, 1] == pytest.approx(p.beta3 * s2, rel=1e-6)


def test_check_feasible_flags_negative_and_bound():
    p = ModelParams()
    ok = np.tile(FIG1_STATE.as_array(), (3, 1))
    assert check_feasible(ok, p).passed
    bad = ok.copy()
    bad[1, 2] = -1.0
    report = check_feasible(bad, p)
    assert not report.passed and report.negative_index == 1
    big = ok.copy()
    big[2, 0] = 1e6
    assert check_feasible(big, p).bound_index == 2


def test_params_from_mapping_rejects_unknown():
    with pytest.raises(DomainError):
        params_from_mapping({"gamma": 1.0})
    assert params_from_mapping({"mu": 0.5}).mu == 0.5
