import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from agesirs.model import PRESETS, ModelParams, StateVector, rhs
from agesirs.reproduction import (
    closed_form_e1_crosscheck,
    disease_free_equilibrium,
    endemic_equilibrium,
    next_generation_matrix,
    r0,
    r0_spectral,
    stability_verdict,
)

import oracles


def test_r0_table3_and_table4():
    assert r0(PRESETS["table3"]).r0 == pytest.approx(0.98, abs=0.01)
    assert r0(PRESETS["table4"]).r0 == pytest.approx(2.7615, abs=0.005)


def test_r0_table2_variants_against_trace_det_oracle():
    p = oracles.TABLE2
    assert r0(ModelParams()).r0 == pytest.approx(oracles.r0_no_formula(p), rel=1e-12)
    assert r0(ModelParams(), "no-control").r0 == pytest.approx(oracles.r0_no_formula(p, False), rel=1e-12)


def test_r0_rejects_unknown_variant():
    with pytest.raises(ValueError):
        r0(ModelParams(), "partial")


def test_zero_betas_give_zero_r0():
    p = ModelParams(beta1=0, beta2=0, beta3=0, beta4=0)
    assert r0(p).r0 == 0.0


def test_u12_does_not_enter_r0():
    assert r0(ModelParams(u12=5.0)).r0 == r0(ModelParams(u12=0.0)).r0


rate = st.floats(1e-4, 3.0)


@settings(max_examples=60, deadline=None)
@given(rate, rate, rate, rate, st.floats(0.01, 1.0), st.floats(0.0, 0.5), st.floats(0, 0.01))
def test_closed_form_equals_spectral_radius(b1, b2, b3, b4, mu, u11, m):
    p = ModelParams(beta1=b1, beta2=b2, beta3=b3, beta4=b4, mu=mu, u11=u11, m=m)
    assert r0(p).r0 == pytest.approx(r0_spectral(p), rel=1e-9)


def test_ngm_is_f_times_inverse_v():
    p = ModelParams()
    K = next_generation_matrix(p)
    e0 = disease_free_equilibrium(p)
    assert K[0, 1] == pytest.approx(p.beta2 * e0.S1 / (p.d2 + p.mu))


def test_dfe_table3_values():
    e0 = disease_free_equilibrium(PRESETS["table3"]).as_array()
    np.testing.assert_allclose(e0, [0.1157, 0, 0, 0.00039, 0, 0], atol=5e-4)


def test_dfe_is_root_found_independently():
    p = PRESETS["table3"]
    sol = optimize.root(
        lambda s: oracles.field(s[0], 0, 0, s[1], 0, 0, dict(oracles.TABLE2, b1=0.007192))[[0, 3]],
        [1.0, 1.0],
        tol=1e-15,
    ).x
    e0 = disease_free_equilibrium(p)
    assert (e0.S1, e0.S2) == pytest.approx(tuple(sol), rel=1e-10)


def test_dfe_stability_switches():
    t3, t4 = PRESETS["table3"], PRESETS["table4"]
    assert stability_verdict(t3, disease_free_equilibrium(t3)).stable
    report = stability_verdict(t4, disease_free_equilibrium(t4))
    assert not report.stable and max(report.eigen_real_parts) > 0


def test_stability_verdict_rejects_non_equilibrium():
    with pytest.raises(ValueError):
        stability_verdict(ModelParams(), StateVector(1, 1, 1, 1, 1, 1))


def test_endemic_table4_is_stable_root():
    p = PRESETS["table4"]
    e1 = endemic_equilibrium(p)
    assert e1 is not None and e1.stable
    x = e1.state.as_array()
    assert np.max(np.abs(oracles.field_vec(x, dict(oracles.TABLE2, beta1=0.0133, mu=0.62, alpha=0.5, m=0.00182)))) < 1e-8
    assert x[1] + x[4] > 1e-3


def test_endemic_absent_below_threshold():
    assert endemic_equilibrium(PRESETS["table3"]) is None


def test_endemic_search_is_deterministic():
    a = endemic_equilibrium(ModelParams(), seed=7)
    b = endemic_equilibrium(ModelParams(), seed=7)
    assert a.state == b.state


def test_endemic_from_explicit_start():
    p = PRESETS["table4"]
    e1 = endemic_equilibrium(p, starts=[StateVector(10, 1, 0.1, 0.01, 0.03, 0.001)])
    assert e1 is not None
    assert np.max(np.abs(rhs(e1.state, p))) < 1e-10


def test_closed_form_diagnostic_reports_residual():
    report = closed_form_e1_crosscheck(PRESETS["table4"])
    assert set(report.values) == {"S1", "I1", "R1", "S2", "I2", "R2"}
    assert report.residual_norm > 1e-6


def test_closed_form_reports_division_by_zero():
    report = closed_form_e1_crosscheck(ModelParams(beta2=0.0))
    assert "I2" in report.errors
