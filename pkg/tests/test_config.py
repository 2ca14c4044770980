import pytest
from hypothesis import given, settings, strategies as st

from agesirs.config import ConfigError, RunConfig, parse_config, serialize_config
from agesirs.control import ControlBounds, CostWeights, SweepSettings
from agesirs.integrator import TimeGrid
from agesirs.model import ModelParams, StateVector


def test_empty_document_is_table2():
    cfg = parse_config("")
    assert cfg.params == ModelParams()
    assert cfg.params.b1 == 7.192 and cfg.params.mu == 0.062 and cfg.params.beta1 == 4 / 3
    assert cfg.seed == 42 and cfg.y0 is None


def test_preset_table3():
    assert parse_config("[run]\npreset = table3\n").params.b1 == 0.007192


def test_preset_argument_overrides_document():
    assert parse_config("[run]\npreset = table3\n", preset="table4").params.mu == 0.62


def test_params_override_preset():
    cfg = parse_config("[run]\npreset = table4\n[params]\nalpha = 2\n")
    assert cfg.params.alpha == 2.0 and cfg.params.mu == 0.62


@pytest.mark.parametrize(
    "text, key",
    [
        ("[params]\nmu = -1\n", "params.mu"),
        ("[params]\nmu = 0\n", "params.mu"),
        ("[params]\ngamma = 1\n", "params.gamma"),
        ("[params]\nmu = fast\n", "params.mu"),
        ("[grid]\nT = 0\n", "grid.T"),
        ("[grid]\nn_steps = 2.5\n", "grid.n_steps"),
        ("[weights]\nA2 = 0\n", "weights.A2"),
        ("[bounds]\nu12_max = -1\n", "bounds.u12_max"),
        ("[sweep]\nrelaxation = 2\n", "sweep.relaxation"),
        ("[y0]\nS1 = 1\n", "y0.I1"),
        ("[y0]\nS1=1\nI1=-1\nR1=0\nS2=0\nI2=0\nR2=0\n", "y0.I1"),
        ("[run]\npreset = table9\n", "run.preset"),
        ("[extras]\nx = 1\n", "extras"),
    ],
)
def test_errors_name_key_path(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key
    assert key in str(err.value)


def test_malformed_document():
    with pytest.raises(ConfigError):
        parse_config("mu = 1\n")
    with pytest.raises(ConfigError):
        parse_config("[params]\nmu = 1\nmu = 2\n")


def test_keys_are_case_sensitive():
    with pytest.raises(ConfigError):
        parse_config("[weights]\na1 = 1\n")


def test_round_trip_defaults():
    cfg = RunConfig()
    assert parse_config(serialize_config(cfg)) == cfg


pos = st.floats(1e-6, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(
    pos, pos, st.floats(0, 5), st.integers(1, 10**6), pos, pos, pos, pos,
    st.integers(1, 1000), st.floats(1e-12, 1.0), st.floats(0.01, 1.0),
    st.lists(st.floats(0, 1e4), min_size=6, max_size=6) | st.none(), st.integers(0, 2**31),
)
def test_round_trip_property(b1, mu, alpha, n, A1, A2, c1, c2, iters, tol, relax, y0, seed):
    cfg = RunConfig(
        params=ModelParams(b1=b1, mu=mu, alpha=alpha),
        preset="table2",
        y0=None if y0 is None else StateVector(*y0),
        grid=TimeGrid(0.0, 50.0, n),
        weights=CostWeights(A1, A2),
        bounds=ControlBounds(c1, c2),
        sweep_settings=SweepSettings(iters, tol, relax),
        output_dir="runs/x",
        seed=seed,
    )
    assert parse_config(serialize_config(cfg)) == cfg
