"""Key=value run configuration: parsing, validation, serialization identity."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from swlattice import InvalidDomainError, ParameterError, RunConfig, parse_keyvalues


def test_parse_keyvalues_basics():
    text = "a = 1\n# a comment\n\nb=two  # trailing\n c = 3.5 \n"
    assert parse_keyvalues(text) == {"a": "1", "b": "two", "c": "3.5"}


@pytest.mark.parametrize("text, fragment", [
    ("a 1", ":1: expected key=value"),
    ("a=1\n=2", ":2: empty key"),
    ("a=1\nb=2\na=3", ":3: duplicate key 'a'"),
])
def test_parse_keyvalues_errors(text, fragment):
    with pytest.raises(ParameterError, match=fragment):
        parse_keyvalues(text, path="cfg")


def test_runconfig_defaults_and_parse():
    cfg = RunConfig.parse("dims=4,4,4,4\nmode=dirichlet\nkg=1.0\n")
    assert cfg.mode == "dirichlet"
    assert cfg.kg == 1.0
    assert cfg.tol == 1e-6 and cfg.max_iters == 5000
    assert cfg.domain().dims == (4, 4, 4, 4)
    assert cfg.solver_config().mode == "dirichlet"


@pytest.mark.parametrize("text, exc, fragment", [
    ("mode=periodic", ParameterError, "mode"),
    ("dims=4,4,4", InvalidDomainError, "four axis"),
    ("dims=4,2,4,4", InvalidDomainError, "at least"),
    ("dims=4,x,4,4", ParameterError, "bad value"),
    ("h=zero", ParameterError, "bad value"),
    ("frobnicate=1", ParameterError, "unknown key"),
    ("tol=0", ParameterError, "tol"),
    ("shrink=1.5", ParameterError, "shrink"),
    ("monitor_cadence=0", ParameterError, "monitor_cadence"),
])
def test_runconfig_rejects(text, exc, fragment):
    with pytest.raises(exc, match=fragment):
        RunConfig.parse(text)


def test_load_reports_path(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("dims:4,4,4,4\n")
    with pytest.raises(ParameterError, match="bad.cfg:1"):
        RunConfig.load(path)


caps = st.one_of(st.just(math.inf),
                 st.floats(min_value=1.0, max_value=1e6,
                           allow_nan=False, allow_infinity=False))


@st.composite
def run_configs(draw):
    return RunConfig(
        dims=tuple(draw(st.integers(min_value=3, max_value=6)) for _ in range(4)),
        h=draw(st.floats(min_value=0.05, max_value=2.0, allow_nan=False)),
        kg=draw(st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)),
        alpha_sq=draw(st.floats(min_value=0.0, max_value=1.0, allow_nan=False)),
        mode=draw(st.sampled_from(("dirichlet", "neumann"))),
        tol=draw(st.floats(min_value=1e-10, max_value=1e-2, allow_nan=False)),
        max_iters=draw(st.integers(min_value=0, max_value=10**6)),
        step_init=draw(st.floats(min_value=0.1, max_value=4.0, allow_nan=False)),
        shrink=draw(st.floats(min_value=0.05, max_value=0.95, allow_nan=False)),
        decrease=draw(st.floats(min_value=1e-6, max_value=0.5, allow_nan=False)),
        monitor_cadence=draw(st.integers(min_value=1, max_value=500)),
        seed=draw(st.integers(min_value=0, max_value=2**31)),
        energy_cap=draw(caps),
        sup_cap=draw(caps),
    )


@given(run_configs())
@settings(max_examples=150, deadline=None)
def test_serialize_parse_identity(cfg):
    text = cfg.serialize()
    back = RunConfig.parse(text)
    assert back == cfg
    assert back.serialize() == text


def test_round_trip_through_file(tmp_path):
    cfg = RunConfig(dims=(3, 4, 5, 3), h=0.3, kg=-0.75, alpha_sq=0.125,
                    mode="dirichlet", tol=2.5e-7, monitor_cadence=13)
    path = tmp_path / "run.cfg"
    path.write_text(cfg.serialize())
    assert RunConfig.load(path) == cfg
