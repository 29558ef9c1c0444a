import pytest
from hypothesis import given, strategies as st

from heislab.config import ExperimentConfig, load_config, parse_config, to_text, validate, with_overrides
from heislab.errors import ConfigError
from heislab.verify.registry import REGISTRY, default_config

GOOD = """\
[experiment]
name = harnack
seed = 3
fields = identity; rotating-anisotropy(1 1.3 1)
sources = zero

[grid]
resolutions = 16 32
kappa = 2

[tolerances]
drift = 0.1

[params]
R = 0.125

[output]
dir = out/h
"""


def test_parse_good():
    cfg = parse_config(GOOD)
    assert cfg.name == "harnack" and cfg.seed == 3
    assert cfg.fields == ("identity", "rotating-anisotropy(1 1.3 1)")
    assert cfg.resolutions == (16, 32) and cfg.hxs == (1 / 16, 1 / 32)
    assert cfg.params["R"] == 0.125 and cfg.params["K"] == 4.0
    assert cfg.out_dir == "out/h" and cfg.output_stem == "harnack"


def _error_line(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.line, str(info.value)


@pytest.mark.parametrize("old,new,line,needle", [
    ("resolutions = 16 32", "resolutions = 32 16", 8, "strictly increasing"),
    ("drift = 0.1", "drift = -0.1", 12, "positive"),
    ("drift = 0.1", "drfit = 0.1", 12, "known: budget, drift, scaling"),
    ("name = harnack", "name = harnak", 2, "valid names"),
    ("sources = zero", "sources = cubic(2)", 5, "valid sources"),
    ("fields = identity;", "fields = diagonal(2 1);", 4, "valid generators"),
    ("kappa = 2", "kappa = two", 9, "cannot read"),
    ("[params]", "[parameters]", 14, "unknown section"),
    ("dir = out/h", "folder = out/h", 18, "unknown key"),
])
def test_errors_carry_line_numbers(old, new, line, needle):
    got_line, msg = _error_line(GOOD.replace(old, new))
    assert got_line == line
    assert msg.startswith(f"line {line}: ") and needle in msg


def test_malformed_line():
    line, msg = _error_line(GOOD.replace("seed = 3", "seed 3"))
    assert line == 3


def test_missing_header():
    line, _ = _error_line("name = harnack\n")
    assert line == 1


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_text_roundtrip(name):
    cfg = default_config(name)
    again = parse_config(to_text(cfg))
    assert again.describe() == cfg.describe()


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_shipped_configs_load(name):
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "configs" / f"{name}.cfg"
    cfg = load_config(path)
    assert cfg.describe() == default_config(name).describe()


@given(st.lists(st.integers(1, 200), min_size=1, max_size=5))
def test_ladder_invariant(ladder):
    cfg = ExperimentConfig(name="comparison", resolutions=tuple(ladder))
    increasing = all(b > a for a, b in zip(ladder, ladder[1:]))
    if increasing:
        validate(cfg)
    else:
        with pytest.raises(ConfigError):
            validate(cfg)


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_tolerance_invariant(tol):
    cfg = ExperimentConfig(name="harnack", tolerances={"drift": tol})
    if tol > 0:
        validate(cfg)
    else:
        with pytest.raises(ConfigError):
            validate(cfg)


def test_overrides():
    cfg = with_overrides(parse_config(GOOD), seed=9, resolutions=(8, 12), out_dir="elsewhere")
    assert cfg.seed == 9 and cfg.resolutions == (8, 12) and cfg.out_dir == "elsewhere"
    with pytest.raises(ConfigError):
        with_overrides(cfg, resolutions=(12, 8))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")
