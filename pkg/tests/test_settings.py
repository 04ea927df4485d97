import pytest

from hsicmap.kernelcore import Heuristic
from hsicmap.settings import BandwidthSpec, load_settings, parse_bandwidth

_VARS = (
    "HSICMAP_LOG_LEVEL", "HSICMAP_METHOD", "HSICMAP_FEATURES", "HSICMAP_ALPHA", "HSICMAP_NULL",
    "HSICMAP_PERMUTATIONS", "HSICMAP_SEED", "HSICMAP_BANDWIDTH", "HSICMAP_STANDARDIZE", "HSICMAP_EXACT_LIMIT",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    for name in _VARS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def test_defaults():
    s = load_settings()
    assert (s.method, s.features, s.alpha, s.null, s.seed) == ("hsic", 30, 0.05, "gamma", 0)
    assert s.permutations is None
    assert s.bandwidth == "auto-mean"
    assert s.standardize is False
    assert s.exact_limit == 4000
    assert s.log_level == "INFO"


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("HSICMAP_METHOD", "RHSIC")
    monkeypatch.setenv("HSICMAP_PERMUTATIONS", "500")
    monkeypatch.setenv("HSICMAP_STANDARDIZE", "yes")
    monkeypatch.setenv("HSICMAP_BANDWIDTH", "0.5,2")
    s = load_settings()
    assert s.method == "rhsic"
    assert s.permutations == 500
    assert s.standardize is True


@pytest.mark.parametrize(
    "name,value",
    [
        ("HSICMAP_METHOD", "kernel"),
        ("HSICMAP_NULL", "normal"),
        ("HSICMAP_ALPHA", "1.5"),
        ("HSICMAP_FEATURES", "0"),
        ("HSICMAP_FEATURES", "many"),
        ("HSICMAP_PERMUTATIONS", "0"),
        ("HSICMAP_BANDWIDTH", "-1"),
        ("HSICMAP_LOG_LEVEL", "CHATTY"),
    ],
)
def test_invalid_values_raise(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(RuntimeError):
        load_settings()


def test_parse_bandwidth_forms():
    x, y = parse_bandwidth("auto-median")
    assert x.heuristic is Heuristic.MEDIAN and y.heuristic is Heuristic.MEDIAN
    x, y = parse_bandwidth("0.7")
    assert x == y == BandwidthSpec(Heuristic.FIXED, 0.7)
    x, y = parse_bandwidth(" 0.7 , 1.3 ")
    assert (x.sigma, y.sigma) == (0.7, 1.3)
    assert x.heuristic is Heuristic.FIXED
    with pytest.raises(ValueError):
        parse_bandwidth("auto-mode")
    with pytest.raises(ValueError):
        parse_bandwidth("1,2,3")
