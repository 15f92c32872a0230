import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subeq import config as cfgmod
from subeq.config import COMMANDS, ConfigError, RunConfig


def test_defaults_serialize_and_reparse_bytewise():
    text = cfgmod.serialize(RunConfig())
    assert cfgmod.serialize(cfgmod.parse_text(text)) == text
    keys = [ln.split(" = ")[0] for ln in text.splitlines()]
    assert keys == sorted(keys)


def test_text_and_json_canonicalize_identically():
    text = """
    # a solve on the unit square
    command = solve
    subequation = special_lagrangian:c=0.5,n=2
    grid = 9, 9
    lambdas = -1, 0.5
    parallel = TRUE
    seed = 18446744073709551615
    """
    a = cfgmod.parse_text(text)
    b = cfgmod.parse_text(json.dumps({"command": "solve", "subequation": "special_lagrangian:c=0.5,n=2",
                                      "grid": [9, 9], "lambdas": [-1, 0.5], "parallel": True,
                                      "seed": 2 ** 64 - 1}))
    assert a == b
    assert cfgmod.serialize(a) == cfgmod.serialize(b)
    assert cfgmod.parse_text(cfgmod.to_json(a)) == a


def test_file_round_trip(tmp_path):
    cfg = RunConfig(command="barrier", domain="x1^2 + x2^2 + x3^2 - 1", lo=(-2, -2, -2),
                    hi=(2, 2, 2), grid=(5, 5, 5), subequation="Pq:n=3,q=2")
    p = tmp_path / "run.txt"
    p.write_text(cfgmod.serialize(cfg))
    assert cfgmod.load(str(p)) == cfg


@pytest.mark.parametrize("text", [
    "bogus = 1",
    "command = solve\ncommand = solve",
    "just words",
    "command = fly",
    "grid = 2, 2",
    "lo = 0, 0\nhi = 0, 1",
    "seed = -1",
    "seed = 18446744073709551616",
    "tol_iter = 0",
    "parallel = maybe",
    "samples = 1.5",
    "c = nan",
    "eps = 0.1, -1",
    "x0 = 1, 2, 3",
    "grid = 5, 5, 5",
    "backend = gpu",
    "[1, 2]",
    "{not json",
])
def test_rejects_malformed_configs(text):
    with pytest.raises(ConfigError):
        cfgmod.parse_text(text)


def test_replace_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        RunConfig().replace(colour="red")
    assert RunConfig().replace(samples="7").samples == 7


def test_comments_and_blank_lines_are_ignored():
    cfg = cfgmod.parse_text("\n# seed = 5\n\n  # another\nseed = 3\n")
    assert cfg.seed == 3


_finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
_word = st.text(st.characters(min_codepoint=33, max_codepoint=126, blacklist_characters="#=,"),
                max_size=12).filter(lambda s: s == s.strip())


@st.composite
def run_configs(draw):
    n = draw(st.integers(1, 3))
    lo = draw(st.lists(_finite, min_size=n, max_size=n))
    hi = [a + draw(st.floats(1e-3, 10)) for a in lo]
    hi = [b if b > a else a + 1.0 for a, b in zip(lo, hi)]
    return RunConfig(
        command=draw(st.sampled_from(COMMANDS)),
        subequation=draw(_word),
        domain=draw(_word),
        lo=tuple(lo), hi=tuple(hi),
        grid=tuple(draw(st.lists(st.integers(3, 99), min_size=n, max_size=n))),
        lambdas=tuple(draw(st.lists(_finite, max_size=4))),
        eps=tuple(draw(st.lists(st.floats(1e-9, 10), min_size=1, max_size=4))),
        tol_iter=draw(st.floats(1e-15, 1)),
        parallel=draw(st.booleans()),
        samples=draw(st.integers(1, 10 ** 6)),
        c=draw(_finite),
        seed=draw(st.integers(0, 2 ** 64 - 1)),
    )


@settings(max_examples=200, deadline=None)
@given(run_configs())
def test_round_trip_property(cfg):
    text = cfgmod.serialize(cfg)
    again = cfgmod.parse_text(text)
    assert again == cfg
    assert cfgmod.serialize(again) == text
    assert cfgmod.parse_text(cfgmod.to_json(cfg)) == cfg
