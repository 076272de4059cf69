import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st

from gcflow import bodies
from gcflow import io
from gcflow.flow import DiagnosticsRecord, FlowConfig, FlowState, diagnostics
from gcflow.grid import build_grid

finite = st.floats(allow_nan=False, allow_infinity=False)


def test_config_example():
    cfg = io.parse_config("flow", text="alpha=1.0\nn=2\n")
    assert cfg.options == {"alpha": 1.0, "n": 2} and cfg.subcommand == "flow"
    assert cfg.seed == 0 and cfg.out_dir == "out"


def test_config_comments_and_blank_lines():
    text = "# header\n\nalpha = 1.5   # inline\nresolution=48x96\nseed=7\n"
    cfg = io.parse_config("flow", text=text)
    assert cfg.options == {"alpha": 1.5, "resolution": (48, 96)} and cfg.seed == 7


def test_flag_overrides_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("alpha=1.0\nn=1\n")
    cfg = io.parse_config("flow", path=p, overrides={"alpha": "1.5", "n": None})
    assert cfg.options == {"alpha": 1.5, "n": 1}


@pytest.mark.parametrize("text,match", [
    ("alpha=-1", r"<config>:1: invalid value for 'alpha'"),
    ("n=1\nfoo=3", r"<config>:2: unknown key 'foo'"),
    ("just words", r"<config>:1: malformed line"),
    ("n=3", "invalid value for 'n'"),
    ("c_cfl=1.5", "invalid value for 'c_cfl'"),
    ("resolution=48by96", "invalid value for 'resolution'"),
    ("normalization=sometimes", "invalid value"),
    ("max_steps=-5", "invalid value"),
])
def test_config_errors(text, match):
    with pytest.raises(io.ConfigError, match=match):
        io.parse_config("flow", text=text)


def test_flag_error_context():
    with pytest.raises(io.ConfigError, match="--alpha: invalid value"):
        io.parse_config("flow", overrides={"alpha": "abc"})
    with pytest.raises(io.ConfigError, match="--h0-min"):
        io.parse_config("shrinker", overrides={"h0_min": "0"})


def test_keys_are_per_subcommand():
    assert io.parse_config("verify", text="case=ellipse").options == {"case": "ellipse"}
    with pytest.raises(io.ConfigError, match="unknown key 'case'"):
        io.parse_config("flow", text="case=ellipse")
    with pytest.raises(io.ConfigError):
        io.parse_config("plot", text="")


def test_missing_config_file(tmp_path):
    with pytest.raises(io.ConfigError, match="cannot read config"):
        io.parse_config("flow", path=tmp_path / "nope.cfg")


def test_coeffs_option():
    cfg = io.parse_config("flow", text="cos_coeffs=2:0.3,3:0.1")
    assert cfg.options["cos_coeffs"] == ((2, 0.3), (3, 0.1))


def _records(k):
    cfg = FlowConfig(n=1, alpha=1.5, resolution=32)
    st_ = FlowState(bodies.ellipse(build_grid(1, 32), 1.2, 0.9))
    return [diagnostics(st_, cfg)] * k


def test_series_one_record(tmp_path):
    p = io.emit_series(_records(1), tmp_path / "s.csv")
    lines = p.read_bytes().split(b"\n")
    assert lines[-1] == b"" and len(lines) == 3
    assert lines[0].decode() == ",".join(io.SERIES_HEADER)
    assert b"\r" not in p.read_bytes()


def test_series_round_trip(tmp_path):
    recs = _records(3)
    header, rows = io.read_csv(io.emit_series(recs, tmp_path / "s.csv"))
    assert tuple(header) == DiagnosticsRecord.FIELDS
    for rec, row in zip(recs, rows):
        assert row == rec.values()


def test_series_empty():
    with pytest.raises(ValueError):
        io.emit_series([], "unused.csv")


@given(st.lists(finite, min_size=1, max_size=8))
def test_csv_bit_exact(tmp_path_factory, xs):
    p = tmp_path_factory.mktemp("csv") / "x.csv"
    io.write_csv(p, ["v"], [[x] for x in xs])
    _, rows = io.read_csv(p)
    for x, (y,) in zip(xs, rows):
        assert float(y) == x and np.signbit(float(y)) == np.signbit(x)


@given(finite)
def test_fmt_round_trip(x):
    assert float(io.fmt(x)) == x


def test_dumps():
    text = io.dumps({"b": [1, 0.1], "a": float("nan"), "c": True})
    assert text == '{"a": null,"b": [1, 0.10000000000000001],"c": true}'
    assert json.loads(text)["b"][1] == 0.1


def test_snapshot_unit_circle(tmp_path):
    p = io.emit_snapshot(bodies.sphere(build_grid(1, 16)), tmp_path / "s.json")
    doc = json.loads(p.read_text())
    assert doc["version"] == "gcf-snapshot-1"
    assert doc["h"] == [1.0] * 16 and doc["n"] == 1 and doc["grid"]["shape"] == [16]


@pytest.mark.parametrize("n,res", [(1, 64), (2, (16, 32))])
def test_snapshot_round_trip(tmp_path, n, res):
    body = bodies.random_body(build_grid(n, res), np.random.default_rng(0)) if n == 2 else \
        bodies.ellipse(build_grid(n, res), 1.7, 0.6)
    p = io.emit_snapshot(body, tmp_path / "s.json", alpha=1.25, time=0.125)
    back, alpha, t = io.load_snapshot(p)
    assert np.array_equal(back.h, body.h) and back.grid.shape == body.grid.shape
    assert alpha == 1.25 and t == 0.125
    # second emission is byte-identical
    q = io.emit_snapshot(back, tmp_path / "t.json", alpha=alpha, time=t)
    assert p.read_bytes() == q.read_bytes()


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("version"),
    lambda d: d.update(version="gcf-snapshot-0"),
    lambda d: d.update(extra=1),
    lambda d: d["h"].__setitem__(0, -1.0),
    lambda d: d.update(n=3),
    lambda d: d.update(alpha=0),
])
def test_snapshot_schema_rejects(tmp_path, mutate):
    doc = io.snapshot_document(bodies.sphere(build_grid(1, 16)))
    mutate(doc)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(jsonschema.ValidationError):
        io.load_snapshot(p)


def test_snapshot_inconsistent_sizes(tmp_path):
    doc = io.snapshot_document(bodies.sphere(build_grid(1, 16)))
    doc["h"] = doc["h"][:-1]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="expected 16 values"):
        io.load_snapshot(p)
    doc = io.snapshot_document(bodies.sphere(build_grid(1, 16)))
    doc["grid"]["offsets"] = [0.5]
    p.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="offsets"):
        io.load_snapshot(p)
