import math

import numpy as np
import pytest

from optotomo import states
from optotomo.config import ConfigError, RunConfig, dump_config, load_config, parse_config
from optotomo.io import (
    OutputBundle,
    read_distribution,
    read_report,
    read_table,
    read_tomogram,
    write_distribution,
    write_report,
    write_table,
    write_tomogram,
)
from optotomo.phase_space import PhaseSpaceGrid, Tomogram, quadrature_distribution, quasi_distribution

FULL = """
version: 1
command: witness
seed: 12
protocol: {chi: 3.0, k: 32, epsilon: 0.2}
state: {kind: fock, n: 1, dim: 8}
grid: {half_width: 6, points: 128}
noise: {covariance: [[0.1, 0], [0, 0.2]], loss: 0.9}
witness: {dims: [10, 20]}
"""


def test_round_trip():
    cfg = parse_config(FULL)
    assert cfg.state.n == 1 and cfg.noise.loss == 0.9
    assert parse_config(dump_config(cfg)) == cfg


def test_defaults():
    cfg = parse_config("{}")
    assert cfg == RunConfig()
    assert cfg.protocol.k == 32 and cfg.grid.points == 256


@pytest.mark.parametrize("text, field", [
    ("grid: {half_width: -1}", "grid.half_width"),
    ("grid: {pointz: 3}", "grid.pointz"),
    ("protocol: {k: 31}", "protocol"),
    ("noise: {covariance: [[1, 0]]}", "noise"),
    ("seed: -1", "seed"),
    ("version: 2", "version"),
    ("state: {kind: cat}", "state.kind"),
])
def test_errors_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(text)


def test_non_mapping_and_bad_yaml():
    with pytest.raises(ConfigError, match="mapping"):
        parse_config("- 1")
    with pytest.raises(ConfigError, match="YAML"):
        parse_config("a: [1")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "none.yaml")


def test_distribution_round_trip(tmp_path):
    grid = PhaseSpaceGrid.square(6, 64)
    w = quasi_distribution(states.fock(1, 4), grid, -0.25)
    write_distribution(tmp_path / "w.csv", w)
    back = read_distribution(tmp_path / "w.csv")
    assert back.grid == grid and back.s == w.s
    assert np.array_equal(back.values, w.values)
    assert back.integral() == pytest.approx(1.0, abs=1e-4)


def test_tomogram_round_trip(tmp_path):
    x = np.linspace(-6, 6, 101)
    t = Tomogram(x, quadrature_distribution(states.coherent(0.5, 20), x, 0.3), 0.3, -0.1, {"source": "test"})
    write_tomogram(tmp_path / "t.csv", t)
    back = read_tomogram(tmp_path / "t.csv")
    assert np.array_equal(back.w_values, t.w_values)
    assert (back.phi, back.s, back.meta["source"]) == (0.3, -0.1, "test")
    assert back.integral() == pytest.approx(1.0, abs=1e-4)


def test_header_checked(tmp_path):
    path = tmp_path / "t.csv"
    write_tomogram(path, Tomogram(np.linspace(-1, 1, 8), np.full(8, 0.5), 0.0, 0.0))
    with pytest.raises(ValueError, match="distribution"):
        read_distribution(path)
    path.write_text(path.read_text().replace(" v1 ", " v9 ", 1))
    with pytest.raises(ValueError, match="version"):
        read_tomogram(path)


def test_report_handles_non_finite(tmp_path):
    write_report(tmp_path / "r.json", {"a": math.nan, "b": np.float64(2.5), "c": (1, 2), "z": 1 + 2j})
    back = read_report(tmp_path / "r.json")
    assert back == {"a": "nan", "b": 2.5, "c": [1, 2], "z": {"re": 1.0, "im": 2.0}}


def test_table_round_trip(tmp_path):
    write_table(tmp_path / "f.csv", ["name", "v"], [("a,b", 1.5), ("c", math.nan)])
    rows = read_table(tmp_path / "f.csv")
    assert rows == [{"name": "a;b", "v": "1.5"}, {"name": "c", "v": "nan"}]


def test_bundle_replaces_atomically(tmp_path):
    out = tmp_path / "run"
    with OutputBundle(out) as b:
        b.path("a.txt").write_text("first")
    with pytest.raises(RuntimeError):
        with OutputBundle(out) as b:
            b.path("a.txt").write_text("second")
            raise RuntimeError("boom")
    assert (out / "a.txt").read_text() == "first"
    with OutputBundle(out) as b:
        b.path("b.txt").write_text("third")
    assert sorted(p.name for p in out.iterdir()) == ["b.txt"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["run"]
