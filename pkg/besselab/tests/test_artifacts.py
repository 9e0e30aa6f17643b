# besselab/tests/test_artifacts.py
# Purpose: CSV formatting, atomic writes, field dumps, manifests, config files and ordered_map.

import math
import threading
from datetime import datetime, timezone

import numpy as np
import pytest

from besselab import config
from besselab.services.analysis.gridfield import Domain, Field, make_grid
from besselab.services.artifacts.atomic import atomic_write_text
from besselab.services.artifacts.csv_writer import emit_csv, format_value, render_csv
from besselab.services.artifacts.field_dump import MAGIC, decode_field, dump_field, encode_field, load_field
from besselab.services.artifacts.manifest import render_manifest
from besselab.services.parallel import in_worker, ordered_map, transform_workers


def test_render_csv_example():
    assert render_csv([{"m": 4, "I": 1.5}]) == "m,I\n4,1.5\n"


def test_render_csv_rejects_ragged_rows():
    with pytest.raises(ValueError, match="non-rectangular"):
        render_csv([{"m": 4, "I": 1.5}, {"m": 8}])
    with pytest.raises(ValueError, match="empty"):
        render_csv([])


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(np.int64(7)) == "7"
    assert format_value(0.1) == "0.10000000000000001"
    assert float(format_value(math.pi)) == math.pi
    assert format_value(float("nan")) == "nan"
    assert format_value(-math.inf) == "-inf"
    assert format_value((1.0, -2.0)) == "1 -2"
    assert format_value("Member") == "Member"


def test_emit_csv_writes_atomically(tmp_path):
    target = tmp_path / "deep" / "results.csv"
    emit_csv([{"z": 0.0, "norm": 2.0}], target)
    assert target.read_text() == "z,norm\n0,2\n"
    assert [p.name for p in target.parent.iterdir()] == ["results.csv"]


def test_atomic_write_replaces_existing(tmp_path):
    target = tmp_path / "report.csv"
    target.write_text("old")
    atomic_write_text(target, "new\n")
    assert target.read_text() == "new\n"


def test_field_dump_round_trip(tmp_path):
    grid = make_grid(2, 4.0, 8)
    rng = np.random.default_rng(0)
    values = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    field = Field(grid, Domain.SPECTRAL, values)
    path = dump_field(field, tmp_path / "mu.blab")
    back = load_field(path)
    assert back.grid == grid
    assert back.domain is Domain.SPECTRAL
    assert np.array_equal(back.values, values)


def test_field_dump_rejects_bad_header():
    data = encode_field(Field(make_grid(1, 4.0, 4), Domain.PHYSICAL, np.ones(4)))
    assert data[:4] == MAGIC
    with pytest.raises(ValueError, match="magic"):
        decode_field(b"XXXX" + data[4:])
    with pytest.raises(ValueError, match="bytes"):
        decode_field(data[:-16])
    with pytest.raises(ValueError, match="truncated"):
        decode_field(data[:10])


def test_manifest_layout():
    started = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    text = render_manifest(
        subcommand="opnorm",
        params={"s": 0.5, "n": 2, "analytic_only": False},
        seed=7,
        started_at=started,
        wall_time_s=1.23456,
        outputs={"report": "report.csv"},
    )
    lines = text.splitlines()
    assert lines[0].startswith("artifact=")
    assert lines[2] == "subcommand=opnorm"
    assert lines[3:6] == ["param.analytic_only=false", "param.n=2", "param.s=0.5"]
    assert "seed=7" in lines
    assert "output.report=report.csv" in lines
    assert lines[-2] == "started_at=2024-01-02T03:04:05+00:00"
    assert lines[-1] == "wall_time_s=1.235"


def test_manifest_without_seed():
    text = render_manifest(
        subcommand="growth",
        params={},
        seed=None,
        started_at=datetime.now(timezone.utc),
        wall_time_s=0.0,
    )
    assert "seed=\n" in text


def test_read_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("n=2\nm-list=4,8,16\nalpha=\n# note\ns = 0.5\n")
    assert config.read_config_file(str(path)) == {"n": "2", "m_list": "4,8,16", "s": "0.5"}


def test_read_config_file_missing(tmp_path):
    with pytest.raises(ValueError, match="not found"):
        config.read_config_file(str(tmp_path / "nope.cfg"))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("BESSELAB_THREADS", "3")
    assert config.threads() == 3
    monkeypatch.setenv("BESSELAB_THREADS", "zero")
    assert config.threads() >= 1


@pytest.mark.parametrize("workers", [1, 4])
def test_ordered_map_keeps_input_order(workers):
    assert ordered_map(lambda x: x * x, range(10), max_workers=workers) == [x * x for x in range(10)]


def test_ordered_map_surfaces_errors():
    def boom(x):
        if x == 3:
            raise ValueError("bad item")
        return x

    with pytest.raises(ValueError, match="bad item"):
        ordered_map(boom, range(6), max_workers=2)


def test_nested_ordered_map_stays_on_the_outer_worker(monkeypatch):
    monkeypatch.setenv("BESSELAB_THREADS", "4")

    def outer(_):
        me = threading.current_thread()
        inner = ordered_map(lambda _: threading.current_thread(), range(4))
        return me, inner, transform_workers()

    results = ordered_map(outer, range(2), max_workers=2)
    for me, inner, fft_workers in results:
        assert me.name.startswith("besselab")
        assert all(t is me for t in inner)
        assert fft_workers == 1
    assert not in_worker()
    assert transform_workers() == 4
