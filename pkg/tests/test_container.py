import numpy as np

from fblab.container import export_csv, read_field, write_field
from fblab.grids import Grid, SpaceTimeField


def test_binary_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(5)
    g = Grid(1, -1.0, 1.0, 7, 0.0, 0.5, 5)
    u = SpaceTimeField(g, rng.normal(size=g.shape))
    p = write_field(u, tmp_path / "f.fbf")
    v = read_field(p)
    assert v.grid == g
    assert np.array_equal(v.values, u.values)  # bitwise


def test_binary_roundtrip_2d(tmp_path):
    rng = np.random.default_rng(6)
    g = Grid(2, 0.0, 1.0, 5, 0.0, 1.0, 4)
    u = SpaceTimeField(g, rng.normal(size=g.shape))
    v = read_field(write_field(u, tmp_path / "f2.fbf"))
    assert np.array_equal(v.values, u.values)


def test_csv_rows_and_header(tmp_path):
    g = Grid(1, 0.0, 1.0, 3, 0.0, 1.0, 3)
    u = SpaceTimeField(g, np.arange(9, dtype=float).reshape(3, 3))
    p = export_csv(u, tmp_path / "f.csv")
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "t,x,value"
    assert len(lines) == 1 + 9
    first = [float(v) for v in lines[1].split(",")]
    assert first == [0.0, 0.0, 0.0]


def test_bad_magic(tmp_path):
    p = tmp_path / "junk.fbf"
    p.write_bytes(b"NOPE" + b"\0" * 60)
    import pytest

    with pytest.raises(ValueError):
        read_field(p)
