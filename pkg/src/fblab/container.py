"""Field serialization: binary container and CSV export.

Binary layout (little-endian, documented here as the authoritative spec):

    offset  size  type    content
    0       4     bytes   magic b"FBF1"
    4       4     uint32  format version (currently 1)
    8       4     uint32  spatial_dim (1 or 2)
    12      8     f64     a   (spatial extent low)
    20      8     f64     b   (spatial extent high)
    28      8     f64     t0
    36      8     f64     t1
    44      4     uint32  nx
    48      4     uint32  nt
    52      ...   f64[]   values, C (row-major) order, shape (nt, nx**dim)

CSV rows are ``t,x,value`` (1d) or ``t,x1,x2,value`` (2d) with a header
line, one row per node, C order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grids import Grid, SpaceTimeField

MAGIC = b"FBF1"
VERSION = 1
_HEADER = "<4sIIddddII"


def write_field(u: SpaceTimeField, path) -> Path:
    path = Path(path)
    g = u.grid
    header = struct.pack(_HEADER, MAGIC, VERSION, g.spatial_dim,
                         g.a, g.b, g.t0, g.t1, g.nx, g.nt)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())
    return path


def read_field(path) -> SpaceTimeField:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(struct.calcsize(_HEADER))
        magic, version, dim, a, b, t0, t1, nx, nt = struct.unpack(_HEADER, raw)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a field container (bad magic)")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported container version {version}")
        grid = Grid(dim, a, b, nx, t0, t1, nt)
        count = nt * nx**dim
        vals = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    return SpaceTimeField(grid, vals.reshape(grid.shape).copy())


def export_csv(u: SpaceTimeField, path) -> Path:
    path = Path(path)
    g = u.grid
    coords = g.node_coords()
    cols = [c.ravel() for c in coords] + [u.values.ravel()]
    header = "t,x,value" if g.spatial_dim == 1 else "t,x1,x2,value"
    data = np.column_stack(cols)
    np.savetxt(path, data, delimiter=",", header=header, comments="",
               fmt="%.17g")
    return path
