"""Plain-text ``hpmesh`` mesh format.

::

    hpmesh 1
    v x y z          one per vertex, 17 significant digits
    f i j k          one per triangle, 0-based
    b i1 i2 ... in   boundary loop (optional, at most once)

Coordinates are written with ``%.17g`` so that a write/read round trip is
bit-exact. Unknown line tags are rejected.
"""

from __future__ import annotations

import io
import os
from typing import TextIO, Union

import numpy as np

from .mesh import TriangulatedDisk

__all__ = ["HpmeshFormatError", "dumps", "loads", "write_hpmesh", "read_hpmesh"]

PathLike = Union[str, os.PathLike]


class HpmeshFormatError(ValueError):
    pass


def _write(mesh: TriangulatedDisk, fh: TextIO) -> None:
    fh.write("hpmesh 1\n")
    for x, y, z in mesh.vertices.tolist():
        fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
    for i, j, k in mesh.triangles.tolist():
        fh.write(f"f {i} {j} {k}\n")
    if len(mesh.boundary_loop):
        fh.write("b " + " ".join(str(i) for i in mesh.boundary_loop.tolist()) + "\n")


def dumps(mesh: TriangulatedDisk) -> str:
    buf = io.StringIO()
    _write(mesh, buf)
    return buf.getvalue()


def loads(text: str) -> TriangulatedDisk:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "hpmesh 1":
        raise HpmeshFormatError("missing 'hpmesh 1' header")
    verts, tris, loop = [], [], None
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        tag, args = parts[0], parts[1:]
        try:
            if tag == "v":
                if len(args) != 3:
                    raise HpmeshFormatError(f"line {lineno}: vertex needs 3 coordinates")
                verts.append([float(a) for a in args])
            elif tag == "f":
                if len(args) != 3:
                    raise HpmeshFormatError(f"line {lineno}: face needs 3 indices")
                tris.append([int(a) for a in args])
            elif tag == "b":
                if loop is not None:
                    raise HpmeshFormatError(f"line {lineno}: duplicate boundary line")
                loop = [int(a) for a in args]
            else:
                raise HpmeshFormatError(f"line {lineno}: unknown tag {tag!r}")
        except ValueError as exc:
            if isinstance(exc, HpmeshFormatError):
                raise
            raise HpmeshFormatError(f"line {lineno}: {exc}") from exc
    v = np.array(verts, dtype=float).reshape(-1, 3)
    t = np.array(tris, dtype=np.int64).reshape(-1, 3)
    b = np.array(loop if loop is not None else [], dtype=np.int64)
    return TriangulatedDisk(v, t, b)


def write_hpmesh(mesh: TriangulatedDisk, path: PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        _write(mesh, fh)


def read_hpmesh(path: PathLike) -> TriangulatedDisk:
    with open(path, "r", encoding="ascii") as fh:
        return loads(fh.read())
