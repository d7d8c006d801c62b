import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hplateau.hpmesh import HpmeshFormatError, dumps, loads, read_hpmesh, write_hpmesh
from hplateau.mesh import TriangulatedDisk
from hplateau.meshgen import ring_disk

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(hnp.arrays(np.float64, st.tuples(st.integers(3, 40), st.just(3)), elements=finite))
def test_round_trip_is_bit_exact(coords):
    n = len(coords)
    tris = np.array([[0, i, i + 1] for i in range(1, n - 1)])
    mesh = TriangulatedDisk(coords, tris, np.arange(n))
    back = loads(dumps(mesh))
    assert back.vertices.tobytes() == mesh.vertices.tobytes()
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary_loop, mesh.boundary_loop)


def test_file_round_trip(tmp_path):
    mesh = ring_disk(5).as_disk()
    mesh = mesh.with_vertices(mesh.vertices + np.array([0.1, 1 / 3, np.pi]))
    path = tmp_path / "m.hpmesh"
    write_hpmesh(mesh, path)
    back = read_hpmesh(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert path.read_text().startswith("hpmesh 1\nv ")


def test_loop_line_optional():
    mesh = loads("hpmesh 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
    assert mesh.n_triangles == 1
    assert len(mesh.boundary_loop) == 0


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "header"),
        ("hpmesh 2\n", "header"),
        ("hpmesh 1\nv 0 0 0\nn 0 0 1\n", "unknown tag"),
        ("hpmesh 1\nv 0 0\n", "3 coordinates"),
        ("hpmesh 1\nv 0 0 x\n", "line 2"),
        ("hpmesh 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1\n", "3 indices"),
        ("hpmesh 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nb 0 1 2\nb 0 1 2\n", "duplicate"),
    ],
)
def test_malformed_input_rejected(text, message):
    with pytest.raises(HpmeshFormatError, match=message):
        loads(text)
