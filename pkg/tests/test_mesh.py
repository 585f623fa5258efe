import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bscch.errors import InvalidArgument, MeshParseError, ValidationError
from bscch.mesh import (
    FORMAT_HEADER,
    TriMesh,
    generate_disk_mesh,
    mesh_stats,
    read_mesh,
    validate_mesh,
    write_mesh,
)


def test_counts_formula():
    for nb, nr in [(8, 2), (16, 4), (32, 8)]:
        m = generate_disk_mesh(nb, nr)
        assert m.n_vertices == 1 + nb * nr
        assert len(m.triangles) == nb * (2 * nr - 1)
        assert m.n_boundary == nb


def test_exact_polygon_area_and_perimeter():
    # the mesh triangulates the inscribed regular nb-gon exactly
    for nb, nr in [(16, 4), (64, 16)]:
        st_ = mesh_stats(generate_disk_mesh(nb, nr))
        assert st_.perimeter == pytest.approx(2 * nb * np.sin(np.pi / nb), rel=1e-14)
        assert st_.area == pytest.approx(0.5 * nb * np.sin(2 * np.pi / nb), rel=1e-13)


def test_boundary_loop_is_unit_circle_nodes():
    m = generate_disk_mesh(32, 8)
    r = np.linalg.norm(m.vertices[m.boundary_loop], axis=1)
    np.testing.assert_allclose(r, 1.0, atol=1e-15)


def test_roundtrip_bit_identical(tmp_path):
    m = generate_disk_mesh(16, 4)
    p1, p2 = tmp_path / "a.mesh", tmp_path / "b.mesh"
    write_mesh(m, p1)
    write_mesh(read_mesh(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_parse_error_reports_line(tmp_path):
    p = tmp_path / "bad.mesh"
    p.write_text("not-a-mesh 9\n")
    with pytest.raises(MeshParseError) as exc:
        read_mesh(p)
    assert exc.value.line == 1


def test_parse_error_truncated(tmp_path):
    m = generate_disk_mesh(8, 2)
    p = tmp_path / "m.mesh"
    write_mesh(m, p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:5]) + "\n")
    with pytest.raises(MeshParseError):
        read_mesh(p)


def test_parse_error_bad_index(tmp_path):
    p = tmp_path / "m.mesh"
    p.write_text(FORMAT_HEADER + "\n3 1 3\n0 0\n1 0\n0 1\n0 1 99\n0\n1\n2\n")
    with pytest.raises((MeshParseError, ValidationError)):
        read_mesh(p)


def test_flipped_triangle_rejected():
    m = generate_disk_mesh(8, 2)
    tris = m.triangles.copy()
    tris[0] = tris[0][::-1]
    with pytest.raises(ValidationError):
        TriMesh(m.vertices, tris, m.boundary_loop)


def test_generator_input_validation():
    with pytest.raises(InvalidArgument):
        generate_disk_mesh(7, 2)  # odd nb
    with pytest.raises(InvalidArgument):
        generate_disk_mesh(8, 0)


@settings(max_examples=20, deadline=None)
@given(nb=st.sampled_from([8, 12, 16, 24]), nr=st.integers(min_value=1, max_value=6))
def test_generated_meshes_valid_and_euler(nb, nr):
    m = generate_disk_mesh(nb, nr)
    validate_mesh(m)  # raises on defect
    edges = set()
    for tri in m.triangles:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            edges.add(frozenset((tri[a], tri[b])))
    # Euler formula for a disk: V - E + F = 1 (triangles only)
    assert m.n_vertices - len(edges) + len(m.triangles) == 1
    st_ = mesh_stats(m)
    assert st_.min_angle > 10.0
    assert st_.h_max < 2 * np.pi / nb + 1.2 / nr
