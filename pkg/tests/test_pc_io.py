import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcsampling.pc_io import PLYError, PointCloud, read_ply, rgb_to_yuv, write_ply, yuv_to_rgb


def _random_cloud(rng, n, depth=10, colors=True):
    pos = rng.integers(0, 2**depth, size=(n, 3))
    col = rng.integers(0, 256, size=(n, 3)) if colors else None
    return PointCloud(pos, col, depth)


def test_ascii_two_vertices(tmp_path):
    path = tmp_path / "two.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
        "0 0 0 255 0 0\n1 1 1 0 255 0\n"
    )
    pc = read_ply(path)
    assert pc.n == 2
    assert pc.positions.dtype == np.int64
    np.testing.assert_array_equal(pc.positions, [[0, 0, 0], [1, 1, 1]])
    np.testing.assert_array_equal(pc.colors, [[255, 0, 0], [0, 255, 0]])


def test_truncated_ascii_body(tmp_path):
    path = tmp_path / "short.ply"
    path.write_text(
        "ply\nformat ascii 1.0\nelement vertex 3\n"
        "property int x\nproperty int y\nproperty int z\nend_header\n0 0 0\n1 1 1\n"
    )
    with pytest.raises(PLYError, match="truncated body"):
        read_ply(path)


def test_truncated_binary_body(tmp_path, rng):
    path = tmp_path / "cut.ply"
    write_ply(_random_cloud(rng, 10), path, "binary")
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(PLYError, match="truncated body"):
        read_ply(path)


@pytest.mark.parametrize(
    "header, message",
    [
        ("plx\nformat ascii 1.0\nend_header\n", "magic"),
        ("ply\nformat binary_big_endian 1.0\nelement vertex 1\nend_header\n", "unsupported format"),
        ("ply\nformat ascii 1.0\nelement vertex 1\nproperty int128 x\nend_header\n", "unsupported property type"),
        ("ply\nformat ascii 1.0\nelement vertex 1\nproperty int x\n", "end_header"),
        ("ply\nformat ascii 1.0\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n", "vertex"),
    ],
)
def test_malformed_headers(tmp_path, header, message):
    path = tmp_path / "bad.ply"
    path.write_text(header)
    with pytest.raises(PLYError, match=message):
        read_ply(path)


def test_coordinate_outside_declared_depth(tmp_path):
    path = tmp_path / "big.ply"
    write_ply(PointCloud([[0, 0, 0], [9, 0, 0]]), path, "ascii")
    with pytest.raises(PLYError, match="depth"):
        read_ply(path, depth=3)


@pytest.mark.parametrize("fmt", ["ascii", "binary"])
def test_round_trip_1000(tmp_path, rng, fmt):
    pc = _random_cloud(rng, 1000)
    path = tmp_path / f"rt.{fmt}.ply"
    write_ply(pc, path, fmt)
    assert read_ply(path) == pc


def test_ascii_and_binary_agree(tmp_path, rng):
    pc = _random_cloud(rng, 200)
    write_ply(pc, tmp_path / "a.ply", "ascii")
    write_ply(pc, tmp_path / "b.ply", "binary")
    assert read_ply(tmp_path / "a.ply") == read_ply(tmp_path / "b.ply")


def test_binary_round_trip_is_byte_exact(tmp_path, rng):
    pc = _random_cloud(rng, 300)
    write_ply(pc, tmp_path / "a.ply")
    write_ply(read_ply(tmp_path / "a.ply"), tmp_path / "b.ply")
    assert (tmp_path / "a.ply").read_bytes() == (tmp_path / "b.ply").read_bytes()


def test_single_point_without_colors(tmp_path):
    pc = PointCloud([[3, 1, 2]])
    write_ply(pc, tmp_path / "one.ply", "ascii")
    back = read_ply(tmp_path / "one.ply")
    assert back == pc and back.colors is None


@given(
    st.integers(1, 30).flatmap(
        lambda n: st.tuples(
            st.lists(st.tuples(*[st.integers(0, 255)] * 3), min_size=n, max_size=n),
            st.lists(st.tuples(*[st.integers(0, 255)] * 3), min_size=n, max_size=n),
        )
    ),
    st.sampled_from(["ascii", "binary"]),
)
def test_round_trip_property(tmp_path_factory, data, fmt):
    pos, col = data
    pc = PointCloud(np.array(pos), np.array(col), 8)
    path = tmp_path_factory.mktemp("ply") / "p.ply"
    write_ply(pc, path, fmt)
    assert read_ply(path) == pc


def test_duplicates_kept_in_order(tmp_path):
    pc = PointCloud([[1, 1, 1], [1, 1, 1], [0, 0, 0]], [[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    write_ply(pc, tmp_path / "d.ply")
    back = read_ply(tmp_path / "d.ply")
    np.testing.assert_array_equal(back.colors, pc.colors)


def test_invalid_clouds():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 3), dtype=int))
    with pytest.raises(ValueError):
        PointCloud([[-1, 0, 0]])
    with pytest.raises(ValueError):
        PointCloud([[8, 0, 0]], depth=3)


def test_black_and_white():
    y, u, v = rgb_to_yuv(np.array([[0, 0, 0], [255, 255, 255]]))
    np.testing.assert_allclose(y, [0, 255], atol=1e-12)
    np.testing.assert_allclose(u, [128, 128], atol=1e-12)
    np.testing.assert_allclose(v, [128, 128], atol=1e-12)
    np.testing.assert_array_equal(yuv_to_rgb([255, 0], [128, 128], [128, 128]), [[255, 255, 255], [0, 0, 0]])


def test_luma_range(rng):
    y, _, _ = rgb_to_yuv(rng.integers(0, 256, size=(10_000, 3)))
    assert y.min() >= 0 and y.max() <= 255


def test_color_round_trip_million(rng):
    rgb = rng.integers(0, 256, size=(1_000_000, 3))
    back = yuv_to_rgb(*rgb_to_yuv(rgb)).astype(int)
    assert np.abs(back - rgb).max() <= 1


def test_color_round_trip_corners():
    corners = np.array([[r, g, b] for r in (0, 255) for g in (0, 255) for b in (0, 255)])
    back = yuv_to_rgb(*rgb_to_yuv(corners)).astype(int)
    assert np.abs(back - corners).max() <= 1


def test_yuv_length_mismatch():
    with pytest.raises(ValueError):
        yuv_to_rgb([1, 2], [128], [128, 128])
