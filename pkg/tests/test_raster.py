import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adaptomo.errors import FormatError, InvalidArgumentError
from adaptomo.raster import Geometry, ImageGrid, Sinogram, make_geometry, read_raster, write_raster


def test_make_geometry_eight_angles():
    g = make_geometry(8, 33, 33)
    np.testing.assert_allclose(g.angle_array, np.arange(8) * np.pi / 8, rtol=0, atol=0)
    assert (g.n_angles, g.n_det, g.vol_size) == (8, 33, 33)


def test_smallest_geometry():
    g = make_geometry(1, 1, 1)
    assert g.angles == (0.0,)


def test_default_scale_geometry():
    g = make_geometry(32, 256, 256)
    assert len(g.angles) == 32 and g.n_det == 256
    assert g.angles[-1] < math.pi


@pytest.mark.parametrize("angles", [(0.0, 0.0), (0.5, 0.1), (0.0, math.pi), (-0.1, 1.0)])
def test_bad_angles_rejected(angles):
    with pytest.raises(InvalidArgumentError):
        Geometry(2, 4, angles, 4)


def test_detector_narrower_than_image_rejected():
    with pytest.raises(InvalidArgumentError):
        make_geometry(4, 8, 16)


def test_geometry_structural_equality():
    assert make_geometry(5, 9, 7) == Geometry(5, 9, tuple(i * math.pi / 5 for i in range(5)), 7)
    assert make_geometry(5, 9, 7) != make_geometry(5, 9, 9)


def test_detector_and_pixel_coordinates():
    g = make_geometry(1, 4, 3)
    np.testing.assert_array_equal(g.det_positions(), [-1.5, -0.5, 0.5, 1.5])
    x, y = g.pixel_centers()
    assert x[0, 0] == -1 and y[0, 0] == 1 and x[0, 2] == 1 and y[2, 0] == -1


def test_sinogram_shape_checked():
    with pytest.raises(InvalidArgumentError):
        Sinogram(make_geometry(2, 3, 3), np.zeros((3, 2)))
    with pytest.raises(InvalidArgumentError):
        ImageGrid(2, [[0, np.nan], [0, 0]])


def test_subsample_keeps_every_mth_row_from_zero():
    g = make_geometry(1500, 8, 8)
    p = Sinogram(g, np.arange(1500 * 8, dtype=float).reshape(1500, 8))
    q = p.subsample(2)
    assert q.shape == (750, 8)
    np.testing.assert_array_equal(q.values, p.values[::2])
    assert q.geometry.angles == g.angles[::2]


def test_zero_image_round_trip(tmp_path):
    write_raster(tmp_path / "z", ImageGrid(4, np.zeros((4, 4))))
    np.testing.assert_array_equal(read_raster(tmp_path / "z").values, np.zeros((4, 4)))


def test_sinogram_file_size(tmp_path):
    p = Sinogram(make_geometry(2, 3, 3), np.ones((2, 3)))
    write_raster(tmp_path / "s.f32", p)
    assert (tmp_path / "s.f32").stat().st_size == 24
    q = read_raster(tmp_path / "s")
    assert q.geometry == p.geometry


def test_size_mismatch_is_format_error(tmp_path):
    write_raster(tmp_path / "s", Sinogram(make_geometry(2, 3, 3), np.ones((2, 3))))
    (tmp_path / "s.f32").write_bytes(b"\0" * 8)
    with pytest.raises(FormatError):
        read_raster(tmp_path / "s")


def test_malformed_sidecar(tmp_path):
    write_raster(tmp_path / "i", ImageGrid(2, np.ones((2, 2))))
    (tmp_path / "i.json").write_text('{"kind": "image"}')
    with pytest.raises(FormatError):
        read_raster(tmp_path / "i")


f32 = st.floats(allow_nan=False, allow_infinity=False, width=32)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=f32))
def test_sinogram_round_trip_bit_exact(tmp_path_factory, values):
    rows, cols = values.shape
    g = make_geometry(rows, max(cols, 1), 1)
    p = Sinogram(g, values.astype(np.float64))
    d = tmp_path_factory.mktemp("rt")
    write_raster(d / "p", p)
    q = read_raster(d / "p")
    assert q.values.tobytes() == p.values.tobytes()
    assert q.geometry == g


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: arrays(np.float32, (n, n), elements=f32)))
def test_image_round_trip_bit_exact(tmp_path_factory, values):
    d = tmp_path_factory.mktemp("rt")
    write_raster(d / "x", ImageGrid.from_array(values.astype(np.float64)))
    out = read_raster(d / "x")
    np.testing.assert_array_equal(out.values, values.astype(np.float64))
