import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from interlock.design_space import (
    GRID_ANGLES_DEG,
    GRID_LENGTH_RATIOS,
    DesignGrid,
    PanelDesign,
    column_widths,
    decode_features,
    encode_features,
    enumerate_grid,
    n_angles,
    symmetry_classes,
    tile_face_dims,
    tile_geometries,
)


def test_tile_face_zero_angle_identity():
    geo = tile_face_dims(10.0, 2.54, 0.0, 0.0)
    assert geo.lower_face_mm == (10.0, 10.0)
    assert geo.top_face_mm == (10.0, 10.0)


def test_tile_face_five_degrees():
    # 10 +/- 2 * 2.54 * tan(5 deg), evaluated at 30 digits
    geo = tile_face_dims(10.0, 2.54, 5.0, 5.0)
    assert geo.top_face_mm[0] == pytest.approx(10.4444424107116939, rel=1e-14)
    assert geo.top_face_mm[1] == pytest.approx(9.5555575892883061, rel=1e-14)
    assert geo.top_face_mm == pytest.approx((10.4445, 9.5555), abs=1e-4)


def test_degenerate_tile_rejected():
    # 1 - 2 * 2.54 * tan(15 deg) = -0.361
    with pytest.raises(ValueError, match="degenerate"):
        tile_face_dims(1.0, 2.54, 15.0, 0.0)


@pytest.mark.parametrize("n,classes", [(3, 4), (5, 6), (7, 8)])
def test_symmetry_classes_partition(n, classes):
    cmap = symmetry_classes(n)
    assert cmap.shape == (n, n)
    assert sorted(np.unique(cmap)) == list(range(classes))
    assert n_angles(n) == classes
    counts = np.bincount(cmap.ravel())
    assert counts.sum() == n * n and np.all(counts > 0)
    # centre tile is alone in its class
    assert cmap[n // 2, n // 2] == 0 and counts[0] == 1


@pytest.mark.parametrize("n", [3, 5, 7])
def test_symmetry_classes_rotation_and_mirror(n):
    cmap = symmetry_classes(n)
    # mirrors keep every tile in its class
    assert np.array_equal(cmap, cmap[::-1, :])
    assert np.array_equal(cmap, cmap[:, ::-1])
    # a quarter turn maps the partition onto itself (classes permute)
    rot = np.rot90(cmap)
    pairs = set(zip(cmap.ravel(), rot.ravel()))
    mapping = dict(pairs)
    assert len(mapping) == len(pairs)
    assert sorted(mapping.values()) == sorted(mapping.keys())


def test_symmetry_classes_n3_layout():
    expected = np.array([[3, 2, 3], [1, 0, 1], [3, 2, 3]])
    assert np.array_equal(symmetry_classes(3), expected)


def test_unsupported_grid_size():
    with pytest.raises(ValueError):
        symmetry_classes(4)
    with pytest.raises(ValueError):
        PanelDesign(9, (5.0,) * 10, 1.0)


def test_design_validation():
    with pytest.raises(ValueError):
        PanelDesign(3, (5.0, 5.0, 5.0), 1.0)
    with pytest.raises(ValueError):
        PanelDesign(3, (5.0, 5.0, 5.0, 95.0), 1.0)
    with pytest.raises(ValueError):
        PanelDesign(3, (5.0,) * 4, 0.0)


def test_column_widths_keep_panel_size():
    d = PanelDesign(3, (5.0,) * 4, 2.0)
    w = column_widths(d)
    assert w.sum() == pytest.approx(50.0)
    assert w[1] == pytest.approx(2.0 * 50.0 / 3)
    assert w[0] == w[2]
    geos = tile_geometries(d)
    assert len(geos) == 9
    assert geos[4].lower_face_mm == pytest.approx((w[1], w[1]))


def test_encode_features_layout():
    d = PanelDesign(3, (5, 5, 5, 5), 1.0)
    assert encode_features(d, 0).tolist() == [5, 5, 5, 5, 1, 9, 0]
    assert len(encode_features(PanelDesign.constant(7, 10.0), 3.0)) == 11
    assert len(encode_features(PanelDesign.constant(5, 10.0), 3.0)) == 9


@given(
    n=st.sampled_from([3, 5, 7]),
    data=st.data(),
    t=st.integers(0, 600),
)
def test_encode_decode_roundtrip(n, data, t):
    angles = tuple(data.draw(st.sampled_from(GRID_ANGLES_DEG)) for _ in range(n_angles(n)))
    lr = data.draw(st.sampled_from(GRID_LENGTH_RATIOS))
    d = PanelDesign(n, angles, lr)
    back, t_back = decode_features(encode_features(d, t))
    assert back == d and t_back == t


def test_design_json_roundtrip(tmp_path):
    d = PanelDesign(5, (5, 10, 15, 20, 25, 10), 1.25)
    text = json.dumps(d.to_dict())
    assert PanelDesign.from_dict(json.loads(text)) == d


@pytest.mark.parametrize(
    "n,shape",
    [(3, (2_625_000, 7)), (5, (65_625_000, 9)), (7, (1_640_625_000, 11))],
)
def test_grid_shapes_match_published_counts(n, shape):
    grid = enumerate_grid(n, time_range=(0, 600))
    assert grid.shape == shape


@given(
    n=st.sampled_from([3, 5, 7]),
    n_lr=st.integers(1, 7),
    n_ang=st.integers(1, 5),
    n_t=st.integers(1, 600),
)
def test_row_count_closed_form(n, n_lr, n_ang, n_t):
    grid = DesignGrid(n, GRID_LENGTH_RATIOS[:n_lr], GRID_ANGLES_DEG[:n_ang], (0, n_t))
    assert grid.row_count == n_lr * n_ang ** (n + 1) * n_t


def test_singleton_grid():
    grid = DesignGrid(3, (1.0,), (10.0,), (0, 1))
    rows = list(grid.iter_rows())
    assert len(rows) == 1 and rows[0].tolist() == [[10, 10, 10, 10, 1, 9, 0]]


def test_small_grid_matches_itertools():
    grid = DesignGrid(3, (0.5, 1.0), (5.0, 10.0), (0, 3))
    expected = [
        [*angles, lr, 9.0, float(t)]
        for angles in itertools.product((5.0, 10.0), repeat=4)
        for lr in (0.5, 1.0)
        for t in range(3)
    ]
    got = np.concatenate(list(grid.iter_rows(rows_per_shard=7)))
    assert got.tolist() == expected
    # design-block access agrees with row access
    assert np.array_equal(grid.rows_for_designs(3, 9), grid.rows(9, 27))
    for d in range(grid.n_designs):
        assert grid.design_index(grid.design(d)) == d


def test_enumeration_reproducible():
    grid = enumerate_grid(3, time_range=(0, 10))
    a = b"".join(r.tobytes() for r in grid.iter_rows(10_000))
    b = b"".join(r.tobytes() for r in grid.iter_rows(3_333))
    assert a == b


def test_n7_spot_rows():
    grid = enumerate_grid(7, time_range=(0, 600))
    last = grid.rows(grid.row_count - 1, grid.row_count)[0]
    assert last.tolist() == [25.0] * 8 + [2.0, 49.0, 599.0]
    first = grid.rows(0, 2)
    assert first[1].tolist() == [5.0] * 8 + [0.5, 49.0, 1.0]
    # row index -> design index * 600 + t
    idx = 123_456_789
    row = grid.rows(idx, idx + 1)[0]
    assert row[-1] == idx % 600
    assert np.array_equal(row[:-1], grid.design_features(idx // 600, idx // 600 + 1)[0])


def test_overflow_reported():
    with pytest.raises(OverflowError):
        DesignGrid(7, tuple(np.linspace(0.5, 2, 7)), tuple(np.linspace(1, 40, 200)), (0, 600))


def test_manifest_roundtrip():
    grid = enumerate_grid(5, time_range=(0, 201))
    back = DesignGrid.from_manifest(json.loads(json.dumps(grid.manifest())))
    assert back == grid and back.fingerprint() == grid.fingerprint()
    assert math.prod(back.shape) == back.row_count * 9
