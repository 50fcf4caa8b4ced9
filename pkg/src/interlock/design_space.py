"""Panel design parameterization, tile geometry and the candidate grid.

A panel is an ``N x N`` array of truncated-tetrahedron tiles (``N`` in 3, 5, 7)
on a square footprint of fixed side. Its free design variables are one
interlocking angle per tile class and the length ratio of the middle tile.

Tile classes
------------
Tiles are grouped by concentric ring ``r = max(|i - c|, |j - c|)`` around the
centre tile ``c``.  The centre is class 0.  Each ring ``r >= 1`` contributes two
classes: tiles off the diagonals whose offset is mainly along x (left/right
sides, class ``2r - 1``) and mainly along y (top/bottom sides, class ``2r``).
All diagonal tiles (the ring corners) share the last class.  This yields
``N + 1`` classes, i.e. 4 / 6 / 8 angles for N = 3 / 5 / 7, every class is
mirror-symmetric about both panel mid-lines, and a quarter turn swaps the
x-side and y-side class of each ring.  A design whose two side classes carry
the same angle in every ring is therefore fully invariant under rotation.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

PANEL_SIZE_MM = 50.0
DEFAULT_THICKNESS_MM = 2.54

GRID_SIZES = (3, 5, 7)
GRID_ANGLES_DEG = (5.0, 10.0, 15.0, 20.0, 25.0)
GRID_LENGTH_RATIOS = (0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)

_INT64_MAX = np.iinfo(np.int64).max


def n_angles(grid_size: int) -> int:
    """Number of interlocking-angle inputs for an ``N x N`` panel."""
    _check_grid_size(grid_size)
    return grid_size + 1


def feature_width(grid_size: int) -> int:
    """Length of an encoded feature row: angles, LR, tile count, time."""
    return n_angles(grid_size) + 3


def feature_names(grid_size: int) -> list[str]:
    return [f"angle_{k + 1}" for k in range(n_angles(grid_size))] + ["lr", "tiles", "t"]


def _check_grid_size(grid_size) -> None:
    if grid_size not in GRID_SIZES:
        raise ValueError(f"unsupported grid size {grid_size!r}; expected one of {GRID_SIZES}")


@dataclass(frozen=True)
class TileGeometry:
    """Face dimensions of one truncated-tetrahedron tile, in mm."""

    lower_face_mm: tuple[float, float]
    top_face_mm: tuple[float, float]
    class_id: int | None = None


def tile_face_dims(l_mm, H_mm, theta1_deg, theta2_deg, class_id=None, width_mm=None) -> TileGeometry:
    """Lower and top face of a tile with base edge ``l`` and height ``H``.

    The top face is ``(l + 2 H tan(theta2)) x (l - 2 H tan(theta1))``.
    ``width_mm`` gives a rectangular base ``width x l`` for tiles whose column
    and row widths differ; the inward-tilted pair always shortens ``l``.
    """
    width = l_mm if width_mm is None else width_mm
    if l_mm <= 0 or width <= 0 or H_mm <= 0:
        raise ValueError("tile edge lengths and thickness must be positive")
    for theta in (theta1_deg, theta2_deg):
        if not 0.0 <= theta < 90.0:
            raise ValueError(f"interlocking angle {theta} deg outside [0, 90)")
    grow = 2.0 * H_mm * math.tan(math.radians(theta2_deg))
    shrink = 2.0 * H_mm * math.tan(math.radians(theta1_deg))
    top_short = l_mm - shrink
    if top_short <= 0:
        raise ValueError(
            f"degenerate tile: l - 2H tan(theta1) = {top_short:.4g} mm <= 0 "
            f"(l={l_mm}, H={H_mm}, theta1={theta1_deg})"
        )
    return TileGeometry((float(width), float(l_mm)), (width + grow, top_short), class_id)


def symmetry_classes(grid_size: int) -> np.ndarray:
    """Map every tile ``(row, col)`` to its angle class.

    Returns an ``(N, N)`` integer array with values ``0 .. N``; see the module
    docstring for the ordering.
    """
    _check_grid_size(grid_size)
    c = grid_size // 2
    classes = np.empty((grid_size, grid_size), dtype=int)
    diagonal_class = grid_size
    for i in range(grid_size):
        for j in range(grid_size):
            dy, dx = abs(i - c), abs(j - c)
            ring = max(dx, dy)
            if ring == 0:
                classes[i, j] = 0
            elif dx == dy:
                classes[i, j] = diagonal_class
            elif dx > dy:
                classes[i, j] = 2 * ring - 1
            else:
                classes[i, j] = 2 * ring
    return classes


@dataclass(frozen=True)
class PanelDesign:
    """Independent design variables of one interlocking panel."""

    grid_size: int
    angles_deg: tuple[float, ...]
    length_ratio: float
    thickness_mm: float = DEFAULT_THICKNESS_MM

    def __post_init__(self):
        _check_grid_size(self.grid_size)
        angles = tuple(float(a) for a in self.angles_deg)
        object.__setattr__(self, "angles_deg", angles)
        object.__setattr__(self, "length_ratio", float(self.length_ratio))
        if len(angles) != n_angles(self.grid_size):
            raise ValueError(
                f"grid size {self.grid_size} needs {n_angles(self.grid_size)} angles, got {len(angles)}"
            )
        if any(not 0.0 < a < 90.0 for a in angles):
            raise ValueError(f"angles must lie in (0, 90) deg, got {angles}")
        if not 0.0 < self.length_ratio < self.grid_size:
            raise ValueError(f"length ratio must lie in (0, {self.grid_size}), got {self.length_ratio}")
        if self.thickness_mm <= 0:
            raise ValueError("thickness must be positive")
        # every tile must have a non-degenerate top face
        widths = column_widths(self)
        tile_theta = self.tile_angles()
        for i in range(self.grid_size):
            for j in range(self.grid_size):
                tile_face_dims(min(widths[i], widths[j]), self.thickness_mm, tile_theta[i, j], tile_theta[i, j])

    @property
    def n_tiles(self) -> int:
        return self.grid_size**2

    def tile_angles(self) -> np.ndarray:
        """Interlocking angle (deg) of every tile, shape ``(N, N)``."""
        return np.asarray(self.angles_deg)[symmetry_classes(self.grid_size)]

    def is_rotation_symmetric(self) -> bool:
        a = self.tile_angles()
        return bool(np.array_equal(a, np.rot90(a)))

    def to_dict(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "angles_deg": list(self.angles_deg),
            "length_ratio": self.length_ratio,
            "thickness_mm": self.thickness_mm,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PanelDesign":
        return cls(
            grid_size=int(data["grid_size"]),
            angles_deg=tuple(data["angles_deg"]),
            length_ratio=float(data["length_ratio"]),
            thickness_mm=float(data.get("thickness_mm", DEFAULT_THICKNESS_MM)),
        )

    @classmethod
    def constant(cls, grid_size: int, angle_deg: float, length_ratio: float = 1.0) -> "PanelDesign":
        return cls(grid_size, (angle_deg,) * n_angles(grid_size), length_ratio)


def column_widths(design: PanelDesign, panel_size_mm: float = PANEL_SIZE_MM) -> np.ndarray:
    """Widths (mm) of the N tile columns; rows use the same widths.

    The middle column is ``LR * panel / N`` wide and the remaining columns
    share the rest of the panel equally.
    """
    n = design.grid_size
    middle = design.length_ratio * panel_size_mm / n
    widths = np.full(n, (panel_size_mm - middle) / (n - 1))
    widths[n // 2] = middle
    return widths


def tile_geometries(design: PanelDesign, panel_size_mm: float = PANEL_SIZE_MM) -> list[TileGeometry]:
    """Geometry of every tile in row-major order."""
    widths = column_widths(design, panel_size_mm)
    classes = symmetry_classes(design.grid_size)
    theta = design.tile_angles()
    out = []
    for i in range(design.grid_size):
        for j in range(design.grid_size):
            out.append(
                tile_face_dims(widths[i], design.thickness_mm, theta[i, j], theta[i, j],
                               class_id=int(classes[i, j]), width_mm=widths[j])
            )
    return out


def encode_features(design: PanelDesign, t: float) -> np.ndarray:
    """Feature row ``[angles..., LR, N^2, t]``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    return np.array([*design.angles_deg, design.length_ratio, float(design.n_tiles), float(t)])


def decode_features(row: Sequence[float], thickness_mm: float = DEFAULT_THICKNESS_MM) -> tuple[PanelDesign, float]:
    """Inverse of :func:`encode_features`."""
    row = [float(v) for v in row]
    grid_size = int(round(math.sqrt(row[-2])))
    if len(row) != feature_width(grid_size):
        raise ValueError(f"feature row of length {len(row)} does not match {grid_size}x{grid_size} panel")
    design = PanelDesign(grid_size, tuple(row[:-3]), row[-3], thickness_mm)
    return design, row[-1]


@dataclass(frozen=True)
class DesignGrid:
    """Full-factorial candidate grid, enumerated lexicographically.

    Row order follows the feature layout: ``angle_1`` varies slowest, then the
    remaining angles, then LR, and time varies fastest.  Rows are addressed by
    integer index so any slice can be produced on demand without
    materialising the whole grid.
    """

    grid_size: int
    lr_values: tuple[float, ...] = GRID_LENGTH_RATIOS
    angle_values: tuple[float, ...] = GRID_ANGLES_DEG
    time_range: tuple[int, int] = (0, 600)
    thickness_mm: float = DEFAULT_THICKNESS_MM
    _radices: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_grid_size(self.grid_size)
        object.__setattr__(self, "lr_values", tuple(float(v) for v in self.lr_values))
        object.__setattr__(self, "angle_values", tuple(float(v) for v in self.angle_values))
        t0, t1 = (int(v) for v in self.time_range)
        object.__setattr__(self, "time_range", (t0, t1))
        if not self.lr_values or not self.angle_values:
            raise ValueError("value sets must be non-empty")
        if t1 <= t0 or t0 < 0:
            raise ValueError(f"invalid time range {self.time_range}; need 0 <= start < stop")
        if self.row_count > _INT64_MAX:
            raise OverflowError(f"grid has {self.row_count} rows, beyond 64-bit indexing")
        object.__setattr__(self, "_radices", (len(self.angle_values),) * self.n_angles + (len(self.lr_values),))

    @property
    def n_angles(self) -> int:
        return n_angles(self.grid_size)

    @property
    def width(self) -> int:
        return self.n_angles + 3

    @property
    def times(self) -> np.ndarray:
        return np.arange(*self.time_range, dtype=float)

    @property
    def n_times(self) -> int:
        return self.time_range[1] - self.time_range[0]

    @property
    def n_designs(self) -> int:
        return len(self.lr_values) * len(self.angle_values) ** self.n_angles

    @property
    def row_count(self) -> int:
        return self.n_designs * self.n_times

    @property
    def shape(self) -> tuple[int, int]:
        return (self.row_count, self.width)

    def _digits(self, design_index: np.ndarray) -> np.ndarray:
        idx = np.asarray(design_index, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_designs):
            raise IndexError("design index out of range")
        digits = np.empty(idx.shape + (len(self._radices),), dtype=np.int64)
        rest = idx.copy()
        for pos in range(len(self._radices) - 1, -1, -1):
            base = self._radices[pos]
            digits[..., pos] = rest % base
            rest = rest // base
        return digits

    def design_features(self, start: int, stop: int) -> np.ndarray:
        """Design part ``[angles..., LR, N^2]`` of designs ``start .. stop - 1``."""
        return self.design_features_at(np.arange(start, stop, dtype=np.int64))

    def design(self, index: int) -> PanelDesign:
        feats = self.design_features(index, index + 1)[0]
        return PanelDesign(self.grid_size, tuple(feats[: self.n_angles]), feats[self.n_angles], self.thickness_mm)

    def design_index(self, design: PanelDesign) -> int:
        """Position of ``design`` in the enumeration (raises if absent)."""
        if design.grid_size != self.grid_size:
            raise ValueError("design grid size differs from grid")
        index = 0
        for a in design.angles_deg:
            index = index * len(self.angle_values) + self.angle_values.index(a)
        return index * len(self.lr_values) + self.lr_values.index(design.length_ratio)

    def rows_for_designs(self, start: int, stop: int) -> np.ndarray:
        """All time rows of designs ``start .. stop - 1``; shape ``((stop-start)*T, width)``."""
        feats = self.design_features(start, stop)
        n_t = self.n_times
        rows = np.empty((len(feats) * n_t, self.width))
        rows[:, :-1] = np.repeat(feats, n_t, axis=0)
        rows[:, -1] = np.tile(self.times, len(feats))
        return rows

    def rows(self, start: int, stop: int) -> np.ndarray:
        """Rows ``start .. stop - 1`` of the flattened grid."""
        if not 0 <= start <= stop <= self.row_count:
            raise IndexError("row slice out of range")
        idx = np.arange(start, stop, dtype=np.int64)
        out = np.empty((len(idx), self.width))
        out[:, :-1] = self.design_features_at(idx // self.n_times)
        out[:, -1] = self.time_range[0] + idx % self.n_times
        return out

    def design_features_at(self, design_index: np.ndarray) -> np.ndarray:
        digits = self._digits(design_index)
        out = np.empty(digits.shape[:-1] + (self.n_angles + 2,))
        out[..., : self.n_angles] = np.asarray(self.angle_values)[digits[..., : self.n_angles]]
        out[..., self.n_angles] = np.asarray(self.lr_values)[digits[..., -1]]
        out[..., -1] = self.grid_size**2
        return out

    def iter_rows(self, rows_per_shard: int = 1 << 16) -> Iterator[np.ndarray]:
        """Stream the grid as consecutive row blocks."""
        for start in range(0, self.row_count, rows_per_shard):
            yield self.rows(start, min(start + rows_per_shard, self.row_count))

    def design_shards(self, designs_per_shard: int) -> list[tuple[int, int]]:
        """Half-open design-index ranges covering the grid."""
        n = self.n_designs
        return [(s, min(s + designs_per_shard, n)) for s in range(0, n, designs_per_shard)]

    def manifest(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "lr_values": list(self.lr_values),
            "angle_values": list(self.angle_values),
            "time_range": list(self.time_range),
            "thickness_mm": self.thickness_mm,
            "n_designs": self.n_designs,
            "row_count": self.row_count,
            "width": self.width,
        }

    @classmethod
    def from_manifest(cls, data: dict) -> "DesignGrid":
        grid = cls(
            int(data["grid_size"]),
            tuple(data["lr_values"]),
            tuple(data["angle_values"]),
            tuple(data["time_range"]),
            float(data.get("thickness_mm", DEFAULT_THICKNESS_MM)),
        )
        if "row_count" in data and int(data["row_count"]) != grid.row_count:
            raise ValueError("manifest row_count disagrees with its value sets")
        return grid

    def fingerprint(self) -> str:
        blob = json.dumps(self.manifest(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def enumerate_grid(grid_size, lr_values=GRID_LENGTH_RATIOS, angle_values=GRID_ANGLES_DEG,
                   time_range=(0, 600), thickness_mm=DEFAULT_THICKNESS_MM) -> DesignGrid:
    """Build the lazily enumerated candidate grid for one panel size."""
    return DesignGrid(grid_size, tuple(lr_values), tuple(angle_values), tuple(time_range), thickness_mm)


def load_design(path) -> PanelDesign:
    with open(path) as fh:
        return PanelDesign.from_dict(json.load(fh))


def save_design(design: PanelDesign, path) -> None:
    with open(path, "w") as fh:
        json.dump(design.to_dict(), fh, indent=2)
