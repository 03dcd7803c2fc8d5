"""Point cloud container, PLY reading/writing and RGB <-> YUV conversion."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "PointCloud",
    "PLYError",
    "read_ply",
    "write_ply",
    "rgb_to_yuv",
    "yuv_to_rgb",
]

# BT.709 luma coefficients, full range with chroma centred at 128
KR, KB = 0.2126, 0.0722
KG = 1.0 - KR - KB
CB_SCALE = 2.0 * (1.0 - KB)  # 1.8556
CR_SCALE = 2.0 * (1.0 - KR)  # 1.5748
CHROMA_OFFSET = 128.0

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class PLYError(ValueError):
    """Raised for malformed or unsupported PLY input."""


@dataclass(eq=False)
class PointCloud:
    """Voxelized point positions with optional 8-bit RGB colors.

    Parameters
    ----------
    positions : (N, 3) integer array
        Voxel coordinates, each in ``[0, 2**depth)``.
    colors : (N, 3) uint8 array or None
        RGB colors. ``None`` for geometry-only clouds.
    depth : int or None
        Bits per axis. Inferred from the coordinates when omitted.
    """

    positions: np.ndarray
    colors: np.ndarray | None = None
    depth: int | None = None
    _frozen: bool = field(default=False, init=False, repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must have shape (N, 3), got {pos.shape}")
        if len(pos) < 1:
            raise ValueError("a point cloud needs at least one point")
        if not np.issubdtype(pos.dtype, np.integer):
            rounded = np.rint(pos)
            if not np.array_equal(rounded, pos):
                raise ValueError("positions must be integer voxel coordinates")
            pos = rounded
        pos = pos.astype(np.int64)
        if pos.min() < 0:
            raise ValueError("voxel coordinates must be non-negative")
        if self.depth is None:
            self.depth = max(1, int(pos.max()).bit_length())
        elif pos.max() >= (1 << self.depth):
            raise ValueError(
                f"coordinate {int(pos.max())} outside the declared depth {self.depth}"
            )
        self.positions = pos
        if self.colors is not None:
            col = np.asarray(self.colors)
            if col.shape != pos.shape:
                raise ValueError(f"colors must have shape {pos.shape}, got {col.shape}")
            if col.min() < 0 or col.max() > 255:
                raise ValueError("colors must be 8-bit values")
            self.colors = col.astype(np.uint8)
        self.positions.flags.writeable = False
        if self.colors is not None:
            self.colors.flags.writeable = False

    def __len__(self):
        return len(self.positions)

    @property
    def n(self) -> int:
        return len(self.positions)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        if self.depth != other.depth or not np.array_equal(self.positions, other.positions):
            return False
        if (self.colors is None) != (other.colors is None):
            return False
        return self.colors is None or np.array_equal(self.colors, other.colors)

    def with_colors(self, colors) -> "PointCloud":
        return PointCloud(self.positions, colors, self.depth)


def _parse_header(fh):
    first = fh.readline()
    if first.strip() != b"ply":
        raise PLYError("malformed header: missing 'ply' magic line")
    fmt = None
    depth = None
    elements = []  # (name, count, [(prop, dtype)])
    while True:
        raw = fh.readline()
        if not raw:
            raise PLYError("malformed header: missing end_header")
        line = raw.decode("ascii", errors="replace").strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        if key == "end_header":
            break
        if key == "format":
            if len(tok) != 3 or tok[1] not in ("ascii", "binary_little_endian"):
                raise PLYError(f"unsupported format line: {line!r}")
            fmt = tok[1]
        elif key == "comment":
            m = re.match(r"comment\s+depth\s+(\d+)\s*$", line)
            if m:
                depth = int(m.group(1))
        elif key == "obj_info":
            continue
        elif key == "element":
            if len(tok) != 3:
                raise PLYError(f"malformed element line: {line!r}")
            try:
                count = int(tok[2])
            except ValueError:
                raise PLYError(f"malformed element count: {line!r}") from None
            elements.append((tok[1], count, []))
        elif key == "property":
            if not elements:
                raise PLYError("property declared before any element")
            if tok[1] == "list":
                if elements[-1][0] == "vertex":
                    raise PLYError("list properties on vertices are not supported")
                elements[-1][2].append((tok[-1], None))
                continue
            if len(tok) != 3 or tok[1] not in _PLY_TYPES:
                raise PLYError(f"unsupported property type: {line!r}")
            elements[-1][2].append((tok[2], _PLY_TYPES[tok[1]]))
        else:
            raise PLYError(f"malformed header line: {line!r}")
    if fmt is None:
        raise PLYError("malformed header: no format line")
    if not elements or elements[0][0] != "vertex":
        raise PLYError("the first element must be 'vertex'")
    return fmt, depth, elements[0]


def read_ply(path, depth: int | None = None) -> PointCloud:
    """Read a PLY point cloud (ascii or binary_little_endian).

    Only the leading ``vertex`` element is read; any trailing elements are
    ignored. Float coordinates are rounded to the nearest integer voxel.
    ``depth`` overrides a ``comment depth`` line stored in the header.
    """
    with open(path, "rb") as fh:
        fmt, hdr_depth, (_, count, props) = _parse_header(fh)
        names = [name for name, _ in props]
        for axis in "xyz":
            if axis not in names:
                raise PLYError(f"vertex element lacks property {axis!r}")
        dtype = np.dtype([(name, "<" + dt) for name, dt in props])
        if fmt == "ascii":
            rows = []
            for _ in range(count):
                line = fh.readline()
                if not line:
                    raise PLYError("truncated body")
                vals = line.split()
                if len(vals) < len(props):
                    raise PLYError("truncated body")
                rows.append(tuple(vals[: len(props)]))
            try:
                data = np.array(rows, dtype=[(n, "f8") for n in names]) if rows else np.zeros(0, dtype)
            except ValueError as exc:
                raise PLYError(f"malformed vertex line: {exc}") from None
        else:
            buf = fh.read(dtype.itemsize * count)
            if len(buf) < dtype.itemsize * count:
                raise PLYError("truncated body")
            data = np.frombuffer(buf, dtype=dtype, count=count)
    if count < 1:
        raise PLYError("point cloud has no vertices")
    pos = np.stack([data["x"], data["y"], data["z"]], axis=1)
    if np.issubdtype(pos.dtype, np.floating):
        pos = np.rint(pos)
    colors = None
    if all(c in names for c in ("red", "green", "blue")):
        colors = np.stack([data["red"], data["green"], data["blue"]], axis=1)
        if colors.min() < 0 or colors.max() > 255:
            raise PLYError("color values outside 8-bit range")
        colors = colors.astype(np.uint8)
    try:
        return PointCloud(pos.astype(np.int64), colors, depth if depth is not None else hdr_depth)
    except ValueError as exc:
        raise PLYError(str(exc)) from None


def write_ply(pc: PointCloud, path, format: str = "binary") -> None:
    """Write ``pc`` as PLY. ``format`` is ``"ascii"`` or ``"binary"`` (little endian)."""
    if format not in ("ascii", "binary"):
        raise ValueError(f"unknown PLY format {format!r}")
    fields = [("x", "<i4"), ("y", "<i4"), ("z", "<i4")]
    if pc.colors is not None:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    rec = np.empty(pc.n, dtype=fields)
    rec["x"], rec["y"], rec["z"] = pc.positions.T
    if pc.colors is not None:
        rec["red"], rec["green"], rec["blue"] = pc.colors.T
    header = [
        "ply",
        "format " + ("ascii 1.0" if format == "ascii" else "binary_little_endian 1.0"),
        f"comment depth {pc.depth}",
        f"element vertex {pc.n}",
        "property int x",
        "property int y",
        "property int z",
    ]
    if pc.colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header.append("end_header")
    with open(Path(path), "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if format == "binary":
            fh.write(rec.tobytes())
        else:
            cols = [rec[name].astype(np.int64) for name, _ in fields]
            table = np.stack(cols, axis=1)
            np.savetxt(fh, table, fmt="%d")


def rgb_to_yuv(rgb):
    """Convert RGB (a PointCloud or an (N, 3) array) to float Y, U, V channels.

    Uses BT.709 luma weights with full-range chroma centred at 128. The chroma
    channels are clipped to [0, 255]; only saturated blue/red lose up to half a
    code value there.
    """
    if isinstance(rgb, PointCloud):
        if rgb.colors is None:
            raise ValueError("point cloud has no colors")
        rgb = rgb.colors
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = KR * r + KG * g + KB * b
    u = np.clip((b - y) / CB_SCALE + CHROMA_OFFSET, 0.0, 255.0)
    v = np.clip((r - y) / CR_SCALE + CHROMA_OFFSET, 0.0, 255.0)
    return y, u, v


def yuv_to_rgb(y, u, v) -> np.ndarray:
    """Invert :func:`rgb_to_yuv`, returning rounded and clamped uint8 RGB."""
    y, u, v = (np.asarray(c, dtype=np.float64) for c in (y, u, v))
    if not (y.shape == u.shape == v.shape):
        raise ValueError("Y, U and V channels must have the same length")
    r = y + CR_SCALE * (v - CHROMA_OFFSET)
    b = y + CB_SCALE * (u - CHROMA_OFFSET)
    g = (y - KR * r - KB * b) / KG
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
