"""Sensing payload models: raw frames, JPEG tables, feature vectors, and
token-based vector quantization, plus the camera-ray back-projection used to
turn a detection box into a 3D point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

SENSE_MODES = ("raw", "jpeg", "semantic_feature", "vq")
JPEG_QUALITIES = (95, 80, 60)
VIT_GRIDS = ((1, 1), (1, 2), (1, 3))
FEATURE_BITS = (4, 8, 16, 32)
QOS_CLASSES = ("reliable", "best_effort")

# Measured single-frame JPEG sizes for a 256x256 preview stream, in bytes.
DEFAULT_JPEG_BYTES: Dict[int, int] = {95: 80000, 80: 33380, 60: 22280}


def parse_vit_grid(value) -> Tuple[int, int]:
    """Accept ``(a, b)`` pairs or ``"axb"`` strings like ``"1x3"``."""
    if isinstance(value, str):
        parts = value.lower().split("x")
        if len(parts) != 2:
            raise ValueError(f"vit_grid {value!r} is not of the form 'AxB'")
        grid = (int(parts[0]), int(parts[1]))
    else:
        grid = (int(value[0]), int(value[1]))
    if grid[0] < 1 or grid[1] < 1:
        raise ValueError("vit_grid factors must be >= 1")
    return grid


def format_vit_grid(grid: Tuple[int, int]) -> str:
    return f"{grid[0]}x{grid[1]}"


@dataclass(frozen=True)
class SenseConfig:
    """What the robot uplinks per frame and with which delivery class."""

    mode: str = "vq"
    jpeg_quality: Optional[int] = None
    vit_grid: Optional[Tuple[int, int]] = (1, 1)
    feature_dim: Optional[int] = None
    feature_bits: Optional[int] = None
    qos: str = "best_effort"

    def __post_init__(self):
        if self.mode not in SENSE_MODES:
            raise ValueError(f"mode {self.mode!r} not in {SENSE_MODES}")
        if self.qos not in QOS_CLASSES:
            raise ValueError(f"qos {self.qos!r} not in {QOS_CLASSES}")
        if self.mode == "jpeg":
            if self.jpeg_quality not in JPEG_QUALITIES:
                raise ValueError(f"jpeg_quality {self.jpeg_quality!r} not in {JPEG_QUALITIES}")
        if self.mode == "vq":
            grid = parse_vit_grid(self.vit_grid)
            object.__setattr__(self, "vit_grid", grid)
            if grid not in VIT_GRIDS:
                raise ValueError(f"vit_grid {format_vit_grid(grid)!r} not in {{1x1, 1x2, 1x3}}")
        if self.mode == "semantic_feature":
            if self.feature_dim is None or self.feature_dim < 1:
                raise ValueError("semantic_feature mode needs feature_dim >= 1")
            if self.feature_bits not in FEATURE_BITS:
                raise ValueError(f"feature_bits {self.feature_bits!r} not in {FEATURE_BITS}")


@dataclass(frozen=True)
class PayloadParams:
    """Frame geometry and per-mode accounting constants."""

    frame_width: int = 1920
    frame_height: int = 1080
    jpeg_bytes: Dict[int, int] = field(default_factory=lambda: dict(DEFAULT_JPEG_BYTES))
    tokens_per_tile: int = 1024
    codebook_size: int = 8192
    tile_overhead_bytes: int = 56

    def __post_init__(self):
        if self.frame_width < 1 or self.frame_height < 1:
            raise ValueError("frame dimensions must be positive")
        if self.tokens_per_tile < 1 or self.codebook_size < 1:
            raise ValueError("tokens_per_tile and codebook_size must be positive")
        if self.tile_overhead_bytes < 0:
            raise ValueError("tile_overhead_bytes must be nonnegative")


def index_bits(codebook_size: int) -> int:
    """Bits needed to address one of ``codebook_size`` codewords."""
    if codebook_size < 1:
        raise ValueError("codebook_size must be positive")
    return math.ceil(math.log2(codebook_size)) if codebook_size > 1 else 0


def payload_bytes(cfg: SenseConfig, params: PayloadParams, *, include_overhead: bool = True) -> int:
    """Uplink bytes for one frame under ``cfg``.

    raw:              width * height * 3 (24-bit RGB)
    jpeg:             measured table lookup by quality
    semantic_feature: ceil(dim * bits / 8)
    vq:               tiles * (ceil(tokens * index_bits / 8) + overhead)

    ``include_overhead=False`` reports the pure token bit count for vq.
    """
    if cfg.mode == "raw":
        return params.frame_width * params.frame_height * 3
    if cfg.mode == "jpeg":
        try:
            return int(params.jpeg_bytes[cfg.jpeg_quality])
        except KeyError:
            raise ValueError(f"no payload entry for jpeg quality {cfg.jpeg_quality}") from None
    if cfg.mode == "semantic_feature":
        return (cfg.feature_dim * cfg.feature_bits + 7) // 8
    tiles = cfg.vit_grid[0] * cfg.vit_grid[1]
    bits = params.tokens_per_tile * index_bits(params.codebook_size)
    per_tile = (bits + 7) // 8
    if include_overhead:
        per_tile += params.tile_overhead_bytes
    return tiles * per_tile


@dataclass(frozen=True)
class Codebook:
    """Vector-quantization codebook of ``size`` codewords of dimension ``dim``."""

    codewords: np.ndarray

    def __post_init__(self):
        cw = np.asarray(self.codewords, dtype=float)
        if cw.ndim != 2 or cw.shape[0] < 1 or cw.shape[1] < 1:
            raise ValueError("codewords must be a nonempty 2D array")
        object.__setattr__(self, "codewords", cw)

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]

    @property
    def index_bits(self) -> int:
        return index_bits(self.size)

    def to_text(self) -> str:
        lines = [f"{self.size} {self.dim}"]
        for row in self.codewords:
            lines.append(" ".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "Codebook":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty codebook file")
        head = lines[0].split()
        if len(head) != 2:
            raise ValueError("codebook header must be 'size dim'")
        size, dim = int(head[0]), int(head[1])
        if len(lines) - 1 != size:
            raise ValueError(f"expected {size} codeword rows, got {len(lines) - 1}")
        rows = []
        for ln in lines[1:]:
            vals = [float(v) for v in ln.split()]
            if len(vals) != dim:
                raise ValueError(f"codeword row has {len(vals)} values, expected {dim}")
            rows.append(vals)
        return Codebook(np.array(rows, dtype=float))


def vq_encode(x: Sequence[float], codebook: Codebook) -> int:
    """Index of the codeword nearest to ``x`` in squared Euclidean distance;
    exact ties resolve to the lowest index."""
    v = np.asarray(x, dtype=float)
    if v.shape != (codebook.dim,):
        raise ValueError(f"vector of shape {v.shape} vs codebook dim {codebook.dim}")
    diff = codebook.codewords - v
    return int(np.argmin(np.einsum("ij,ij->i", diff, diff)))


def vq_decode(index: int, codebook: Codebook) -> np.ndarray:
    if not 0 <= index < codebook.size:
        raise ValueError(f"index {index} outside codebook of size {codebook.size}")
    return codebook.codewords[index].copy()


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


def bbox_to_point(
    bbox: Tuple[float, float, float, float],
    depth_m: float,
    intrinsics: CameraIntrinsics,
) -> Tuple[float, float, float]:
    """Back-project the center of a detection box to a camera-frame 3D point.

    ``bbox`` is ``(u_min, v_min, u_max, v_max)`` in pixels; the box center is
    pushed along its camera ray to ``depth_m``:
    ``p = z * ((u_c - cx) / fx, (v_c - cy) / fy, 1)``.
    """
    u_min, v_min, u_max, v_max = bbox
    if u_max < u_min or v_max < v_min:
        raise ValueError("bbox must satisfy u_min <= u_max and v_min <= v_max")
    if depth_m <= 0:
        raise ValueError("depth must be positive")
    u_c = (u_min + u_max) / 2.0
    v_c = (v_min + v_max) / 2.0
    return (
        depth_m * (u_c - intrinsics.cx) / intrinsics.fx,
        depth_m * (v_c - intrinsics.cy) / intrinsics.fy,
        depth_m,
    )
