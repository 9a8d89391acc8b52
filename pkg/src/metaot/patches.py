"""Images as patch distributions, plus a seeded Perlin texture generator.

A grayscale image maps to the empirical measure over all overlapping p x p
regions (row-major vectorized, uniform weights); a batch of images maps to
a meta-measure with one inner patch measure per image.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .measures import EmpiricalMeasure, MetaMeasure, build_meta, uniform_measure
from .rng import substream


@dataclass(frozen=True)
class GrayImage:
    """Grayscale raster with intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must be a nonempty 2d array, got shape {px.shape}")
        if not np.all(np.isfinite(px)) or np.any(px < 0) or np.any(px > 1):
            raise ValueError("pixel values must lie in [0, 1]")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def h(self) -> int:
        return self.pixels.shape[0]

    @property
    def w(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class PerlinParams:
    """Fractal gradient-noise parameters."""

    scale: float = 100.0
    octaves: int = 6
    persistence: float = 1.0
    lacunarity: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.octaves < 1:
            raise ValueError(f"octaves must be at least 1, got {self.octaves}")
        if not self.persistence > 0 or not self.lacunarity > 0:
            raise ValueError("persistence and lacunarity must be positive")


def read_pgm(path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary) PGM with maxval <= 255."""
    data = Path(path).read_bytes()
    try:
        magic, fields, pos = _pgm_header(data)
        w, h, maxval = fields
    except (ValueError, IndexError):
        raise ValueError(f"malformed PGM header in {path}") from None
    if magic not in (b"P2", b"P5") or w < 1 or h < 1 or not (0 < maxval <= 255):
        raise ValueError(f"malformed PGM header in {path}")
    if magic == b"P5":
        raster = np.frombuffer(data, dtype=np.uint8, offset=pos)
        if raster.size < h * w:
            raise ValueError(f"truncated PGM raster in {path}")
        raster = raster[:h * w].astype(float)
    else:
        tokens = data[pos:].split()
        if len(tokens) < h * w:
            raise ValueError(f"truncated PGM raster in {path}")
        try:
            raster = np.array([int(t) for t in tokens[:h * w]], dtype=float)
        except ValueError:
            raise ValueError(f"non-numeric PGM raster in {path}") from None
    if np.any(raster > maxval):
        raise ValueError(f"PGM raster value above maxval in {path}")
    return GrayImage(raster.reshape(h, w) / maxval)


def _pgm_header(data: bytes):
    """Magic, (width, height, maxval), and the raster start offset."""
    magic = data[:2]
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and # comments between header fields
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    return magic, tuple(fields), pos + 1  # single whitespace before raster


def write_pgm(img: GrayImage, path, binary: bool = False) -> None:
    """Write with maxval 255, quantizing by round(p * 255)."""
    raster = np.rint(img.pixels * 255).astype(np.uint8)
    header = f"{'P5' if binary else 'P2'}\n{img.w} {img.h}\n255\n"
    if binary:
        Path(path).write_bytes(header.encode("ascii") + raster.tobytes())
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in raster)
        Path(path).write_text(header + body + "\n", encoding="ascii")


def extract_patches(img: GrayImage, p: int) -> EmpiricalMeasure:
    """Empirical measure over all overlapping p x p patches in R^{p^2}.

    Patch (r, c) is vectorized rows top-to-bottom, columns left-to-right;
    weights are uniform over the (h-p+1)(w-p+1) patches.
    """
    if p < 1 or p > min(img.h, img.w):
        raise ValueError(f"patch size {p} exceeds image extent {img.h} x {img.w}")
    windows = np.lib.stride_tricks.sliding_window_view(img.pixels, (p, p))
    return uniform_measure(windows.reshape(-1, p * p))


def batch_to_meta(images, p: int) -> MetaMeasure:
    """One inner patch measure per image, uniform outer weights."""
    images = list(images)
    if not images:
        raise ValueError("empty image batch")
    return build_meta([extract_patches(img, p) for img in images])


def _fade(t):
    # Perlin's quintic: 6t^5 - 15t^4 + 10t^3
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _gradient_noise(xs, ys, perm, grads):
    """Classic 2D gradient noise on the integer lattice."""
    xi = np.floor(xs).astype(np.int64)
    yi = np.floor(ys).astype(np.int64)
    xf = xs - xi
    yf = ys - yi

    def corner(dx, dy):
        h = perm[(perm[(xi + dx) & 255] + ((yi + dy) & 255)) & 255]
        g = grads[h]
        return g[..., 0] * (xf - dx) + g[..., 1] * (yf - dy)

    u = _fade(xf)
    v = _fade(yf)
    n0 = corner(0, 0) + u * (corner(1, 0) - corner(0, 0))
    n1 = corner(0, 1) + u * (corner(1, 1) - corner(0, 1))
    return n0 + v * (n1 - n0)


def perlin_texture(h: int, w: int, params: PerlinParams) -> GrayImage:
    """Fractal Perlin noise image, affinely rescaled to [0, 1].

    Octave o samples gradient noise at frequency lacunarity^o / scale with
    amplitude persistence^o; each octave gets its own random lattice offset.
    Deterministic given the seed.
    """
    rng = substream(params.seed, "perlin", 0)
    perm = rng.permutation(256)
    angles = rng.uniform(0.0, 2.0 * np.pi, 256)
    grads = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    field = np.zeros((h, w))
    for o in range(params.octaves):
        freq = params.lacunarity**o / params.scale
        off = rng.uniform(0.0, 256.0, 2)
        field += params.persistence**o * _gradient_noise(
            xs * freq + off[0], ys * freq + off[1], perm, grads)
    lo, hi = field.min(), field.max()
    if hi > lo:
        field = (field - lo) / (hi - lo)
    else:
        field = np.full((h, w), 0.5)  # degenerate constant field
    return GrayImage(field)


def perlin_batch(count: int, h: int, w: int, params: PerlinParams):
    """Independent textures with per-image seeds derived from params.seed."""
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    images = []
    for k in range(count):
        image_seed = int(substream(params.seed, "perlin-batch", k).integers(2**63))
        images.append(perlin_texture(h, w, PerlinParams(
            params.scale, params.octaves, params.persistence,
            params.lacunarity, image_seed)))
    return images
