"""Texture assets: procedural bank generation, PNG IO, and surrogate builders.

All generators are deterministic functions of their seeds so that rendered
frames can be reproduced bit-for-bit.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

# Colors near the missing-texture fill or pure white would make normal
# textures collide with glitch signatures, so generated palettes avoid both.
_MISSING_MAGENTA = np.array([255.0, 0.0, 255.0])
_MAGENTA_MIN_DIST = 80.0
_MAX_BRIGHTNESS = 235


class TextureError(ValueError):
    """Raised for malformed texture data or unresolvable texture ids."""


@dataclass(frozen=True)
class TextureAsset:
    """An RGB texture: id, 8-bit pixel grid, and tiling behavior."""

    id: str
    pixels: np.ndarray  # H x W x 3 uint8
    tileable: bool = True

    def __post_init__(self) -> None:
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise TextureError(f"texture {self.id!r}: expected HxWx3 uint8, got "
                               f"shape {p.shape} dtype {p.dtype}")
        if p.shape[0] < 8 or p.shape[1] < 8:
            raise TextureError(f"texture {self.id!r}: minimum size is 8x8, got {p.shape[:2]}")
        p.setflags(write=False)

    @property
    def size(self) -> tuple[int, int]:
        """(height, width) in texels."""
        return self.pixels.shape[0], self.pixels.shape[1]


class TextureBank:
    """Immutable, ordered collection of textures addressed by id or index."""

    def __init__(self, assets: list[TextureAsset]):
        if not assets:
            raise TextureError("texture bank must hold at least one texture")
        self._assets = list(assets)
        self._by_id = {a.id: a for a in assets}
        if len(self._by_id) != len(assets):
            raise TextureError("duplicate texture ids in bank")

    def __len__(self) -> int:
        return len(self._assets)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self._assets)

    def get(self, texture_id: str) -> TextureAsset:
        try:
            return self._by_id[texture_id]
        except KeyError:
            raise TextureError(f"unknown texture id {texture_id!r}") from None

    def at(self, index: int) -> TextureAsset:
        return self._assets[index % len(self._assets)]


def checkerboard_texture(n: int = 4, cell: int = 1, colors=((0, 0, 0), (255, 255, 255)),
                         texture_id: str = "checker") -> TextureAsset:
    """n*cell square checkerboard alternating between two colors per cell."""
    idx = (np.add.outer(np.arange(n), np.arange(n)) % 2)
    grid = np.array(colors, dtype=np.uint8)[idx]
    grid = np.repeat(np.repeat(grid, cell, axis=0), cell, axis=1)
    return TextureAsset(texture_id, np.ascontiguousarray(grid), tileable=True)


def stripe_texture(size: int = 64, period: int = 8, horizontal: bool = False,
                   colors=((0, 0, 0), (255, 255, 255)),
                   texture_id: str = "stripes") -> TextureAsset:
    """Axis-aligned stripes; ``horizontal`` stripes vary along y, else along x."""
    coord = np.arange(size)
    band = (coord // (period // 2)) % 2
    grid = np.array(colors, dtype=np.uint8)[band]
    if horizontal:
        out = np.repeat(grid[:, None, :], size, axis=1)
    else:
        out = np.repeat(grid[None, :, :], size, axis=0)
    return TextureAsset(texture_id, np.ascontiguousarray(out), tileable=True)


def uniform_texture(color, size: int = 8, texture_id: str = "uniform") -> TextureAsset:
    pixels = np.full((size, size, 3), color, dtype=np.uint8)
    return TextureAsset(texture_id, pixels, tileable=True)


def _pick_color(rng: np.random.Generator) -> np.ndarray:
    """Random color kept away from the missing-fill magenta and from white."""
    while True:
        c = rng.integers(0, 256, size=3).astype(np.float64)
        if c.max() > _MAX_BRIGHTNESS:
            continue
        if np.linalg.norm(c - _MISSING_MAGENTA) < _MAGENTA_MIN_DIST:
            continue
        return c


def _smooth_noise(rng: np.random.Generator, size: int, grid: int) -> np.ndarray:
    """Value noise in [0,1]: coarse random grid, bilinearly upsampled, tileable."""
    coarse = rng.random((grid, grid))
    # wrap-around interpolation keeps the tile seamless
    xs = np.arange(size) * grid / size
    i0 = np.floor(xs).astype(int) % grid
    i1 = (i0 + 1) % grid
    w = (xs - np.floor(xs))
    row = coarse[i0][:, i0] * np.outer(1 - w, 1 - w)
    row += coarse[i0][:, i1] * np.outer(1 - w, w)
    row += coarse[i1][:, i0] * np.outer(w, 1 - w)
    row += coarse[i1][:, i1] * np.outer(w, w)
    return row


def _tex_checker(rng: np.random.Generator, size: int) -> np.ndarray:
    cell = int(rng.integers(2, 9))
    c0, c1 = _pick_color(rng), _pick_color(rng)
    n = max(2, size // cell)
    idx = (np.add.outer(np.arange(n), np.arange(n)) % 2)
    small = np.where(idx[..., None] == 0, c0, c1)
    out = np.repeat(np.repeat(small, cell, axis=0), cell, axis=1)
    return out[:size, :size]


def _tex_stripes(rng: np.random.Generator, size: int) -> np.ndarray:
    period = int(rng.integers(2, 7)) * 2
    c0, c1 = _pick_color(rng), _pick_color(rng)
    coord = np.arange(size)
    band = (coord // (period // 2)) % 2
    line = np.where(band[:, None] == 0, c0, c1)
    out = np.repeat(line[None, :, :], size, axis=0)
    if rng.random() < 0.5:
        out = np.transpose(out, (1, 0, 2))
    return out


def _tex_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    base, accent = _pick_color(rng), _pick_color(rng)
    field = 0.65 * _smooth_noise(rng, size, int(rng.integers(4, 10)))
    field += 0.35 * _smooth_noise(rng, size, int(rng.integers(12, 24)))
    field = (field - field.min()) / max(float(np.ptp(field)), 1e-9)
    return base[None, None, :] + field[..., None] * (accent - base)[None, None, :]


def _tex_dots(rng: np.random.Generator, size: int) -> np.ndarray:
    bg, fg = _pick_color(rng), _pick_color(rng)
    pitch = int(rng.integers(6, 13))
    radius = pitch * float(rng.uniform(0.2, 0.42))
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    # distance to nearest lattice point, wrapped so the tile repeats cleanly
    dx = (xx + pitch / 2) % pitch - pitch / 2
    dy = (yy + pitch / 2) % pitch - pitch / 2
    inside = dx * dx + dy * dy <= radius * radius
    return np.where(inside[..., None], fg, bg).astype(np.float64)


def _tex_bricks(rng: np.random.Generator, size: int) -> np.ndarray:
    mortar, brick = _pick_color(rng), _pick_color(rng)
    bh = int(rng.integers(6, 11))
    bw = bh * 2
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    row = yy // bh
    shift = (row % 2) * (bw // 2)
    in_mortar = ((yy % bh) < 1) | (((xx + shift) % bw) < 1)
    jitter = _smooth_noise(rng, size, 8)[..., None] * 30 - 15
    out = np.where(in_mortar[..., None], mortar, brick + jitter)
    return out


_TEX_FAMILIES = (_tex_checker, _tex_stripes, _tex_noise, _tex_dots, _tex_bricks)


def procedural_texture(seed_key, size: int = 64, texture_id: str | None = None) -> TextureAsset:
    """One deterministic texture drawn from the procedural families."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed_key)))
    family = _TEX_FAMILIES[int(rng.integers(0, len(_TEX_FAMILIES)))]
    field = family(rng, size)
    pixels = np.rint(np.clip(field, 0, 255)).astype(np.uint8)
    tid = texture_id if texture_id is not None else f"proc{_key_repr(seed_key)}"
    return TextureAsset(tid, np.ascontiguousarray(pixels), tileable=True)


def _key_repr(seed_key) -> str:
    if isinstance(seed_key, (tuple, list)):
        return "_".join(str(int(k)) for k in seed_key)
    return str(int(seed_key))


def default_texture_bank(n_textures: int = 64, size: int = 64, seed: int = 7) -> TextureBank:
    """Seeded bank of procedural textures; entry i is a function of (seed, i) only."""
    assets = [procedural_texture((seed, i), size=size, texture_id=f"tex{i:03d}")
              for i in range(n_textures)]
    return TextureBank(assets)


# --- placeholder assets -----------------------------------------------------

_PATTERN_CELLS = 8
_PATTERN_CELL_PX = 8
_PATTERN_TONES = ((70, 70, 80), (190, 190, 200))
_PATTERN_GLYPH = (255, 210, 60)


def _build_pattern_placeholder() -> np.ndarray:
    """Two-tone checker with a cross glyph in alternating cells (dev-texture look)."""
    n, c = _PATTERN_CELLS, _PATTERN_CELL_PX
    size = n * c
    out = np.zeros((size, size, 3), dtype=np.uint8)
    tones = np.array(_PATTERN_TONES, dtype=np.uint8)
    for cy in range(n):
        for cx in range(n):
            tone = tones[(cx + cy) % 2]
            out[cy * c:(cy + 1) * c, cx * c:(cx + 1) * c] = tone
            if (cx + cy) % 2 == 0:
                y0, x0 = cy * c, cx * c
                m = c // 2
                out[y0 + 1:y0 + c - 1, x0 + m - 1:x0 + m + 1] = _PATTERN_GLYPH
                out[y0 + m - 1:y0 + m + 1, x0 + 1:x0 + c - 1] = _PATTERN_GLYPH
    return out


_PATTERN_PIXELS = _build_pattern_placeholder()

WHITE_PLACEHOLDER = TextureAsset("placeholder_white",
                                 np.full((8, 8, 3), 255, dtype=np.uint8))
PATTERN_PLACEHOLDER = TextureAsset("placeholder_pattern", _PATTERN_PIXELS)


def placeholder_texture(style: str) -> TextureAsset:
    if style == "white":
        return WHITE_PLACEHOLDER
    if style == "pattern":
        return PATTERN_PLACEHOLDER
    raise TextureError(f"unknown placeholder style {style!r}")


# --- LoD surrogate ----------------------------------------------------------

def box_downsample(pixels: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean downsample; partial edge blocks average the texels they cover.

    Averages run in float64 and are cast with round-half-to-even, which pins
    the surrogate bytes exactly.
    """
    if factor < 1:
        raise TextureError(f"downsample factor must be >= 1, got {factor}")
    h, w = pixels.shape[:2]
    oh, ow = -(-h // factor), -(-w // factor)
    out = np.empty((oh, ow, 3), dtype=np.float64)
    acc = pixels.astype(np.float64)
    for by in range(oh):
        for bx in range(ow):
            block = acc[by * factor:(by + 1) * factor, bx * factor:(bx + 1) * factor]
            out[by, bx] = block.reshape(-1, 3).mean(axis=0)
    return np.rint(out).astype(np.uint8)


def lowres_surrogate(texture: TextureAsset, factor: int) -> tuple[TextureAsset, bool]:
    """Rebuild the texture as if a lower LoD tier was loaded.

    Box-downsamples by ``factor`` then nearest-neighbor upsamples back to the
    original footprint. Returns (surrogate, clamped) where ``clamped`` flags a
    factor larger than the texture that was pulled back to its dimension.
    """
    h, w = texture.size
    clamped = False
    eff = int(factor)
    if eff > min(h, w):
        eff = min(h, w)
        clamped = True
    small = box_downsample(texture.pixels, eff)
    rows = np.arange(h) // eff
    cols = np.arange(w) // eff
    up = small[rows][:, cols]
    return TextureAsset(f"{texture.id}@lod{eff}", np.ascontiguousarray(up),
                        tileable=texture.tileable), clamped


# --- disk IO ----------------------------------------------------------------

def load_texture_bank(directory: str | os.PathLike) -> TextureBank:
    """Load every PNG in a directory; texture id is the filename stem."""
    root = Path(directory)
    paths = sorted(root.glob("*.png"))
    if not paths:
        raise TextureError(f"no PNG textures found in {root}")
    assets = []
    for p in paths:
        with Image.open(p) as im:
            pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
        assets.append(TextureAsset(p.stem, np.ascontiguousarray(pixels)))
    return TextureBank(assets)


def save_texture_bank(bank: TextureBank, directory: str | os.PathLike) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for tid in bank.ids:
        Image.fromarray(bank.get(tid).pixels).save(root / f"{tid}.png")
