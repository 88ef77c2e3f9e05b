"""Deterministic 2-D scene compositor and texture-glitch injectors.

Scenes are flat-lit textured shapes composited in painter's order over a tiled
background. Every output is a pure function of its inputs: geometry runs in
float64, texture lookups are bilinear, and the final cast uses
round-half-to-even, so identical inputs give bit-identical frames.

Coordinate conventions:
  * pixel centers sit at (px + 0.5, py + 0.5) in pixel units;
  * object geometry lives in normalized scene coords, so ``scale=(1,1)``
    spans the whole frame;
  * texture coords are texel units; the identity uv transform maps one scene
    pixel to one texel (texel j covers [j, j+1), center at j + 0.5).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .labels import GlitchClass
from .textures import (
    TextureAsset,
    TextureBank,
    lowres_surrogate,
    placeholder_texture,
)

MIN_COVERAGE = 0.01
MAX_COVERAGE = 0.90
MAX_RESAMPLE_ATTEMPTS = 16

DEFAULT_MISSING_COLOR = (255, 0, 255)

# seed-domain tags keep the object / view / glitch streams independent
_DOMAIN_OBJECT = 101
_DOMAIN_VIEW = 202
_DOMAIN_GLITCH = 303


class SynthError(ValueError):
    """Raised for invalid scene or glitch parameters."""


class MaskCoverageError(SynthError):
    """Resample signal: the target's visible mask fell outside [1%, 90%]."""

    def __init__(self, coverage: float, spec: "SceneSpec"):
        super().__init__(f"target mask coverage {coverage:.4f} outside "
                         f"[{MIN_COVERAGE}, {MAX_COVERAGE}]")
        self.coverage = coverage
        self.spec = spec


class Shape(str, Enum):
    QUAD = "quad"
    ELLIPSE = "ellipse"
    POLYGON = "polygon"


@dataclass(frozen=True)
class UVTransform:
    """Affine map from object-local pixel offsets to texel coordinates."""

    matrix: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    offset: tuple[float, float] = (0.0, 0.0)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        m = np.asarray(self.matrix, dtype=np.float64)
        b = np.asarray(self.offset, dtype=np.float64)
        return m, b

    def det(self) -> float:
        m = self.matrix
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]

    def pre_scaled(self, sx: float, sy: float, direction: float = 0.0) -> "UVTransform":
        """Pre-compose with a scaling of texel advance along ``direction``."""
        if sx == 1.0 and sy == 1.0:
            return self
        c, s = math.cos(direction), math.sin(direction)
        rot = np.array([[c, -s], [s, c]])
        scale = np.diag([sx, sy])
        m, b = self.as_arrays()
        new = m @ rot @ scale @ rot.T
        return UVTransform(tuple(map(tuple, new)), tuple(b))


@dataclass(frozen=True)
class ObjectSpec:
    """One textured shape placed in the scene."""

    shape: Shape
    center: tuple[float, float]
    scale: tuple[float, float]
    rotation: float
    texture_id: str
    uv_transform: UVTransform = UVTransform()
    polygon_angles: tuple[float, ...] = ()  # vertex angles for Shape.POLYGON

    def validate(self) -> None:
        if self.scale[0] <= 0 or self.scale[1] <= 0:
            raise SynthError(f"object scale must be positive, got {self.scale}")
        if abs(self.uv_transform.det()) <= 1e-9:
            raise SynthError("uv transform is not invertible")
        if self.shape is Shape.POLYGON and not 3 <= len(self.polygon_angles) <= 8:
            raise SynthError("polygon needs 3..8 vertices")


@dataclass(frozen=True)
class SceneSpec:
    """Full scene description: background, ordered objects, target index."""

    background_texture_id: str
    objects: tuple[ObjectSpec, ...]
    target_index: int
    image_size: tuple[int, int] = (96, 96)  # (W, H)
    seed: int = 0
    background_offset: tuple[int, int] = (0, 0)

    def validate(self) -> None:
        if not 1 <= len(self.objects) <= 16:
            raise SynthError(f"scene needs 1..16 objects, got {len(self.objects)}")
        if not 0 <= self.target_index < len(self.objects):
            raise SynthError(f"target index {self.target_index} out of range")
        for obj in self.objects:
            obj.validate()


@dataclass(frozen=True)
class GlitchSpec:
    """Parameters for one glitch application; fields outside the active class
    are ignored."""

    glitch_class: GlitchClass
    stretch_direction: float = 0.0
    stretch_factor: float = 4.0
    lowres_factor: float = 4.0
    missing_color: tuple[int, int, int] = DEFAULT_MISSING_COLOR
    placeholder_style: str = "pattern"


@dataclass(frozen=True)
class Provenance:
    scene_seed: int
    glitch: GlitchSpec | None = None
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class RenderedFrame:
    pixels: np.ndarray  # H x W x 3 uint8
    target_mask: np.ndarray  # H x W bool
    label: GlitchClass
    provenance: Provenance


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for procedural sample synthesis."""

    bank: TextureBank
    image_size: tuple[int, int] = (96, 96)
    placeholder_style: str = "pattern"
    stretch_factor_range: tuple[float, float] = (3.0, 10.0)
    lowres_factors: tuple[int, ...] = (4, 8, 16)
    missing_color: tuple[int, int, int] = DEFAULT_MISSING_COLOR
    distractor_range: tuple[int, int] = (2, 6)
    target_size_range: tuple[float, float] = (0.18, 0.50)
    distractor_size_range: tuple[float, float] = (0.08, 0.35)
    texel_zoom_range: tuple[float, float] = (1.0, 2.6)


# --- rasterization ----------------------------------------------------------

def _pixel_grid(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.meshgrid(np.arange(height, dtype=np.float64),
                         np.arange(width, dtype=np.float64), indexing="ij")
    return xs + 0.5, ys + 0.5


def _local_coords(obj: ObjectSpec, px: np.ndarray, py: np.ndarray,
                  width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Object-local offsets in pixel units, de-rotated."""
    dx = px - obj.center[0] * width
    dy = py - obj.center[1] * height
    c, s = math.cos(obj.rotation), math.sin(obj.rotation)
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    return lx, ly


def _polygon_vertices(angles: tuple[float, ...]) -> np.ndarray:
    order = np.argsort(np.asarray(angles))
    a = np.asarray(angles, dtype=np.float64)[order]
    return np.stack([0.5 * np.cos(a), 0.5 * np.sin(a)], axis=1)


def _shape_mask(obj: ObjectSpec, nx: np.ndarray, ny: np.ndarray) -> np.ndarray:
    """Inside test in normalized local coords (shape spans [-0.5, 0.5])."""
    if obj.shape is Shape.QUAD:
        return (np.abs(nx) <= 0.5) & (np.abs(ny) <= 0.5)
    if obj.shape is Shape.ELLIPSE:
        return (2 * nx) ** 2 + (2 * ny) ** 2 <= 1.0
    verts = _polygon_vertices(obj.polygon_angles)
    inside = np.ones(nx.shape, dtype=bool)
    for i in range(len(verts)):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % len(verts)]
        cross = (bx - ax) * (ny - ay) - (by - ay) * (nx - ax)
        inside &= cross >= 0.0
    return inside


def _bilinear_sample(texture: TextureAsset, tx: np.ndarray, ty: np.ndarray) -> np.ndarray:
    """Bilinear lookup in float64; texel j's center sits at coordinate j + 0.5."""
    h, w = texture.size
    sx = tx - 0.5
    sy = ty - 0.5
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    wx = sx - x0
    wy = sy - y0
    if texture.tileable:
        x0m, x1m = x0 % w, (x0 + 1) % w
        y0m, y1m = y0 % h, (y0 + 1) % h
    else:
        x0m, x1m = np.clip(x0, 0, w - 1), np.clip(x0 + 1, 0, w - 1)
        y0m, y1m = np.clip(y0, 0, h - 1), np.clip(y0 + 1, 0, h - 1)
    tex = texture.pixels.astype(np.float64)
    v00 = tex[y0m, x0m]
    v01 = tex[y0m, x1m]
    v10 = tex[y1m, x0m]
    v11 = tex[y1m, x1m]
    wx = wx[..., None]
    wy = wy[..., None]
    top = v00 * (1 - wx) + v01 * wx
    bot = v10 * (1 - wx) + v11 * wx
    return top * (1 - wy) + bot * wy


def _paint_object(canvas: np.ndarray, obj: ObjectSpec, texture: TextureAsset,
                  px: np.ndarray, py: np.ndarray, width: int, height: int,
                  fill: tuple[int, int, int] | None = None) -> np.ndarray:
    """Composite one object onto the canvas; returns its coverage mask."""
    lx, ly = _local_coords(obj, px, py, width, height)
    nx = lx / (obj.scale[0] * width)
    ny = ly / (obj.scale[1] * height)
    mask = _shape_mask(obj, nx, ny)
    if not mask.any():
        return mask
    if fill is not None:
        canvas[mask] = np.asarray(fill, dtype=np.float64)
        return mask
    m, b = obj.uv_transform.as_arrays()
    tx = m[0, 0] * lx[mask] + m[0, 1] * ly[mask] + b[0]
    ty = m[1, 0] * lx[mask] + m[1, 1] * ly[mask] + b[1]
    canvas[mask] = _bilinear_sample(texture, tx, ty)
    return mask


def _tiled_background(texture: TextureAsset, width: int, height: int,
                      offset: tuple[int, int]) -> np.ndarray:
    th, tw = texture.size
    rows = (np.arange(height) + int(offset[1])) % th
    cols = (np.arange(width) + int(offset[0])) % tw
    return texture.pixels[rows][:, cols].astype(np.float64)


def _compose(spec: SceneSpec, bank: TextureBank,
             glitch: GlitchSpec | None) -> tuple[np.ndarray, np.ndarray]:
    """Render the scene; returns (float64 canvas, visible target mask)."""
    spec.validate()
    width, height = spec.image_size
    background = bank.get(spec.background_texture_id)
    canvas = _tiled_background(background, width, height, spec.background_offset)
    px, py = _pixel_grid(width, height)

    target_mask = np.zeros((height, width), dtype=bool)
    for i, obj in enumerate(spec.objects):
        texture = bank.get(obj.texture_id)
        fill = None
        if i == spec.target_index and glitch is not None:
            obj, texture, fill = _apply_glitch_to_target(obj, texture, glitch)
        mask = _paint_object(canvas, obj, texture, px, py, width, height, fill=fill)
        if i == spec.target_index:
            target_mask = mask.copy()
        else:
            # later objects occlude: the target mask tracks visible pixels only
            target_mask &= ~mask
    return canvas, target_mask


def _apply_glitch_to_target(obj: ObjectSpec, texture: TextureAsset,
                            glitch: GlitchSpec):
    """Rewrite the target's texture/uv per the glitch; silhouette is untouched."""
    cls = glitch.glitch_class
    if cls is GlitchClass.STRETCHED:
        uv = obj.uv_transform.pre_scaled(1.0 / glitch.stretch_factor, 1.0,
                                         glitch.stretch_direction)
        return replace(obj, uv_transform=uv), texture, None
    if cls is GlitchClass.LOWRES:
        surrogate, _ = lowres_surrogate(texture, int(round(glitch.lowres_factor)))
        return obj, surrogate, None
    if cls is GlitchClass.MISSING:
        return obj, texture, tuple(glitch.missing_color)
    if cls is GlitchClass.PLACEHOLDER:
        return obj, placeholder_texture(glitch.placeholder_style), None
    raise SynthError(f"no injector for class {cls}")


def _finalize(canvas: np.ndarray, target_mask: np.ndarray, label: GlitchClass,
              spec: SceneSpec, provenance: Provenance) -> RenderedFrame:
    coverage = float(target_mask.mean())
    if not MIN_COVERAGE <= coverage <= MAX_COVERAGE:
        raise MaskCoverageError(coverage, spec)
    pixels = np.rint(np.clip(canvas, 0.0, 255.0)).astype(np.uint8)
    return RenderedFrame(pixels=pixels, target_mask=target_mask, label=label,
                         provenance=provenance)


# --- public operations ------------------------------------------------------

def render_scene(spec: SceneSpec, bank: TextureBank) -> RenderedFrame:
    """Render the unglitched scene; label is Normal."""
    canvas, mask = _compose(spec, bank, glitch=None)
    return _finalize(canvas, mask, GlitchClass.NORMAL, spec,
                     Provenance(scene_seed=spec.seed))


def _render_glitched(spec: SceneSpec, glitch: GlitchSpec, bank: TextureBank,
                     warnings: tuple[str, ...] = ()) -> RenderedFrame:
    canvas, mask = _compose(spec, bank, glitch=glitch)
    return _finalize(canvas, mask, glitch.glitch_class, spec,
                     Provenance(scene_seed=spec.seed, glitch=glitch,
                                warnings=warnings))


def apply_stretch(spec: SceneSpec, glitch: GlitchSpec, bank: TextureBank,
                  _allow_identity: bool = False) -> RenderedFrame:
    """Stretch the target's texture along one direction; shape is unchanged."""
    if glitch.stretch_factor <= 1.0 and not _allow_identity:
        raise SynthError(f"stretch factor must exceed 1, got {glitch.stretch_factor}")
    if glitch.stretch_factor <= 0:
        raise SynthError("stretch factor must be positive")
    glitch = replace(glitch, glitch_class=GlitchClass.STRETCHED)
    return _render_glitched(spec, glitch, bank)


def apply_lowres(spec: SceneSpec, glitch: GlitchSpec, bank: TextureBank,
                 _allow_identity: bool = False) -> RenderedFrame:
    """Swap the target's texture for a lower-LoD surrogate."""
    if glitch.lowres_factor <= 1.0 and not _allow_identity:
        raise SynthError(f"lowres factor must exceed 1, got {glitch.lowres_factor}")
    if glitch.lowres_factor < 1.0:
        raise SynthError("lowres factor must be >= 1")
    glitch = replace(glitch, glitch_class=GlitchClass.LOWRES)
    target = spec.objects[spec.target_index]
    _, clamped = lowres_surrogate(bank.get(target.texture_id),
                                  int(round(glitch.lowres_factor)))
    warnings = ("lowres_factor clamped to texture dimension",) if clamped else ()
    return _render_glitched(spec, glitch, bank, warnings=warnings)


def apply_missing(spec: SceneSpec, glitch: GlitchSpec, bank: TextureBank) -> RenderedFrame:
    """Render the target as a flat fill, the engine's missing-texture fallback."""
    glitch = replace(glitch, glitch_class=GlitchClass.MISSING)
    return _render_glitched(spec, glitch, bank)


def apply_placeholder(spec: SceneSpec, glitch: GlitchSpec, bank: TextureBank) -> RenderedFrame:
    """Substitute the target's texture with a default placeholder asset."""
    glitch = replace(glitch, glitch_class=GlitchClass.PLACEHOLDER)
    return _render_glitched(spec, glitch, bank)


_INJECTORS = {
    GlitchClass.STRETCHED: apply_stretch,
    GlitchClass.LOWRES: apply_lowres,
    GlitchClass.MISSING: apply_missing,
    GlitchClass.PLACEHOLDER: apply_placeholder,
}


# --- procedural sample derivation -------------------------------------------

def _rng(*key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def _polygon_angles(rng: np.random.Generator, k: int) -> tuple[float, ...]:
    """One jittered vertex per angular sector: convex and never sliver-thin."""
    jitter = rng.uniform(0.2, 0.8, size=k)
    angles = (np.arange(k) + jitter) * (2 * math.pi / k)
    return tuple(float(a) for a in angles)


def _object_identity(object_id: int, bank: TextureBank):
    """Shape family, polygon geometry, texture and base texel density for one
    object; a function of object_id alone so every view shares them."""
    rng = _rng(_DOMAIN_OBJECT, object_id)
    shape = (Shape.QUAD, Shape.ELLIPSE, Shape.POLYGON)[int(rng.integers(0, 3))]
    angles: tuple[float, ...] = ()
    if shape is Shape.POLYGON:
        angles = _polygon_angles(rng, int(rng.integers(3, 9)))
    texture_index = int(rng.integers(0, len(bank)))
    base_zoom = float(rng.uniform(1.0, 1.8))
    return shape, angles, texture_index, base_zoom


def _random_object(rng: np.random.Generator, bank: TextureBank,
                   size_range: tuple[float, float],
                   zoom_range: tuple[float, float],
                   shape=None, angles=None, texture_index=None,
                   base_zoom: float = 1.0) -> ObjectSpec:
    if shape is None:
        shape = (Shape.QUAD, Shape.ELLIPSE, Shape.POLYGON)[int(rng.integers(0, 3))]
        angles = ()
        if shape is Shape.POLYGON:
            angles = _polygon_angles(rng, int(rng.integers(3, 9)))
    if texture_index is None:
        texture_index = int(rng.integers(0, len(bank)))
    center = (float(rng.uniform(0.15, 0.85)), float(rng.uniform(0.15, 0.85)))
    base = float(rng.uniform(*size_range))
    aspect = float(rng.uniform(0.7, 1.42))
    scale = (base * math.sqrt(aspect), base / math.sqrt(aspect))
    rotation = float(rng.uniform(0.0, 2 * math.pi))
    zoom = base_zoom * float(rng.uniform(*zoom_range))
    uv_rot = float(rng.uniform(0.0, 2 * math.pi))
    c, s = math.cos(uv_rot), math.sin(uv_rot)
    inv = 1.0 / zoom
    matrix = ((inv * c, -inv * s), (inv * s, inv * c))
    offset = (float(rng.uniform(0.0, 256.0)), float(rng.uniform(0.0, 256.0)))
    return ObjectSpec(shape=shape, center=center, scale=scale, rotation=rotation,
                      texture_id=bank.at(texture_index).id,
                      uv_transform=UVTransform(matrix, offset),
                      polygon_angles=angles or ())


def derive_scene(object_id: int, view_id: int, master_seed: int,
                 config: SynthConfig, attempt: int = 0) -> SceneSpec:
    """Scene layout for one (object, view): the target keeps its per-object
    identity while pose, distractors and background vary per view."""
    shape, angles, tex_idx, base_zoom = _object_identity(object_id, config.bank)
    rng = _rng(_DOMAIN_VIEW, master_seed, object_id, view_id, attempt)

    target = _random_object(rng, config.bank, config.target_size_range,
                            (0.8, 1.6), shape=shape, angles=angles,
                            texture_index=tex_idx, base_zoom=base_zoom)
    n_distractors = int(rng.integers(config.distractor_range[0],
                                     config.distractor_range[1] + 1))
    distractors = [
        _random_object(rng, config.bank, config.distractor_size_range,
                       config.texel_zoom_range)
        for _ in range(n_distractors)
    ]
    insert_at = int(rng.integers(0, n_distractors + 1))
    objects = distractors[:insert_at] + [target] + distractors[insert_at:]

    background_idx = int(rng.integers(0, len(config.bank)))
    bg_offset = (int(rng.integers(0, 1 << 16)), int(rng.integers(0, 1 << 16)))
    return SceneSpec(
        background_texture_id=config.bank.at(background_idx).id,
        objects=tuple(objects),
        target_index=insert_at,
        image_size=config.image_size,
        seed=master_seed,
        background_offset=bg_offset,
    )


def derive_glitch(glitch_class: GlitchClass, object_id: int, view_id: int,
                  master_seed: int, config: SynthConfig) -> GlitchSpec:
    """Glitch parameters drawn independently of scene layout."""
    rng = _rng(_DOMAIN_GLITCH, master_seed, object_id, view_id, int(glitch_class))
    return GlitchSpec(
        glitch_class=glitch_class,
        stretch_direction=float(rng.uniform(0.0, math.pi)),
        stretch_factor=float(rng.uniform(*config.stretch_factor_range)),
        lowres_factor=float(config.lowres_factors[int(rng.integers(0, len(config.lowres_factors)))]),
        missing_color=config.missing_color,
        placeholder_style=config.placeholder_style,
    )


def synth_sample(glitch_class: GlitchClass, object_id: int, view_id: int,
                 master_seed: int, config: SynthConfig) -> RenderedFrame:
    """Synthesize one labeled frame; pure in all arguments.

    Degenerate layouts (target coverage outside 1-90%) are retried with the
    layout stream salted by an attempt counter, bounded at 16 tries.
    """
    last: MaskCoverageError | None = None
    for attempt in range(MAX_RESAMPLE_ATTEMPTS):
        spec = derive_scene(object_id, view_id, master_seed, config, attempt=attempt)
        try:
            if glitch_class is GlitchClass.NORMAL:
                return render_scene(spec, config.bank)
            glitch = derive_glitch(glitch_class, object_id, view_id, master_seed, config)
            return _INJECTORS[glitch_class](spec, glitch, config.bank)
        except MaskCoverageError as err:
            last = err
    raise SynthError(
        f"no acceptable layout for object={object_id} view={view_id} after "
        f"{MAX_RESAMPLE_ATTEMPTS} attempts (last coverage {last.coverage:.4f})")
