"""Synthetic rectified stereo scenes with exact ground truth.

A scene is a stack of planar patches. Patch ``p`` has left-image disparity
``a*x + b*y + c`` over a pixel rectangle ``[x0, x1) x [y0, y1)`` and a
texture indexed by right-image column ``u = x - d``, piecewise linear
between integer ``u``. Where patches overlap the one
with the larger disparity (nearer to the camera) is visible. A rectangle
edge lying on the image's right border is treated as open: the surface
continues off-frame, which is what the right camera sees near that edge.

The right image reads texture knots directly: right pixel ``xr`` shows the
visible surface's texture at ``u = xr``. The left pixel ``x`` shows it at
``u = x - d(x, y)``. Bilinear sampling of the right image at ``x - d`` is
therefore the same linear interpolation, and the warp identity is exact
wherever both taps see one surface.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SpecError
from .field_core import DisparityField, Grid2D
from .prng import XorShift64Star

TEXTURED, TEXTURELESS, OCCLUDED = 0, 1, 2
TEXTURE_KINDS = ("noise", "stripes", "flat")


@dataclass(frozen=True)
class Plane:
    a: float
    b: float
    c: float
    region: tuple            # (x0, y0, x1, y1), half-open
    texture: str = "noise"
    period: float = 8.0      # stripes only
    level: float = 0.5       # flat only

    def disparity(self, x, y):
        return self.a * x + self.b * y + self.c


@dataclass(frozen=True)
class SceneSpec:
    height: int
    width: int
    dmax: int
    planes: tuple = ()
    occluders: tuple = ()
    noise_sigma: float = 0.0
    seed: int = 0

    @property
    def surfaces(self):
        return tuple(self.planes) + tuple(self.occluders)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        def plane(p):
            p = dict(p)
            p["region"] = tuple(p["region"])
            return Plane(**p)

        data = dict(data)
        data["planes"] = tuple(plane(p) for p in data.get("planes", ()))
        data["occluders"] = tuple(plane(p) for p in data.get("occluders", ()))
        return cls(**data)


@dataclass(frozen=True, eq=False)
class SceneSample:
    left: Grid2D
    right: Grid2D
    d_gt: DisparityField
    occ_mask: np.ndarray
    region_labels: np.ndarray
    spec: SceneSpec = field(default=None)


def validate_spec(spec: SceneSpec) -> None:
    if spec.height < 1 or spec.width < 1:
        raise SpecError("scene dimensions must be positive")
    if spec.dmax < 2:
        raise SpecError("dmax must be >= 2")
    if not spec.surfaces:
        raise SpecError("scene needs at least one plane")
    for i, p in enumerate(spec.surfaces):
        x0, y0, x1, y1 = p.region
        if not (0 <= x0 < x1 <= spec.width and 0 <= y0 < y1 <= spec.height):
            raise SpecError(f"plane {i}: region {p.region} outside the {spec.width}x{spec.height} image")
        if p.texture not in TEXTURE_KINDS:
            raise SpecError(f"plane {i}: unknown texture {p.texture!r}")
        if p.a >= 1:
            raise SpecError(f"plane {i}: slope a={p.a} must be < 1 for a valid warp")
        corners = [p.disparity(x, y) for x in (x0, x1 - 1) for y in (y0, y1 - 1)]
        if min(corners) < 0 or max(corners) > spec.dmax - 1:
            raise SpecError(
                f"plane {i}: disparity range [{min(corners):.3f}, {max(corners):.3f}] "
                f"exceeds [0, {spec.dmax - 1}]"
            )


class _Texture:
    """Row-wise texture over right-image columns, linear between knots."""

    def __init__(self, plane: Plane, spec: SceneSpec, rng: XorShift64Star):
        self.plane = plane
        x0, y0, x1, y1 = plane.region
        self.right_open = x1 == spec.width
        self.u0 = x0 - spec.dmax - 1
        u_end = spec.width + spec.dmax + 2 if self.right_open else x1 + 1
        if plane.texture == "noise":
            self.lattice = rng.uniform_array((y1 - y0, u_end - self.u0 + 1))
        elif plane.texture == "stripes":
            self.phase = 2.0 * math.pi * rng.uniform()
        self.y0 = y0

    def covers(self, x, y):
        x0, y0, x1, y1 = self.plane.region
        inside_x = (x >= x0) if self.right_open else (x >= x0) & (x < x1)
        return inside_x & (y >= y0) & (y < y1)

    def _stripe(self, k):
        return 0.5 + 0.5 * np.sin(2.0 * math.pi * k / self.plane.period + self.phase)

    def sample(self, u, y):
        p = self.plane
        u = np.asarray(u, dtype=np.float64)
        if p.texture == "flat":
            return np.full(u.shape, p.level, dtype=np.float64)
        k0 = np.floor(u)
        f = u - k0
        if p.texture == "stripes":
            return (1.0 - f) * self._stripe(k0) + f * self._stripe(k0 + 1.0)
        i = np.clip(k0 - self.u0, 0, self.lattice.shape[1] - 2).astype(np.intp)
        row = np.asarray(y, dtype=np.intp) - self.y0
        return (1.0 - f) * self.lattice[row, i] + f * self.lattice[row, i + 1]


def _right_view(textures, xr, y):
    """Visible surface index (-1 for none), its disparity and the left
    coordinate it maps from, for right-image points ``(xr, y)``."""
    best = np.full(np.shape(xr), -1, dtype=np.intp)
    best_d = np.full(np.shape(xr), -np.inf)
    best_x = np.zeros(np.shape(xr))
    for idx, tex in enumerate(textures):
        p = tex.plane
        x = (xr + p.b * y + p.c) / (1.0 - p.a)
        d = p.disparity(x, y)
        hit = tex.covers(x, y) & (d > best_d)
        best = np.where(hit, idx, best)
        best_d = np.where(hit, d, best_d)
        best_x = np.where(hit, x, best_x)
    return best, best_d, best_x


def gen_scene(spec: SceneSpec) -> SceneSample:
    """Render a scene deterministically from ``spec`` (including its seed)."""
    validate_spec(spec)
    rng = XorShift64Star(spec.seed)
    textures = [_Texture(p, spec, rng) for p in spec.surfaces]
    h, w = spec.height, spec.width
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)

    # left view: nearest covering surface at each integer pixel
    vis = np.full((h, w), -1, dtype=np.intp)
    disp = np.full((h, w), -np.inf)
    for idx, tex in enumerate(textures):
        x0, y0, x1, y1 = tex.plane.region
        d = tex.plane.disparity(xs, ys)
        hit = (xs >= x0) & (xs < x1) & (ys >= y0) & (ys < y1) & (d > disp)
        vis = np.where(hit, idx, vis)
        disp = np.where(hit, d, disp)
    valid = vis >= 0
    left = np.zeros((h, w))
    for idx, tex in enumerate(textures):
        m = vis == idx
        left[m] = tex.sample(xs[m] - disp[m], ys[m])

    right = np.zeros((h, w))
    rvis, _, _ = _right_view(textures, xs, ys)
    for idx, tex in enumerate(textures):
        m = rvis == idx
        right[m] = tex.sample(xs[m], ys[m])

    # occlusion: the left point's right-image location is off-frame or shows
    # a nearer surface
    d_safe = np.where(valid, disp, 0.0)
    xr = xs - d_safe
    occ = valid & (xr < 0)
    for idx, tex in enumerate(textures):
        p = tex.plane
        xq = (xr + p.b * ys + p.c) / (1.0 - p.a)
        occ |= valid & (vis != idx) & tex.covers(xq, ys) & (p.disparity(xq, ys) > d_safe)

    if spec.noise_sigma > 0:
        left = left + rng.normal_array((h, w), spec.noise_sigma)
        right = right + rng.normal_array((h, w), spec.noise_sigma)

    flat = np.zeros((h, w), dtype=bool)
    for idx, tex in enumerate(textures):
        if tex.plane.texture == "flat":
            flat |= vis == idx
    labels = np.full((h, w), TEXTURED, dtype=np.uint8)
    labels[flat] = TEXTURELESS
    labels[occ] = OCCLUDED

    d_field = DisparityField(Grid2D(np.where(valid, disp, 0.0)), valid)
    return SceneSample(Grid2D(left), Grid2D(right), d_field, occ, labels, spec)


def warp_right_to_left(right: Grid2D, d: DisparityField) -> np.ndarray:
    """Sample the right image at ``x - d`` (bilinear); NaN where off-frame."""
    h, w = right.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    xr = xs - d.values.astype(np.float64)
    inside = (xr >= 0) & (xr <= w - 1) & d.valid
    from .field_core import bilinear_sample_array

    out = bilinear_sample_array(right.values, np.clip(xr, 0, w - 1), ys)
    return np.where(inside, out, np.nan)


# -- stock scenes -----------------------------------------------------------

DESK_HEIGHT = 64
DESK_WIDTH = 96
DESK_DMAX = 32


def _rect(rng, w, h, min_w, max_w, min_h, max_h, x_lo=0):
    rw = rng.randint(min_w, max_w + 1)
    rh = rng.randint(min_h, max_h + 1)
    x0 = rng.randint(x_lo, w - rw + 1)
    y0 = rng.randint(0, h - rh + 1)
    return (x0, y0, x0 + rw, y0 + rh)


def random_scene_spec(seed: int, height: int = DESK_HEIGHT, width: int = DESK_WIDTH,
                      dmax: int = DESK_DMAX, noise_sigma: float = 0.02, slope: float = 0.04,
                      slanted_only: bool = False) -> SceneSpec:
    """Slanted textured background, a textured foreground box in front of
    it and a flat (textureless) box in between.

    ``slope`` bounds the disparity gradient magnitude per pixel. With
    ``slanted_only`` the flat box becomes a textured slanted patch, so no
    local neighbourhood has constant disparity.
    """
    rng = XorShift64Star(seed)
    u = rng.uniform
    bg = Plane(a=slope * (u() - 0.5) * 0.5, b=slope * (0.5 + 0.5 * u()), c=0.0,
               region=(0, 0, width, height), texture="noise")
    bg = _lift(bg, Plane(0.0, 0.0, 0.0, bg.region), 1.5 + 2.0 * u())
    fg_region = _rect(rng, width, height, 20, 30, 16, 26, x_lo=dmax // 2)
    fg = Plane(a=slope * (u() - 0.5), b=slope * (u() - 0.5), c=0.0, region=fg_region)
    flat_region = _rect(rng, width, height, 18, 26, 14, 20, x_lo=dmax // 2)
    level = 0.3 + 0.4 * u()
    # lift each box a fixed margin above the background over its whole extent
    fg = _lift(fg, bg, 8.0 + 4.0 * u())
    if slanted_only:
        flat = _lift(Plane(slope * (u() - 0.5), slope * (u() - 0.5), 0.0, flat_region), bg, 4.0)
    else:
        flat = _lift(Plane(0.0, 0.0, 0.0, flat_region, texture="flat", level=level), bg, 4.0)
    return SceneSpec(height, width, dmax, planes=(bg, flat), occluders=(fg,),
                     noise_sigma=noise_sigma, seed=seed)


def _lift(p: Plane, under: Plane, margin: float) -> Plane:
    x0, y0, x1, y1 = p.region
    gap = min(p.disparity(x, y) - under.disparity(x, y) for x in (x0, x1 - 1) for y in (y0, y1 - 1))
    return Plane(p.a, p.b, p.c + margin - gap, p.region, p.texture, p.period, p.level)


def default_suite(seed: int = 7, count: int = 3, **kwargs) -> list[SceneSample]:
    """The stock evaluation suite: ``count`` scenes from one seed."""
    rng = XorShift64Star(seed)
    seeds = [rng.next_u64() & 0x7FFFFFFF for _ in range(count)]
    return [gen_scene(random_scene_spec(s, **kwargs)) for s in seeds]
