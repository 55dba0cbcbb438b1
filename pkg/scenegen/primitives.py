# scenegen/primitives.py

import logging
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from numeric.rng import make_rng
from scenegen.camera import Camera

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]
Kind = Literal["sphere", "cylinder", "box", "plane"]
Appearance = Literal["opaque", "transparent", "randomized"]

HIT_EPS = 1e-9
MAX_SPEC_ATTEMPTS = 50


class Material(BaseModel):
    """Transparent look: background show-through plus a rim term at grazing angles."""
    model_config = ConfigDict(extra="forbid")
    transmission: float = Field(0.85, ge=0, le=1)
    tint: Vec3 = (1.0, 1.0, 1.0)
    rim: float = Field(0.35, ge=0)
    rim_power: float = Field(3.0, gt=0)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Material":
        return cls(
            transmission=float(rng.uniform(0.6, 0.95)),
            tint=tuple(float(c) for c in rng.uniform(0.7, 1.0, size=3)),
            rim=float(rng.uniform(0.2, 0.6)),
            rim_power=float(rng.uniform(2.0, 5.0)),
        )


class Primitive(BaseModel):
    """
    One analytic shape. `center` is the volumetric center; cylinders are
    upright (axis = world y) and boxes are axis-aligned. A plane is the
    ground y = 0 and ignores its geometric fields.
    """
    model_config = ConfigDict(extra="forbid")
    kind: Kind
    center: Vec3 = (0.0, 0.0, 0.0)
    radius: float = Field(0.4, gt=0)
    height: float = Field(0.8, gt=0)
    half_extents: Vec3 = (0.3, 0.3, 0.3)
    appearance: Appearance = "opaque"
    color: Vec3 = (0.8, 0.8, 0.8)
    material: Material = Field(default_factory=Material)

    @field_validator("half_extents")
    @classmethod
    def _positive_extents(cls, value: Vec3) -> Vec3:
        if min(value) <= 0:
            raise ValueError(f"half_extents must be positive, got {value}")
        return value

    @property
    def is_object(self) -> bool:
        return self.kind != "plane"

    @property
    def is_transparent(self) -> bool:
        return self.is_object and self.appearance != "opaque"

    def intersect(self, origin: np.ndarray, dirs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Nearest positive hit distance per ray (inf on a miss) and the world normal there."""
        if self.kind == "sphere":
            return intersect_sphere(origin, dirs, np.asarray(self.center), self.radius)
        if self.kind == "cylinder":
            return intersect_cylinder(origin, dirs, np.asarray(self.center), self.radius, self.height)
        if self.kind == "box":
            return intersect_box(origin, dirs, np.asarray(self.center), np.asarray(self.half_extents))
        return intersect_ground(origin, dirs)


# ----------------------------------------------------------------------
# ray / primitive intersection, vectorized over N rays
# ----------------------------------------------------------------------
def intersect_sphere(origin, dirs, center, radius):
    oc = origin - center
    b = dirs @ oc
    c = oc @ oc - radius * radius
    disc = b * b - c
    root = np.sqrt(np.maximum(disc, 0.0))
    t = -b - root
    t = np.where((disc >= 0) & (t > HIT_EPS), t, np.inf)
    points = origin + np.where(np.isfinite(t), t, 0.0)[:, None] * dirs
    return t, (points - center) / radius


def intersect_cylinder(origin, dirs, center, radius, height):
    n = dirs.shape[0]
    y_lo, y_hi = center[1] - height / 2.0, center[1] + height / 2.0
    ox, oz = origin[0] - center[0], origin[2] - center[2]

    # side
    a = dirs[:, 0] ** 2 + dirs[:, 2] ** 2
    b = dirs[:, 0] * ox + dirs[:, 2] * oz
    c = ox * ox + oz * oz - radius * radius
    disc = b * b - a * c
    safe_a = np.where(a < 1e-15, 1.0, a)
    t_side = (-b - np.sqrt(np.maximum(disc, 0.0))) / safe_a
    y_side = origin[1] + t_side * dirs[:, 1]
    t_side = np.where((a >= 1e-15) & (disc >= 0) & (t_side > HIT_EPS) & (y_side >= y_lo) & (y_side <= y_hi), t_side, np.inf)

    # caps
    safe_dy = np.where(np.abs(dirs[:, 1]) < 1e-15, 1e-15, dirs[:, 1])
    best_cap = np.full(n, np.inf)
    cap_sign = np.zeros(n)
    for y_cap, sign in ((y_hi, 1.0), (y_lo, -1.0)):
        t_cap = (y_cap - origin[1]) / safe_dy
        px = ox + t_cap * dirs[:, 0]
        pz = oz + t_cap * dirs[:, 2]
        ok = (t_cap > HIT_EPS) & (px * px + pz * pz <= radius * radius)
        closer = ok & (t_cap < best_cap)
        best_cap = np.where(closer, t_cap, best_cap)
        cap_sign = np.where(closer, sign, cap_sign)

    use_cap = best_cap < t_side
    t = np.where(use_cap, best_cap, t_side)
    points = origin + np.where(np.isfinite(t), t, 0.0)[:, None] * dirs
    radial = np.stack([points[:, 0] - center[0], np.zeros(n), points[:, 2] - center[2]], axis=1) / radius
    cap = np.stack([np.zeros(n), cap_sign, np.zeros(n)], axis=1)
    return t, np.where(use_cap[:, None], cap, radial)


def intersect_box(origin, dirs, center, half_extents):
    safe = np.where(np.abs(dirs) < 1e-12, np.where(dirs < 0, -1e-12, 1e-12), dirs)
    t1 = (center - half_extents - origin) / safe
    t2 = (center + half_extents - origin) / safe
    t_near_axis = np.minimum(t1, t2)
    t_near = t_near_axis.max(axis=1)
    t_far = np.maximum(t1, t2).min(axis=1)
    t = np.where((t_far >= t_near) & (t_near > HIT_EPS), t_near, np.inf)

    axis = t_near_axis.argmax(axis=1)
    normals = np.zeros_like(dirs)
    rows = np.arange(dirs.shape[0])
    normals[rows, axis] = -np.sign(safe[rows, axis])
    return t, normals


def intersect_ground(origin, dirs):
    down = dirs[:, 1] < -1e-12
    safe_dy = np.where(down, dirs[:, 1], -1.0)
    t = np.where(down, -origin[1] / safe_dy, np.inf)
    t = np.where(t > HIT_EPS, t, np.inf)
    normals = np.zeros_like(dirs)
    normals[:, 1] = 1.0
    return t, normals


# ----------------------------------------------------------------------
# scene description
# ----------------------------------------------------------------------
class SceneSpec(BaseModel):
    """A seed, an image size and the primitives to ray-cast."""
    model_config = ConfigDict(extra="forbid")
    seed: int = Field(..., ge=0)
    image_size: int = Field(..., ge=2)
    primitives: List[Primitive]
    background_seed: int = Field(0, ge=0)

    @field_validator("image_size")
    @classmethod
    def _check_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"image_size must be even, got {value}")
        return value

    @model_validator(mode="after")
    def _check_scene(self) -> "SceneSpec":
        if not self.primitives:
            raise ValueError("primitives: a scene needs at least one primitive")
        camera = Camera(self.image_size, self.image_size)
        objects = [p for p in self.primitives if p.is_object]
        for index, prim in enumerate(objects):
            row, col, depth = camera.project(prim.center)
            if depth <= 0 or not (0 <= row <= self.image_size - 1 and 0 <= col <= self.image_size - 1):
                raise ValueError(f"primitives[{index}]: {prim.kind} center {prim.center} lies outside the camera frustum")
        centers = np.array([p.center for p in objects], dtype=np.float64).reshape(-1, 3)
        for a in range(len(centers)):
            for b in range(a + 1, len(centers)):
                if np.linalg.norm(centers[a] - centers[b]) < 1e-6:
                    raise ValueError(f"primitives[{a}] and primitives[{b}] share the center {tuple(centers[a])}")
        return self

    @property
    def camera(self) -> Camera:
        return Camera(self.image_size, self.image_size)


def _random_object(rng: np.random.Generator, appearance: Appearance) -> Primitive:
    kind = str(rng.choice(["sphere", "cylinder", "box"]))
    x = float(rng.uniform(-1.2, 1.2))
    z = float(rng.uniform(-1.2, 0.8))
    color = tuple(float(c) for c in rng.uniform(0.2, 0.9, size=3))
    material = Material.random(rng)
    if kind == "sphere":
        r = float(rng.uniform(0.25, 0.5))
        return Primitive(kind=kind, center=(x, r, z), radius=r, appearance=appearance, color=color, material=material)
    if kind == "cylinder":
        r = float(rng.uniform(0.2, 0.4))
        h = float(rng.uniform(0.5, 1.1))
        return Primitive(kind=kind, center=(x, h / 2, z), radius=r, height=h, appearance=appearance, color=color, material=material)
    ext = tuple(float(e) for e in rng.uniform(0.15, 0.4, size=3))
    return Primitive(kind=kind, center=(x, ext[1], z), half_extents=ext, appearance=appearance, color=color, material=material)


def _footprint(prim: Primitive) -> float:
    if prim.kind == "box":
        return float(np.hypot(prim.half_extents[0], prim.half_extents[2]))
    return prim.radius


def random_scene_spec(
    seed: int,
    image_size: int,
    max_objects: int = 3,
    transparent_prob: float = 0.7,
    ground_plane_prob: float = 0.8,
) -> SceneSpec:
    """
    Seeded random tabletop: 1..max_objects resting, non-overlapping objects,
    optionally on a ground plane. When transparent_prob > 0 at least one
    object is transparent, so every sample has a transparent mask.
    """
    rng = make_rng(seed, "scene")
    for attempt in range(MAX_SPEC_ATTEMPTS):
        n_objects = int(rng.integers(1, max_objects + 1))
        objects: List[Primitive] = []
        for _ in range(n_objects * 10):
            if len(objects) == n_objects:
                break
            roll = rng.random()
            appearance: Appearance = "opaque"
            if roll < transparent_prob:
                appearance = "randomized" if rng.random() < 0.25 else "transparent"
            candidate = _random_object(rng, appearance)
            if all(
                np.hypot(candidate.center[0] - o.center[0], candidate.center[2] - o.center[2])
                > _footprint(candidate) + _footprint(o) + 0.05
                for o in objects
            ):
                objects.append(candidate)
        if transparent_prob > 0 and objects and not any(o.is_transparent for o in objects):
            objects[0] = objects[0].model_copy(update={"appearance": "transparent"})

        primitives = list(objects)
        if rng.random() < ground_plane_prob:
            primitives.append(Primitive(kind="plane", color=tuple(float(c) for c in rng.uniform(0.4, 0.9, size=3))))
        try:
            return SceneSpec(
                seed=seed,
                image_size=image_size,
                primitives=primitives,
                background_seed=int(rng.integers(0, 2**31 - 1)),
            )
        except ValidationError as exc:
            logger.debug("scene %d attempt %d rejected: %s", seed, attempt, exc)
    raise ValueError(f"could not place a valid scene for seed {seed} in {MAX_SPEC_ATTEMPTS} attempts")
