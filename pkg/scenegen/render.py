# scenegen/render.py

import logging
from typing import List, Optional

import numpy as np

from numeric.rng import make_rng
from scenegen.camera import Camera
from scenegen.primitives import Material, Primitive, SceneSpec
from scenegen.sample import SceneSample

logger = logging.getLogger(__name__)

LIGHT_DIR = np.array([0.4, 0.8, 0.45]) / np.linalg.norm([0.4, 0.8, 0.45])
AMBIENT = 0.25
NOISE_CELLS = 8
BACKDROP_NORMAL = np.array([0.0, 0.0, 1.0])
MISS = -1


# ----------------------------------------------------------------------
# textures and shading
# ----------------------------------------------------------------------
def value_noise(u: np.ndarray, v: np.ndarray, seed: int, cells: int = NOISE_CELLS) -> np.ndarray:
    """Smooth seeded noise in [0, 1] over a periodic `cells`×`cells` lattice."""
    lattice = make_rng(seed, "noise").random((cells, cells))
    u = np.mod(u, cells)
    v = np.mod(v, cells)
    i0 = np.floor(u).astype(int)
    j0 = np.floor(v).astype(int)
    fu = u - i0
    fv = v - j0
    su = fu * fu * (3.0 - 2.0 * fu)
    sv = fv * fv * (3.0 - 2.0 * fv)
    i1 = (i0 + 1) % cells
    j1 = (j0 + 1) % cells
    top = lattice[i0, j0] * (1 - sv) + lattice[i0, j1] * sv
    bottom = lattice[i1, j0] * (1 - sv) + lattice[i1, j1] * sv
    return top * (1 - su) + bottom * su


def lambert(normals: np.ndarray) -> np.ndarray:
    return AMBIENT + (1.0 - AMBIENT) * np.maximum(0.0, normals @ LIGHT_DIR)


def _nearest_hits(prims: List[Primitive], origin: np.ndarray, dirs: np.ndarray):
    """Index of the nearest primitive per ray (MISS when none), its distance and world normal."""
    n = dirs.shape[0]
    best_t = np.full(n, np.inf)
    best_idx = np.full(n, MISS)
    best_normal = np.zeros((n, 3))
    for index, prim in enumerate(prims):
        t, normals = prim.intersect(origin, dirs)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best_idx = np.where(closer, index, best_idx)
        best_normal = np.where(closer[:, None], normals, best_normal)
    return best_idx, best_t, best_normal


def _background(spec: SceneSpec, camera: Camera, origin: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Background-only render: opaque objects, the textured ground and a textured backdrop."""
    opaque = [p for p in spec.primitives if not p.is_transparent]
    idx, t, normals = _nearest_hits(opaque, origin, dirs)
    n = dirs.shape[0]
    colors = np.zeros((n, 3))

    rows, cols = np.divmod(np.arange(n), camera.width)
    backdrop = value_noise(rows * NOISE_CELLS / camera.height, cols * NOISE_CELLS / camera.width, spec.background_seed)
    colors[:] = (0.35 + 0.5 * backdrop)[:, None]

    points = origin + np.where(np.isfinite(t), t, 0.0)[:, None] * dirs
    shade = lambert(normals)
    for index, prim in enumerate(opaque):
        hit = idx == index
        if not hit.any():
            continue
        base = np.asarray(prim.color)
        if prim.kind == "plane":
            texture = value_noise(points[hit, 0] * 1.5, points[hit, 2] * 1.5, spec.background_seed + 1)
            colors[hit] = base * (0.5 + 0.5 * texture)[:, None] * shade[hit, None]
        else:
            colors[hit] = base * shade[hit, None]
    return colors


def _composite(
    spec: SceneSpec,
    background: np.ndarray,
    idx: np.ndarray,
    normals: np.ndarray,
    dirs: np.ndarray,
    materials: List[Optional[Material]],
) -> np.ndarray:
    colors = background.copy()
    facing = np.abs(np.sum(normals * dirs, axis=1))
    for index, prim in enumerate(spec.primitives):
        if not prim.is_transparent:
            continue
        hit = idx == index
        if not hit.any():
            continue
        mat = materials[index]
        rim = mat.rim * (1.0 - facing[hit]) ** mat.rim_power
        colors[hit] = mat.transmission * np.asarray(mat.tint) * background[hit] + rim[:, None]
    return np.clip(colors, 0.0, 1.0)


def _to_map(flat: np.ndarray, camera: Camera) -> np.ndarray:
    """(H·W)×C → C×H×W."""
    return np.ascontiguousarray(flat.reshape(camera.height, camera.width, -1).transpose(2, 0, 1))


# ----------------------------------------------------------------------
# rendering
# ----------------------------------------------------------------------
def render(spec: SceneSpec, source: str = "scenegen") -> SceneSample:
    """
    Primary-ray render of a scene as a material triplet.

    Geometry (normals, depth, masks) comes from the nearest hit per pixel.
    Transparent objects show the background through a tint and add a rim
    term that grows as the surface tilts away from the viewer; the
    randomized-material render redraws those parameters from the seed.
    Rays that hit nothing see a backdrop that faces the camera.
    """
    camera = spec.camera
    origin = np.asarray(camera.eye, dtype=np.float64)
    dirs = camera.world_rays()
    _, _, forward = camera.basis

    idx, t, world_normals = _nearest_hits(spec.primitives, origin, dirs)
    missed = idx == MISS

    normals = camera.to_camera(world_normals)
    normals[missed] = BACKDROP_NORMAL
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    z_depth = np.where(missed, camera.far, np.where(missed, 0.0, t) * (dirs @ forward))
    depth = np.clip(z_depth / camera.far, 0.0, 1.0)

    is_object = np.array([p.is_object for p in spec.primitives] + [False])
    is_transparent = np.array([p.is_transparent for p in spec.primitives] + [False])
    mask_fg = is_object[idx]
    mask_transparent = is_transparent[idx]

    background = _background(spec, camera, origin, dirs)
    standard = [p.material if p.is_transparent else None for p in spec.primitives]
    swap_rng = make_rng(spec.seed, "randmat")
    randomized = [Material.random(swap_rng) if p.is_transparent else None for p in spec.primitives]
    rgb = _composite(spec, background, idx, world_normals, dirs, standard)
    rgb_randomized = _composite(spec, background, idx, world_normals, dirs, randomized)

    shape = (camera.height, camera.width)
    sample = SceneSample(
        rgb=_to_map(rgb, camera) * 2.0 - 1.0,
        normal=_to_map(normals, camera),
        mask_fg=mask_fg.reshape(shape),
        mask_transparent=mask_transparent.reshape(shape),
        rgb_randomized=_to_map(rgb_randomized, camera) * 2.0 - 1.0,
        rgb_background=_to_map(background, camera) * 2.0 - 1.0,
        depth=depth.reshape(shape),
        intrinsics=camera.intrinsics(),
        sample_id=f"seed_{spec.seed}",
        source=source,
    )
    check_sample(sample)
    return sample


def check_sample(sample: SceneSample, unit_tol: float = 1e-9) -> None:
    """Unit normals, mask containment and camera-facing normals; raises ValueError."""
    norms = np.linalg.norm(sample.normal, axis=0)
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > unit_tol:
        raise ValueError(f"{sample.sample_id}: normal length off by {worst:.3e}")
    if np.any(sample.mask_transparent & ~sample.mask_fg):
        raise ValueError(f"{sample.sample_id}: mask_transparent is not contained in mask_fg")
    if sample.intrinsics:
        camera = Camera(sample.height, sample.width)
        rays = camera.camera_rays().transpose(2, 0, 1)
        facing = -np.sum(sample.normal * rays, axis=0)
        if np.any(facing <= -1e-9):
            raise ValueError(f"{sample.sample_id}: {int(np.sum(facing <= -1e-9))} normals face away from the camera")


def normals_from_depth(depth: np.ndarray, intrinsics: dict) -> np.ndarray:
    """
    Camera-space normals from a normalized z-depth map via central differences
    of the back-projected points, oriented towards the camera.
    """
    height, width = depth.shape
    z = depth * intrinsics["far"]
    i, j = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    points = np.stack(
        [(j - intrinsics["cx"]) / intrinsics["fx"] * z, -(i - intrinsics["cy"]) / intrinsics["fy"] * z, -z],
        axis=-1,
    )
    d_row = np.gradient(points, axis=0)
    d_col = np.gradient(points, axis=1)
    normals = np.cross(d_row, d_col)
    norms = np.linalg.norm(normals, axis=-1, keepdims=True)
    normals = normals / np.where(norms < 1e-15, 1.0, norms)
    flip = np.sum(normals * points, axis=-1) > 0
    normals[flip] *= -1.0
    return np.ascontiguousarray(normals.transpose(2, 0, 1))
