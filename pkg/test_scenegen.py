import json
from dataclasses import replace

import numpy as np
import pytest
from scipy.ndimage import binary_erosion

from config import DATASET_LAYOUT_VERSION, TOY_MANIFEST
from evaluation.metrics import angular_error_map
from ingestion.loader import load_sample, load_split, read_image, read_normal_map, write_normal_map, write_png, write_sample
from ingestion.preprocess import decode_mask_png, to_uint8
from scenegen.camera import Camera
from scenegen.dataset import build_manifest, generate_dataset, generate_from_manifest, regenerate_sample
from scenegen.primitives import Primitive, SceneSpec, random_scene_spec
from scenegen.render import check_sample, normals_from_depth, render


# --------------------------------------------------
# camera
# --------------------------------------------------
def test_camera_intrinsics():
    camera = Camera(32, 48)
    intrinsics = camera.intrinsics()
    assert intrinsics["fx"] == intrinsics["fy"] == pytest.approx(16.0 / np.tan(np.radians(25.0)))
    assert (intrinsics["cx"], intrinsics["cy"]) == (23.5, 15.5)
    row, col, depth = camera.project(camera.target)
    assert (row, col) == pytest.approx((15.5, 23.5))
    assert depth > 0


def test_points_behind_the_camera_do_not_project():
    camera = Camera(16, 16)
    row, _, depth = camera.project((0.0, 2.2, 10.0))
    assert depth <= 0 and np.isnan(row)


# --------------------------------------------------
# rendering
# --------------------------------------------------
def test_sphere_on_the_optical_axis_faces_the_camera():
    camera = Camera(32, 32)
    _, _, forward = camera.basis
    center = tuple(np.asarray(camera.eye) + 3.0 * forward)
    spec = SceneSpec(seed=0, image_size=32, primitives=[Primitive(kind="sphere", center=center, radius=0.5)])
    sample = render(spec)
    patch = sample.normal[:, 15:17, 15:17].reshape(3, -1).mean(axis=1)
    np.testing.assert_allclose(patch[:2], 0.0, atol=1e-9)
    assert patch[2] > 0.98
    assert sample.mask_fg[15:17, 15:17].all()
    assert not sample.mask_transparent.any()


def test_rendered_sample_invariants(sphere_sample):
    assert sphere_sample.rgb.shape == sphere_sample.normal.shape == (3, 32, 32)
    np.testing.assert_allclose(np.linalg.norm(sphere_sample.normal, axis=0), 1.0, atol=1e-12)
    assert sphere_sample.mask_transparent.any()
    assert not (sphere_sample.mask_transparent & ~sphere_sample.mask_fg).any()
    assert sphere_sample.rgb.min() >= -1.0 and sphere_sample.rgb.max() <= 1.0
    assert sphere_sample.depth.min() >= 0.0 and sphere_sample.depth.max() <= 1.0


def test_missed_rays_see_a_backdrop_facing_the_camera(sphere_sample):
    corner = sphere_sample.normal[:, 0, 0]
    assert not sphere_sample.mask_fg[0, 0]
    np.testing.assert_array_equal(corner, [0.0, 0.0, 1.0])
    assert sphere_sample.depth[0, 0] == 1.0


def test_material_triplet_shares_geometry(sphere_sample):
    outside = ~sphere_sample.mask_transparent
    for other in (sphere_sample.rgb_randomized, sphere_sample.rgb_background):
        np.testing.assert_array_equal(other[:, outside], sphere_sample.rgb[:, outside])
    inside = sphere_sample.mask_transparent
    assert not np.array_equal(sphere_sample.rgb_randomized[:, inside], sphere_sample.rgb[:, inside])


def test_check_sample_rejects_broken_samples(sphere_sample):
    with pytest.raises(ValueError, match="normal length"):
        check_sample(replace(sphere_sample, normal=sphere_sample.normal * 1.01))
    with pytest.raises(ValueError, match="contained"):
        check_sample(replace(sphere_sample, mask_fg=np.zeros_like(sphere_sample.mask_fg)))


def test_normals_from_depth_recover_the_ground_plane():
    spec = SceneSpec(seed=0, image_size=32, primitives=[Primitive(kind="plane")])
    sample = render(spec)
    recovered = normals_from_depth(sample.depth, sample.intrinsics)
    rows = slice(18, 32)
    assert sample.mask_fg.sum() == 0
    expected = Camera(32, 32).to_camera(np.array([[0.0, 1.0, 0.0]]))[0]
    np.testing.assert_allclose(recovered[:, rows], np.broadcast_to(expected[:, None, None], (3, 14, 32)), atol=1e-6)


def test_normals_from_depth_agree_with_rendered_normals():
    errors = []
    for seed in range(4):
        sample = render(random_scene_spec(seed, 64))
        interior = binary_erosion(sample.mask_fg, iterations=2)
        if not interior.any():
            continue
        recovered = normals_from_depth(sample.depth, sample.intrinsics)
        errors.append(angular_error_map(recovered, sample.normal, interior)[interior])
    assert errors
    assert np.median(np.concatenate(errors)) < 5.0


def test_randomized_material_changes_only_transparent_pixels():
    changed = 0
    for seed in range(4):
        sample = render(random_scene_spec(seed, 32))
        inside = sample.mask_transparent
        np.testing.assert_array_equal(sample.rgb_randomized[:, ~inside], sample.rgb[:, ~inside])
        if inside.any():
            assert np.abs(sample.rgb_randomized[:, inside] - sample.rgb[:, inside]).mean() > 1e-3
            changed += 1
    assert changed


# --------------------------------------------------
# scene specs
# --------------------------------------------------
def test_random_scene_spec_is_seeded():
    assert random_scene_spec(4, 32) == random_scene_spec(4, 32)
    assert random_scene_spec(4, 32) != random_scene_spec(5, 32)


@pytest.mark.parametrize("seed", range(8))
def test_random_scenes_contain_a_transparent_object(seed):
    spec = random_scene_spec(seed, 32, transparent_prob=0.3)
    assert any(p.is_transparent for p in spec.primitives)
    assert 1 <= sum(p.is_object for p in spec.primitives) <= 3


def test_opaque_only_scenes():
    spec = random_scene_spec(2, 32, transparent_prob=0.0)
    assert not any(p.is_transparent for p in spec.primitives)
    assert not render(spec).mask_transparent.any()


def test_scene_spec_validation():
    sphere = Primitive(kind="sphere", center=(0.0, 0.5, 0.0))
    with pytest.raises(ValueError, match="even"):
        SceneSpec(seed=0, image_size=31, primitives=[sphere])
    with pytest.raises(ValueError, match="at least one"):
        SceneSpec(seed=0, image_size=32, primitives=[])
    with pytest.raises(ValueError, match="frustum"):
        SceneSpec(seed=0, image_size=32, primitives=[Primitive(kind="sphere", center=(0.0, 2.2, 10.0))])
    with pytest.raises(ValueError, match="share the center"):
        SceneSpec(seed=0, image_size=32, primitives=[sphere, Primitive(kind="box", center=(0.0, 0.5, 0.0))])
    with pytest.raises(ValueError):
        Primitive(kind="box", half_extents=(0.1, 0.0, 0.1))


# --------------------------------------------------
# datasets on disk
# --------------------------------------------------
def test_build_manifest_matches_the_toy_fixture():
    manifest = build_manifest(16, 0.75, 0, 64)
    assert TOY_MANIFEST.read_text(encoding="utf-8") == json.dumps(manifest, indent=2) + "\n"
    assert manifest["splits"] == {"train": 12, "test": 4}
    assert [s["seed"] for s in manifest["samples"]] == list(range(16))


def test_build_manifest_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_manifest(0, 0.5, 0, 32)
    with pytest.raises(ValueError):
        build_manifest(4, 1.5, 0, 32)


def test_generate_dataset_layout_and_reproducibility(tmp_path):
    manifest = generate_dataset(tmp_path / "a", count=3, train_frac=0.67, base_seed=2, image_size=32)
    generate_dataset(tmp_path / "b", count=3, train_frac=0.67, base_seed=2, image_size=32, workers=2)

    assert sorted(p.name for p in (tmp_path / "a" / "train").iterdir()) == ["sample_00000", "sample_00001"]
    assert [p.name for p in (tmp_path / "a" / "test").iterdir()] == ["sample_00002"]
    assert json.loads((tmp_path / "a" / "manifest.json").read_text()) == manifest

    for path in sorted((tmp_path / "a").rglob("*.*")):
        twin = tmp_path / "b" / path.relative_to(tmp_path / "a")
        assert path.read_bytes() == twin.read_bytes(), path.name


def test_stored_sample_matches_a_fresh_render(tmp_path):
    manifest = generate_dataset(tmp_path, count=2, train_frac=0.5, base_seed=1, image_size=32)
    stored = load_sample(tmp_path / "test" / "sample_00001")
    fresh = regenerate_sample(manifest, "sample_00001")
    np.testing.assert_allclose(stored.rgb, fresh.rgb, atol=1.0 / 255 + 1e-12)
    np.testing.assert_allclose(stored.normal, fresh.normal, atol=3.0 / 255)
    np.testing.assert_array_equal(stored.mask_fg, fresh.mask_fg)
    np.testing.assert_array_equal(stored.mask_transparent, fresh.mask_transparent)
    np.testing.assert_allclose(stored.depth, fresh.depth, atol=1.0 / 65535)
    assert stored.intrinsics == fresh.intrinsics
    assert regenerate_sample(manifest, "sample_09999") is None


def test_generate_from_manifest_checks_the_layout_version(tmp_path):
    manifest = build_manifest(1, 1.0, 0, 32)
    with pytest.raises(ValueError, match="layout_version"):
        generate_from_manifest({**manifest, "layout_version": DATASET_LAYOUT_VERSION + 1}, tmp_path)
    with pytest.raises(ValueError, match="samples"):
        generate_from_manifest({k: v for k, v in manifest.items() if k != "samples"}, tmp_path)
    with pytest.raises(FileNotFoundError):
        generate_from_manifest(tmp_path / "missing.json", tmp_path)


def test_load_split_falls_back_to_a_flat_directory(tmp_path, sphere_sample):
    write_sample(tmp_path / "flat" / "scene_a", sphere_sample)
    samples = load_split(tmp_path / "flat", "test")
    assert [s.sample_id for s in samples] == ["scene_a"]
    with pytest.raises(FileNotFoundError):
        load_split(tmp_path / "nowhere")


# --------------------------------------------------
# PNG conversions
# --------------------------------------------------
def test_png_roundtrip_within_one_step(tmp_path, rng, random_normals):
    image = rng.uniform(-1, 1, size=(3, 6, 5))
    write_png(tmp_path / "img.png", to_uint8(image))
    np.testing.assert_allclose(read_image(tmp_path / "img.png"), image, atol=1.0 / 255 + 1e-12)

    normals = random_normals(6, 5)
    write_normal_map(tmp_path / "n.png", normals)
    back = read_normal_map(tmp_path / "n.png")
    np.testing.assert_allclose(np.linalg.norm(back, axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(back, normals, atol=3.0 / 255)


def test_sixteen_bit_images_are_scaled_not_wrapped(tmp_path):
    pixels = np.array([[65535, 32768], [0, 256]], dtype=np.uint16)
    image = read_image(write_png(tmp_path / "gray16.png", pixels))
    assert image.shape == (3, 2, 2)
    np.testing.assert_allclose(image[0], [[1.0, 128 / 255 * 2 - 1], [-1.0, 1 / 255 * 2 - 1]])


def test_mask_threshold():
    assert decode_mask_png(np.array([[0, 127, 128, 255]], dtype=np.uint8)).tolist() == [[False, False, True, True]]
