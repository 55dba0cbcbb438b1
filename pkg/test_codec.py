import numpy as np
import pytest

from codec import SpaceToDepthCodec, decode, encode, encode_normal
from codec.autoencoder import ConvAutoencoderCodec, psnr
from numeric import functional as F
from numeric.tensor import ShapeError, parameter, value_and_grad
from scenegen.primitives import random_scene_spec
from scenegen.render import render


def test_latent_shape():
    z = encode(np.zeros((3, 64, 64)))
    assert (z.channels, z.height, z.width) == (48, 16, 16)


def test_constant_image_gives_constant_latent():
    z = encode(np.full((3, 8, 8), 0.25))
    assert np.all(z.values.data == 0.25)


def test_roundtrip_is_bit_exact(rng):
    for shape in [(3, 8, 8), (3, 16, 12), (3, 4, 20)]:
        x = rng.uniform(-1, 1, size=shape)
        assert decode(encode(x)).data.tobytes() == x.tobytes()


def test_zero_latent_decodes_to_zero():
    assert not decode(np.zeros((48, 2, 3))).data.any()


def test_flat_normal_map_gives_constant_latent():
    n = np.zeros((3, 8, 8))
    n[2] = 1.0
    z = encode_normal(n).values.data
    # every block is (0, 0, 1) per pixel, so each latent channel is constant over the grid
    assert np.all(z == z[:, :1, :1])


def test_encode_normal_rejects_non_unit_vectors(random_normals):
    n = random_normals()
    encode_normal(n)
    with pytest.raises(ValueError, match="unit length"):
        encode_normal(n * 1.01)


def test_random_normal_roundtrip_keeps_unit_length(random_normals):
    n = random_normals(8, 12)
    back = decode(encode_normal(n)).data
    assert back.tobytes() == n.tobytes()
    np.testing.assert_allclose(np.linalg.norm(back, axis=0), 1.0, atol=1e-12)


def test_linearity(rng):
    x, y = rng.normal(size=(3, 8, 8)), rng.normal(size=(3, 8, 8))
    lhs = encode(2.0 * x - 0.5 * y).values.data
    rhs = 2.0 * encode(x).values.data - 0.5 * encode(y).values.data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_rejects_indivisible_sizes_and_channel_mismatch():
    with pytest.raises(ValueError, match="divisible"):
        encode(np.zeros((3, 10, 8)))
    with pytest.raises(ShapeError, match="48 channels"):
        decode(np.zeros((12, 2, 2)))
    with pytest.raises(ValueError):
        SpaceToDepthCodec(0)


def test_gradient_passes_through_unchanged(rng):
    codec = SpaceToDepthCodec(2)
    x = parameter(rng.normal(size=(3, 4, 4)))
    weights = rng.normal(size=(3, 4, 4))
    _, (grad,) = value_and_grad(lambda t: F.reduce_sum(codec.decode(codec.encode(t)) * weights), x)
    np.testing.assert_array_equal(grad, weights)


def test_decoding_a_rendered_sphere_reproduces_its_normals(sphere_spec):
    sample = render(sphere_spec)
    assert decode(encode_normal(sample.normal)).data.tobytes() == sample.normal.tobytes()


# --------------------------------------------------
# trained autoencoder codec
# --------------------------------------------------
def test_psnr_values():
    ref = np.zeros(100)
    assert psnr(ref, ref) == float("inf")
    assert psnr(ref, ref + 0.02) == pytest.approx(40.0)


@pytest.fixture(scope="module")
def rendered_images():
    images = []
    for seed in range(4):
        sample = render(random_scene_spec(seed, 32))
        images.extend([sample.rgb, sample.normal])
    return images


def test_autoencoder_full_width_passes_the_gate(rendered_images):
    codec = ConvAutoencoderCodec(factor=4, seed=1)
    history = codec.fit(rendered_images, steps=5, lr=1e-5)
    assert len(history) == 5
    assert codec.verify(rendered_images) >= 35.0
    assert not any(p.requires_grad for p in codec.parameters())
    z = codec.encode(rendered_images[0])
    assert (z.channels, z.height, z.width) == (48, 8, 8)


def test_autoencoder_narrow_bottleneck_fails_the_gate(rng):
    noise = [rng.uniform(-1, 1, size=(3, 16, 16)) for _ in range(4)]
    codec = ConvAutoencoderCodec(factor=4, bottleneck=1)
    codec.fit(noise, steps=0)
    with pytest.raises(ValueError, match="below"):
        codec.verify(noise)


def test_autoencoder_fit_is_deterministic(rendered_images):
    a = ConvAutoencoderCodec(seed=2)
    b = ConvAutoencoderCodec(seed=2)
    a.fit(rendered_images[:4], steps=3, seed=9)
    b.fit(rendered_images[:4], steps=3, seed=9)
    for name, value in a.state_dict().items():
        assert value.tobytes() == b.state_dict()[name].tobytes()


def test_autoencoder_rejects_bad_bottleneck():
    with pytest.raises(ValueError, match="bottleneck"):
        ConvAutoencoderCodec(factor=2, bottleneck=13)
