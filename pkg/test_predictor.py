import numpy as np
import pytest

from numeric import functional as F
from numeric.tensor import ShapeError, Tape, Tensor, backward, parameter
from predictor import CrossAttention, NormalPredictor, UNet, load_checkpoint, save_checkpoint
from predictor.checkpoint import CheckpointError, decode_checkpoint, encode_checkpoint
from predictor.embeddings import TaskEmbedding, timestep_embedding
from predictor.pipeline import renormalize
from settings import ModelConfig


@pytest.fixture
def image(rng):
    return rng.uniform(-1, 1, size=(3, 32, 32))


# --------------------------------------------------
# cross-attention
# --------------------------------------------------
def test_single_token_attention_returns_its_value_row(rng):
    attn = CrossAttention(4, 3, rng)
    h, context = Tensor(rng.normal(size=(5, 4))), Tensor(rng.normal(size=(1, 3)))
    attended = attn.attend(h, context).data
    v_row = context.data @ attn.w_v.data
    np.testing.assert_allclose(attended, np.repeat(v_row, 5, axis=0), atol=1e-14)


def test_zero_value_projection_leaves_residual_only(rng):
    attn = CrossAttention(4, 3, rng)
    attn.w_v.data = np.zeros_like(attn.w_v.data)
    h = Tensor(rng.normal(size=(5, 4)))
    np.testing.assert_array_equal(attn(h, Tensor(rng.normal(size=(2, 3)))).data, h.data)


def test_attention_rows_sum_to_one(rng):
    attn = CrossAttention(8, 6, rng)
    weights = attn.attention_weights(Tensor(rng.normal(size=(10, 8))), Tensor(rng.normal(size=(7, 6)))).data
    np.testing.assert_allclose(weights.sum(axis=1), 1.0, atol=1e-12)


def test_attention_ignores_token_order(rng):
    attn = CrossAttention(8, 6, rng)
    h, context = Tensor(rng.normal(size=(10, 8))), rng.normal(size=(7, 6))
    shuffled = context[rng.permutation(7)]
    np.testing.assert_allclose(attn(h, Tensor(context)).data, attn(h, Tensor(shuffled)).data, atol=1e-12)


def test_attention_rejects_wrong_widths(rng):
    attn = CrossAttention(4, 3, rng)
    with pytest.raises(ShapeError):
        attn(Tensor(np.zeros((5, 3))), Tensor(np.zeros((2, 3))))
    with pytest.raises(ShapeError):
        attn(Tensor(np.zeros((5, 4))), Tensor(np.zeros((2, 4))))


# --------------------------------------------------
# embeddings and U-Net
# --------------------------------------------------
def test_timestep_embedding():
    emb = timestep_embedding(0, 8)
    np.testing.assert_array_equal(emb, [1, 1, 1, 1, 0, 0, 0, 0])
    assert timestep_embedding(999, 16).tobytes() == timestep_embedding(999, 16).tobytes()
    with pytest.raises(ValueError):
        timestep_embedding(1, 7)


def test_task_embeddings_are_fixed_and_distinct():
    tasks = TaskEmbedding(16, seed=2)
    assert not np.array_equal(tasks["normal"], tasks["rgb"])
    assert not tasks.s_n.flags.writeable
    with pytest.raises(ValueError, match="unknown task"):
        tasks["depth"]


def test_unet_shape_determinism_and_task_switch(rng):
    unet = UNet(in_channels=12, base_width=8, levels=2, context_dim=4, time_embed_dim=8, time_hidden_dim=8, seed=1)
    z = Tensor(rng.normal(size=(12, 8, 8)))
    context = Tensor(rng.normal(size=(3, 4)))
    a = unet(z, "normal", context).data
    b = unet(z, "normal", context).data
    assert a.shape == z.shape
    assert a.tobytes() == b.tobytes()
    assert not np.allclose(a, unet(z, "rgb", context).data)


def test_unet_rejects_bad_latents(rng):
    unet = UNet(in_channels=12, base_width=8, levels=2, context_dim=4, time_embed_dim=8, time_hidden_dim=8)
    with pytest.raises(ShapeError):
        unet(Tensor(np.zeros((6, 8, 8))), "normal")
    with pytest.raises(ShapeError, match="divisible"):
        unet(Tensor(np.zeros((12, 7, 8))), "normal")
    with pytest.raises(ShapeError):
        unet(Tensor(np.zeros((12, 8, 8))), "normal", Tensor(np.zeros((3, 5))))


def test_attention_mask_controls_blocks():
    unet = UNet(in_channels=12, base_width=8, levels=2, context_dim=4, attention_levels=[False, True],
                time_embed_dim=8, time_hidden_dim=8)
    assert len(unet.attention_blocks()) == 1
    with pytest.raises(ValueError):
        UNet(levels=2, attention_levels=[True])


# --------------------------------------------------
# full predictor
# --------------------------------------------------
def test_predict_normal_is_unit_length_single_pass_and_deterministic(tiny_model_config, image):
    model = NormalPredictor(tiny_model_config)
    out = model.predict_normal(image)
    assert model.forward_calls == 1
    assert out.shape == image.shape
    np.testing.assert_allclose(np.linalg.norm(out, axis=0), 1.0, atol=1e-9)

    again = NormalPredictor(tiny_model_config).predict_normal(image)
    assert out.tobytes() == again.tobytes()


def test_predict_normal_rejects_bad_sizes(tiny_model_config):
    model = NormalPredictor(tiny_model_config)
    with pytest.raises(ValueError, match="divisible by 8"):
        model.predict_normal(np.zeros((3, 36, 32)))
    with pytest.raises(ShapeError):
        model.predict_normal(np.zeros((1, 32, 32)))


def test_renormalize_maps_zero_vectors_to_the_camera_axis():
    normals = np.zeros((3, 2, 2))
    normals[:, 0, 0] = [3.0, 0.0, 4.0]
    out = renormalize(normals)
    np.testing.assert_allclose(out[:, 0, 0], [0.6, 0.0, 0.8])
    np.testing.assert_array_equal(out[:, 1, 1], [0.0, 0.0, 1.0])


def test_semantic_conditioning_switch(tiny_model_config, image):
    model = NormalPredictor(tiny_model_config.model_copy(update={"semantic_conditioning": False}))
    assert model.condition(image) is None
    assert model.predict_normal(image).shape == image.shape


def test_every_trainable_tensor_receives_gradient(rng, image):
    config = ModelConfig(patch_size=8, semantic_dim=16, context_dim=8, base_width=16, levels=2,
                         time_embed_dim=16, time_hidden_dim=16)
    model = NormalPredictor(config)
    target = rng.normal(size=(48, 8, 8))
    params = model.trainable_parameters()
    with Tape():
        out = model.predict_latent(image, "normal")
        backward(F.reduce_sum(F.square(out - target)))

    for name, p in model.unet.named_parameters() + model.projector.named_parameters():
        assert p.grad is not None and np.abs(p.grad).max() > 0, name
    assert len(params) == len(model.unet.parameters()) + 1
    assert model.encoder.parameters() == []


def test_frozen_predictor_trains_projector_only(tiny_model_config):
    model = NormalPredictor(tiny_model_config)
    assert model.trainable_parameters(freeze_predictor=True) == [model.projector.w_proj]


# --------------------------------------------------
# checkpoints
# --------------------------------------------------
def test_checkpoint_roundtrip_bit_exact(rng, tmp_path):
    state = {"a": rng.normal(size=(2, 3)), "b.c": rng.normal(size=(4,)), "scalar": np.array(1.5)}
    path = save_checkpoint(tmp_path / "x.tnrm", state)
    loaded = load_checkpoint(path)
    assert list(loaded) == list(state)
    for name in state:
        assert loaded[name].tobytes() == state[name].tobytes()
        assert loaded[name].shape == state[name].shape


def test_checkpoint_header_layout():
    blob = encode_checkpoint({"w": np.array([1.0])})
    assert blob[:4] == b"TNRM"
    assert blob[4:8] == (1).to_bytes(4, "little")
    assert blob[8:12] == (1).to_bytes(4, "little")
    assert blob[12:13] == b"w"


def test_corrupt_checkpoints_are_rejected():
    blob = encode_checkpoint({"w": np.ones((2, 2))})
    with pytest.raises(CheckpointError, match="magic"):
        decode_checkpoint(b"XXXX" + blob[4:])
    with pytest.raises(CheckpointError, match="version"):
        decode_checkpoint(blob[:4] + (9).to_bytes(4, "little") + blob[8:])
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(blob[:-5])


def test_model_checkpoint_reproduces_predictions(tiny_model_config, image, tmp_path):
    model = NormalPredictor(tiny_model_config)
    for p in model.trainable_parameters():
        p.data = p.data + 0.01
    path = model.save(tmp_path / "model.tnrm")
    restored = NormalPredictor.from_checkpoint(path, tiny_model_config)
    assert restored.predict_normal(image).tobytes() == model.predict_normal(image).tobytes()


def test_loading_into_a_different_architecture_fails(tiny_model_config, tmp_path):
    path = NormalPredictor(tiny_model_config).save(tmp_path / "model.tnrm")
    with pytest.raises(ValueError):
        NormalPredictor.from_checkpoint(path, tiny_model_config.model_copy(update={"base_width": 16}))
