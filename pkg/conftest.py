import numpy as np
import pytest

from numeric.rng import make_rng
from scenegen.primitives import Primitive, SceneSpec
from scenegen.render import render
from settings import ModelConfig, RunConfig


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the training experiments")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long training experiments, skipped unless --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


TINY_MODEL = dict(
    patch_size=8,
    semantic_dim=16,
    context_dim=8,
    base_width=8,
    levels=2,
    time_embed_dim=16,
    time_hidden_dim=16,
)


@pytest.fixture
def rng():
    return make_rng(1234, "tests")


@pytest.fixture
def tiny_model_config():
    return ModelConfig(**TINY_MODEL)


@pytest.fixture
def tiny_run_config(tmp_path):
    """32×32 images, a 2-level U-Net of width 8 and a handful of steps."""
    return RunConfig.model_validate({
        "seed": 3,
        "deterministic": True,
        "out": str(tmp_path / "run"),
        "model": TINY_MODEL,
        "train": {"steps": 3, "batch_size": 2, "eval_every": 0, "checkpoint_every": 0, "lr": 1e-3},
        "data": {"image_size": 32, "count": 6, "train_frac": 0.5},
    })


@pytest.fixture
def sphere_spec():
    """One transparent sphere in front of the default camera, no ground plane."""
    return SceneSpec(
        seed=11,
        image_size=32,
        primitives=[Primitive(kind="sphere", center=(0.0, 0.5, 0.0), radius=0.6, appearance="transparent")],
    )


@pytest.fixture
def sphere_sample(sphere_spec):
    return render(sphere_spec)


@pytest.fixture
def random_normals(rng):
    def make(height=8, width=8):
        n = rng.normal(size=(3, height, width))
        n[2] = np.abs(n[2]) + 0.1
        return n / np.linalg.norm(n, axis=0, keepdims=True)
    return make


@pytest.fixture
def tiny_cli_args():
    """--set flags selecting the tiny model on 32×32 images."""
    args = []
    for key, value in TINY_MODEL.items():
        args += ["--set", f"model.{key}={value}"]
    return args + ["--set", "data.image_size=32"]
