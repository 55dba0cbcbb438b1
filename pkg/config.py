import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Environment
ENV = os.getenv("ENV", "development")
IS_PRODUCTION = ENV == "production"
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

# Directories
BASE_DIR = Path(__file__).parent
DATA_DIR = BASE_DIR / "data"
OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", "outputs"))

# Versions
APP_NAME = "desk-normals"
APP_VERSION = "1.0.0"
CHECKPOINT_MAGIC = b"TNRM"
CHECKPOINT_FORMAT_VERSION = 1
DATASET_LAYOUT_VERSION = 1

# Bundled fixtures
BENCHMARK_CSV = DATA_DIR / "transparent_benchmark.csv"
LOSS_ABLATION_CSV = DATA_DIR / "loss_ablation.csv"
TOY_MANIFEST = DATA_DIR / "toy_manifest.json"
GOLDEN_WAVELET = DATA_DIR / "golden_wavelet.json"

# Codec
# full-scale runs encode with a pretrained VAE: factor 8, 4 latent channels
DEFAULT_CODEC_FACTOR = 4

# Semantic encoder
DEFAULT_PATCH_SIZE = 16
DEFAULT_SEMANTIC_DIM = 64
DEFAULT_UNET_CONTEXT_DIM = 64

# Predictor
DEFAULT_TIMESTEP = 999
DEFAULT_TIME_EMBED_DIM = 64

# Loss weights
DEFAULT_LAMBDA_RGB = 1.0
DEFAULT_LAMBDA_WV = 0.1

# Optimization
DEFAULT_LEARNING_RATE = float(os.getenv("DEFAULT_LEARNING_RATE", "5e-4"))  # full scale: 3e-5
DEFAULT_BATCH_SIZE = 8  # full scale: 32
DEFAULT_STEPS = 3000  # full scale: 15,000
ADAMW_BETAS = (0.9, 0.999)
ADAMW_EPS = 1e-8
ADAMW_WEIGHT_DECAY = 0.01
GRAD_NORM_WARN = 100.0

# Scene generation
DEFAULT_IMAGE_SIZE = 64
CAMERA_VFOV_DEG = 50.0
SCENE_FAR = 12.0  # depth normalization bound

# Evaluation
ACCURACY_THRESHOLDS = (5.0, 7.5, 11.25, 22.5, 30.0)
ERROR_MAP_MAX_DEG = 60.0

# Predictor architecture
DEFAULT_BASE_WIDTH = 32
DEFAULT_LEVELS = 3
DEFAULT_NORM_GROUPS = 8
DEFAULT_TIME_HIDDEN_DIM = 128
