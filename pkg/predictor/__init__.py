# predictor/__init__.py

from .attention import CrossAttention
from .checkpoint import load_checkpoint, save_checkpoint
from .pipeline import NormalPredictor
from .unet import UNet
