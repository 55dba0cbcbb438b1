# training/__init__.py
# trainer.py is imported explicitly: it builds the predictor, whose optional codec imports the optimizer from here.

from .augment import augment_flip, flip_sample, material_swap
from .losses import LossReport, LossWeights, latent_losses, total_loss
from .optimizer import AdamW, AdamWState, optimizer_step
from .sampling import WeightedSource, sample_batch, sample_indices, validate_sources
