# codec/__init__.py

from .latent import LatentGrid, SpaceToDepthCodec, decode, encode, encode_normal
