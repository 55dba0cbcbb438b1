# ingestion/__init__.py

from .loader import list_samples, load_sample, load_split, read_image, read_normal_map, write_normal_map, write_sample
from .preprocess import decode_normal_png, encode_normal_png, to_signed, to_uint8
