# predictor/checkpoint.py

import logging
import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from config import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class CheckpointError(ValueError):
    """Raised for malformed or incompatible checkpoint files."""


def encode_checkpoint(state: Dict[str, np.ndarray]) -> bytes:
    """
    Serialize named parameter arrays.

    Layout: magic "TNRM", u32 format version, then per parameter: u32 name
    length, utf-8 name, u32 rank, rank × u32 extents, raw little-endian
    float64 data. All integers little-endian. Records keep the given order.
    """
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_FORMAT_VERSION)]
    for name, array in state.items():
        array = np.asarray(array, dtype=np.float64)
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(array.astype("<f8").tobytes(order="C"))
    return b"".join(chunks)


def decode_checkpoint(blob: bytes) -> Dict[str, np.ndarray]:
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"not a checkpoint: bad magic {blob[:4]!r}")
    if len(blob) < 8:
        raise CheckpointError("truncated checkpoint header")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {CHECKPOINT_FORMAT_VERSION})")

    state: Dict[str, np.ndarray] = {}
    offset = 8
    try:
        while offset < len(blob):
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            shape = struct.unpack_from(f"<{rank}I", blob, offset)
            offset += 4 * rank
            count = int(np.prod(shape)) if rank else 1
            data = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            offset += 8 * count
            state[name] = data.astype(np.float64).reshape(shape)
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"truncated or corrupt checkpoint at byte {offset}: {exc}") from exc
    return state


def save_checkpoint(path: PathLike, state: Dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(state))
    logger.info("checkpoint with %d tensors written to %s", len(state), path)
    return path


def load_checkpoint(path: PathLike) -> Dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())
