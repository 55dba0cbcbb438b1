# wavelet/__init__.py

from .edge import edge_mask
from .haar import WaveletBands, haar_dwt2, haar_idwt2
from .loss import wavelet_loss
