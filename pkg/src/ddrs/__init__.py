"""Chunk-based deduplication codecs, a substitution-edit source model, analytic
bounds and Monte Carlo experiments on top of them."""

from .bitio import BitReader, BitSeq, elias_gamma_decode, elias_gamma_encode
from .schemes import AFLD, EDD, FLD, MFLD, VLD, decode, encode
from .source_model import LengthLaw, SourceInstance, SourceParams, generate_stream, trial_rng

__version__ = "0.1.0"
