"""Steerable DCT image coding: transforms, angle optimizers, codec and evaluation."""

from .codec import Algorithm, CodecParams, Flavor, LambdaPolicy, decode_image, encode_image
from .errors import BadMagicError, FormatError, MalformedTreeError, SdctError, TruncatedStreamError
from .transform import AngleVector, build_sdct, forward, inverse, sparsifying_angles

__all__ = [
    "Algorithm",
    "AngleVector",
    "BadMagicError",
    "CodecParams",
    "Flavor",
    "FormatError",
    "LambdaPolicy",
    "MalformedTreeError",
    "SdctError",
    "TruncatedStreamError",
    "build_sdct",
    "decode_image",
    "encode_image",
    "forward",
    "inverse",
    "sparsifying_angles",
]
