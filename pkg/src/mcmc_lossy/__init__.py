"""Lossy compression of real-valued sequences by simulated annealing over symbol sequences.

The encoder searches for a symbol sequence that minimizes empirical conditional
entropy plus weighted squared error, then codes it losslessly with context
tree weighting.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import ConvergenceError, DecodeError, FormatError, MclcError, ParameterError, ParseError
from .sources import SignalBuffer, SourceSpec, generate, ingest
from .codec import EncodedStream, EncoderConfig, RDPoint, decode_stream, encode_stream

__all__ = [
    "ConvergenceError", "DecodeError", "EncodedStream", "EncoderConfig", "FormatError",
    "MclcError", "ParameterError", "ParseError", "RDPoint", "SignalBuffer", "SourceSpec",
    "__version__", "decode_stream", "encode_stream", "generate", "ingest",
]
