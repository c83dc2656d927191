"""Keyed, semantics-preserving watermarks for Python source."""

from .keyed import SecretKey, load_key, write_key_file
from .watermark import ALL, EmbedResult, Verdict, embed, estimate_fp, identify

__all__ = [
    "ALL", "EmbedResult", "SecretKey", "Verdict",
    "embed", "estimate_fp", "identify", "load_key", "write_key_file",
]
