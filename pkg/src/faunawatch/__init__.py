"""Monitor news coverage of wildlife taxa: search, fetch, filter, score, aggregate."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
