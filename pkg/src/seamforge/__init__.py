"""seamforge: content-aware resizing plus a seam-carving tamper-forensics pipeline."""

from .imaging import ImageBuffer, NormalizedImage

__version__ = "0.1.0"

__all__ = ["ImageBuffer", "NormalizedImage", "__version__"]
