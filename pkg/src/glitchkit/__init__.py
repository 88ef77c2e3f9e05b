"""glitchkit: synthetic texture-glitch generation, detection, and evaluation."""

from .labels import CLASS_NAMES, GLITCH_CLASSES, NUM_CLASSES, GlitchClass

__version__ = "0.1.0"

__all__ = [
    "CLASS_NAMES",
    "GLITCH_CLASSES",
    "NUM_CLASSES",
    "GlitchClass",
    "__version__",
]
