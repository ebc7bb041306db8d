"""Visual-auditory extrinsic contact estimation on synthetic scenes and hallucinated audio."""

from .audiobank import ContactLabel
from .errors import SonotactError

__all__ = ["ContactLabel", "SonotactError"]
__version__ = "0.1.0"
