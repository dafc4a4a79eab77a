"""Model-agnostic local explanations for text classifiers.

Train or attach a probability-emitting classifier, perturb an input by
deleting tokens, and fit a locality-weighted sparse linear surrogate
whose coefficients attribute the prediction to individual tokens.
"""

__version__ = "0.1.0"

from .corpus import CLASS_NAMES, ClassLabel  # noqa: F401
from .engine import (  # noqa: F401
    Explanation,
    KernelConfig,
    SurrogateConfig,
    explain,
    explain_all_classes,
)
