"""Multi-tone parametric cavity simulator and entanglement analysis toolkit."""

from .core import (
    CavityParams,
    CovarianceMatrix,
    ModeLayout,
    PumpConfig,
    PumpTone,
    Units,
    convert_units,
    symplectic_form,
)

__version__ = "0.1.0"

__all__ = [
    "CavityParams",
    "CovarianceMatrix",
    "ModeLayout",
    "PumpConfig",
    "PumpTone",
    "Units",
    "convert_units",
    "symplectic_form",
    "__version__",
]
