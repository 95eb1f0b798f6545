"""Two-stage exact reduction of a finite-element von Karman beam.

Stage one enslaves the stiff axial unknowns to the transverse ones
(slow-fast decomposition); stage two reduces the slow model further to a
single-mode spectral submanifold with cubic-order reduced dynamics.
"""

from .config import BeamConfig, ConfigError, ForcingSpec, derived_zeta, load_config, parse_config_text
from .fem import AssembledBeam, assemble

__version__ = "0.1.0"

__all__ = [
    "AssembledBeam",
    "BeamConfig",
    "ConfigError",
    "ForcingSpec",
    "assemble",
    "derived_zeta",
    "load_config",
    "parse_config_text",
    "__version__",
]
