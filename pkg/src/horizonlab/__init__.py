"""Black-hole evaporation as a discrete, information-preserving process.

Tunneling spectra with exact backreaction, full evaporation cascades,
functional-equation checks on candidate rate kernels, Haar-random
evaporation at small dimension and the su(2) algebra of spin emission.
"""
__version__ = "0.1.0"

from .nohair import (  # noqa: E402
    KERR_NEWMAN,
    SCHWARZSCHILD,
    ChannelForbidden,
    EntropyModel,
    InvalidState,
    NoHairVector,
    ParticleTriple,
    Units,
    daughter,
    entropy,
    irreducible_mass,
    irreducible_mass_mqj,
)
from .tunneling import ChannelGrid, EmissionSpectrum, log_tunneling_weight, spectrum  # noqa: E402
from .cascade import CascadeConfig, RadiationStream, run_cascade, stream_log_weight  # noqa: E402
from .rng import stream  # noqa: E402
