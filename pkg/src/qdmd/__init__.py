"""Data-driven identification of bilinear quantum control dynamics.

The functional core lives in :mod:`qdmd.bloch`, :mod:`qdmd.simulator`,
:mod:`qdmd.dmd`, :mod:`qdmd.floquet`, :mod:`qdmd.aht` and
:mod:`qdmd.magnus`; :mod:`qdmd.estimators` wraps the fits in a
scikit-learn style interface.
"""

__version__ = "0.1.0"

from .aht import aht_bidmd_fit, build_library, fit_fourier_coefficients
from .bloch import (
    build_basis,
    bloch_to_density,
    density_to_bloch,
    structure_constants,
    vectorize_dissipator,
    vectorize_hamiltonian,
)
from .dmd import bidmd_fit, bidmd_predict, dmd_fit, dmd_predict, dmdc_fit, resonance_estimate
from .estimators import AHTBiDMD, DMD, BiDMD, DMDc, FloquetDMD, PolynomialControlFeatures
from .exceptions import QDMDError
from .floquet import floquet_dmd_fit, floquet_predict, reshape_stroboscopic
from .magnus import magnus_floquet_analytic, magnus_floquet_numeric
from .simulator import add_noise, integrate_bilinear, propagator

__all__ = [
    "AHTBiDMD",
    "BiDMD",
    "DMD",
    "DMDc",
    "FloquetDMD",
    "PolynomialControlFeatures",
    "QDMDError",
    "add_noise",
    "aht_bidmd_fit",
    "bidmd_fit",
    "bidmd_predict",
    "bloch_to_density",
    "build_basis",
    "build_library",
    "density_to_bloch",
    "dmd_fit",
    "dmd_predict",
    "dmdc_fit",
    "fit_fourier_coefficients",
    "floquet_dmd_fit",
    "floquet_predict",
    "integrate_bilinear",
    "magnus_floquet_analytic",
    "magnus_floquet_numeric",
    "propagator",
    "reshape_stroboscopic",
    "resonance_estimate",
    "structure_constants",
    "vectorize_dissipator",
    "vectorize_hamiltonian",
]
