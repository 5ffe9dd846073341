"""Simulation of pulsed two-photon sources with engineered spectral modes."""
from __future__ import annotations

__version__ = "0.1.0"

from .spectral import (FrequencyGrid, GridError, JointAmplitude, PmfProfile, PumpProfile,
                       SupportError, assemble_jsa, exchange_transpose, ideal_singlet_jsa,
                       make_grid, sech2_matching)
from .poling import (CrystalSpec, DomainSequence, LinearDispersion, pmf_from_domains,
                     pmf_to_frequency, track_domains)
from .schmidt import NormalizationError, SchmidtDecomposition, decompose, schmidt_number
from .interference import (ConvergenceError, HomTrace, closed_form_singlet, detune_scan,
                           fit_singlet_trace, hom_trace, symmetry_split, visibility)
from .swap import BellLabel, SwapModel, bell_jsa, swap_branches, swapped_jsa
from .spectrometer import (CountMatrix, SpectrometerConfig, effective_jsa, mc_schmidt_error,
                           rebin, simulate_counts)

__all__ = [name for name in dir() if not name.startswith("_")]
