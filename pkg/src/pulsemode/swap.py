"""Bell-basis spectra and entanglement swapping between two singlet sources."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .interference import HomTrace, closed_form_singlet, hom_trace, visibility
from .spectral import FrequencyGrid, JointAmplitude, hermite_gauss_modes, make_grid


class BellLabel(str, Enum):
    PSI_MINUS = "psi_minus"
    PSI_PLUS = "psi_plus"
    PHI_MINUS = "phi_minus"
    PHI_PLUS = "phi_plus"


_R = 1 / np.sqrt(2.0)
# coefficient matrices C[j, k] of u_j(ws) v_k(wi) with (u_0, u_1) = (HG0, HG1);
# psi_minus carries the global sign of exp(-(ws^2+wi^2)/sigma^2) (ws - wi)
BELL_COEFFS = {
    BellLabel.PSI_MINUS: _R * np.array([[0.0, -1.0], [1.0, 0.0]]),
    BellLabel.PSI_PLUS: _R * np.array([[0.0, 1.0], [1.0, 0.0]]),
    BellLabel.PHI_MINUS: _R * np.array([[1.0, 0.0], [0.0, -1.0]]),
    BellLabel.PHI_PLUS: _R * np.array([[1.0, 0.0], [0.0, 1.0]]),
}

#: order of SwapModel.mixture_weights
WEIGHT_ORDER = (BellLabel.PHI_PLUS, BellLabel.PHI_MINUS, BellLabel.PSI_PLUS, BellLabel.PSI_MINUS)

#: two-pair emission probability of one source in units of (pair probability)^2.
#: Fixed from the photon-number enumeration in :mod:`pulsemode.fock` for a
#: source with two equally weighted Schmidt modes: (1 + 1/K) / 2 at K = 2.
DOUBLE_PAIR_FACTOR = 0.75


def _coeff_field(coeffs, sigma_s, sigma_i, grid: FrequencyGrid) -> JointAmplitude:
    d = grid.spacing
    us = hermite_gauss_modes(sigma_s, grid.axis_s, d)
    ui = hermite_gauss_modes(sigma_i, grid.axis_i, d)
    values = sum(coeffs[j, k] * np.outer(us[j], ui[k]) for j in range(2) for k in range(2))
    return JointAmplitude(grid, values).normalize()


def bell_jsa(label, sigma: float, grid: FrequencyGrid, sigma_idler: Optional[float] = None):
    label = BellLabel(label)
    return _coeff_field(BELL_COEFFS[label], sigma, sigma if sigma_idler is None else sigma_idler,
                        grid)


def bs_projection_pcc0(label, sigma: float = 1.0, grid: Optional[FrequencyGrid] = None) -> float:
    grid = make_grid(0.0, 0.0, 12.0 * sigma, 256) if grid is None else grid
    return float(hom_trace(bell_jsa(label, sigma, grid), [0.0]).p_cc[0])


def swap_branches(source_a=None, source_b=None) -> dict:
    """Project the inner photons of two pair sources onto each Bell state.

    Sources are 2x2 mode-coefficient matrices (default: the singlet).  The
    four-photon state is ``A[x, p] B[q, y]`` with x, p the outer/inner photon
    of source A and q, y the inner/outer photon of source B.  Returns
    ``{label: (probability, normalized C[x, y] of the outer photons)}``.
    """
    a = BELL_COEFFS[BellLabel.PSI_MINUS] if source_a is None else np.asarray(source_a, complex)
    b = BELL_COEFFS[BellLabel.PSI_MINUS] if source_b is None else np.asarray(source_b, complex)
    out = {}
    for label, beta in BELL_COEFFS.items():
        c = a @ np.conj(beta) @ b
        prob = float(np.sum(np.abs(c) ** 2))
        out[label] = (prob, c / np.sqrt(prob) if prob > 0 else c)
    return out


def swapped_jsa(label, sigma: float, grid: FrequencyGrid) -> JointAmplitude:
    """JSA of the outer photons after the inner pair is projected on ``label``."""
    _, c = swap_branches()[BellLabel(label)]
    return _coeff_field(c, sigma, sigma, grid)


@dataclass(frozen=True)
class SwapModel:
    source_sigma_a: float = 1.0
    source_sigma_b: float = 1.0
    pair_prob_a: float = 0.01
    pair_prob_b: float = 0.01
    mixture_weights: Sequence[float] = (1.0, 1.0, 1.0, 2.0)

    def __post_init__(self):
        for p in (self.pair_prob_a, self.pair_prob_b):
            if not 0.0 < p < 1.0:
                raise ValueError(f"pair probabilities must lie in (0, 1), got {p}")
        if not (self.source_sigma_a > 0 and self.source_sigma_b > 0):
            raise ValueError("source widths must be positive")
        w = np.asarray(self.mixture_weights, dtype=float)
        if w.shape != (4,) or np.any(w < 0) or w.sum() == 0:
            raise ValueError("mixture_weights must be four non-negative numbers")
        object.__setattr__(self, "mixture_weights", tuple(w / w.sum()))

    @property
    def background_ratio(self) -> float:
        """Double-pair background over the genuine four-fold amplitude G."""
        pa, pb = self.pair_prob_a, self.pair_prob_b
        return DOUBLE_PAIR_FACTOR * (pa / pb + pb / pa)

    @property
    def genuine_rate(self) -> float:
        # both pairs emitted (pa pb) and the inner photons project on the singlet (1/4)
        return 0.25 * self.pair_prob_a * self.pair_prob_b

    @property
    def intrinsic_visibility(self) -> float:
        """Singlet contrast of outer photons built from HG modes of unequal width."""
        sa, sb = self.source_sigma_a, self.source_sigma_b
        return float((2 * sa * sb / (sa ** 2 + sb ** 2)) ** 2)


def mixed_jsi(model: SwapModel, grid: FrequencyGrid) -> np.ndarray:
    total = np.zeros((grid.n_points, grid.n_points))
    for w, label in zip(model.mixture_weights, WEIGHT_ORDER):
        if w:
            f = bell_jsa(label, model.source_sigma_a, grid, model.source_sigma_b)
            total += w * f.intensity
    return total


def fourfold_trace(model: SwapModel, delays=None, intrinsic_visibility: Optional[float] = None,
                   background_ratio: Optional[float] = None,
                   subtract_background: bool = False) -> HomTrace:
    sigma = float(np.sqrt(0.5 * (model.source_sigma_a ** 2 + model.source_sigma_b ** 2)))
    if delays is None:
        delays = np.linspace(-20.0 / sigma, 20.0 / sigma, 401)
    vis = model.intrinsic_visibility if intrinsic_visibility is None else intrinsic_visibility
    ratio = model.background_ratio if background_ratio is None else background_ratio
    shape = 0.5 + vis * (closed_form_singlet(sigma, delays).p_cc - 0.5)
    G = model.genuine_rate
    rate = G * shape + (0.0 if subtract_background else G * ratio)
    return HomTrace(np.asarray(delays, dtype=float), rate)


def raw_visibility(model: SwapModel, **kwargs) -> float:
    """Visibility of the simulated four-fold interference trace.

    Keyword arguments are passed to :func:`fourfold_trace`
    (``background_ratio=0`` switches off higher-order emission,
    ``subtract_background=True`` mimics the blocked-source correction).
    """
    return visibility(fourfold_trace(model, **kwargs))


def downsample(intensity: np.ndarray, size: int = 64) -> np.ndarray:
    n = intensity.shape[0]
    if n < size:
        raise ValueError(f"cannot down-sample {n} points to {size}")
    b = n // size
    a = intensity[: b * size, : b * size]
    return a.reshape(size, b, size, b).mean(axis=(1, 3))


def local_maxima(intensity: np.ndarray, size: int = 64, rel_floor: float = 1e-3):
    """Strict 3x3 local maxima after block-averaging to ``size x size``.

    Returns ``(row, col, value)`` tuples in the down-sampled frame, brightest
    first; maxima below ``rel_floor`` times the peak are ignored.
    """
    a = downsample(np.asarray(intensity, dtype=float), size)
    padded = np.pad(a, 1, constant_values=-np.inf)
    centre = padded[1:-1, 1:-1]
    strict = np.ones_like(a, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == dc == 0:
                continue
            strict &= centre > padded[1 + dr:padded.shape[0] - 1 + dr,
                                      1 + dc:padded.shape[1] - 1 + dc]
    strict &= a >= rel_floor * a.max()
    rows, cols = np.nonzero(strict)
    peaks = [(int(r), int(c), float(a[r, c])) for r, c in zip(rows, cols)]
    return sorted(peaks, key=lambda t: -t[2])


def write_report(values: dict, path) -> None:
    with open(path, "w") as fh:
        for k, v in values.items():
            fh.write(f"{k}={v:.17g}\n")
