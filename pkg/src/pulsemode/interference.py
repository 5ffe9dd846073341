"""Two-photon (Hong-Ou-Mandel) interference of joint spectral amplitudes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .schmidt import decompose, schmidt_number
from .spectral import (FrequencyGrid, GridError, JointAmplitude, PmfProfile, PumpProfile,
                       SupportError, assemble_jsa, edge_fraction, exchange_transpose)

#: relative edge modulus above which a field counts as clipped by the grid
CLIP_TOLERANCE = 1e-6


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class HomTrace:
    delays: np.ndarray
    p_cc: np.ndarray

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float)
        p_cc = np.asarray(self.p_cc, dtype=float)
        if delays.ndim != 1 or delays.shape != p_cc.shape:
            raise ValueError("delays and p_cc must be 1-D arrays of equal length")
        if delays.size > 1 and np.any(np.diff(delays) <= 0):
            raise ValueError("delays must be strictly increasing")
        if np.any(p_cc < -1e-9) or np.any(p_cc > 1 + 1e-9):
            raise ValueError("coincidence probabilities must lie in [0, 1]")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "p_cc", p_cc)


def _require_exchange(f: JointAmplitude):
    if not f.grid.exchange_symmetric:
        raise GridError("two-photon interference needs center_s == center_i")


def exchange_overlap(f: JointAmplitude, delays) -> np.ndarray:
    """``iint f*(ws, wi) f(wi, ws) exp(i (wi - ws) dt)`` for every delay."""
    _require_exchange(f)
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    g = np.conj(f.values) * f.values.T
    w = f.grid.axis_s
    left = np.exp(-1j * np.outer(delays, w))
    right = np.exp(1j * np.outer(delays, w))
    return np.einsum("mi,mi->m", left @ g, right) * f.grid.spacing ** 2


def hom_trace(f: JointAmplitude, delays) -> HomTrace:
    overlap = exchange_overlap(f, delays)
    scale = max(1.0, float(np.max(np.abs(overlap.real))))
    if np.max(np.abs(overlap.imag)) > 1e-9 * scale:
        raise ArithmeticError("exchange integral has a non-negligible imaginary part")
    return HomTrace(np.atleast_1d(np.asarray(delays, dtype=float)), 0.5 - 0.5 * overlap.real)


def closed_form_singlet(sigma: float, delays) -> HomTrace:
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    x = (sigma * delays) ** 2
    return HomTrace(delays, 0.5 - 0.25 * np.exp(-x / 4) * (x - 2))


@dataclass(frozen=True)
class SymmetrySplit:
    """``f = gamma f_sym + delta f_anti`` with unit-norm parts.

    A part that vanishes identically is returned as a zero field with its
    ``has_*`` flag cleared and its amplitude set to 0.
    """

    gamma: complex
    delta: complex
    f_sym: JointAmplitude
    f_anti: JointAmplitude
    has_sym: bool = True
    has_anti: bool = True


def symmetry_split(f: JointAmplitude, tol: float = 1e-14) -> SymmetrySplit:
    ft = exchange_transpose(f).values
    parts = []
    for combo in (f.values + ft, f.values - ft):
        field = JointAmplitude(f.grid, 0.5 * combo)
        amp = field.norm
        if amp <= tol:
            parts.append((0.0j, JointAmplitude(f.grid, np.zeros_like(combo)), False))
        else:
            parts.append((complex(amp), field.normalize(), True))
    (gamma, fs, has_s), (delta, fa, has_a) = parts
    return SymmetrySplit(gamma, delta, fs, fa, has_s, has_a)


def visibility(trace: HomTrace, center: float = 0.0, flat_tol: float = 1e-12) -> float:
    """Contrast of the interference feature relative to the baseline.

    The baseline is the mean of the outermost 10% of delay samples; the
    feature value is the trace at ``center`` (linearly interpolated).  A
    peak gives ``(p - base)/base``, a dip ``(base - p)/base``.
    """
    p = trace.p_cc
    n = p.size
    k = max(1, int(round(0.05 * n)))
    base = float(np.mean(np.concatenate([p[:k], p[-k:]])))
    value = float(np.interp(center, trace.delays, p))
    if base <= 0 or abs(value - base) <= flat_tol:
        return 0.0
    if value > base:
        return (value - base) / base
    return (base - value) / base


def singlet_model(delays, sigma, vis, t0):
    x = (sigma * (np.asarray(delays) - t0)) ** 2
    return 0.5 - 0.25 * vis * np.exp(-x / 4) * (x - 2)


@dataclass(frozen=True)
class SingletFit:
    sigma: float
    visibility: float
    t0: float
    residual: float
    stderr: np.ndarray
    nfev: int


def fit_singlet_trace(data, uncertainties: Optional[Sequence[float]] = None,
                      max_iter: int = 200, step_tol: float = 1e-10,
                      sigma_range=None, n_coarse: int = 60) -> SingletFit:
    """Least-squares fit of the scaled singlet trace.

    A coarse (sigma, t0) grid search, with the visibility solved linearly at
    each node, seeds a bounded trust-region refinement of all three
    parameters.  ``stderr`` holds 1-sigma parameter errors from the Jacobian
    (scaled by the reduced chi^2 unless ``uncertainties`` are given).
    ``data`` is a :class:`HomTrace` or a ``(delays, values)`` pair; the latter
    admits noisy estimates that stray outside [0, 1].
    """
    if isinstance(data, HomTrace):
        t, p = data.delays, data.p_cc
    else:
        t, p = (np.asarray(a, dtype=float) for a in data)
    if t.size < 10:
        raise ValueError("need at least 10 delay points")
    w = np.ones_like(p) if uncertainties is None else 1.0 / np.asarray(uncertainties, float)
    extent = t[-1] - t[0]
    dt_min = np.min(np.diff(t))
    if sigma_range is None:
        sigma_range = (2.0 / extent, 2.0 / dt_min)
    sigmas = np.geomspace(*sigma_range, n_coarse)
    t0s = np.linspace(t[0] + 0.25 * extent, t[-1] - 0.25 * extent, n_coarse)
    y = (p - 0.5) * w
    best = (np.inf, None)
    for s in sigmas:
        for c in t0s:
            x = (s * (t - c)) ** 2
            h = -0.25 * np.exp(-x / 4) * (x - 2) * w
            hh = h @ h
            if hh == 0:
                continue
            v = (h @ y) / hh
            cost = np.sum((y - v * h) ** 2)
            if cost < best[0]:
                best = (cost, (s, v, c))

    def resid(theta):
        return (singlet_model(t, *theta) - p) * w

    res = least_squares(resid, best[1], method="trf", x_scale="jac", max_nfev=max_iter,
                        xtol=step_tol, ftol=step_tol, gtol=step_tol)
    if res.status <= 0:
        raise ConvergenceError(f"singlet fit did not converge: {res.message}")
    dof = max(1, t.size - 3)
    jtj = res.jac.T @ res.jac
    cov = np.linalg.pinv(jtj)
    if uncertainties is None:
        cov = cov * (2 * res.cost / dof)
    sigma, vis, t0 = res.x
    return SingletFit(abs(float(sigma)), float(vis), float(t0), float(np.sqrt(2 * res.cost)),
                      np.sqrt(np.diag(cov)), int(res.nfev))


def detuned_jsa(sigma: float, mu: float, grid: FrequencyGrid) -> JointAmplitude:
    """Gaussian pump times an HG1-Gaussian PMF shifted by ``mu`` along ws - wi."""
    f = assemble_jsa(PumpProfile("gaussian", sigma), PmfProfile("hg1_gaussian", sigma, mu), grid)
    if edge_fraction(f) > CLIP_TOLERANCE:
        raise SupportError(f"detuning mu={mu} pushes the field off the grid")
    return f


@dataclass(frozen=True)
class DetuneRow:
    mu: float
    K: float
    pcc0: float
    V: float


def detune_scan(sigma: float, mu_list, grid: FrequencyGrid, delays) -> list:
    rows = []
    for mu in mu_list:
        f = detuned_jsa(sigma, float(mu), grid)
        K = schmidt_number(decompose(f))
        pcc0 = float(hom_trace(f, [0.0]).p_cc[0])
        V = visibility(hom_trace(f, delays))
        rows.append(DetuneRow(float(mu), K, pcc0, V))
    return rows


def write_trace_csv(trace: HomTrace, path) -> None:
    with open(path, "w") as fh:
        fh.write("dt_ps,pcc\n")
        for dt, p in zip(trace.delays, trace.p_cc):
            fh.write(f"{dt:.17g},{p:.17g}\n")


def write_scan_csv(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write("mu,K,pcc0,V\n")
        for r in rows:
            fh.write(f"{r.mu:.17g},{r.K:.17g},{r.pcc0:.17g},{r.V:.17g}\n")
