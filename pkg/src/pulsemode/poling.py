"""Domain engineering of a quasi-phase-matched crystal.

Positions are in mm, momentum mismatch in rad/mm.  A crystal of length ``L``
is split into ``N = L / l`` domains of width ``l`` (the coherence length);
each domain has ferroelectric orientation +1 or -1.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .spectral import FrequencyGrid, PmfKind, PmfProfile, SupportError


@dataclass(frozen=True)
class CrystalSpec:
    length_L: float
    domain_width_l: float
    sigma_x: float

    def __post_init__(self):
        if not (self.length_L > 0 and self.domain_width_l > 0 and self.sigma_x > 0):
            raise ValueError("crystal length, domain width and sigma_x must be positive")
        ratio = self.length_L / self.domain_width_l
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError(
                f"L/l = {ratio} is not an integer; use CrystalSpec.from_nominal to adjust l")

    @classmethod
    def from_nominal(cls, length_L: float, nominal_width: float, sigma_x: Optional[float] = None):
        """Adjust the domain width to ``L / round(L / nominal_width)``."""
        n = max(1, int(round(length_L / nominal_width)))
        return cls(length_L, length_L / n, length_L / 5.0 if sigma_x is None else sigma_x)

    @property
    def n_domains(self) -> int:
        return int(round(self.length_L / self.domain_width_l))

    @property
    def dk0(self) -> float:
        return np.pi / self.domain_width_l

    @property
    def boundaries(self) -> np.ndarray:
        return np.arange(self.n_domains + 1) * self.domain_width_l

    @property
    def step_magnitude(self) -> float:
        """|contribution| of one domain to the PMF at dk0, i.e. 2 l / pi."""
        return 2.0 * self.domain_width_l / np.pi


@dataclass(frozen=True)
class DomainSequence:
    signs: np.ndarray
    spec: CrystalSpec

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=np.int8)
        if signs.ndim != 1 or signs.size != self.spec.n_domains:
            raise ValueError(f"expected {self.spec.n_domains} signs, got {signs.size}")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("domain signs must be +1 or -1")
        signs.setflags(write=False)
        object.__setattr__(self, "signs", signs)

    def __len__(self):
        return self.signs.size

    def accumulated(self) -> np.ndarray:
        """Running PMF amplitude at dk0 at every domain boundary (length N+1)."""
        steps = self.signs * domain_steps(self.spec)
        return np.concatenate([[0.0], np.cumsum(steps)])


@dataclass(frozen=True)
class LinearDispersion:
    """``dk - dk0 = kappa * (ws - wi)``; kappa in (rad/mm) per (rad/ps)."""

    kappa: float
    dk0: float

    def __post_init__(self):
        if self.kappa == 0 or not np.isfinite(self.kappa):
            raise ValueError("kappa must be finite and non-zero")

    @classmethod
    def matched(cls, spec: CrystalSpec, sigma: float) -> "LinearDispersion":
        """kappa that gives the crystal PMF a frequency half-width of ``sigma``."""
        return cls(1.0 / (spec.sigma_x * sigma), spec.dk0)


def _check_inside(x, spec: CrystalSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > spec.length_L):
        raise ValueError(f"position outside crystal [0, {spec.length_L}] mm")
    return x


def target_nonlinearity(x, spec: CrystalSpec):
    x = _check_inside(x, spec)
    u = x - spec.length_L / 2
    return 1j * np.exp(-u ** 2 / (2 * spec.sigma_x ** 2)) * np.exp(1j * spec.dk0 * x) * u


def target_tracking(x, spec: CrystalSpec):
    """Closed-form target PMF amplitude at dk0 accumulated up to ``x``."""
    x = _check_inside(x, spec)
    L, s = spec.length_L, spec.sigma_x
    prefactor = 2 * np.sqrt(np.e) / (np.pi * s)
    return (-1j * prefactor * np.exp(-(L ** 2 + 4 * x ** 2) / (8 * s ** 2))
            * (np.exp(x ** 2 / (2 * s ** 2)) - np.exp(L * x / (2 * s ** 2))) * s ** 2)


def domain_steps(spec: CrystalSpec) -> np.ndarray:
    """``-i * int_{x_j}^{x_j + l} exp(i dk0 x) dx`` for each domain (real, +-2l/pi)."""
    x = spec.boundaries
    k = spec.dk0
    return (-1j * (np.exp(1j * k * x[1:]) - np.exp(1j * k * x[:-1])) / (1j * k)).real


def aligned_target(spec: CrystalSpec) -> Callable[[np.ndarray], np.ndarray]:
    # The closed form is purely imaginary while the domain steps are real;
    # a global factor i puts both in the same frame.
    return lambda x: 1j * target_tracking(x, spec)


def track_domains(spec: CrystalSpec, target: Optional[Callable] = None) -> DomainSequence:
    """Greedy orientation choice tracking ``target`` at every domain boundary.

    ``target(x)`` must be expressed in the frame of :func:`domain_steps`; the
    default is the phase-aligned closed-form tracking function.  Ties go to +1.
    """
    target = aligned_target(spec) if target is None else target
    steps = domain_steps(spec)
    goals = np.asarray(target(spec.boundaries[1:]), dtype=complex)
    signs = np.empty(spec.n_domains, dtype=np.int8)
    acc = 0.0 + 0.0j
    for j, (step, goal) in enumerate(zip(steps, goals)):
        up, down = acc + step, acc - step
        if abs(up - goal) <= abs(down - goal):
            signs[j], acc = 1, up
        else:
            signs[j], acc = -1, down
    return DomainSequence(signs, spec)


def pmf_from_domains(seq: DomainSequence, dk_axis, chunk: int = 512) -> np.ndarray:
    """Exact PMF ``-i int g(x) exp(i dk x) dx`` of a piecewise-constant +-1 profile."""
    dk = np.atleast_1d(np.asarray(dk_axis, dtype=float))
    if dk.size == 0 or not np.all(np.isfinite(dk)):
        raise ValueError("dk axis must be finite and non-empty")
    x = seq.spec.boundaries
    width = seq.spec.domain_width_l
    signs = seq.signs.astype(float)
    out = np.empty(dk.size, dtype=complex)
    for start in range(0, dk.size, chunk):
        k = dk[start:start + chunk, None]
        phase = np.exp(1j * k * x[None, :])
        small = np.abs(k) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            per_domain = np.where(small, width + 0j, (phase[:, 1:] - phase[:, :-1]) / (1j * k))
        out[start:start + chunk] = -1j * (per_domain @ signs)
    return out


def pmf_to_frequency(samples, dk_axis, disp: LinearDispersion, grid: FrequencyGrid,
                     sigma: Optional[float] = None) -> PmfProfile:
    """Resample a PMF over dk onto ``ws - wi`` through ``disp``.

    ``sigma`` is informational for sampled profiles; by default it is the
    width of an HG1-Gaussian with the same second moment of |PMF|^2.
    """
    samples = np.asarray(samples, dtype=complex)
    dk_axis = np.asarray(dk_axis, dtype=float)
    diff = (dk_axis - disp.dk0) / disp.kappa
    order = np.argsort(diff)
    diff, samples = diff[order], samples[order]
    span = grid.span
    offset = grid.center_s - grid.center_i
    lo, hi = offset - span, offset + span
    if lo < diff[0] or hi > diff[-1]:
        raise SupportError(
            f"grid needs ws-wi in [{lo:.4g}, {hi:.4g}] but samples cover "
            f"[{diff[0]:.4g}, {diff[-1]:.4g}]")
    if sigma is None:
        weight = np.abs(samples) ** 2
        mean = np.sum(weight * diff) / np.sum(weight)
        second = np.sum(weight * (diff - mean) ** 2) / np.sum(weight)
        sigma = float(np.sqrt(2.0 * second / 3.0))
    return PmfProfile(PmfKind.FROM_DOMAINS, sigma=sigma, samples=samples, axis=diff)


def write_domains(seq: DomainSequence, path) -> None:
    lines = [f"L_mm={seq.spec.length_L:.17g}", f"l_mm={seq.spec.domain_width_l:.17g}"]
    lines += [f"{int(s):+d}" for s in seq.signs]
    Path(path).write_text("\n".join(lines) + "\n")


def read_domains(path, sigma_x: Optional[float] = None) -> DomainSequence:
    header = {}
    signs = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if "=" in line:
            key, value = line.split("=", 1)
            header[key.strip()] = float(value)
        else:
            signs.append(int(line))
    length = header["L_mm"]
    spec = CrystalSpec(length, header["l_mm"], length / 5.0 if sigma_x is None else sigma_x)
    return DomainSequence(np.array(signs), spec)


def write_pmf_csv(dk_axis, samples, path) -> None:
    samples = np.asarray(samples, dtype=complex)
    with open(path, "w") as fh:
        fh.write("dk,re,im\n")
        for k, v in zip(np.asarray(dk_axis, dtype=float), samples):
            fh.write(f"{k:.17g},{v.real:.17g},{v.imag:.17g}\n")
