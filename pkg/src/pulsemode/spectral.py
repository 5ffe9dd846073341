"""Frequency grids, joint spectral amplitudes and the analytic pump/PMF profiles.

All frequencies are detunings from degeneracy in rad/ps.  A joint amplitude
``f(ws, wi)`` is stored as an ``n x n`` complex matrix whose first index runs
over the signal axis and second over the idler axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

MIN_POINTS = 16


class GridError(ValueError):
    """Grid parameters are invalid or the grid cannot host the requested field."""


class SupportError(ValueError):
    """The sampled field does not fit (or does not appear) on the grid."""


@dataclass(frozen=True)
class FrequencyGrid:
    center_s: float
    center_i: float
    span: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.span) or self.span <= 0:
            raise GridError(f"span must be positive, got {self.span}")
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise GridError(f"n_points must be an integer >= {MIN_POINTS}, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return self.span / (self.n_points - 1)

    @property
    def offsets(self) -> np.ndarray:
        # shared by both axes so that spacing is bit-identical
        return np.linspace(-self.span / 2, self.span / 2, self.n_points)

    @property
    def axis_s(self) -> np.ndarray:
        return self.center_s + self.offsets

    @property
    def axis_i(self) -> np.ndarray:
        return self.center_i + self.offsets

    @property
    def exchange_symmetric(self) -> bool:
        return self.center_s == self.center_i

    def mesh(self):
        """Return ``(ws, wi)`` broadcastable as column/row vectors."""
        return self.axis_s[:, None], self.axis_i[None, :]

    def header(self) -> str:
        return (f"center_s={self.center_s:.17g} center_i={self.center_i:.17g} "
                f"span={self.span:.17g} n_points={self.n_points}")


def make_grid(center_s: float, center_i: float, span: float, n_points: int) -> FrequencyGrid:
    return FrequencyGrid(float(center_s), float(center_i), float(span), int(n_points))


@dataclass(frozen=True)
class JointAmplitude:
    grid: FrequencyGrid
    values: np.ndarray
    norm_tolerance: float = 1e-10

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        n = self.grid.n_points
        if values.shape != (n, n):
            raise GridError(f"values shape {values.shape} does not match grid ({n}, {n})")
        if not np.all(np.isfinite(values)):
            raise ValueError("joint amplitude has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def norm(self) -> float:
        """Riemann-sum L2 norm with ``spacing**2`` as the area element."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)) * self.grid.spacing)

    def is_normalized(self, tol: Optional[float] = None) -> bool:
        tol = self.norm_tolerance if tol is None else tol
        return abs(self.norm - 1.0) <= tol

    def normalize(self) -> "JointAmplitude":
        nrm = self.norm
        if nrm == 0.0:
            raise SupportError("cannot normalize an all-zero field")
        return JointAmplitude(self.grid, self.values / nrm, self.norm_tolerance)

    def inner(self, other: "JointAmplitude") -> complex:
        """<self|other> on the shared grid."""
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        return complex(np.vdot(self.values, other.values) * self.grid.spacing ** 2)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2


class PumpShape(str, Enum):
    GAUSSIAN = "gaussian"
    SECH2 = "sech2"


@dataclass(frozen=True)
class PumpProfile:
    """Pump envelope as a function of ``ws + wi``.

    ``gaussian`` is ``exp(-(x - center)^2 / (2 sigma_p^2))``; ``sech2`` is the
    amplitude ``sech((x - center) / sigma_p)`` whose intensity is sech^2.
    """

    shape: PumpShape = PumpShape.GAUSSIAN
    sigma_p: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", PumpShape(self.shape))
        if not self.sigma_p > 0:
            raise ValueError(f"sigma_p must be positive, got {self.sigma_p}")

    def __call__(self, total: np.ndarray) -> np.ndarray:
        x = (np.asarray(total, dtype=float) - self.center) / self.sigma_p
        if self.shape is PumpShape.GAUSSIAN:
            return np.exp(-0.5 * x ** 2)
        return 1.0 / np.cosh(x)

    def intensity_fwhm(self) -> float:
        if self.shape is PumpShape.GAUSSIAN:
            return 2.0 * self.sigma_p * np.sqrt(np.log(2.0))
        return 2.0 * self.sigma_p * np.arccosh(np.sqrt(2.0))


def sech2_matching(pump: PumpProfile) -> PumpProfile:
    """sech^2 pump with the same intensity FWHM as ``pump``."""
    sigma_p = pump.intensity_fwhm() / (2.0 * np.arccosh(np.sqrt(2.0)))
    return PumpProfile(PumpShape.SECH2, sigma_p, pump.center)


class PmfKind(str, Enum):
    HG1_GAUSSIAN = "hg1_gaussian"
    FROM_DOMAINS = "from_domains"


@dataclass(frozen=True)
class PmfProfile:
    """Phase-matching function as a function of ``ws - wi``.

    The analytic kind is ``(d - mu) exp(-(d - mu)^2 / (2 sigma^2))``.  The
    sampled kind interpolates ``samples`` linearly on the increasing ``axis``
    (both in rad/ps of ``ws - wi``) and is zero outside it.
    """

    kind: PmfKind = PmfKind.HG1_GAUSSIAN
    sigma: float = 1.0
    detuning_mu: float = 0.0
    samples: Optional[np.ndarray] = field(default=None, repr=False)
    axis: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", PmfKind(self.kind))
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kind is PmfKind.FROM_DOMAINS:
            if self.samples is None or self.axis is None:
                raise ValueError("from_domains PMF needs samples and axis")
            axis = np.asarray(self.axis, dtype=float)
            samples = np.asarray(self.samples, dtype=complex)
            if axis.ndim != 1 or axis.shape != samples.shape:
                raise ValueError("samples and axis must be 1-D of equal length")
            if np.any(np.diff(axis) <= 0):
                raise ValueError("PMF sample axis must be strictly increasing")
            object.__setattr__(self, "axis", axis)
            object.__setattr__(self, "samples", samples)

    def __call__(self, diff: np.ndarray) -> np.ndarray:
        diff = np.asarray(diff, dtype=float)
        if self.kind is PmfKind.HG1_GAUSSIAN:
            d = diff - self.detuning_mu
            return d * np.exp(-d ** 2 / (2.0 * self.sigma ** 2))
        d = diff - self.detuning_mu
        re = np.interp(d, self.axis, self.samples.real, left=0.0, right=0.0)
        im = np.interp(d, self.axis, self.samples.imag, left=0.0, right=0.0)
        return re + 1j * im


def assemble_jsa(pump: PumpProfile, pmf: PmfProfile, grid: FrequencyGrid) -> JointAmplitude:
    ws, wi = grid.mesh()
    values = pump(ws + wi) * pmf(ws - wi)
    if not np.any(values):
        raise SupportError("pump x PMF vanishes everywhere on the grid")
    return JointAmplitude(grid, values).normalize()


def ideal_singlet_jsa(sigma: float, grid: FrequencyGrid) -> JointAmplitude:
    """Normalized ``exp(-(ws^2 + wi^2)/sigma^2) (ws - wi)``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if grid.span < 4.0 * sigma:
        raise GridError(f"grid span {grid.span} < 4 sigma = {4.0 * sigma}: insufficient support")
    ws, wi = grid.mesh()
    values = np.exp(-(ws ** 2 + wi ** 2) / sigma ** 2) * (ws - wi)
    return JointAmplitude(grid, values).normalize()


def exchange_transpose(f: JointAmplitude) -> JointAmplitude:
    """Swap signal and idler arguments: ``f(ws, wi) -> f(wi, ws)``."""
    if not f.grid.exchange_symmetric:
        raise GridError("exchange needs center_s == center_i")
    return JointAmplitude(f.grid, f.values.T.copy(), f.norm_tolerance)


def hermite_gauss_modes(sigma: float, axis: np.ndarray, spacing: float):
    """Grid-normalized ``exp(-w^2/sigma^2)`` and ``w exp(-w^2/sigma^2)``."""
    axis = np.asarray(axis, dtype=float)
    envelope = np.exp(-axis ** 2 / sigma ** 2)
    u = envelope.astype(complex)
    v = (axis * envelope).astype(complex)
    u /= np.linalg.norm(u) * np.sqrt(spacing)
    v /= np.linalg.norm(v) * np.sqrt(spacing)
    return u, v


def edge_fraction(f: JointAmplitude) -> float:
    """Largest boundary modulus relative to the field's peak modulus."""
    a = np.abs(f.values)
    peak = a.max()
    if peak == 0:
        return 0.0
    edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())
    return float(edge / peak)


def write_jsa_csv(f: JointAmplitude, path) -> None:
    """Grid header line, then ``omega_s,omega_i,re,im`` rows (idler index fastest)."""
    ws, wi = f.grid.axis_s, f.grid.axis_i
    with open(path, "w") as fh:
        fh.write(f"# {f.grid.header()}\n")
        fh.write("omega_s,omega_i,re,im\n")
        for a, s in enumerate(ws):
            row = f.values[a]
            for b, i in enumerate(wi):
                z = row[b]
                fh.write(f"{s:.17g},{i:.17g},{z.real:.17g},{z.imag:.17g}\n")


def read_jsa_csv(path) -> JointAmplitude:
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
        fields = dict(item.split("=", 1) for item in header)
        grid = make_grid(float(fields["center_s"]), float(fields["center_i"]),
                         float(fields["span"]), int(fields["n_points"]))
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    n = grid.n_points
    values = (data[:, 2] + 1j * data[:, 3]).reshape(n, n)
    return JointAmplitude(grid, values)


def write_intensity_csv(grid: FrequencyGrid, intensity: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {grid.header()}\n")
        fh.write("omega_s,omega_i,intensity\n")
        for a, s in enumerate(grid.axis_s):
            for b, i in enumerate(grid.axis_i):
                fh.write(f"{s:.17g},{i:.17g},{float(intensity[a, b]):.17g}\n")
