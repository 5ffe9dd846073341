"""Dispersive-fibre time-of-flight JSI measurement and Schmidt-number errors.

Frequency detunings are mapped to arrival-time offsets through the
calibrated wavelength-per-time scale; both photons sit at the same carrier,
so both axes share one map.  Time bins are indexed so that zero delay falls
at ``n_bins // 2``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import sparse

from .schmidt import schmidt_number, schmidt_weights
from .spectral import FrequencyGrid, JointAmplitude, make_grid

SPEED_OF_LIGHT_NM_PER_PS = 299792.458


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrometerConfig:
    scale_pm_per_ps: float = 2.94
    center_wavelength: float = 1550.0
    bin_ps: float = 1.0
    n_bins: int = 12250
    rebin_factor: int = 40
    total_counts: float = 2.8e6
    jitter_ps: float = 0.0

    def __post_init__(self):
        for name in ("scale_pm_per_ps", "center_wavelength", "bin_ps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_bins < 1 or self.rebin_factor < 1 or self.rebin_factor > self.n_bins:
            raise ValueError("need 1 <= rebin_factor <= n_bins")
        if self.total_counts < 0 or self.jitter_ps < 0:
            raise ValueError("total_counts and jitter_ps must be non-negative")

    @property
    def ps_per_rad_per_ps(self) -> float:
        """d(arrival time)/d(detuning); negative: redder photons arrive later."""
        lam = self.center_wavelength
        dlam_dw = -lam ** 2 / (2 * np.pi * SPEED_OF_LIGHT_NM_PER_PS)  # nm per rad/ps
        return dlam_dw * 1e3 / self.scale_pm_per_ps

    @property
    def spectral_range_nm(self) -> float:
        return self.n_bins * self.bin_ps * self.scale_pm_per_ps * 1e-3

    @property
    def window_ps(self) -> float:
        return self.n_bins * self.bin_ps


def wavelength_to_time(dlam_nm, config: SpectrometerConfig):
    """Arrival-time offset (ps) of a wavelength offset (nm): longer is later."""
    return np.asarray(dlam_nm, dtype=float) * 1e3 / config.scale_pm_per_ps


def frequency_to_time(omega, config: SpectrometerConfig):
    return np.asarray(omega, dtype=float) * config.ps_per_rad_per_ps


def frequency_to_time_axis(grid: FrequencyGrid, config: SpectrometerConfig):
    ts = frequency_to_time(grid.axis_s, config)
    ti = frequency_to_time(grid.axis_i, config)
    half = config.window_ps / 2
    reach = max(np.abs(ts).max(), np.abs(ti).max()) + abs(config.ps_per_rad_per_ps) * grid.spacing / 2
    if reach > half:
        raise RangeError(f"grid maps to +-{reach:.1f} ps, beyond the +-{half:.1f} ps window")
    return ts, ti


@dataclass(frozen=True)
class CountMatrix:
    """Coincidence histogram; rows are signal time bins, columns idler bins.

    ``counts`` is a dense integer array or, at full 1 ps resolution, a
    scipy sparse array.
    """

    counts: object
    bin_ps: float
    config: SpectrometerConfig
    dropped: int = 0

    def __post_init__(self):
        c = self.counts
        if sparse.issparse(c):
            if c.nnz and c.data.min() < 0:
                raise ValueError("counts must be non-negative")
        else:
            c = np.asarray(c)
            if c.ndim != 2 or (c.size and c.min() < 0):
                raise ValueError("counts must be a non-negative 2-D array")
            object.__setattr__(self, "counts", c.astype(np.int64))
        limit = self.config.window_ps + 1e-9
        if max(self.counts.shape) * self.bin_ps > limit:
            raise ValueError("matrix extends beyond the spectrometer window")

    @property
    def shape(self):
        return self.counts.shape

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def dense(self) -> np.ndarray:
        c = self.counts
        if not sparse.issparse(c):
            return c
        if c.shape[0] * c.shape[1] > 4096 ** 2:
            raise ValueError(f"refusing to densify a {c.shape} histogram; rebin it first")
        return np.asarray(c.toarray())


def _cell_probabilities(intensity: np.ndarray) -> np.ndarray:
    p = np.asarray(intensity, dtype=float)
    if np.any(p < 0):
        raise ValueError("intensity must be non-negative")
    s = p.sum()
    if s <= 0:
        raise ValueError("intensity is identically zero")
    return p / s


def simulate_counts(intensity, config: SpectrometerConfig, seed: int,
                    grid: Optional[FrequencyGrid] = None) -> CountMatrix:
    """Poisson-sampled coincidence histogram with ``total_counts`` expected events.

    With ``grid`` the intensity is read as a piecewise-constant density over
    the frequency cells; events are drawn cell by cell, placed uniformly
    inside their cell, optionally blurred by detector jitter and binned at
    ``bin_ps`` (sparse result).  Without ``grid`` each entry of ``intensity``
    is already one time bin and is sampled directly.
    """
    p = _cell_probabilities(intensity)
    rng = np.random.default_rng(seed)
    if grid is None:
        return CountMatrix(rng.poisson(config.total_counts * p), config.bin_ps, config)

    frequency_to_time_axis(grid, config)
    n = grid.n_points
    per_cell = rng.poisson(config.total_counts * p.ravel())
    cells = np.repeat(np.arange(p.size), per_cell)
    d = grid.spacing
    ws = grid.axis_s[cells // n] + (rng.random(cells.size) - 0.5) * d
    wi = grid.axis_i[cells % n] + (rng.random(cells.size) - 0.5) * d
    ts = frequency_to_time(ws, config)
    ti = frequency_to_time(wi, config)
    if config.jitter_ps > 0:
        ts = ts + rng.normal(0.0, config.jitter_ps, ts.size)
        ti = ti + rng.normal(0.0, config.jitter_ps, ti.size)
    nb = config.n_bins
    rows = np.floor(ts / config.bin_ps + nb / 2).astype(np.int64)
    cols = np.floor(ti / config.bin_ps + nb / 2).astype(np.int64)
    inside = (rows >= 0) & (rows < nb) & (cols >= 0) & (cols < nb)
    counts = sparse.coo_array((np.ones(int(inside.sum()), dtype=np.int64),
                               (rows[inside], cols[inside])), shape=(nb, nb)).tocsr()
    counts.sum_duplicates()
    return CountMatrix(counts, config.bin_ps, config)


def expected_counts(intensity, grid: FrequencyGrid, config: SpectrometerConfig,
                    factor: int = 1) -> np.ndarray:
    """Noise-free histogram at ``factor * bin_ps`` resolution (trailing bins dropped).

    Integrates the same piecewise-constant density that :func:`simulate_counts`
    samples, so it is the exact per-bin Poisson mean (without jitter).
    """
    p = _cell_probabilities(intensity)
    frequency_to_time_axis(grid, config)
    m = config.n_bins // factor
    width = config.bin_ps * factor
    edges = np.arange(m + 1) * width - config.window_ps / 2
    k = config.ps_per_rad_per_ps
    d = grid.spacing

    def weights(axis):
        a = k * (axis - d / 2)
        b = k * (axis + d / 2)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        ov = np.minimum(hi[None, :], edges[1:, None]) - np.maximum(lo[None, :], edges[:-1, None])
        return np.clip(ov, 0.0, None) / (hi - lo)[None, :]

    return config.total_counts * (weights(grid.axis_s) @ p @ weights(grid.axis_i).T)


def rebin(m: CountMatrix, factor: int) -> CountMatrix:
    """Non-overlapping ``factor x factor`` block sums; trailing partial blocks dropped."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    rows, cols = m.shape
    if factor > min(rows, cols):
        raise ValueError(f"factor {factor} exceeds matrix dimension {min(rows, cols)}")
    if factor == 1:
        return m
    nr, nc = rows // factor, cols // factor
    c = m.counts
    if sparse.issparse(c):
        coo = c.tocoo()
        keep = (coo.row < nr * factor) & (coo.col < nc * factor)
        out = sparse.coo_array((coo.data[keep], (coo.row[keep] // factor, coo.col[keep] // factor)),
                               shape=(nr, nc)).toarray()
    else:
        out = c[: nr * factor, : nc * factor].reshape(nr, factor, nc, factor).sum(axis=(1, 3))
    dropped = m.total - int(out.sum())
    return CountMatrix(out, m.bin_ps * factor, m.config, m.dropped + dropped)


def amplitude_from_counts(counts: np.ndarray, diagonal_sign: float = 0.0) -> np.ndarray:
    """``sign(t_s - t_i) sqrt(counts)`` with ``diagonal_sign`` on equal-time bins."""
    c = np.asarray(counts, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("effective JSA needs a square count matrix")
    idx = np.arange(c.shape[0])
    sign = np.sign(idx[:, None] - idx[None, :]).astype(float)
    np.fill_diagonal(sign, diagonal_sign)
    return sign * np.sqrt(c)


def time_bin_grid(m: CountMatrix) -> FrequencyGrid:
    """Frequency grid whose nodes are the (reversed) time-bin centres."""
    n = m.shape[0]
    centres = (np.arange(n) + 0.5) * m.bin_ps - m.config.window_ps / 2
    omega = centres / m.config.ps_per_rad_per_ps
    lo, hi = omega.min(), omega.max()
    return make_grid(0.5 * (lo + hi), 0.5 * (lo + hi), hi - lo, n)


def effective_jsa(m: CountMatrix, diagonal_sign: float = 0.0) -> JointAmplitude:
    """Antisymmetrized amplitude estimate from a measured JSI.

    The time axes run opposite to frequency, so both axes are reversed to
    put the field on an increasing frequency grid.
    """
    counts = m.dense()
    if counts.sum() == 0:
        raise ValueError("count matrix is empty")
    amp = amplitude_from_counts(counts, diagonal_sign)
    if m.config.ps_per_rad_per_ps < 0:
        amp = amp[::-1, ::-1]
    return JointAmplitude(time_bin_grid(m), amp).normalize()


def effective_schmidt_number(counts: np.ndarray, diagonal_sign: float = 0.0) -> float:
    return schmidt_number(schmidt_weights(amplitude_from_counts(counts, diagonal_sign)))


@dataclass(frozen=True)
class FlipDiagnostics:
    K: float             # after the sign flip
    K_unflipped: float   # plain sqrt(counts)
    anti_fraction: float  # antisymmetric weight |delta|^2 already present in sqrt(counts)


def flip_diagnostics(m: CountMatrix, diagonal_sign: float = 0.0) -> FlipDiagnostics:
    """How much of the reconstructed structure comes from the imposed sign flip."""
    counts = m.dense().astype(float)
    if counts.sum() == 0:
        raise ValueError("count matrix is empty")
    root = np.sqrt(counts)
    anti = 0.5 * (root - root.T)
    return FlipDiagnostics(effective_schmidt_number(counts, diagonal_sign),
                           schmidt_number(schmidt_weights(root)),
                           float(np.sum(anti ** 2) / np.sum(root ** 2)))


@dataclass(frozen=True)
class MonteCarloResult:
    mean_K: float
    sigma_K: float
    interval_3sigma: tuple
    n_runs: int
    point_K: float

    @classmethod
    def from_samples(cls, samples, point_K: float):
        samples = np.asarray(samples, dtype=float)
        mean, sd = float(samples.mean()), float(samples.std(ddof=1))
        return cls(mean, sd, (mean - 3 * sd, mean + 3 * sd), int(samples.size), float(point_K))


def mc_schmidt_error(m: CountMatrix, n_runs: int = 10000, seed: int = 0,
                     resample: bool = True, diagonal_sign: float = 0.0) -> MonteCarloResult:
    """Poisson re-sampling of the histogram; run ``r`` uses the stream ``(seed, r)``."""
    if n_runs < 100:
        raise ValueError("n_runs must be >= 100")
    counts = m.dense()
    if counts.size == 0 or counts.sum() == 0:
        raise ValueError("count matrix is empty")
    point = effective_schmidt_number(counts, diagonal_sign)
    samples = np.empty(n_runs)
    for r in range(n_runs):
        if resample:
            draw = np.random.default_rng([seed, r]).poisson(counts)
            samples[r] = effective_schmidt_number(draw, diagonal_sign)
        else:
            samples[r] = point
    return MonteCarloResult.from_samples(samples, point)


def write_counts(m: CountMatrix, path) -> Path:
    """Dense row-major CSV plus a ``.header`` JSON sidecar with the config."""
    path = Path(path)
    counts = m.dense()
    with open(path, "w") as fh:
        for row in counts:
            fh.write(",".join(str(int(v)) for v in row) + "\n")
    sidecar = path.with_suffix(path.suffix + ".header")
    meta = {"bin_ps": m.bin_ps, "dropped": m.dropped, "shape": list(counts.shape),
            "config": asdict(m.config)}
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return sidecar


def read_counts(path) -> CountMatrix:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".header").read_text())
    counts = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    if list(counts.shape) != meta["shape"]:
        raise ValueError(f"{path}: shape {counts.shape} disagrees with header {meta['shape']}")
    return CountMatrix(counts, meta["bin_ps"], SpectrometerConfig(**meta["config"]),
                       meta.get("dropped", 0))


def write_mc_result(res: MonteCarloResult, path) -> None:
    lo, hi = res.interval_3sigma
    lines = [f"mean_K={res.mean_K:.17g}", f"sigma_K={res.sigma_K:.17g}", f"interval_lo={lo:.17g}",
             f"interval_hi={hi:.17g}", f"n_runs={res.n_runs}", f"point_K={res.point_K:.17g}"]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mc_result(path) -> MonteCarloResult:
    kv = dict(line.split("=", 1) for line in Path(path).read_text().split())
    return MonteCarloResult(float(kv["mean_K"]), float(kv["sigma_K"]),
                            (float(kv["interval_lo"]), float(kv["interval_hi"])),
                            int(kv["n_runs"]), float(kv["point_K"]))
