"""Schmidt decomposition of joint spectral amplitudes via the SVD."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import FrequencyGrid, JointAmplitude

#: weights below this fraction of the leading weight are dropped before K
TRUNCATION = 1e-12
#: relative gap under which singular values are treated as one degenerate block
DEGENERACY = 1e-9


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``f(ws, wi) = norm * sum_j sqrt(p_j) exp(i phase_j) u_j(ws) v_j(wi)``.

    Modes are stored row-wise and are orthonormal under the grid measure.
    Each mode's largest-modulus sample is real and positive; the phase that
    this removes is kept in ``phases`` so the expansion stays exact.
    """

    weights: np.ndarray
    signal_modes: np.ndarray
    idler_modes: np.ndarray
    phases: np.ndarray
    grid: FrequencyGrid
    norm: float = 1.0

    def reconstruct(self) -> np.ndarray:
        coeff = self.norm * np.sqrt(self.weights) * np.exp(1j * self.phases)
        return np.einsum("j,js,ji->si", coeff, self.signal_modes, self.idler_modes)

    def __len__(self):
        return self.weights.size


def _fix_phase(mode: np.ndarray) -> complex:
    """Unit factor that makes the largest-modulus sample real-positive."""
    peak = mode[np.argmax(np.abs(mode))]
    return np.abs(peak) / peak if peak != 0 else 1.0


def _canonical_blocks(u, s, vh, axis, spacing):
    """Rotate singular vectors inside degenerate blocks to a reproducible basis.

    Inside a block the SVD basis is arbitrary; we diagonalize the centred
    second moment of the signal modes, which orders e.g. HG0 before HG1.
    """
    n = s.size
    j = 0
    while j < n:
        k = j + 1
        while k < n and s[j] > 0 and (s[j] - s[k]) <= DEGENERACY * s[j]:
            k += 1
        if k - j > 1 and s[j] > TRUNCATION * s[0]:
            block = u[:, j:k]
            dens = np.abs(block) ** 2
            center = np.sum(dens * axis[:, None]) / np.sum(dens)
            moment = block.conj().T @ (((axis - center) ** 2)[:, None] * block) * spacing
            _, rot = np.linalg.eigh(moment)
            u[:, j:k] = block @ rot
            vh[j:k, :] = rot.conj().T @ vh[j:k, :]
        j = k
    return u, vh


def schmidt_weights(values: np.ndarray) -> np.ndarray:
    """Normalized squared singular values of a field matrix (descending)."""
    a = np.asarray(values)
    rows = np.flatnonzero(np.any(a != 0, axis=1))
    cols = np.flatnonzero(np.any(a != 0, axis=0))
    if rows.size == 0:
        raise NormalizationError("field is identically zero")
    # zero rows/columns do not change the singular values
    a = a[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
    s = np.linalg.svd(a, compute_uv=False)
    p = s ** 2
    return p / p.sum()


def decompose(f: JointAmplitude, tol: float = 1e-6) -> SchmidtDecomposition:
    norm = f.norm
    if abs(norm - 1.0) > tol:
        raise NormalizationError(f"field norm {norm:.3g} deviates from 1 by more than {tol}")
    d = f.grid.spacing
    u, s, vh = np.linalg.svd(f.values * d)
    u, vh = _canonical_blocks(u, s, vh, f.grid.axis_s, d)
    signal = u.T / np.sqrt(d)
    idler = vh / np.sqrt(d)
    phases = np.zeros(s.size)
    for j in range(s.size):
        a = _fix_phase(signal[j])
        b = _fix_phase(idler[j])
        signal[j] *= a
        idler[j] *= b
        phases[j] = -np.angle(a * b)
    weights = s ** 2 / np.sum(s ** 2)
    return SchmidtDecomposition(weights, signal, idler, phases, f.grid, norm)


def schmidt_number(d) -> float:
    """``K = 1 / sum p_j^2`` after dropping negligible weights.

    Accepts a :class:`SchmidtDecomposition` or a plain weight sequence.
    """
    p = np.asarray(d.weights if isinstance(d, SchmidtDecomposition) else d, dtype=float)
    p = p[p > TRUNCATION * p.max()]
    p = p / p.sum()
    return float(1.0 / np.sum(p ** 2))


@dataclass(frozen=True)
class ModeTable:
    axis_s: np.ndarray
    axis_i: np.ndarray
    weights: np.ndarray
    signal: np.ndarray
    idler: np.ndarray


def dominant_modes(d: SchmidtDecomposition, count: int) -> ModeTable:
    if count < 1 or count > len(d):
        raise ValueError(f"count must be in [1, {len(d)}], got {count}")
    return ModeTable(d.grid.axis_s, d.grid.axis_i, d.weights[:count].copy(),
                     d.signal_modes[:count].copy(), d.idler_modes[:count].copy())


def write_decomposition(d: SchmidtDecomposition, directory, count: int = 10, prefix="schmidt"):
    """Write ``<prefix>_weights.csv`` and one modes file per side."""
    directory = Path(directory)
    count = min(count, len(d))
    paths = [directory / f"{prefix}_weights.csv",
             directory / f"{prefix}_signal_modes.csv",
             directory / f"{prefix}_idler_modes.csv"]
    with open(paths[0], "w") as fh:
        fh.write("index,weight\n")
        for j, p in enumerate(d.weights):
            fh.write(f"{j},{p:.17g}\n")
    for path, axis, modes in ((paths[1], d.grid.axis_s, d.signal_modes),
                              (paths[2], d.grid.axis_i, d.idler_modes)):
        cols = ["omega"] + [f"{part}_{j}" for j in range(count) for part in ("re", "im")]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row, w in enumerate(axis):
                vals = [repr(float(w))]
                for j in range(count):
                    z = modes[j, row]
                    vals += [repr(float(z.real)), repr(float(z.imag))]
                fh.write(",".join(vals) + "\n")
    return paths
