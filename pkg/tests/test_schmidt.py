import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pulsemode.interference import detuned_jsa
from pulsemode.schmidt import (NormalizationError, decompose, dominant_modes, schmidt_number,
                               write_decomposition)
from pulsemode.spectral import (JointAmplitude, exchange_transpose, hermite_gauss_modes,
                                ideal_singlet_jsa, make_grid)

GRID = make_grid(0, 0, 12, 256)


def rand_field(seed, n=48, rank=None):
    rng = np.random.default_rng(seed)
    g = make_grid(0, 0, 6, n)
    if rank is None:
        v = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    else:
        a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
        b = rng.normal(size=(rank, n)) + 1j * rng.normal(size=(rank, n))
        v = a @ b
    return JointAmplitude(g, v).normalize()


def test_singlet_weights():
    d = decompose(ideal_singlet_jsa(1.0, GRID))
    assert d.weights[:2] == pytest.approx([0.5, 0.5], abs=1e-6)
    assert np.sum(d.weights[2:]) < 1e-12
    assert schmidt_number(d) == pytest.approx(2.0, abs=1e-3)


def test_separable_weights():
    ws, wi = GRID.mesh()
    f = JointAmplitude(GRID, np.exp(-ws ** 2 / 2) * np.exp(-(wi - 0.5) ** 2)).normalize()
    d = decompose(f)
    assert d.weights[0] == pytest.approx(1.0, abs=1e-12)
    assert schmidt_number(d) == pytest.approx(1.0, abs=1e-12)
    m = dominant_modes(d, 1)
    marginal = np.exp(-GRID.axis_s ** 2 / 2)
    marginal /= np.linalg.norm(marginal) * np.sqrt(GRID.spacing)
    assert np.max(np.abs(m.signal[0] - marginal)) < 1e-10


@pytest.mark.parametrize("weights, K", [([1.0], 1.0), ([0.5, 0.5], 2.0),
                                        ([0.4, 0.3, 0.3], 1 / 0.34)])
def test_schmidt_number_formula(weights, K):
    assert schmidt_number(weights) == pytest.approx(K, rel=1e-14)


def test_truncation_ignores_noise():
    assert schmidt_number([0.5, 0.5, 1e-14]) == 2.0


@pytest.mark.parametrize("seed", range(5))
def test_reconstruction_and_orthonormality(seed):
    f = rand_field(seed)
    d = decompose(f)
    assert np.linalg.norm(d.reconstruct() - f.values) < 1e-8
    assert np.sum(d.weights) == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(d.weights) <= 1e-15)
    h = f.grid.spacing
    for modes in (d.signal_modes, d.idler_modes):
        gram = modes.conj() @ modes.T * h
        assert np.max(np.abs(gram - np.eye(len(d)))) < 1e-8


def test_mode_phase_convention():
    d = decompose(rand_field(9))
    for modes in (d.signal_modes, d.idler_modes):
        for m in modes[:10]:
            peak = m[np.argmax(np.abs(m))]
            assert abs(peak.imag) < 1e-12 and peak.real > 0


def test_singlet_modes_are_hermite_gauss():
    d = decompose(ideal_singlet_jsa(1.0, GRID))
    m = dominant_modes(d, 2)
    u, v = hermite_gauss_modes(1.0, GRID.axis_s, GRID.spacing)
    h = GRID.spacing
    # signal side: HG0 first, HG1 second after canonical ordering
    assert abs(np.vdot(u, m.signal[0]) * h) > 0.999
    assert abs(np.vdot(v, m.signal[1]) * h) > 0.999
    assert abs(np.vdot(v, m.idler[0]) * h) > 0.999
    assert abs(np.vdot(u, m.idler[1]) * h) > 0.999


def test_dominant_modes_count_error():
    d = decompose(rand_field(1, n=16))
    with pytest.raises(ValueError):
        dominant_modes(d, 17)


def test_not_normalized():
    with pytest.raises(NormalizationError):
        decompose(JointAmplitude(GRID, 2 * ideal_singlet_jsa(1.0, GRID).values))


def test_detuned_singlet_modes_shift():
    grid = make_grid(0, 0, 16, 256)
    d = decompose(detuned_jsa(1.0, 1.5, grid))
    assert d.weights[:2] == pytest.approx([0.5, 0.5], abs=1e-6)
    # mu shifts ws - wi, i.e. the signal mode centre by +mu/2
    dens = np.abs(d.signal_modes[0]) ** 2
    assert np.sum(dens * grid.axis_s) / np.sum(dens) == pytest.approx(0.75, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31), phase=st.floats(0, 2 * np.pi))
def test_phase_invariance(seed, phase):
    f = rand_field(seed, n=24, rank=4)
    g = JointAmplitude(f.grid, f.values * np.exp(1j * phase))
    assert np.max(np.abs(decompose(f).weights - decompose(g).weights)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_transpose_invariance(seed):
    f = rand_field(seed, n=24, rank=5)
    a, b = decompose(f), decompose(exchange_transpose(f))
    assert np.max(np.abs(a.weights - b.weights)) < 1e-12
    # modes swap roles (up to phase) for non-degenerate weights
    h = f.grid.spacing
    for j in range(3):
        assert abs(abs(np.vdot(a.signal_modes[j], b.idler_modes[j]) * h) - 1) < 1e-8


def test_grid_refinement_K():
    K1 = schmidt_number(decompose(ideal_singlet_jsa(1.0, make_grid(0, 0, 10, 128))))
    K2 = schmidt_number(decompose(ideal_singlet_jsa(1.0, make_grid(0, 0, 10, 256))))
    assert abs(K1 - K2) < 1e-3


@pytest.mark.parametrize("mu", [0.0, 0.75, 1.5, 2.25, 3.0])
def test_detuning_keeps_K(mu):
    grid = make_grid(0, 0, 16, 256)
    assert abs(schmidt_number(decompose(detuned_jsa(1.0, mu, grid))) - 2) < 0.01


def test_thread_determinism():
    from threadpoolctl import threadpool_limits
    f = rand_field(4, n=64)
    with threadpool_limits(limits=1):
        a = decompose(f).weights
    b = decompose(f).weights
    assert np.max(np.abs(a - b)) < 1e-10


def test_write_decomposition(tmp_path):
    d = decompose(ideal_singlet_jsa(1.0, make_grid(0, 0, 12, 32)))
    paths = write_decomposition(d, tmp_path, count=2)
    assert [p.name for p in paths] == ["schmidt_weights.csv", "schmidt_signal_modes.csv",
                                       "schmidt_idler_modes.csv"]
    w = np.loadtxt(paths[0], delimiter=",", skiprows=1)
    assert w[:2, 1] == pytest.approx([0.5, 0.5], abs=1e-6)
    modes = np.loadtxt(paths[1], delimiter=",", skiprows=1)
    assert modes.shape == (32, 5)
