import numpy as np
import pytest

from pulsemode.fock import SINGLET, enumerate_swap_rates
from pulsemode.interference import hom_trace
from pulsemode.spectral import ideal_singlet_jsa, make_grid
from pulsemode.swap import (DOUBLE_PAIR_FACTOR, BellLabel, SwapModel, bell_jsa, bs_projection_pcc0,
                            fourfold_trace, local_maxima, mixed_jsi, raw_visibility, swap_branches,
                            swapped_jsa, write_report)

GRID = make_grid(0, 0, 12, 256)


def test_psi_minus_is_singlet():
    assert np.max(np.abs(bell_jsa("psi_minus", 1.0, GRID).values
                         - ideal_singlet_jsa(1.0, GRID).values)) < 1e-10


def test_psi_plus_symmetric():
    f = bell_jsa("psi_plus", 1.0, GRID)
    assert np.max(np.abs(f.values - f.values.T)) < 1e-12


def test_bell_orthogonality():
    fields = [bell_jsa(l, 1.0, GRID) for l in BellLabel]
    for a in range(4):
        for b in range(a + 1, 4):
            assert abs(fields[a].inner(fields[b])) < 1e-10


@pytest.mark.parametrize("label, expected", [("psi_minus", 1.0), ("psi_plus", 0.0),
                                             ("phi_plus", 0.0), ("phi_minus", 0.0)])
def test_bs_projection(label, expected):
    assert bs_projection_pcc0(label) == pytest.approx(expected, abs=1e-6)


def test_bell_completeness_symmetric():
    total = sum(bell_jsa(l, 1.0, GRID).intensity for l in BellLabel) / 4
    assert np.max(np.abs(total - total.T)) < 1e-12


def test_branches():
    branches = swap_branches()
    assert sum(p for p, _ in branches.values()) == pytest.approx(1.0, abs=1e-12)
    for p, c in branches.values():
        assert p == pytest.approx(0.25, abs=1e-12)


def test_swapped_state_is_singlet():
    f = swapped_jsa(BellLabel.PSI_MINUS, 1.0, GRID)
    assert abs(f.inner(bell_jsa("psi_minus", 1.0, GRID))) > 1 - 1e-10


def test_swapped_other_branches():
    # each Bell outcome hands a Bell state to the outer photons
    for label in BellLabel:
        f = swapped_jsa(label, 1.0, GRID)
        overlaps = [abs(f.inner(bell_jsa(l, 1.0, GRID))) for l in BellLabel]
        assert max(overlaps) > 1 - 1e-10


def test_default_mixture_four_peaks():
    peaks = local_maxima(mixed_jsi(SwapModel(), GRID))
    assert len(peaks) == 4
    # rank by brightness: the two brightest sit on the antidiagonal ws = -wi
    n = 64
    anti = [(r, c) for r, c, _ in peaks[:2]]
    assert all(r + c == n - 1 for r, c in anti)
    assert peaks[1][2] > peaks[2][2]


def test_pure_singlet_two_peaks():
    peaks = local_maxima(mixed_jsi(SwapModel(mixture_weights=(0, 0, 0, 1)), GRID))
    assert len(peaks) == 2
    assert all(r + c == 63 for r, c, _ in peaks)


def test_equal_weights_symmetric_peaks():
    peaks = local_maxima(mixed_jsi(SwapModel(mixture_weights=(1, 1, 1, 1)), GRID))
    assert len(peaks) == 4
    values = sorted(v for _, _, v in peaks)
    assert values[0] == pytest.approx(values[-1], rel=1e-9)


def test_oracle_equal_probabilities():
    rates = enumerate_swap_rates(0.01, 0.01)
    assert rates.raw_visibility == pytest.approx(0.25, abs=1e-9)
    assert rates.background_ratio == pytest.approx(2 * DOUBLE_PAIR_FACTOR, abs=1e-9)
    # blocking one source at a time measures the background directly
    assert rates.background == pytest.approx(2 * rates.distinguishable - rates.coincident, rel=1e-9)


@pytest.mark.parametrize("pa, pb", [(0.01, 0.02), (0.03, 0.01), (0.005, 0.02)])
def test_oracle_unequal_probabilities(pa, pb):
    rates = enumerate_swap_rates(pa, pb)
    assert rates.background_ratio == pytest.approx(SwapModel(pair_prob_a=pa, pair_prob_b=pb)
                                                   .background_ratio, rel=1e-9)


def test_oracle_single_mode_source_has_no_swap_signal():
    # a K = 1 pair source has no entanglement to swap: no genuine term
    product = np.array([[1.0, 0.0], [0.0, 0.0]])
    rates = enumerate_swap_rates(0.01, 0.01, product, product)
    assert abs(rates.genuine) < 1e-15


def test_oracle_factor_scales_with_schmidt_number():
    # two-pair weight of a source with K equal modes is (1 + 1/K)/2
    assert DOUBLE_PAIR_FACTOR == pytest.approx((1 + 1 / 2) / 2)


def test_raw_visibility_examples():
    m = SwapModel()
    assert raw_visibility(m) == pytest.approx(0.25, abs=0.01)
    assert raw_visibility(m, background_ratio=0.0) == pytest.approx(1.0, abs=1e-12)
    assert raw_visibility(m, subtract_background=True) == pytest.approx(m.intrinsic_visibility,
                                                                        abs=1e-6)


def test_raw_visibility_unequal_sources():
    m = SwapModel(source_sigma_a=1.0, source_sigma_b=1.2)
    assert m.intrinsic_visibility < 1
    assert raw_visibility(m, subtract_background=True) == pytest.approx(m.intrinsic_visibility,
                                                                        abs=1e-6)


def test_raw_visibility_monotone_in_background():
    m = SwapModel()
    ratios = np.linspace(0, 5, 21)
    v = [raw_visibility(m, background_ratio=r) for r in ratios]
    assert all(a > b for a, b in zip(v, v[1:]))


def test_invalid_probability():
    with pytest.raises(ValueError):
        SwapModel(pair_prob_a=0.0)
    with pytest.raises(ValueError):
        SwapModel(pair_prob_b=1.0)


def test_fourfold_trace_shape():
    tr = fourfold_trace(SwapModel())
    assert tr.delays.size == 401
    assert tr.p_cc.max() == pytest.approx(tr.p_cc[200])


def test_report(tmp_path):
    write_report({"raw_visibility": 0.25, "peaks": 4}, tmp_path / "r.txt")
    assert (tmp_path / "r.txt").read_text() == "raw_visibility=0.25\npeaks=4\n"


def test_fock_singlet_sign_matches_bell():
    # the oracle's singlet and the Bell psi_minus differ only by a global sign
    from pulsemode.swap import BELL_COEFFS
    assert np.allclose(SINGLET, -BELL_COEFFS[BellLabel.PSI_MINUS])
