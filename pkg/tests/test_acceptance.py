"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers.
Run ``python3 tests/test_acceptance.py`` for the summary table alone, or
``pytest -s tests/test_acceptance.py`` to see the lines inside pytest.
"""
import time

import numpy as np
import pytest

from pulsemode.fock import enumerate_swap_rates
from pulsemode.interference import closed_form_singlet, detune_scan, hom_trace, symmetry_split
from pulsemode.poling import CrystalSpec, pmf_from_domains, track_domains
from pulsemode.schmidt import decompose, dominant_modes, schmidt_number
from pulsemode.spectral import JointAmplitude, hermite_gauss_modes, ideal_singlet_jsa, make_grid
from pulsemode.spectrometer import (SpectrometerConfig, effective_jsa, effective_schmidt_number,
                                    expected_counts, mc_schmidt_error, rebin, simulate_counts)
from pulsemode.swap import (BellLabel, SwapModel, bs_projection_pcc0, local_maxima, mixed_jsi,
                            raw_visibility)

SPEC_SIGMA = 1.13  # spectrometer pipeline bandwidth, rad/ps
SPEC_GRID = make_grid(0, 0, 12 * SPEC_SIGMA, 1024)


def report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def criterion_1():
    t = time.perf_counter()
    K = schmidt_number(decompose(ideal_singlet_jsa(1.0, make_grid(0, 0, 12, 256))))
    dt = time.perf_counter() - t
    return report("1 singlet Schmidt number", abs(K - 2) < 1e-3 and dt < 5,
                  f"K={K:.9f} runtime={dt:.2f}s")


def criterion_2():
    sigma = 1.0
    delays = np.linspace(-6, 6, 481) / sigma
    f = ideal_singlet_jsa(sigma, make_grid(0, 0, 12 * sigma, 256))
    num = hom_trace(f, delays).p_cc
    dev = np.max(np.abs(num - closed_form_singlet(sigma, delays).p_cc))
    p0 = hom_trace(f, [0.0]).p_cc[0]
    base = hom_trace(f, [60.0 / sigma]).p_cc[0]
    ok = dev < 1e-6 and abs(p0 - 1) < 1e-6 and abs(base - 0.5) < 1e-6
    return report("2 HOM oracle", ok, f"max_dev={dev:.2e} pcc0={p0:.9f} baseline={base:.9f}")


def criterion_3():
    g = make_grid(0, 0, 8, 48)
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(48, 48)) + 1j * rng.normal(size=(48, 48))
        f = JointAmplitude(g, v).normalize()
        worst = max(worst, abs(hom_trace(f, [0.0]).p_cc[0] - abs(symmetry_split(f).delta) ** 2))
    return report("3 antibunching theorem", worst < 1e-12, f"max|pcc0-|delta|^2|={worst:.2e}")


def criterion_4():
    g = make_grid(0, 0, 12, 256)
    d = decompose(ideal_singlet_jsa(1.0, g))
    m = dominant_modes(d, 2)
    u, v = hermite_gauss_modes(1.0, g.axis_s, g.spacing)
    h = g.spacing
    ov_sig = [abs(np.vdot(u, m.signal[0]) * h), abs(np.vdot(v, m.signal[1]) * h)]
    ov_idl = [abs(np.vdot(v, m.idler[0]) * h), abs(np.vdot(u, m.idler[1]) * h)]
    wdev = np.max(np.abs(m.weights - 0.5))
    ok = min(ov_sig + ov_idl) > 0.999 and wdev < 1e-6
    return report("4 Schmidt mode shapes", ok,
                  f"overlaps={np.round(ov_sig + ov_idl, 9).tolist()} weight_dev={wdev:.1e}")


def criterion_5():
    t = time.perf_counter()
    spec = CrystalSpec.from_nominal(30.0, 0.0231)
    seq = track_domains(spec)
    q = np.linspace(-6, 6, 2001) / spec.sigma_x
    phi = pmf_from_domains(seq, spec.dk0 + q)
    centre = abs(pmf_from_domains(seq, [spec.dk0])[0])
    dt = time.perf_counter() - t
    target = np.exp(1j * q * spec.length_L / 2) * q * np.exp(-(spec.sigma_x * q) ** 2 / 2)
    ov = abs(np.vdot(target, phi)) / (np.linalg.norm(target) * np.linalg.norm(phi))
    lo, hi = pmf_from_domains(seq, spec.dk0 + np.array([-1, 1]) / spec.sigma_x)
    two_lobed = (lo * np.conj(hi)).real < 0 and abs(abs(lo) - abs(hi)) < 0.01 * abs(hi)
    ratio = centre / np.abs(phi).max()
    ok = spec.n_domains == 1299 and ratio < 0.02 and two_lobed and ov > 0.95 and dt < 10
    return report("5 crystal engineering", ok,
                  f"N={spec.n_domains} |PMF(dk0)|/max={ratio:.4f} overlap={ov:.4f} "
                  f"lobes={lo:.3f},{hi:.3f} runtime={dt:.2f}s")


def criterion_6():
    mus = [0.0, 0.5, 1.0, 2.0, 3.0]
    rows = detune_scan(1.0, mus, make_grid(0, 0, 16, 256), np.linspace(-20, 20, 401))
    K = [r.K for r in rows]
    V = [r.V for r in rows]
    ok = (max(abs(k - 2) for k in K) < 0.01 and all(a > b for a, b in zip(V, V[1:]))
          and abs(V[0] - 1) < 1e-6 and V[-1] < 0.01)
    return report("6 detuning scan", ok,
                  f"K={np.round(K, 6).tolist()} V={np.round(V, 4).tolist()}")


def criterion_7():
    p = {l.value: bs_projection_pcc0(l) for l in BellLabel}
    ok = abs(p["psi_minus"] - 1) < 1e-6 and all(p[k] < 1e-6 for k in p if k != "psi_minus")
    return report("7 Bell projections", ok, " ".join(f"{k}={v:.2e}" for k, v in p.items()))


def criterion_8():
    model = SwapModel(pair_prob_a=0.01, pair_prob_b=0.01)
    oracle = enumerate_swap_rates(model.pair_prob_a, model.pair_prob_b)
    raw = raw_visibility(model, background_ratio=oracle.background_ratio)
    corrected = raw_visibility(model, background_ratio=oracle.background_ratio,
                               subtract_background=True)
    ok = abs(raw - 0.25) < 0.01 and abs(corrected - model.intrinsic_visibility) < 1e-6
    return report("8 swapping visibility", ok,
                  f"oracle_ratio={oracle.background_ratio:.6f} raw_V={raw:.6f} "
                  f"corrected_V={corrected:.9f}")


def criterion_9():
    g = make_grid(0, 0, 12, 256)
    mixed = local_maxima(mixed_jsi(SwapModel(mixture_weights=(1, 1, 1, 2)), g))
    post = local_maxima(mixed_jsi(SwapModel(mixture_weights=(0, 0, 0, 1)), g))
    anti = [v for r, c, v in mixed if r + c == 63]
    diag = [v for r, c, v in mixed if r == c]
    ok = (len(mixed) == 4 and len(anti) == 2 and len(diag) == 2 and min(anti) > max(diag)
          and len(post) == 2)
    return report("9 mixed vs post-selected JSI", ok,
                  f"mixed_maxima={len(mixed)} anti/diag={min(anti) / max(diag):.3f} "
                  f"singlet_maxima={len(post)}")


def _pipeline_K(seed, cfg):
    raw = simulate_counts(ideal_singlet_jsa(SPEC_SIGMA, SPEC_GRID).intensity, cfg, seed,
                          grid=SPEC_GRID)
    m = rebin(raw, cfg.rebin_factor)
    return m, schmidt_number(decompose(effective_jsa(m)))


def criterion_10a():
    cfg = SpectrometerConfig()
    t = time.perf_counter()
    Ks = np.array([_pipeline_K(seed, cfg)[1] for seed in range(100)])
    good = int(np.sum(np.abs(Ks - 2) < 0.05))
    dt = time.perf_counter() - t
    return report("10a pipeline K over 100 seeds", good >= 95 and dt < 300,
                  f"{good}/100 within 0.05, K range [{Ks.min():.4f}, {Ks.max():.4f}] "
                  f"runtime={dt:.1f}s")


def criterion_10b():
    cfg = SpectrometerConfig()
    t = time.perf_counter()
    intensity = ideal_singlet_jsa(SPEC_SIGMA, SPEC_GRID).intensity
    noiseless = effective_schmidt_number(expected_counts(intensity, SPEC_GRID, cfg,
                                                         cfg.rebin_factor))
    m, K = _pipeline_K(0, cfg)
    res = mc_schmidt_error(m, n_runs=1000, seed=0)
    dt = time.perf_counter() - t
    lo, hi = res.interval_3sigma
    return report("10b Monte-Carlo interval", lo <= noiseless <= hi and dt < 300,
                  f"noiseless_K={noiseless:.6f} observed_K={K:.6f} mean={res.mean_K:.6f} "
                  f"sigma={res.sigma_K:.2e} 3sigma=[{lo:.6f}, {hi:.6f}] runtime={dt:.1f}s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10a, criterion_10b]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: c.__name__)
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
