"""Brute-force photon-number enumeration for the four-photon swapping setup.

States are polynomials in creation operators acting on vacuum, stored as
``{monomial: amplitude}`` where a monomial is a sorted tuple of mode labels
(repeats allowed).  A mode label is ``(port, internal)``; ``internal``
indexes the spectral (Schmidt) mode.

Layout: source A feeds ports ``as``/``ai``, source B ``bs``/``bi``.  The
Bell-state measurement mixes ``ai``/``bs`` on a 50:50 splitter into ``c``/``d``;
the final two-photon interference mixes ``as``/``bi`` into ``e``/``f``.
A four-fold event needs a click at each of ``c, d, e, f``.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from math import factorial, sqrt

import numpy as np

SINGLET = np.array([[0.0, 1.0], [-1.0, 0.0]]) / sqrt(2.0)


def _mul(p, q):
    out = defaultdict(complex)
    for m1, a1 in p.items():
        for m2, a2 in q.items():
            out[tuple(sorted(m1 + m2))] += a1 * a2
    return dict(out)


def _add(*terms):
    out = defaultdict(complex)
    for scale, poly in terms:
        for m, a in poly.items():
            out[m] += scale * a
    return dict(out)


def _norm2(poly, keep=None):
    total = 0.0
    for m, a in poly.items():
        if keep is not None and not keep(m):
            continue
        weight = 1
        for n in Counter(m).values():
            weight *= factorial(n)
        total += abs(a) ** 2 * weight
    return total


def _substitute(poly, rules):
    """Replace each creation operator by a linear combination of others."""
    out = defaultdict(complex)
    for m, a in poly.items():
        expanded = {(): a}
        for mode in m:
            expanded = _mul(expanded, rules.get(mode, {(mode,): 1.0}))
        for k, v in expanded.items():
            out[k] += v
    return dict(out)


def pair_operator(coeffs, signal_port, idler_port):
    """``sum_jk C_jk a^dag(signal, j) a^dag(idler, k)`` as a polynomial."""
    coeffs = np.asarray(coeffs, dtype=complex)
    poly = {}
    for j in range(coeffs.shape[0]):
        for k in range(coeffs.shape[1]):
            if coeffs[j, k] != 0:
                key = tuple(sorted(((signal_port, j), (idler_port, k))))
                poly[key] = poly.get(key, 0) + coeffs[j, k]
    return poly


def _splitter(in1, in2, out1, out2, modes, relabel=None):
    relabel = relabel or {}
    r = 1 / sqrt(2.0)
    rules = {}
    for k in modes:
        k2 = relabel.get(k, k)
        rules[(in1, k)] = {((out1, k),): r, ((out2, k),): r}
        rules[(in2, k)] = {((out1, k2),): r, ((out2, k2),): -r}
    return rules


def _fourfold(monomial):
    ports = Counter(port for port, _ in monomial)
    return all(ports[p] >= 1 for p in "cdef")


@dataclass(frozen=True)
class FourfoldRates:
    coincident: float       # both outer photons overlap in time at the final splitter
    distinguishable: float  # outer photons fully delayed
    background: float       # sum of single-source (blocked) rates

    @property
    def genuine(self) -> float:
        """Delay-dependent part G in R(dt) = G p_singlet(dt) + B."""
        return 2.0 * (self.coincident - self.distinguishable)

    @property
    def background_ratio(self) -> float:
        return (2.0 * self.distinguishable - self.coincident) / self.genuine

    @property
    def raw_visibility(self) -> float:
        return (self.coincident - self.distinguishable) / self.distinguishable


def fourfold_rate(coeffs_a, coeffs_b, lam_a, lam_b, delayed: bool, n_phases: int = 8) -> float:
    """Four-fold click probability to fourth order in the pair amplitudes.

    The relative pump phase of the two independent sources is averaged over
    ``n_phases`` equally spaced values, which removes cross terms between
    different pair-number configurations.
    """
    coeffs_a = np.asarray(coeffs_a, dtype=complex)
    coeffs_b = np.asarray(coeffs_b, dtype=complex)
    dim = max(coeffs_a.shape + coeffs_b.shape)
    A = pair_operator(coeffs_a, "as", "ai")
    B = pair_operator(coeffs_b, "bs", "bi")
    AA, BB, AB = _mul(A, A), _mul(B, B), _mul(A, B)
    modes = range(dim)
    rules = _splitter("ai", "bs", "c", "d", modes)
    shift = {k: k + dim for k in modes} if delayed else None
    rules.update(_splitter("as", "bi", "e", "f", modes, relabel=shift))
    total = 0.0
    for theta in 2 * np.pi * np.arange(n_phases) / n_phases:
        lb = lam_b * np.exp(1j * theta)
        state = _add((lam_a * lb, AB), (lam_a ** 2 / 2, AA), (lb ** 2 / 2, BB))
        total += _norm2(_substitute(state, rules), keep=_fourfold)
    return total / n_phases


def enumerate_swap_rates(pair_prob_a: float, pair_prob_b: float,
                         coeffs_a=SINGLET, coeffs_b=SINGLET) -> FourfoldRates:
    la, lb = sqrt(pair_prob_a), sqrt(pair_prob_b)
    return FourfoldRates(
        coincident=fourfold_rate(coeffs_a, coeffs_b, la, lb, delayed=False),
        distinguishable=fourfold_rate(coeffs_a, coeffs_b, la, lb, delayed=True),
        background=(fourfold_rate(coeffs_a, coeffs_b, la, 0.0, delayed=True)
                    + fourfold_rate(coeffs_a, coeffs_b, 0.0, lb, delayed=True)),
    )
