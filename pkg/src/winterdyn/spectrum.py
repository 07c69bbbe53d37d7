"""Continuum spectrum of the Winter model.

The Hamiltonian -d^2/dx^2 + (1/(pi g)) delta(x - pi) on the half-line with a
hard wall at x = 0 has, for repulsive coupling g > 0, a purely continuous
spectrum eps = k^2.  An eigenfunction is sin(kx) inside the cavity (0, pi)
and a(k,g) e^{ikx} + b(k,g) e^{-ikx} outside, with

    a(k,g) = -i/2 + [exp(-2 i pi k) - 1] / (4 pi g k),
    b(k,g) = +i/2 + [exp(+2 i pi k) - 1] / (4 pi g k).

Everything in this module is a pure function of its arguments; all complex
square roots take the principal branch (-pi < arg z <= pi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi

# Below this, a*b is considered to sit on a resonance pole and evaluation of
# the normalized eigenfunction is refused instead of returning huge numbers
# that would silently poison downstream quadrature.
AB_POLE_GUARD = 1e-10


def _check_kg(k, g):
    if np.any(np.asarray(g) == 0):
        raise DomainError("coupling g must be nonzero")
    if np.any(np.asarray(k) == 0):
        raise DomainError("wave number k must be nonzero")


def _cexpm1(z):
    """exp(z) - 1 for complex z without cancellation near z = 0."""
    re = np.real(z)
    im = np.imag(z)
    real_part = np.expm1(re) * np.cos(im) - 2.0 * np.sin(0.5 * im) ** 2
    imag_part = np.exp(re) * np.sin(im)
    return real_part + 1j * imag_part


def _phase_expm1(k):
    """exp(2 pi i k) - 1 computed as exp(2 pi i (k - round(Re k))) - 1.

    Shifting by the nearest integer is exact (e^{2 pi i n} = 1) and keeps the
    phase argument small near the resonances, where the naive product 2 pi k
    would carry absolute rounding ~ eps * k that floors |b| at the poles
    around 1e-11 for small couplings.
    """
    k = np.asarray(k, dtype=complex)
    kappa = k - np.round(np.real(k))
    return _cexpm1(1j * TWO_PI * kappa)


def coef_a(k, g):
    """Outgoing-wave coefficient a(k, g).  Accepts scalars or arrays."""
    _check_kg(k, g)
    k = np.asarray(k, dtype=complex)
    return -0.5j + _phase_expm1(-k) / (2.0 * TWO_PI * g * k)


def coef_b(k, g):
    """Incoming-wave coefficient b(k, g); its complex zeros are the resonance poles."""
    _check_kg(k, g)
    k = np.asarray(k, dtype=complex)
    return 0.5j + _phase_expm1(k) / (2.0 * TWO_PI * g * k)


def coef_b_dk(k, g):
    """Analytic derivative of coef_b with respect to k.

    Used both by the Newton pole solver and by the residue weights of the
    exponential part of the evolution.
    """
    _check_kg(k, g)
    k = np.asarray(k, dtype=complex)
    denom = 2.0 * TWO_PI * g * k
    em1 = _phase_expm1(k)
    return 1j * TWO_PI * (em1 + 1.0) / denom - em1 / (denom * k)


def ab_product(k, g):
    """The product a(k,g) b(k,g).

    Real and positive for real k and real g; for complex k it vanishes at the
    resonance poles.
    """
    return coef_a(k, g) * coef_b(k, g)


@dataclass(frozen=True)
class EigenSample:
    """One sample psi(x; k, g) of a continuum eigenfunction."""

    x: float
    value: complex


def eigenfunction(x: float, k: complex, g: float) -> EigenSample:
    """Delta-normalized continuum eigenfunction sampled at position x >= 0.

    The common normalization 1/sqrt(2 pi a b) is evaluated with a single
    principal square root of the product a*b.  Dividing both pieces by the
    same root keeps the function exactly continuous at x = pi; it may differ
    from evaluating sqrt(a/b) and sqrt(b/a) separately by a global sign,
    which no |psi|^2 observable can see.
    """
    if x < 0:
        raise DomainError("position x must be >= 0")
    ab = complex(ab_product(k, g))
    if abs(ab) < AB_POLE_GUARD:
        raise DomainError(
            f"a*b = {ab:.3e} at k = {k}: evaluation too close to a resonance pole"
        )
    k = complex(k)
    norm = 1.0 / np.sqrt(2.0 * np.pi * ab)
    if x <= np.pi:
        value = norm * np.sin(k * x)
    else:
        a = complex(coef_a(k, g))
        b = complex(coef_b(k, g))
        s = np.sqrt(ab)
        value = (a * np.exp(1j * k * x) + b * np.exp(-1j * k * x)) / (
            np.sqrt(2.0 * np.pi) * s
        )
    return EigenSample(x=float(x), value=complex(value))
