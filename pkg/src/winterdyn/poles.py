"""Resonance poles: complex zeros k^(n)(g) of the coefficient b(k, g).

Each zero in the octant Im k < 0, Re k > |Im k| carries a complex energy
eps = k^2 = omega - i Gamma/2, so omega = (Re k)^2 - (Im k)^2 and
Gamma = -4 Re k Im k.  The branch is fixed by k^(n)(0) = n.
"""

from __future__ import annotations

import cmath
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, OctantViolationError, PoleConvergenceError
from .spectrum import coef_a, coef_b, coef_b_dk

DEFAULT_TOL = 1e-12
MAX_NEWTON_STEPS = 50

# The small-g expansion of the pole is only trustworthy while pi n g stays
# small; continuation in g starts from this point and never steps past it.
SEED_G_CAP = 0.05


def worker_count() -> int:
    """Parallelism cap: WINTER_THREADS if set, else a small cpu-based default."""
    env = os.environ.get("WINTER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(os.cpu_count() or 1, 8)


def pole_seed(n: int, g: float) -> complex:
    """Fourth-order small-g expansion of the pole with branch k^(n)(0) = n."""
    if n < 1:
        raise DomainError("mode index n must be >= 1")
    return (
        n
        - n * g
        + (n - 1j * math.pi * n**2) * g**2
        + (4.0 * math.pi**2 * n**3 / 3.0 + 3j * math.pi * n**2 - n) * g**3
    )


def width_pert(n: int, g: float, order: int = 2) -> float:
    """Perturbative decay width: 4 pi n^3 g^2 at order 2, times (1 - 4g) at order 3."""
    if n < 1:
        raise DomainError("mode index n must be >= 1")
    if order == 2:
        return 4.0 * math.pi * n**3 * g**2
    if order == 3:
        return 4.0 * math.pi * n**3 * g**2 * (1.0 - 4.0 * g)
    raise ValueError(f"order must be 2 or 3, got {order}")


def freq_pert(n: int, g: float, order: int = 1) -> float:
    """Perturbative frequency: n^2 (1 - 2g) at order 1, n^2 (1 - 2g + 3g^2) at order 2."""
    if n < 1:
        raise DomainError("mode index n must be >= 1")
    if order == 1:
        return n**2 * (1.0 - 2.0 * g)
    if order == 2:
        return n**2 * (1.0 - 2.0 * g + 3.0 * g**2)
    raise ValueError(f"order must be 1 or 2, got {order}")


@dataclass(frozen=True)
class Pole:
    """One resonance pole with its derived spectral data."""

    n: int
    k: complex
    energy: complex
    omega: float
    gamma: float
    residual: float

    def __post_init__(self):
        if not (self.k.imag < 0 and self.k.real > abs(self.k.imag)):
            raise OctantViolationError(
                f"pole n={self.n} at k={self.k} violates Im k < 0 < |Im k| < Re k",
                n=self.n,
            )

    @classmethod
    def from_k(cls, n: int, k: complex, g: float) -> "Pole":
        eps = k * k
        return cls(
            n=n,
            k=k,
            energy=eps,
            omega=k.real**2 - k.imag**2,
            gamma=-4.0 * k.real * k.imag,
            residual=abs(complex(coef_b(k, g))),
        )


def _newton(k: complex, g: float, tol: float, n: int) -> complex:
    k_prev = None
    for _ in range(MAX_NEWTON_STEPS):
        dk = complex(coef_b(k, g)) / complex(coef_b_dk(k, g))
        k_next = k - dk
        residual = abs(complex(coef_b(k_next, g)))
        if abs(dk) < tol and residual < tol:
            return k_next
        if k_next == k or k_next == k_prev:
            # stalled at floating-point resolution; the slope 1/(2gk) sets
            # the smallest representable |b| near the root
            raise PoleConvergenceError(
                f"n={n}, g={g}: |b| floors at {residual:.2e} (> tol {tol:.1e}) "
                "at double-precision resolution; loosen tol",
                n=n,
                g=g,
            )
        k_prev, k = k, k_next
    raise PoleConvergenceError(
        f"Newton did not converge for n={n}, g={g} after {MAX_NEWTON_STEPS} steps "
        f"(|b| = {abs(complex(coef_b(k, g))):.2e})",
        n=n,
        g=g,
    )


def find_pole(n: int, g: float, tol: float = DEFAULT_TOL) -> Pole:
    """Locate the pole k^(n)(g) by Newton iteration with continuation in g.

    The expansion seed is reliable only while n*g is small, so for larger
    couplings the root is continued from g_start = min(0.05, 0.1/n) in steps
    of at most g_start, re-seeding each step with the previous root.  This
    keeps the iterate on the branch with k^(n)(0) = n.
    """
    if n < 1:
        raise DomainError("mode index n must be >= 1")
    if g <= 0:
        raise DomainError("find_pole requires coupling g > 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")

    g_start = min(SEED_G_CAP, 0.1 / n)
    if g <= g_start:
        k = _newton(pole_seed(n, g), g, tol, n)
    else:
        k = _newton(pole_seed(n, g_start), g_start, tol, n)
        steps = math.ceil((g - g_start) / g_start)
        for gi in np.linspace(g_start, g, steps + 1)[1:]:
            k = _newton(k, float(gi), tol, n)
    if abs(k - n) > 0.75 * n:
        raise PoleConvergenceError(
            f"root k={k} strayed from the n={n} branch", n=n, g=g
        )
    return Pole.from_k(n, k, g)


def continuation_steps(n: int, g: float) -> int:
    g_start = min(SEED_G_CAP, 0.1 / n)
    return 0 if g <= g_start else math.ceil((g - g_start) / g_start)


@dataclass(frozen=True)
class PoleTable:
    """All poles n = 1..N at a fixed coupling, with solver diagnostics."""

    g: float
    tol: float
    poles: tuple[Pole, ...]
    continuation_steps: int
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        re = [p.k.real for p in self.poles]
        if any(b <= a for a, b in zip(re, re[1:])):
            raise PoleConvergenceError("Re k^(n) not strictly increasing in n")
        ns = [p.n for p in self.poles]
        if ns != sorted(set(ns)):
            raise ValueError("pole indices must be strictly increasing")

    def __len__(self):
        return len(self.poles)

    def __getitem__(self, n: int) -> Pole:
        """Pole by physical index n (1-based)."""
        p = self.poles[n - 1]
        if p.n != n:
            raise KeyError(f"table does not hold contiguous indices; wanted n={n}")
        return p

    @property
    def k_values(self) -> np.ndarray:
        return np.array([p.k for p in self.poles])

    def to_json(self) -> str:
        return json.dumps(
            {
                "g": self.g,
                "tol": self.tol,
                "continuation_steps": self.continuation_steps,
                "warnings": list(self.warnings),
                "poles": [
                    {
                        "n": p.n,
                        "re_k": p.k.real,
                        "im_k": p.k.imag,
                        "omega": p.omega,
                        "gamma": p.gamma,
                        "residual": p.residual,
                    }
                    for p in self.poles
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "PoleTable":
        obj = json.loads(text)
        poles = tuple(
            Pole.from_k(row["n"], complex(row["re_k"], row["im_k"]), obj["g"])
            for row in obj["poles"]
        )
        return cls(
            g=obj["g"],
            tol=obj["tol"],
            poles=poles,
            continuation_steps=obj.get("continuation_steps", 0),
            warnings=tuple(obj.get("warnings", ())),
        )


def pole_table(g: float, N: int, tol: float = DEFAULT_TOL) -> PoleTable:
    """Solve for poles n = 1..N; the n-loop may run on a thread pool.

    A warning entry is recorded for every n whose perturbative width exceeds
    a tenth of its frequency (the resonance picture degrading), mirroring the
    physical cut Gamma << omega.
    """
    if N < 1:
        raise DomainError("table size N must be >= 1")

    def solve(n):
        try:
            return find_pole(n, g, tol)
        except PoleConvergenceError as exc:
            raise PoleConvergenceError(
                f"pole_table failed at n={n}: {exc}", n=n, g=g
            ) from exc

    workers = worker_count()
    ns = range(1, N + 1)
    if workers > 1 and N >= 8:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            poles = tuple(pool.map(solve, ns))
    else:
        poles = tuple(solve(n) for n in ns)

    warn_rows = []
    for p in poles:
        w2 = width_pert(p.n, g, order=2)
        f1 = freq_pert(p.n, g, order=1)
        if w2 > 0.1 * abs(f1):
            warn_rows.append(
                f"n={p.n}: perturbative width {w2:.3g} exceeds 0.1*omega {0.1*abs(f1):.3g}; "
                "resonance picture marginal"
            )
    table = PoleTable(
        g=g,
        tol=tol,
        poles=poles,
        continuation_steps=continuation_steps(N, g),
        warnings=tuple(warn_rows),
    )
    if warn_rows:
        first = warn_rows[0].split(":")[0]
        warnings.warn(
            f"{len(warn_rows)} of {N} poles have perturbative width above "
            f"0.1*omega (first at {first}); resonance picture marginal there "
            "(details in table.warnings)",
            stacklevel=2,
        )
    return table


def conjugate_zero_residual(pole: Pole, g: float) -> float:
    """|a(conj k, g)|: the mirrored zero of a must match the pole of b."""
    return abs(complex(coef_a(pole.k.conjugate(), g)))


def sqrt_relation_residual(pole: Pole, g: float) -> float:
    """|exp(i pi k) - (-1)^n sqrt(1 - 2 pi i g k)| with the principal branch."""
    k = pole.k
    lhs = cmath.exp(1j * math.pi * k)
    rhs = (-1) ** pole.n * cmath.sqrt(1.0 - 2j * math.pi * g * k)
    return abs(lhs - rhs)


def exact_relation_residual(pole: Pole, g: float) -> float:
    """|exp(2 pi i k) - 1 + 2 pi i g k|, zero for any true zero of b."""
    k = pole.k
    return abs(cmath.exp(2j * math.pi * k) - 1.0 + 2j * math.pi * g * k)
