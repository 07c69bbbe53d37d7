"""Mode-index matrix algebra: mixing, renormalization, counter-rotation.

The exponential parts of the metastable states are linear combinations of
pole states, psi_ex = V(g) Theta.  Rescaling each pole state by its
normalization constant Z^(n)(g) turns V into the renormalized mixing matrix
U = V Z, which to low orders in g is built from two fixed infinite matrices:

    A_{ln} = (-1)^(l+n) 2 l n / (l^2 - n^2)   (real antisymmetric, zero diag),
    H      = diag(1, 2, 3, ...).

U(g) = Id + g A + g^2 (A^2/2 - A/2 + i pi A H) + O(g^3); applying U^(-1) to
the initial mode vector yields states that evolve purely exponentially.
Everything here acts on the truncated index space n = 1..N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm
from scipy.special import digamma, polygamma

from .errors import DomainError, IllConditionedError
from .evolution import SQRT_2_OVER_PI, TimeSeries, mixing_weight
from .poles import PoleTable

MATRIX_LABELS = (
    "A",
    "H",
    "AH",
    "A_squared_closed",
    "V_exact",
    "V_order_0",
    "V_order_1",
    "V_order_2",
    "Z_order_1",
    "Z_order_2",
    "U",
    "U_inverse",
)

COND_LIMIT = 1e8


@dataclass(frozen=True)
class IndexMatrix:
    """A truncated N x N operator on mode-index space."""

    dim: int
    entries: np.ndarray
    label: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in MATRIX_LABELS:
            raise ValueError(f"unknown matrix label {self.label!r}")
        if self.entries.shape != (self.dim, self.dim):
            raise ValueError("entries shape does not match dim")

    def __getitem__(self, ln: tuple[int, int]) -> complex:
        """Entry by 1-based physical indices (l, n)."""
        l, n = ln
        return complex(self.entries[l - 1, n - 1])

    def to_csv(self) -> str:
        lines = ["row,col,re,im"]
        for i in range(self.dim):
            for j in range(self.dim):
                v = self.entries[i, j]
                lines.append(f"{i + 1},{j + 1},{complex(v).real!r},{complex(v).imag!r}")
        return "\n".join(lines) + "\n"

    def to_json_block(self) -> dict:
        return {
            "label": self.label,
            "dim": self.dim,
            "entries": [
                [[complex(v).real, complex(v).imag] for v in row]
                for row in self.entries
            ],
            "meta": {k: v for k, v in self.meta.items() if isinstance(v, (int, float, str))},
        }


def _indices(N: int):
    if N < 2:
        raise DomainError("truncation N must be >= 2")
    idx = np.arange(1, N + 1, dtype=float)
    return idx[:, None], idx[None, :]


def matrix_A(N: int) -> IndexMatrix:
    """Antisymmetric generator A_{ln} = (-1)^(l+n) 2ln/(l^2 - n^2), zero diagonal."""
    l, n = _indices(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = (-1.0) ** (l + n) * 2.0 * l * n / (l**2 - n**2)
    np.fill_diagonal(ent, 0.0)
    return IndexMatrix(N, ent, "A")


def matrix_H(N: int) -> IndexMatrix:
    """Diagonal index matrix diag(1..N)."""
    _indices(N)
    return IndexMatrix(N, np.diag(np.arange(1.0, N + 1.0)), "H")


def matrix_AH(N: int) -> IndexMatrix:
    """Product A H: entries (-1)^(l+n) 2 l n^2/(l^2 - n^2), zero diagonal."""
    a = matrix_A(N).entries
    return IndexMatrix(N, a * np.arange(1.0, N + 1.0)[None, :], "AH")


def matrix_A_squared_closed(N: int) -> IndexMatrix:
    """Closed form of A^2 (infinite sums done analytically; symmetric).

    Off-diagonal: (-1)^(l+n+1) 4 l n (l^2 + n^2)/(l^2 - n^2)^2;
    diagonal:     -(pi^2 l^2 / 3 + 1/4).
    """
    l, n = _indices(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = (-1.0) ** (l + n + 1) * 4.0 * l * n * (l**2 + n**2) / (l**2 - n**2) ** 2
    diag = -(math.pi**2 * np.arange(1.0, N + 1.0) ** 2 / 3.0 + 0.25)
    np.fill_diagonal(ent, diag)
    return IndexMatrix(N, ent, "A_squared_closed")


def series_identities_check(m: int, N: int) -> tuple[float, float]:
    """Tail-accelerated partial sums behind the closed form of A^2.

    Returns (sum over k != m of 1/(k^2 - m^2), sum of k^2/(k^2 - m^2)^2),
    each as the explicit sum to N plus the analytic remainder: the first
    tail telescopes to harmonic numbers, the second reduces to trigamma
    values.  Closed forms are 3/(4 m^2) and pi^2/12 + 1/(16 m^2).
    """
    if m < 1:
        raise DomainError("m must be a positive integer")
    if N <= 2 * m:
        raise DomainError("N must exceed 2m for the tail formulas")
    k = np.arange(1, N + 1, dtype=float)
    k = k[k != m]
    d = k**2 - m**2
    s1 = float(np.sum(1.0 / d))
    s2 = float(np.sum(k**2 / d**2))
    tail1 = (digamma(N + m + 1) - digamma(N - m + 1)) / (2.0 * m)
    tail2 = 0.5 * tail1 + 0.25 * (polygamma(1, N - m + 1) + polygamma(1, N + m + 1))
    return s1 + float(tail1), s2 + float(tail2)


# ---------------------------------------------------------------------------
# mixing matrix: exact and perturbative
# ---------------------------------------------------------------------------

def mixing_V_exact(g: float, table: PoleTable) -> IndexMatrix:
    """Exact mixing matrix on the truncation set by the pole table."""
    if abs(table.g - g) > 1e-15:
        raise ValueError(f"pole table was built at g={table.g}, not g={g}")
    N = len(table)
    ks = table.k_values
    ent = np.empty((N, N), dtype=complex)
    for row, l in enumerate(range(1, N + 1)):
        signs = np.array([(-1.0) ** (l + p.n) for p in table.poles])
        if np.any(np.abs(l**2 - ks**2) < 1e-14):
            raise DomainError(f"degenerate l^2 = k^2 for l={l}")
        ent[row, :] = signs * mixing_weight(l, ks, g)
    return IndexMatrix(N, ent, "V_exact")


def V_order(order: int, N: int) -> IndexMatrix:
    """Coefficient matrices of the g-expansion of V."""
    if order == 0:
        _indices(N)
        return IndexMatrix(N, np.eye(N, dtype=complex), "V_order_0")
    if order == 1:
        ent = matrix_A(N).entries.astype(complex) - 0.5 * np.eye(N)
        return IndexMatrix(N, ent, "V_order_1")
    if order == 2:
        a = matrix_A(N).entries
        a2 = matrix_A_squared_closed(N).entries
        ah = matrix_AH(N).entries
        h = np.arange(1.0, N + 1.0)
        ent = (
            0.5 * a2
            - a
            + 0.375 * np.eye(N)
            + 1j * math.pi * ah
            - 1.5j * math.pi * np.diag(h)
        ).astype(complex)
        return IndexMatrix(N, ent, "V_order_2")
    raise ValueError("order must be 0, 1 or 2")


def V2_entrywise(N: int) -> np.ndarray:
    """Second-order mixing written entry by entry (cross-check of V_order(2))."""
    l, n = _indices(N)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (-1.0) ** (l + n) * 2.0 * l * n / (l**2 - n**2) * (1j * math.pi * n - 1.0)
        off += (-1.0) ** (l + n + 1) * 2.0 * l * n * (l**2 + n**2) / (l**2 - n**2) ** 2
    ent = np.asarray(off, dtype=complex)
    ll = np.arange(1.0, N + 1.0)
    np.fill_diagonal(ent, 0.25 - math.pi**2 * ll**2 / 6.0 - 1.5j * math.pi * ll)
    return ent


def Z_order(order: int, N: int) -> IndexMatrix:
    """Renormalization coefficient matrices (diagonal by construction)."""
    _indices(N)
    if order == 1:
        return IndexMatrix(N, 0.5 * np.eye(N, dtype=complex), "Z_order_1")
    if order == 2:
        h = np.arange(1.0, N + 1.0)
        ent = -0.125 * np.eye(N, dtype=complex) + 1.5j * math.pi * np.diag(h)
        return IndexMatrix(N, ent, "Z_order_2")
    raise ValueError("order must be 1 or 2")


def Z_exact(n: int, g: float, table: PoleTable) -> complex:
    """Normalization constant fixed by unit cavity norm of the pole state.

    |Z|^2 = (1/pi) [sinh(2 b pi)/(2b) - sin(2 a pi)/(2a)] for k = a + i b;
    the condition fixes only the modulus, and the phase is chosen real
    positive so that Z -> 1 + g/2 smoothly as g -> 0.
    """
    if abs(table.g - g) > 1e-15:
        raise ValueError(f"pole table was built at g={table.g}, not g={g}")
    k = table[n].k
    alpha, beta = k.real, k.imag
    y = 2.0 * beta * math.pi
    if abs(y) < 1e-8:
        sinh_term = math.pi * (1.0 + y * y / 6.0)
    else:
        sinh_term = math.sinh(y) / (2.0 * beta)
    sin_term = math.sin(2.0 * alpha * math.pi) / (2.0 * alpha)
    return complex(math.sqrt((sinh_term - sin_term) / math.pi))


def U_truncated(g: float, N: int, order: int = 2) -> IndexMatrix:
    """Renormalized mixing matrix through the requested order in g."""
    a = matrix_A(N).entries
    ent = np.eye(N, dtype=complex) + g * a
    if order == 2:
        a2 = matrix_A_squared_closed(N).entries
        ah = matrix_AH(N).entries
        ent += g * g * (0.5 * a2 - 0.5 * a + 1j * math.pi * ah)
    elif order != 1:
        raise ValueError("order must be 1 or 2")
    return IndexMatrix(N, ent, "U", meta={"g": g, "order": order})


def U_inverse(g: float, N: int, order: int = 2, mode: str = "numeric") -> IndexMatrix:
    """Inverse of the truncated U, by Neumann series or dense solve.

    Series mode: Id - g A at order 1; adds g^2 (A^2/2 + A/2 - i pi A H) at
    order 2.  Numeric mode inverts U_truncated exactly within the truncation
    and records the residual ||U U^(-1) - Id||_inf; it refuses condition
    estimates above 1e8.
    """
    if mode == "series":
        a = matrix_A(N).entries
        ent = np.eye(N, dtype=complex) - g * a
        if order == 2:
            a2 = matrix_A_squared_closed(N).entries
            ah = matrix_AH(N).entries
            ent += g * g * (0.5 * a2 + 0.5 * a - 1j * math.pi * ah)
        elif order != 1:
            raise ValueError("order must be 1 or 2")
        return IndexMatrix(N, ent, "U_inverse", meta={"g": g, "order": order, "mode": mode})
    if mode == "numeric":
        u = U_truncated(g, N, order).entries
        cond = float(np.linalg.cond(u))
        if cond > COND_LIMIT:
            raise IllConditionedError(
                f"U at N={N}, g={g} has condition estimate {cond:.2e} > {COND_LIMIT:.0e}"
            )
        inv = np.linalg.solve(u, np.eye(N, dtype=complex))
        residual = float(np.abs(u @ inv - np.eye(N)).sum(axis=1).max())
        return IndexMatrix(
            N,
            inv,
            "U_inverse",
            meta={"g": g, "order": order, "mode": mode, "residual": residual, "cond": cond},
        )
    raise ValueError("mode must be 'series' or 'numeric'")


# ---------------------------------------------------------------------------
# counter-rotation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotatedState:
    """Initial state, expanded over sin(n x), that evolves on a single pole."""

    l: int
    coefficients: np.ndarray
    order: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")

    def synthesize(self, x_grid) -> np.ndarray:
        """sqrt(2/pi) sum_n c_n sin(n x) on the given grid."""
        x = np.asarray(x_grid, dtype=float)
        n = np.arange(1, len(self.coefficients) + 1)
        return SQRT_2_OVER_PI * (np.sin(np.outer(x, n)) @ self.coefficients)

    def to_csv(self) -> str:
        lines = ["n,re,im"]
        for i, c in enumerate(self.coefficients, start=1):
            lines.append(f"{i},{complex(c).real!r},{complex(c).imag!r}")
        return "\n".join(lines) + "\n"


def counter_rotate(
    l: int, g: float, N: int, order: int = 1, mode: str = "series"
) -> RotatedState:
    """Row l of U^(-1) applied to the free initial vector."""
    if not 1 <= l <= N:
        raise DomainError(f"need 1 <= l <= N, got l={l}, N={N}")
    if g == 0:
        coeffs = np.zeros(N, dtype=complex)
        coeffs[l - 1] = 1.0
        return RotatedState(l=l, coefficients=coeffs, order=order)
    inv = U_inverse(g, N, order, mode)
    return RotatedState(l=l, coefficients=inv.entries[l - 1].copy(), order=order)


def rotated_state_closed_form(l: int, g: float, x_grid) -> np.ndarray:
    """Compact form of the order-g counter-rotated state.

    The counter-rotation shifts the wave vector l -> l(1 - g) and rescales by
    1 - g/2; its sine series has 1/n coefficients, so a finite truncation
    shows the usual non-uniform convergence at x = pi.
    """
    x = np.asarray(x_grid, dtype=float)
    return SQRT_2_OVER_PI * (1.0 - 0.5 * g) * np.sin(l * (1.0 - g) * x)


def exponentiation_gap(g: float, N: int, subtract_ah: bool = True) -> float:
    """Distance of U through order g^2 from exp[g (1 - g/2) A].

    With the i pi g^2 A H term subtracted the gap is O(g^3); without it the
    gap is O(g^2), showing that no diagonal renormalization choice absorbs
    the A H term into the exponential.

    Both sides are built on the same truncated space: the g^2/2 A^2 term
    uses the truncated square A_N^2, matching what the matrix exponential of
    A_N produces.  Mixing in the closed-form (infinite) A^2 would leave an
    O(g^2/N) truncation mismatch that buries the O(g^3) signal.
    """
    a = matrix_A(N).entries
    ah = matrix_AH(N).entries
    u2 = np.eye(N, dtype=complex) + g * a + g * g * (
        0.5 * (a @ a) - 0.5 * a + 1j * math.pi * ah
    )
    gap = u2 - expm(g * (1.0 - 0.5 * g) * a)
    if subtract_ah:
        gap = gap - 1j * math.pi * g * g * ah
    return float(np.abs(gap).sum(axis=1).max())


# ---------------------------------------------------------------------------
# diagonal-evolution verification
# ---------------------------------------------------------------------------

def diagonal_evolution_check(
    l: int,
    g: float,
    table: PoleTable | None,
    t_grid,
    order: int = 1,
    mode: str = "series",
    n_x: int = 257,
) -> TimeSeries:
    """Cavity-integrated |contamination|^2 of the counter-rotated state.

    The counter-rotated state evolved through the exponential machinery is
    sum_n (U^(-1) V)_{ln} theta^(n)(x, t); with the exact inverse this is
    exactly xi^(l) = theta^(l)/Z^(l), so any residue measures how much the
    approximate U^(-1) leaks other poles into the evolution.  At g = 0 the
    leak vanishes identically.  Note the returned series is the squared
    cavity norm; the contamination amplitude is its square root.
    """
    t_arr = np.asarray(t_grid, dtype=float)
    if g == 0:
        return TimeSeries(t_grid=t_arr, norms=np.zeros_like(t_arr))
    if table is None:
        raise ValueError("a pole table is required for g != 0")
    if abs(table.g - g) > 1e-15:
        raise ValueError(f"pole table was built at g={table.g}, not g={g}")
    N = len(table)
    if not 1 <= l <= N:
        raise DomainError(f"need 1 <= l <= N, got l={l}")

    inv = U_inverse(g, N, order, mode).entries
    v = mixing_V_exact(g, table).entries
    coeff = (inv @ v)[l - 1].copy()
    coeff[l - 1] -= 1.0 / Z_exact(l, g, table)

    ks = table.k_values
    x = np.linspace(0.0, math.pi, n_x)
    sin_mat = np.sin(np.outer(x, ks))
    norms = np.empty_like(t_arr)
    for i, t in enumerate(t_arr):
        delta = SQRT_2_OVER_PI * (sin_mat @ (coeff * np.exp(-1j * ks**2 * t)))
        norms[i] = float(simpson(np.abs(delta) ** 2, x=x))
    return TimeSeries(t_grid=t_arr, norms=norms)
