"""Panel quadrature machinery for the spectral and ray integrals.

The direct spectral integral runs over [0, inf) split at the zeros of
sin(k pi), i.e. unit panels [j, j+1].  Three features of the integrand decide
the subdivision inside a panel:

* a resonance spike near k = n(1 - g + g^2) of width ~ pi n^2 g^2 (the dip of
  |a b|), resolved by geometrically graded cells around the spike;
* period-one wiggles of 1/(4ab) whose amplitude grows like 1/(4 pi g k)
  toward small k, resolved by a baseline subdivision tied to that amplitude;
* the phase chirp exp(-i k^2 t), resolved by ~1.5 cells per cycle.

Gauss-Legendre 15 is applied on every cell.  The infinite panel sum is then
either truncated (t > 0, where the chirp makes panel integrals decay like
1/(t j^3) with effectively random phases) or extrapolated (t = 0) with a
windowed least-squares fit of the known tail model

    S_j = S + (-1)^j [cos(x j) A(j) + sin(x j) B(j)],  A, B ~ poly(1/j),

which degenerates to plain Richardson in 1/j at x = pi.
"""

from __future__ import annotations

import math

import numpy as np

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


def baseline_subpanels(j: int, g: float) -> int:
    """Cells needed for the period-1 structure of 1/(4ab) in panel [j, j+1]."""
    delta = 1.0 / (4.0 * math.pi * abs(g) * (j + 0.5))
    if delta < 0.02:
        return 1
    if delta < 0.1:
        return 4
    if delta < 0.3:
        return 8
    return 16


def panel_cell_edges(j: int, g: float, t: float) -> np.ndarray:
    """Subdivision of the unit panel [j, j+1] adapted to spike, wiggle, chirp."""
    lo, hi = float(j), float(j + 1)
    cycles = (2 * j + 1) * abs(t) / (2.0 * math.pi)
    ns = max(baseline_subpanels(j, g), int(math.ceil(cycles * 1.5)))
    edges = set(np.linspace(lo, hi, ns + 1))
    n = j + 1
    kr = n * (1.0 - g + g * g)
    if lo - 0.5 < kr < hi + 0.5:
        w = min(max(math.pi * n * n * g * g / 4.0, 1e-9), 0.25)
        step = w
        pts = [kr]
        while step < 1.0:
            pts.append(kr - step)
            pts.append(kr + step)
            step *= 2.0
        edges.update(p for p in pts if lo < p < hi)
    return np.array(sorted(edges))


def gl_nodes_weights(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """GL-15 nodes and weights on each consecutive [edges[i], edges[i+1]] cell."""
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * GL_NODES[None, :]).ravel()
    weights = (half[:, None] * GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def direct_panel_nodes(g: float, t: float, n_panels: int):
    """Node/weight arrays for panels 0..n_panels-1 plus per-node panel index."""
    nodes, weights, panel_of = [], [], []
    for j in range(n_panels):
        nd, w = gl_nodes_weights(panel_cell_edges(j, g, t))
        nodes.append(nd)
        weights.append(w)
        panel_of.append(np.full(len(nd), j, dtype=np.intp))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(panel_of)


def truncation_panels(l: int, t: float, tol: float, cap: int = 800) -> int:
    """Panels needed so the first neglected panel integral is below ~tol/3.

    Uses the non-stationary-phase envelope |P_j| ~ l / (2 t j^3).
    """
    if t <= 0:
        raise ValueError("truncation_panels applies to t > 0 only")
    k = (3.4 * max(l, 1) / (t * max(tol, 1e-14))) ** (1.0 / 3.0)
    return int(np.clip(math.ceil(k), 48, cap))


def tail_mode_fit(
    partial_sums: np.ndarray,
    x: float,
    j_lo: int,
    max_power: int = 6,
    rcond: float = 1e-11,
) -> tuple[complex, float]:
    """Extrapolate the panel partial sums to j = infinity at t = 0.

    Returns (limit, residual_rms).  The residual of the windowed fit is the
    natural error gauge: it stays at rounding level where the model holds and
    grows visibly in the one hard sliver 0 < pi - x << 1 where the slow mode
    cos((pi - x) j) barely rotates across the window.
    """
    M = len(partial_sums)
    js = np.arange(j_lo, M)
    jj = js + 1.0
    sgn = (-1.0) ** (js % 2)
    cols = [np.ones_like(jj)]
    for p in range(1, max_power + 1):
        cols.append(sgn * np.cos(x * js) / jj**p)
        cols.append(sgn * np.sin(x * js) / jj**p)
    A = np.array(cols).T.astype(complex)
    norms = np.linalg.norm(A, axis=0)
    keep = norms > 1e-14
    coef, *_ = np.linalg.lstsq(A[:, keep] / norms[keep], partial_sums[j_lo:], rcond=rcond)
    resid = partial_sums[j_lo:] - (A[:, keep] / norms[keep]) @ coef
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    return complex(coef[0] / norms[keep][0]), rms


def ray_cell_edges(t: float, x: float, k_cap: float = 4096.0) -> np.ndarray:
    """Cells along the rotated-ray parameter for exp(-k^2 t) damping.

    For t > 0 the Gaussian factor confines the integrand to k <~ 6/sqrt(t);
    beyond that geometric doubling reaches K = max(10, sqrt(36/t)) where
    exp(-K^2 t) <= e^-36.  At t = 0 the envelope decays like
    exp(-(pi - x) k / sqrt(2)), so the cutoff scales with 1/(pi - x); at
    x = pi, t = 0 the ray integral is marginally divergent and the caller
    must rely on the measured tail estimate.
    """
    if t > 0:
        k_max = max(10.0, math.sqrt(36.0 / t))
        core = min(6.0 / math.sqrt(t), k_max)
        edges = list(np.linspace(0.0, core, 13))
        while edges[-1] < k_max:
            edges.append(min(edges[-1] * 2.0, k_max))
    else:
        rate = (math.pi - x) / math.sqrt(2.0)
        k_max = min(max(10.0, 40.0 / max(rate, 1e-9)), k_cap)
        edges = list(np.linspace(0.0, 10.0, 21))
        while edges[-1] < k_max:
            edges.append(min(edges[-1] * 1.5, k_max))
    return np.array(edges)


def refine_edges(edges: np.ndarray, factor: int) -> np.ndarray:
    """Split every cell of an edge sequence into `factor` equal parts."""
    if factor <= 1:
        return edges
    out = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        out.extend(np.linspace(a, b, factor + 1)[1:])
    return np.array(out)
