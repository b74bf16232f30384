"""Lorentz, Schatten, martingale Besov/BMO, oscillation and quadrature norms."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .grid import Cube, GridFamily, GridSpec, GridError
from .haar import (
    SampledFunction,
    analyze,
    difference_on,
    expectation_on,
)
from .martops import DenseOperator


class NormError(ValueError):
    pass


@dataclass(frozen=True)
class LorentzIndex:
    p: float
    q: float = math.inf

    def __post_init__(self):
        if not (self.p > 0):
            raise NormError("p must be positive")
        if not (self.q > 0):
            raise NormError("q must be positive (may be inf)")


def lorentz_norm(a, idx: LorentzIndex) -> float:
    """ell_{p,q} quasi-norm of a finite nonnegative sequence.

    Uses the k^{1/p-1/q} weighting on the nonincreasing rearrangement a*,
    so ell_{p,p} coincides with ell_p exactly.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.size == 0:
        return 0.0
    if np.any(a < 0):
        raise NormError("sequence entries must be nonnegative")
    star = np.sort(a)[::-1]
    k = np.arange(1, star.size + 1, dtype=np.float64)
    p, q = idx.p, idx.q
    if math.isinf(q):
        return float(np.max(k ** (1.0 / p) * star))
    return float(np.sum((k ** (1.0 / p - 1.0 / q) * star) ** q) ** (1.0 / q))


def singular_values(op: DenseOperator) -> np.ndarray:
    """Nonincreasing singular values of the operator."""
    try:
        return op.singular_values()
    except np.linalg.LinAlgError as exc:  # pragma: no cover - should not happen
        raise NormError(f"svd failure: {exc}") from exc


def schatten(op: DenseOperator, idx: LorentzIndex) -> float:
    """Schatten-Lorentz norm: the Lorentz norm of the singular values."""
    return lorentz_norm(singular_values(op), idx)


def besov_martingale(b: SampledFunction, p: float, grid: GridSpec | None = None) -> float:
    """(sum over wavelets |<h, b>|^p / |I|^{p/2})^{1/p} on the truncated grid."""
    if not (p > 0):
        raise NormError("p must be positive")
    g = grid if grid is not None else b.grid
    coeffs = analyze(b, g)
    total = 0.0
    for (level, _q, _branch), amp in sorted(coeffs.coeffs.items()):
        measure = float(g.cell_measure(level))
        total += (abs(amp) / math.sqrt(measure)) ** p
    return total ** (1.0 / p)


def _dval(g: GridSpec) -> int:
    """Branching of the grid viewed as a one-parameter martingale."""
    return g.d if g.n == 1 else 2**g.n


def _lp_norm(f: SampledFunction, p: float) -> float:
    m = float(f.grid.leaf_measure)
    return float(np.sum(np.abs(f.flat) ** p) * m) ** (1.0 / p)


def besov_martingale_diff(b: SampledFunction, p: float, grid: GridSpec | None = None) -> float:
    """(sum_k d^k ||d_k b||_p^p)^{1/p} over levels 1..L."""
    if not (p > 0):
        raise NormError("p must be positive")
    g = grid if grid is not None else b.grid
    dd = _dval(g)
    total = 0.0
    for k in range(1, g.L + 1):
        total += dd**k * _lp_norm(difference_on(b, g, k), p) ** p
    return total ** (1.0 / p)


def besov_martingale_tail(b: SampledFunction, p: float, grid: GridSpec | None = None) -> float:
    """(sum_k d^k ||b - E_k b||_p^p)^{1/p} over levels 0..L-1."""
    if not (p >= 1):
        raise NormError("the tail form needs p >= 1")
    g = grid if grid is not None else b.grid
    dd = _dval(g)
    total = 0.0
    for k in range(0, g.L):
        total += dd**k * _lp_norm(b - expectation_on(b, g, k), p) ** p
    return total ** (1.0 / p)


def bmo_martingale(b: SampledFunction, grid: GridSpec | None = None) -> float:
    """sup_n || E_n sum_{k>n} |d_k b|^2 ||_inf^{1/2} on the truncated grid."""
    g = grid if grid is not None else b.grid
    diffs = [difference_on(b, g, k) for k in range(1, g.L + 1)]
    best = 0.0
    for n in range(0, g.L):
        acc = np.zeros_like(b.values, dtype=np.float64)
        for k in range(n + 1, g.L + 1):
            acc += np.abs(diffs[k - 1].values) ** 2
        cond = expectation_on(SampledFunction(g, acc), g, n)
        best = max(best, float(np.max(cond.values.real)))
    return math.sqrt(best)


def _cell_values(b: SampledFunction, Q: Cube) -> np.ndarray:
    shape = (b.grid.cells_per_axis(b.grid.L),) * b.grid.n
    flat = [np.ravel_multi_index(idx, shape) for idx in Q.leaf_indices()]
    return b.flat[flat]


def mo1(b: SampledFunction, Q: Cube) -> float:
    """Mean oscillation of b over the cube."""
    vals = _cell_values(b, Q)
    return float(np.mean(np.abs(vals - vals.mean())))


def mo2(b: SampledFunction, Q: Cube) -> float:
    """Quadratic mean oscillation of b over the cube."""
    vals = _cell_values(b, Q)
    return float(np.sqrt(np.mean(np.abs(vals - vals.mean()) ** 2)))


def oscillation_sequence(b: SampledFunction, fam: GridFamily, which: str = "mo1"):
    """Per-member lists of oscillations over all cubes at levels 0..L-1."""
    fn = mo1 if which == "mo1" else mo2
    out = []
    for g in fam:
        vals = []
        for k in range(0, g.L):
            for Q in g.cubes(k):
                vals.append(fn(b, Q))
        out.append(np.array(vals))
    return out


def weak_besov(
    b: SampledFunction, fam: GridFamily, idx: LorentzIndex, which: str = "mo1"
) -> float:
    """Sum over family members of the Lorentz norm of their oscillations."""
    return float(
        sum(lorentz_norm(vals, idx) for vals in oscillation_sequence(b, fam, which))
    )


def besov_continuous(b: SampledFunction, p: float, epsilon: float) -> float:
    """Excised midpoint quadrature of the two-point Besov seminorm.

    Sums |b(c)-b(c')|^p / |c-c'|^{2n} over leaf-center pairs at distance
    >= epsilon; the diagonal singularity is never evaluated.
    """
    return excised_besov_values(b, p, [epsilon])[0] ** (1.0 / p)


def excised_besov_values(b: SampledFunction, p: float, epsilons) -> list[float]:
    """Excised double sums (the p-th powers) for several cutoffs in one sweep."""
    table = excised_besov_table(b, [p], epsilons)
    return table[float(p)]


def excised_besov_table(b: SampledFunction, p_list, epsilons) -> dict:
    """One displacement sweep producing the excised sums for every (p, eps).

    Returns {p: [sum at eps for eps in epsilons]}.  Pair distances are exact
    multiples of the leaf side, so the excision threshold is unambiguous.
    """
    ps = [float(p) for p in p_list]
    if any(p < 1 for p in ps):
        raise NormError("quadrature needs p >= 1")
    g = b.grid
    h = float(g.leaf_side)
    for eps in epsilons:
        if eps < 2 * h:
            raise NormError("epsilon must be at least 2 leaf cell sides")
    m = float(g.leaf_measure)
    n = g.n
    vals = b.values
    if np.all(vals.imag == 0):
        vals = np.ascontiguousarray(vals.real)
        absdiff = np.abs
    else:
        absdiff = np.abs
    eps_sorted = sorted(set(float(e) for e in epsilons))
    sums = {p: {e: 0.0 for e in eps_sorted} for p in ps}
    size = vals.shape[0]

    def accumulate(diff_arr, dist):
        a = absdiff(diff_arr)
        kern = 2.0 * m * m / dist ** (2 * n)
        for p in ps:
            total = float(np.sum(a**p)) * kern
            for e in eps_sorted:
                if dist >= e:
                    sums[p][e] += total

    if n == 1:
        v = vals.reshape(-1)
        for t in range(1, size):
            dist = t * h
            if dist < eps_sorted[0]:
                continue
            accumulate(v[t:] - v[:-t], dist)
    elif n == 2:
        for tx in range(0, size):
            rowa = vals[tx:, :]
            rowb = vals[: size - tx, :]
            for ty in range(-size + 1, size):
                if tx == 0 and ty <= 0:
                    continue  # pair each displacement once, doubled in accumulate
                dist = h * math.hypot(tx, ty)
                if dist < eps_sorted[0]:
                    continue
                if ty >= 0:
                    d = rowa[:, ty:] - rowb[:, : size - ty]
                else:
                    d = rowa[:, :ty] - rowb[:, -ty:]
                accumulate(d, dist)
    else:
        raise NormError("quadrature implemented for n in {1, 2}")
    return {p: [sums[p][float(e)] for e in epsilons] for p in ps}


def sobolev_seminorm(b: SampledFunction, p: float) -> float:
    """||grad b||_p with centered differences, one-sided at the window edge."""
    if not (p >= 1):
        raise NormError("p must be >= 1")
    g = b.grid
    h = float(g.leaf_side)
    vals = b.values
    grads = []
    for axis in range(g.n):
        gax = np.gradient(vals.real, h, axis=axis) + 1j * np.gradient(
            vals.imag, h, axis=axis
        )
        grads.append(gax)
    mag = np.sqrt(sum(np.abs(gx) ** 2 for gx in grads))
    m = float(g.leaf_measure)
    return float(np.sum(mag**p) * m) ** (1.0 / p)
