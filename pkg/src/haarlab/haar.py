"""Complex Haar wavelets, analysis/synthesis and martingale projections.

For one-dimensional d-adic grids the wavelets are the roots-of-unity system:
on a cell I the branch-i wavelet takes the value mu(I)^{-1/2} * w^{i(j+1)} on
the j-th child, w = exp(2*pi*1j/d).  For n >= 2 the basis is the tensor sign
system: per coordinate either the normalised constant or the (left - right)
sign pattern, with at least one sign factor.

Sampled functions live on the common leaf partition of the window; a shifted
grid views the same value array through its integer leaf offset, so every
transform here first rolls the array by the grid shift and rolls back.
"""

from __future__ import annotations

import cmath
import csv
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .grid import Cube, GridSpec, GridError

ROUNDTRIP_RTOL = 1e-12


@dataclass(frozen=True)
class SampledFunction:
    """Piecewise-constant complex function on the common leaf cells of a grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        shape = (self.grid.cells_per_axis(self.grid.L),) * self.grid.n
        if vals.size != self.grid.leaf_count:
            raise GridError(
                f"value count {vals.size} != leaf count {self.grid.leaf_count}"
            )
        object.__setattr__(self, "values", vals.reshape(shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def inner(self, other: "SampledFunction") -> complex:
        """<f, g> = sum conj(f) g * leaf measure; conjugate-linear in f."""
        m = float(self.grid.leaf_measure)
        return complex(np.vdot(self.flat, other.flat) * m)

    def norm2(self) -> float:
        return float(np.sqrt(max(self.inner(self).real, 0.0)))

    def __add__(self, other):
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, s):
        if isinstance(s, SampledFunction):
            return SampledFunction(self.grid, self.values * s.values)
        return SampledFunction(self.grid, self.values * s)

    __rmul__ = __mul__

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for i, v in enumerate(self.flat):
                w.writerow([i, repr(v.real), repr(v.imag)])

    @staticmethod
    def load_csv(grid: GridSpec, path) -> "SampledFunction":
        vals = np.zeros(grid.leaf_count, dtype=np.complex128)
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                vals[int(row[0])] = float(row[1]) + 1j * float(row[2])
        return SampledFunction(grid, vals)


def constant(grid: GridSpec, value=1.0) -> SampledFunction:
    return SampledFunction(grid, np.full(grid.leaf_count, value, dtype=np.complex128))


def from_callable(grid: GridSpec, fn) -> SampledFunction:
    """Sample fn at the leaf cell centers of the unshifted partition."""
    if any(s != 0 for s in grid.sigma):
        raise GridError("sampling is defined on the unshifted partition")
    m = grid.cells_per_axis(grid.L)
    h = grid.leaf_side
    axes = [np.array([float(o + h * (i + Fraction(1, 2))) for i in range(m)]) for o in grid.origin]
    if grid.n == 1:
        vals = np.array([fn(x) for x in axes[0]], dtype=np.complex128)
    else:
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.reshape(-1) for g in grids], axis=-1)
        vals = np.array([fn(*p) for p in pts], dtype=np.complex128)
    return SampledFunction(grid, vals)


@dataclass(frozen=True)
class WaveletIndex:
    """A wavelet: its cube plus branch index.

    n = 1: branch in 1..d-1 (roots of unity); branch d is the convention for
    the normalised constant mu(I)^{-1/2} 1_I used by the product formula.
    n >= 2: branch in 1..2^n-1 encodes the sign pattern bits per coordinate.
    """

    cube: Cube
    branch: int

    def __post_init__(self):
        g = self.cube.grid
        top = g.d if g.n == 1 else 2**g.n  # branch == top denotes the constant
        if not (1 <= self.branch <= top):
            raise GridError(f"branch {self.branch} out of range")
        if self.branch != top and self.cube.level >= g.L:
            raise GridError("wavelets live strictly above leaf resolution")


@lru_cache(maxsize=None)
def _roots_of_unity(d: int) -> np.ndarray:
    if d == 2:
        return np.array([1.0 + 0.0j, -1.0 + 0.0j])
    if d == 4:
        return np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])
    return np.array([cmath.exp(2j * cmath.pi * j / d) for j in range(d)])


def branch_count(g: GridSpec) -> int:
    return (g.d - 1) if g.n == 1 else (2**g.n - 1)


def _child_values(g: GridSpec, branch: int) -> np.ndarray:
    """Unnormalised wavelet values on the children, in lexicographic order."""
    if g.n == 1:
        if branch == g.d:
            return np.ones(g.d, dtype=np.complex128)
        w = _roots_of_unity(g.d)
        return np.array([w[(branch * (j + 1)) % g.d] for j in range(g.d)])
    if branch == 2**g.n:
        return np.ones(2**g.n, dtype=np.complex128)
    bits = [(branch >> (g.n - 1 - axis)) & 1 for axis in range(g.n)]
    vals = []
    for off in sorted(itertools.product(range(2), repeat=g.n)):
        s = 1.0
        for axis in range(g.n):
            if bits[axis] and off[axis] == 1:
                s = -s
        vals.append(s)
    return np.array(vals, dtype=np.complex128)


def haar_function(w: WaveletIndex) -> SampledFunction:
    """The wavelet as a leaf-sampled function, unit L2 norm."""
    g = w.cube.grid
    scale = 1.0 / np.sqrt(float(w.cube.measure))
    child_vals = _child_values(g, w.branch) * scale
    vals = np.zeros((g.cells_per_axis(g.L),) * g.n, dtype=np.complex128)
    if w.branch == (g.d if g.n == 1 else 2**g.n):
        for idx in w.cube.leaf_indices():
            vals[idx] = scale
        return SampledFunction(g, vals)
    for slot, child in enumerate(w.cube.children()):
        for idx in child.leaf_indices():
            vals[idx] = child_vals[slot]
    return SampledFunction(g, vals)


def product_index(i: int, j: int, d: int, measure=1.0) -> tuple[int, float]:
    """Branch and scale of a pointwise product of two same-cell wavelets.

    Returns (ibar, measure**-0.5) with ibar the representative of i+j in
    [1, d]; ibar == d denotes the normalised constant on the cell.
    """
    if not (1 <= i <= d - 1 and 1 <= j <= d - 1):
        raise GridError("branches must lie in 1..d-1")
    ibar = (i + j - 1) % d + 1
    return ibar, float(measure) ** -0.5


@dataclass(frozen=True)
class HaarCoefficients:
    """Wavelet amplitudes keyed by (level, q, branch) plus top-cell averages."""

    grid: GridSpec
    coeffs: dict
    averages: dict

    def get(self, level: int, q: tuple[int, ...], branch: int) -> complex:
        return self.coeffs.get((level, q, branch), 0.0 + 0.0j)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for (level, q, branch), v in sorted(
                self.coeffs.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])
            ):
                w.writerow([level, _q_str(q), branch, repr(v.real), repr(v.imag)])
            for q, v in sorted(self.averages.items()):
                w.writerow(["avg", _q_str(q), repr(v.real), repr(v.imag)])

    @staticmethod
    def load_csv(grid: GridSpec, path) -> "HaarCoefficients":
        coeffs, averages = {}, {}
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                if row[0] == "avg":
                    averages[_q_parse(row[1])] = float(row[2]) + 1j * float(row[3])
                else:
                    key = (int(row[0]), _q_parse(row[1]), int(row[2]))
                    coeffs[key] = float(row[3]) + 1j * float(row[4])
        return HaarCoefficients(grid, coeffs, averages)


def _q_str(q: tuple[int, ...]) -> str:
    return "-".join(str(c) for c in q)


def _q_parse(text: str) -> tuple[int, ...]:
    return tuple(int(c) for c in text.split("-"))


def _rolled(f: SampledFunction, g: GridSpec) -> np.ndarray:
    """f's values in g's own leaf frame (undo the shift)."""
    shift = g.shift_cells
    if all(s == 0 for s in shift):
        return f.values
    return np.roll(f.values, shift=[-s for s in shift], axis=tuple(range(g.n)))


def _unrolled(vals: np.ndarray, g: GridSpec) -> np.ndarray:
    shift = g.shift_cells
    if all(s == 0 for s in shift):
        return vals
    return np.roll(vals, shift=list(shift), axis=tuple(range(g.n)))


def _level_averages(vals: np.ndarray, g: GridSpec, k: int) -> np.ndarray:
    """Cell averages at level k, axis size beta^k, from leaf values in g's frame."""
    beta = g.beta
    w = beta ** (g.L - k)
    out = vals
    for axis in range(g.n):
        m = out.shape[axis]
        out = out.reshape(out.shape[:axis] + (m // w, w) + out.shape[axis + 1 :]).mean(
            axis=axis + 1
        )
    return out


def expectation(f: SampledFunction, k: int) -> SampledFunction:
    """Conditional expectation onto level-k cell averages of f's grid."""
    return expectation_on(f, f.grid, k)


def expectation_on(f: SampledFunction, g: GridSpec, k: int) -> SampledFunction:
    if not (0 <= k <= g.L):
        raise GridError(f"level {k} outside 0..{g.L}")
    vals = _rolled(f, g)
    avg = _level_averages(vals, g, k)
    rep = avg
    for axis in range(g.n):
        rep = np.repeat(rep, g.beta ** (g.L - k), axis=axis)
    return SampledFunction(g, _unrolled(rep, g))


def difference(f: SampledFunction, k: int) -> SampledFunction:
    """Martingale difference E_k f - E_{k-1} f."""
    return difference_on(f, f.grid, k)


def difference_on(f: SampledFunction, g: GridSpec, k: int) -> SampledFunction:
    if not (1 <= k <= g.L):
        raise GridError(f"difference level {k} outside 1..{g.L}")
    return expectation_on(f, g, k) - expectation_on(f, g, k - 1)


def analyze(f: SampledFunction, grid: GridSpec | None = None) -> HaarCoefficients:
    """All wavelet amplitudes <h, f> plus the level-0 averages."""
    g = grid if grid is not None else f.grid
    vals = _rolled(f, g)
    beta, n = g.beta, g.n
    nb = branch_count(g)
    coeffs: dict = {}
    avg = vals
    cell_measure = g.leaf_measure
    for k in range(g.L - 1, -1, -1):
        # children averages of avg at axis blocks of beta
        child_measure = cell_measure
        cell_measure = cell_measure * beta**n
        stacked = avg
        # reshape to (cells..., child-slot) in lexicographic slot order
        for axis in range(n):
            m = stacked.shape[axis]
            stacked = stacked.reshape(
                stacked.shape[:axis] + (m // beta, beta) + stacked.shape[axis + 1 :]
            )
            stacked = np.moveaxis(stacked, axis + 1, n + axis)
        # axes 0..n-1: cell index at level k; axes n..2n-1: child offsets
        cells = stacked.reshape(stacked.shape[:n] + (beta**n,))
        scale = float(child_measure) / np.sqrt(float(cell_measure))
        for branch in range(1, nb + 1):
            pattern = np.conj(_child_values(g, branch))
            amp = cells @ pattern * scale
            for q in itertools.product(*map(range, amp.shape)):
                v = amp[q]
                if v != 0:
                    coeffs[(k, q, branch)] = complex(v)
        avg = cells.mean(axis=-1)
    averages = {
        q: complex(avg[q]) for q in itertools.product(*map(range, avg.shape))
    }
    return HaarCoefficients(g, coeffs, averages)


def synthesize(c: HaarCoefficients) -> SampledFunction:
    """Left inverse of analyze; linear in the coefficients."""
    g = c.grid
    beta, n = g.beta, g.n
    shape0 = (g.cells_per_axis(0),) * n
    avg = np.zeros(shape0, dtype=np.complex128)
    for q, v in c.averages.items():
        avg[q] = v
    for k in range(0, g.L):
        cell_measure = g.cell_measure(k)
        scale = 1.0 / np.sqrt(float(cell_measure))
        # expand cell averages to child grids, then add wavelet contributions
        child = avg
        for axis in range(n):
            child = np.repeat(child, beta, axis=axis)
        level_keys = [key for key in c.coeffs if key[0] == k]
        for key in level_keys:
            _, q, branch = key
            vals = _child_values(g, branch) * scale * c.coeffs[key]
            for slot, off in enumerate(sorted(itertools.product(range(beta), repeat=n))):
                idx = tuple(beta * qi + o for qi, o in zip(q, off))
                child[idx] += vals[slot]
        avg = child
    return SampledFunction(g, _unrolled(avg, g))


def wavelet_indices(g: GridSpec, levels=None) -> list[WaveletIndex]:
    """All wavelet indices of the grid, level-major then lexicographic."""
    if levels is None:
        levels = range(g.L)
    nb = branch_count(g)
    out = []
    for k in levels:
        for cube in g.cubes(k):
            for branch in range(1, nb + 1):
                out.append(WaveletIndex(cube, branch))
    return out
