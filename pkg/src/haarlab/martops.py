"""Martingale operators as dense matrices over the leaf-cell basis.

Matrices act on the flattened leaf values of a SampledFunction.  The leaf
cells all carry the same measure, so operator adjoints are plain conjugate
transposes and operator singular values equal matrix singular values.

Assembly order is fixed (level-major, then lexicographic cube order) so
repeated builds are bit-identical.
"""

from __future__ import annotations

import itertools
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .grid import Cube, GridSpec, GridError
from .haar import (
    SampledFunction,
    WaveletIndex,
    branch_count,
    expectation_on,
    haar_function,
)

OP_MAGIC = b"HAARLAB-OP v1\n"


class OperatorError(ValueError):
    pass


class CoefficientBoundError(OperatorError):
    pass


@dataclass
class DenseOperator:
    """Complex matrix over the leaf-indicator basis of a grid."""

    grid: GridSpec
    matrix: np.ndarray
    basis: str = "leaf"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        nleaf = self.grid.leaf_count
        if m.shape != (nleaf, nleaf):
            raise OperatorError(f"matrix shape {m.shape} != ({nleaf}, {nleaf})")
        if not np.all(np.isfinite(m.view(np.float64))):
            raise OperatorError("matrix entries must be finite")
        self.matrix = m

    def apply(self, f: SampledFunction) -> SampledFunction:
        return SampledFunction(self.grid, self.matrix @ f.flat)

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.grid, self.matrix.conj().T, self.basis)

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        self._check_same(other)
        return DenseOperator(self.grid, self.matrix @ other.matrix, self.basis)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        self._check_same(other)
        return DenseOperator(self.grid, self.matrix + other.matrix, self.basis)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        self._check_same(other)
        return DenseOperator(self.grid, self.matrix - other.matrix, self.basis)

    def __mul__(self, s) -> "DenseOperator":
        return DenseOperator(self.grid, self.matrix * s, self.basis)

    __rmul__ = __mul__

    def __neg__(self) -> "DenseOperator":
        return DenseOperator(self.grid, -self.matrix, self.basis)

    def _check_same(self, other: "DenseOperator"):
        if self.grid != other.grid:
            raise OperatorError("operators live on different grids")

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)

    def spectral_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def save(self, path):
        header = json.dumps(
            {
                "grid": json.loads(self.grid.to_json()),
                "rows": self.matrix.shape[0],
                "cols": self.matrix.shape[1],
                "dtype": "complex128",
                "basis": self.basis,
            },
            sort_keys=True,
        ).encode()
        with open(path, "wb") as fh:
            fh.write(OP_MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.matrix).tobytes())

    @staticmethod
    def load(path) -> "DenseOperator":
        with open(path, "rb") as fh:
            magic = fh.read(len(OP_MAGIC))
            if magic != OP_MAGIC:
                raise OperatorError("not an operator container")
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode())
            grid = GridSpec.from_json(json.dumps(header["grid"]))
            raw = fh.read()
        mat = np.frombuffer(raw, dtype=np.complex128).reshape(
            header["rows"], header["cols"]
        )
        return DenseOperator(grid, mat.copy(), header.get("basis", "leaf"))

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            for r in range(self.matrix.shape[0]):
                for c in range(self.matrix.shape[1]):
                    v = self.matrix[r, c]
                    fh.write(f"{r},{c},{v.real!r},{v.imag!r}\n")


def identity(g: GridSpec) -> DenseOperator:
    return DenseOperator(g, np.eye(g.leaf_count, dtype=np.complex128))


def zero(g: GridSpec) -> DenseOperator:
    return DenseOperator(g, np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128))


def multiplier(b: SampledFunction) -> DenseOperator:
    """Pointwise multiplication by b."""
    return DenseOperator(b.grid, np.diag(b.flat))


def _expectation_matrix(g: GridSpec, k: int) -> np.ndarray:
    n = g.leaf_count
    shape = (g.cells_per_axis(g.L),) * g.n
    mat = np.zeros((n, n), dtype=np.complex128)
    for cube in g.cubes(k):
        flat = [np.ravel_multi_index(idx, shape) for idx in cube.leaf_indices()]
        mat[np.ix_(flat, flat)] = 1.0 / len(flat)
    return mat


# Expectation matrices are reused heavily while assembling operators.
_EK_CACHE: dict = {}


def expectation_matrix(g: GridSpec, k: int) -> np.ndarray:
    key = (g, k)
    if key not in _EK_CACHE:
        _EK_CACHE[key] = _expectation_matrix(g, k)
    return _EK_CACHE[key].copy()


def difference_matrix(g: GridSpec, k: int) -> np.ndarray:
    return expectation_matrix(g, k) - expectation_matrix(g, k - 1)


def paraproduct(b: SampledFunction, grid: GridSpec | None = None) -> DenseOperator:
    """f -> sum_k (d_k b) * E_{k-1} f, the low-high part of M_b."""
    g = grid if grid is not None else b.grid
    from .haar import difference_on

    acc = np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128)
    for k in range(1, g.L + 1):
        dkb = difference_on(b, g, k).flat
        acc += dkb[:, None] * expectation_matrix(g, k - 1)
    return DenseOperator(g, acc)


def paraproduct_haar_form(b: SampledFunction, grid: GridSpec | None = None) -> DenseOperator:
    """Alternative assembly of the paraproduct from its wavelet expansion."""
    g = grid if grid is not None else b.grid
    from .haar import analyze, wavelet_indices

    coeffs = analyze(b, g)
    m = float(g.leaf_measure)
    acc = np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128)
    for w in wavelet_indices(g):
        amp = coeffs.get(w.cube.level, w.cube.q, w.branch)
        if amp == 0:
            continue
        h = haar_function(w).flat
        ind = np.zeros(g.leaf_count, dtype=np.complex128)
        for idx in w.cube.leaf_indices():
            flat = np.ravel_multi_index(idx, (g.cells_per_axis(g.L),) * g.n)
            ind[flat] = 1.0
        weight = ind * (m / float(w.cube.measure))  # <1_I/|I|, f> row
        acc += amp * np.outer(h, weight)
    return DenseOperator(g, acc)


def paraproduct_adjoint(b: SampledFunction, grid: GridSpec | None = None) -> DenseOperator:
    """f -> sum_k E_{k-1}(conj(d_k b) * d_k f), the adjoint paraproduct."""
    g = grid if grid is not None else b.grid
    from .haar import difference_on

    acc = np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128)
    for k in range(1, g.L + 1):
        dkb = difference_on(b, g, k).flat
        acc += expectation_matrix(g, k - 1) @ (
            np.conj(dkb)[:, None] * difference_matrix(g, k)
        )
    return DenseOperator(g, acc)


def diagonal_part(b: SampledFunction, grid: GridSpec | None = None) -> DenseOperator:
    """f -> sum_k (d_k b) * (d_k f), the high-high diagonal pairing."""
    g = grid if grid is not None else b.grid
    from .haar import difference_on

    acc = np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128)
    for k in range(1, g.L + 1):
        dkb = difference_on(b, g, k).flat
        acc += dkb[:, None] * difference_matrix(g, k)
    return DenseOperator(g, acc)


def remainder(b: SampledFunction, grid: GridSpec | None = None) -> DenseOperator:
    """f -> sum_k E_{k-1}b * d_k f, the high-low remainder."""
    g = grid if grid is not None else b.grid
    acc = np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128)
    for k in range(1, g.L + 1):
        ekb = expectation_on(b, g, k - 1).flat
        acc += ekb[:, None] * difference_matrix(g, k)
    return DenseOperator(g, acc)


def cascade(a: SampledFunction, b: SampledFunction, grid: GridSpec | None = None) -> DenseOperator:
    """f -> sum_k d_k a * (sum_{j<=k-1} d_j b * d_j f)."""
    g = grid if grid is not None else a.grid
    from .haar import difference_on

    acc = np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128)
    inner = np.zeros_like(acc)
    for k in range(1, g.L + 1):
        dka = difference_on(a, g, k).flat
        acc += dka[:, None] * inner
        dkb = difference_on(b, g, k).flat
        inner += dkb[:, None] * difference_matrix(g, k)
    return DenseOperator(g, acc)


def commutator(A: DenseOperator, B: DenseOperator) -> DenseOperator:
    """A B - B A."""
    if A.grid != B.grid:
        raise OperatorError("dimension mismatch: operators on different grids")
    return DenseOperator(A.grid, A.matrix @ B.matrix - B.matrix @ A.matrix)


# -- dyadic shifts ----------------------------------------------------------


@dataclass
class ShiftCoefficients:
    """Amplitudes a[(K.level, K.q, I.q, J.q, xi, eta)] of a dyadic shift.

    I and J run over depth-i and depth-j descendants of K; every amplitude
    obeys |a| <= sqrt(|I||J|)/|K|.
    """

    grid: GridSpec
    i: int
    j: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.i < 0 or self.j < 0:
            raise OperatorError("shift depths must be nonnegative")
        if max(self.i, self.j) > self.grid.L - 1:
            raise OperatorError("shift depths exceed the truncation")
        self.validate()

    def bound(self, k: int) -> float:
        g = self.grid
        mi = float(g.cell_measure(k + self.i))
        mj = float(g.cell_measure(k + self.j))
        mk = float(g.cell_measure(k))
        return np.sqrt(mi * mj) / mk

    def validate(self):
        for (klev, kq, iq, jq, xi, eta), a in self.coeffs.items():
            if abs(a) > self.bound(klev) * (1 + 1e-12):
                raise CoefficientBoundError(
                    f"|a|={abs(a)} exceeds sqrt(|I||J|)/|K|={self.bound(klev)}"
                )

    def top_level(self) -> int:
        """Deepest admissible K level within the truncation."""
        return self.grid.L - 1 - max(self.i, self.j)


def shift_levels(g: GridSpec, i: int, j: int) -> range:
    return range(0, g.L - max(i, j))


def _descendants(c: Cube, depth: int) -> list[Cube]:
    cubes = [c]
    for _ in range(depth):
        cubes = [ch for cur in cubes for ch in cur.children()]
    return cubes


def max_random_shift(g: GridSpec, i: int, j: int, rng: np.random.Generator) -> ShiftCoefficients:
    """Coefficients at the magnitude bound with uniform random phases.

    For n = 1 dyadic grids the per-K Frobenius mass is exactly one, which is
    what makes the contraction property sharp; for n >= 2 the magnitudes are
    scaled by 1/(2^n - 1) so the Frobenius bound still applies.
    """
    nb = branch_count(g)
    damp = 1.0 if nb == 1 else 1.0 / nb
    coeffs = {}
    for klev in shift_levels(g, i, j):
        for K in g.cubes(klev):
            Is = _descendants(K, i)
            Js = _descendants(K, j)
            mag = None
            for I in Is:
                for J in Js:
                    for xi in range(1, nb + 1):
                        for eta in range(1, nb + 1):
                            phase = np.exp(2j * np.pi * rng.random())
                            if mag is None:
                                mag = (
                                    np.sqrt(float(I.measure) * float(J.measure))
                                    / float(K.measure)
                                )
                            coeffs[(klev, K.q, I.q, J.q, xi, eta)] = damp * mag * phase
    return ShiftCoefficients(g, i, j, coeffs)


def haar_delta_shift(g: GridSpec) -> ShiftCoefficients:
    """i = j = 0 identity-style coefficients a_{KKK}^{xi xi} = 1."""
    nb = branch_count(g)
    coeffs = {}
    for klev in shift_levels(g, 0, 0):
        for K in g.cubes(klev):
            for xi in range(1, nb + 1):
                coeffs[(klev, K.q, K.q, K.q, xi, xi)] = 1.0 + 0.0j
    return ShiftCoefficients(g, 0, 0, coeffs)


def dyadic_shift(coeffs: ShiftCoefficients) -> DenseOperator:
    """f -> sum_K sum_{I,J,xi,eta} a <H_I^xi, f> H_J^eta."""
    g = coeffs.grid
    coeffs.validate()
    m = float(g.leaf_measure)
    acc = np.zeros((g.leaf_count, g.leaf_count), dtype=np.complex128)
    for key in sorted(coeffs.coeffs, key=_shift_key_order):
        klev, kq, iq, jq, xi, eta = key
        a = coeffs.coeffs[key]
        if a == 0:
            continue
        hI = haar_function(WaveletIndex(Cube(g, klev + coeffs.i, iq), xi)).flat
        hJ = haar_function(WaveletIndex(Cube(g, klev + coeffs.j, jq), eta)).flat
        acc += a * np.outer(hJ, np.conj(hI)) * m
    return DenseOperator(g, acc)


def _shift_key_order(key):
    klev, kq, iq, jq, xi, eta = key
    return (klev, kq, iq, jq, xi, eta)


def shift_weight_bound(i: int, j: int, n: int, alpha: float) -> float:
    """Decay weight (1+m)^{2(n+alpha)} 2^{-alpha m}, m = max(i, j)."""
    if not (0 < alpha <= 1):
        raise OperatorError("alpha must lie in (0, 1]")
    if n < 1:
        raise OperatorError("dimension must be >= 1")
    m = max(i, j)
    return float((1 + m) ** (2 * (n + alpha)) * 2.0 ** (-alpha * m))


# -- commutator block structure ---------------------------------------------


def shift_remainder_commutator(
    coeffs: ShiftCoefficients, b: SampledFunction
) -> DenseOperator:
    """[S^{ij}, R_b], the object whose square has the block structure."""
    S = dyadic_shift(coeffs)
    R = remainder(b, coeffs.grid)
    op = commutator(S, R)
    op.basis = "leaf"
    op._block_meta = (coeffs, b)  # caller metadata for block_extract
    return op


def wavelet_matrix(g: GridSpec, indices) -> np.ndarray:
    """Columns are the wavelet vectors of the given indices."""
    cols = [haar_function(w).flat for w in indices]
    return np.stack(cols, axis=1) if cols else np.zeros((g.leaf_count, 0))


def block_indices(g: GridSpec, K: Cube, i: int) -> list[WaveletIndex]:
    """Wavelet sub-basis {H_I^zeta : I ⊆ K at depth i}, lexicographic."""
    nb = branch_count(g)
    out = []
    for I in _descendants(K, i):
        for zeta in range(1, nb + 1):
            out.append(WaveletIndex(I, zeta))
    return out


def block_extract(phi: DenseOperator, K: Cube, i: int) -> np.ndarray:
    """The B_K* B_K block of phi*phi in the depth-i wavelet sub-basis of K."""
    if not hasattr(phi, "_block_meta"):
        raise OperatorError(
            "not a shift-remainder commutator: block metadata missing"
        )
    g = phi.grid
    m = float(g.leaf_measure)
    W = wavelet_matrix(g, block_indices(g, K, i))
    G = phi.matrix @ W
    return (G.conj().T @ G) * m
