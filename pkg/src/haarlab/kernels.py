"""Singular-integral kernels: standard estimates, non-degeneracy, ball pairs,
and off-diagonal discretization on grid windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec
from .haar import SampledFunction
from .martops import DenseOperator, commutator, multiplier


class KernelError(ValueError):
    pass


class WitnessNotFoundError(KernelError):
    pass


class PairNotFoundError(KernelError):
    pass


def _riesz_constant(n: int) -> float:
    return math.gamma((n + 1) / 2) / math.pi ** ((n + 1) / 2)


@dataclass
class KernelSpec:
    """Descriptor of a kernel K(x, y) with its standard-estimate constants.

    Presets: "hilbert" (1/(pi (x-y)), n = 1), "riesz_j" (j in params),
    "homogeneous" (params["omega"](theta) / |x-y|^n, n = 2), "halfpower"
    (1/|x-y|^{n/2}, violates the size bound; for negative tests), "zero".
    """

    name: str
    n: int = 1
    alpha: float = 1.0
    size_constant: float | None = None
    c0: float | None = None
    nondegenerate: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise KernelError("alpha must lie in (0, 1]")
        if self.name == "hilbert":
            self.n = 1
            if self.size_constant is None:
                # sup of the two-term smoothness ratio over |x-y| > 2|x-x'|
                self.size_constant = 4.0 / math.pi
            if self.c0 is None:
                self.c0 = math.pi
        elif self.name == "riesz":
            j = self.params.get("j", 1)
            if not (1 <= j <= self.n):
                raise KernelError("riesz component out of range")
            if self.size_constant is None:
                # gradient bound (n+2) c_n / r^{n+1}, doubled terms, segment
                # factor 2^{n+1} from |x-y| > 2|x-x'|
                self.size_constant = (self.n + 2.0) * 2.0 ** (self.n + 2) * _riesz_constant(self.n)
            if self.c0 is None:
                self.c0 = 1.0 / _riesz_constant(self.n)
        elif self.name == "homogeneous":
            if "omega" not in self.params:
                raise KernelError("homogeneous preset needs params['omega']")
            if self.n != 2:
                raise KernelError("homogeneous preset implemented for n = 2")
            if self.size_constant is None:
                self.size_constant = self.params.get("size_constant", 10.0)
            if self.c0 is None:
                self.c0 = self.params.get("c0", 10.0)
        elif self.name == "halfpower":
            self.nondegenerate = False
            if self.size_constant is None:
                self.size_constant = 1.0
            if self.c0 is None:
                self.c0 = 1.0
        elif self.name == "zero":
            self.nondegenerate = False
            if self.size_constant is None:
                self.size_constant = 0.0
            if self.c0 is None:
                self.c0 = 1.0
        else:
            raise KernelError(f"unknown kernel preset {self.name!r}")

    def __call__(self, x, y):
        """Evaluate K(x, y).

        For n = 1 the arguments are plain coordinate arrays (no trailing
        axis); for n >= 2 they are arrays of shape (..., n).
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.n == 1:
            diff = (x - y)[..., None]
        else:
            diff = x - y
        r = np.sqrt(np.sum(diff**2, axis=-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.name == "hilbert":
                out = 1.0 / (math.pi * diff[..., 0])
            elif self.name == "riesz":
                j = self.params.get("j", 1)
                out = _riesz_constant(self.n) * diff[..., j - 1] / r ** (self.n + 1)
            elif self.name == "homogeneous":
                omega = self.params["omega"]
                theta = np.arctan2(diff[..., 1], diff[..., 0])
                out = np.asarray(omega(theta), dtype=np.complex128) / r**self.n
            elif self.name == "halfpower":
                out = 1.0 / r ** (self.n / 2.0)
            else:  # zero
                out = np.zeros_like(r)
        out = np.asarray(out, dtype=np.complex128)
        out[~np.isfinite(out)] = 0.0
        return out if out.ndim else complex(out)


def standard_estimate_check(K: KernelSpec, samples: int = 2000, seed: int = 0) -> dict:
    """Monte-Carlo check of the size and smoothness bounds.

    Triples (x, x', y) are drawn with |x - y| > 2 |x - x'| > 0 across several
    scales; reports the worst observed ratios against the declared constant.
    """
    rng = np.random.default_rng(np.random.Philox(key=seed))
    n = K.n

    def kv(a, b):
        return complex(K(a if n > 1 else float(a[0]), b if n > 1 else float(b[0])))

    size_ratio = 0.0
    smooth_ratio = 0.0
    for _ in range(samples):
        scale = 2.0 ** rng.uniform(-6, 3)
        x = rng.uniform(-1, 1, size=n) * scale
        direction = rng.normal(size=n)
        direction /= np.linalg.norm(direction)
        dist = scale * 2.0 ** rng.uniform(-3, 3)
        y = x + direction * dist
        step = rng.normal(size=n)
        step /= np.linalg.norm(step)
        xp = x + step * dist * 0.5 * rng.uniform(0.05, 0.999)
        r = float(np.linalg.norm(x - y))
        h = float(np.linalg.norm(x - xp))
        if h == 0 or r <= 2 * h:
            continue
        size_ratio = max(size_ratio, abs(kv(x, y)) * r**n)
        smooth = abs(kv(x, y) - kv(xp, y)) + abs(kv(y, x) - kv(y, xp))
        smooth_ratio = max(smooth_ratio, smooth * r ** (n + K.alpha) / h**K.alpha)
    declared = K.size_constant
    passed = size_ratio <= declared * (1 + 1e-6) and smooth_ratio <= declared * (
        1 + 1e-6
    )
    return {
        "size_ratio": size_ratio,
        "smooth_ratio": smooth_ratio,
        "declared": declared,
        "passed": bool(passed),
    }


def _sphere_directions(n: int, count: int = 720) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    raise KernelError("witness search implemented for n in {1, 2}")


def nondegenerate_witness(K: KernelSpec, y, r: float):
    """A point x with |x - y| >= r and |K(x, y)| >= 1/(c0 r^n).

    Searches the sphere |x - y| = r; for homogeneous kernels the direction
    maximising |Omega| plays the role of the Lebesgue point.
    """
    if not K.nondegenerate:
        raise WitnessNotFoundError(f"{K.name} kernel is degenerate")
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    target = 1.0 / (K.c0 * r**K.n)
    best_x, best_v = None, -1.0
    for d in _sphere_directions(K.n):
        x = y + r * d
        v = abs(K(x if K.n > 1 else x[0], y if K.n > 1 else y[0]))
        if v > best_v:
            best_v, best_x = v, x
    if best_v >= target * (1 - 1e-9):
        return best_x if K.n > 1 else float(best_x[0])
    raise WitnessNotFoundError(
        f"no witness at radius {r}: best |K| = {best_v}, target {target}"
    )


def ball_pair(K: KernelSpec, x0, r: float, A: float, probe: int = 6):
    """Disjoint ball center y0 at distance ~ A r with |K(y0, x0)| ~ 1/(A r)^n.

    Returns (y0, diagnostics): the oscillation bound
    sup |K(y1, x1) - K(y0, x0)| * A^{n+alpha} r^n over probe points of the
    two balls, and the phase-coherence ratio rho = max |Im| / Re of the
    phase-normalised kernel values.
    """
    if A < 3:
        raise KernelError("separation must satisfy A >= 3")
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    n = K.n

    def kval(a, b):
        return K(a if n > 1 else a[0], b if n > 1 else b[0])

    # radial scan in [Ar, 2Ar] over sphere directions (golden-ratio refined)
    target = 1.0 / (K.c0 * (A * r) ** n)
    y0 = None
    for rad in np.linspace(A * r, 2 * A * r, 9):
        for d in _sphere_directions(n):
            cand = x0 + rad * d
            if abs(kval(cand, x0)) >= target * (1 - 1e-9):
                y0 = cand
                break
        if y0 is not None:
            break
    if y0 is None:
        raise PairNotFoundError(f"no partner ball at separation {A}")
    k0 = kval(y0, x0)
    # probe grid inside both balls
    if n == 1:
        offs = np.linspace(-r, r, probe)[:, None] * 0.999
    else:
        th = np.linspace(0, 2 * math.pi, probe, endpoint=False)
        ring = np.stack([np.cos(th), np.sin(th)], axis=1)
        offs = np.concatenate([np.zeros((1, n)), 0.7 * r * ring, 0.999 * r * ring])
    osc = 0.0
    rho = 0.0
    phase = np.conj(k0) / abs(k0)
    for ox in offs:
        for oy in offs:
            k1 = kval(y0 + oy, x0 + ox)
            osc = max(osc, abs(k1 - k0))
            k1n = k1 * phase
            if k1n.real > 0:
                rho = max(rho, abs(k1n.imag) / k1n.real)
            else:
                rho = max(rho, math.inf)
    dist = float(np.linalg.norm(y0 - x0))
    diag = {
        "distance": dist,
        "distance_ratio": dist / (A * r),
        "k0": complex(k0),
        "normalized_k0": abs(k0) * (A * r) ** n,
        "oscillation": osc * A ** (n + K.alpha) * r**n,
        "rho": rho,
    }
    return (y0 if n > 1 else float(y0[0])), diag


def discretize(K: KernelSpec, g: GridSpec) -> DenseOperator:
    """Off-diagonal center-rule matrix K(c, c') * leaf measure, zero diagonal."""
    if g.n != K.n:
        raise KernelError("kernel and grid dimensions differ")
    centers = np.array(
        [[float(c) for c in cube.center()] for cube in g.cubes(g.L)]
    )
    m = float(g.leaf_measure)
    x = centers[:, None, :]
    y = centers[None, :, :]
    mat = K(x if g.n > 1 else x[..., 0], y if g.n > 1 else y[..., 0]) * m
    np.fill_diagonal(mat, 0.0)
    return DenseOperator(g, mat)


def sio_commutator(K: KernelSpec, b: SampledFunction) -> DenseOperator:
    """[T, M_b] for the discretized kernel; entries (b(y)-b(x)) K(x,y) m."""
    T = discretize(K, b.grid)
    return commutator(T, multiplier(b))
