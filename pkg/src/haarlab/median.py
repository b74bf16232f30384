"""Complex median partition of a weighted planar point set.

Given atoms z_j with positive weights, produce two orthogonal lines whose
four CLOSED quadrants each carry at least 1/16 of the total mass.  The
solver follows the constructive existence proof: a halving line, then
perpendicular halving rays giving four closed quarter regions, then a sweep
of candidate ray origins on the base line maintaining the admissible-angle
intervals of the upper and lower quarter pairs until they overlap; a
concentrated-ray special case handles configurations where half of a
quarter's mass sits on one ray.

All predicates are exact: coordinates and weights are converted to
fractions (binary floats convert exactly), angles are represented by
rational direction vectors, and region counting uses closed-sign tests.
An independent exhaustive candidate search (the oracle) certifies that a
valid pair exists without consulting the solver.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class MedianError(ValueError):
    pass


class EmptySetError(MedianError):
    pass


FracPoint = tuple[Fraction, Fraction]


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))  # binary floats are exact dyadic rationals
    return Fraction(x)


@dataclass(frozen=True)
class WeightedPointSet:
    """Atoms in the plane with positive weights."""

    points: tuple[FracPoint, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        pts = tuple((_to_fraction(x), _to_fraction(y)) for x, y in self.points)
        wts = tuple(_to_fraction(w) for w in self.weights)
        if len(pts) != len(wts):
            raise MedianError("points and weights differ in length")
        if any(w <= 0 for w in wts):
            raise MedianError("weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @staticmethod
    def from_complex(zs: Iterable[complex], ws: Iterable) -> "WeightedPointSet":
        pts = [(z.real, z.imag) if isinstance(z, complex) else z for z in zs]
        return WeightedPointSet(tuple(pts), tuple(ws))

    @property
    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def __len__(self):
        return len(self.points)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for (x, y), wt in zip(self.points, self.weights):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(wt))])

    @staticmethod
    def load_csv(path) -> "WeightedPointSet":
        pts, wts = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                pts.append((Fraction(float(row[0])), Fraction(float(row[1]))))
                wts.append(Fraction(float(row[2])))
        return WeightedPointSet(tuple(pts), tuple(wts))


@dataclass(frozen=True)
class OrthoLinePair:
    """Two orthogonal lines: center plus the angle of the first axis.

    Quadrants are the four closed sectors numbered counterclockwise from the
    first-axis direction.  When axis1 is set (a rational direction vector for
    the first line) the quadrant predicates are exact.
    """

    center: tuple
    theta: float
    axis1: FracPoint | None = None

    def exact_center(self) -> FracPoint:
        return (_to_fraction(self.center[0]), _to_fraction(self.center[1]))

    def exact_axes(self) -> tuple[FracPoint, FracPoint]:
        if self.axis1 is not None:
            dx, dy = _to_fraction(self.axis1[0]), _to_fraction(self.axis1[1])
        else:
            dx = _to_fraction(math.cos(self.theta))
            dy = _to_fraction(math.sin(self.theta))
        if dx == 0 and dy == 0:
            raise MedianError("degenerate axis direction")
        return (dx, dy), (-dy, dx)

    def to_json_obj(self, masses=None, total=None, certified=None) -> dict:
        obj = {
            "center": [float(self.center[0]), float(self.center[1])],
            "theta": self.theta,
        }
        if masses is not None:
            obj["masses"] = [float(m) for m in masses]
        if total is not None:
            obj["total"] = float(total)
        if certified is not None:
            obj["certified"] = bool(certified)
        return obj


def pair_from_direction(center: FracPoint, direction: FracPoint) -> OrthoLinePair:
    dx, dy = direction
    theta = math.atan2(float(dy), float(dx)) % (math.pi / 2)
    return OrthoLinePair(
        center=(center[0], center[1]), theta=theta, axis1=(dx, dy)
    )


@dataclass(frozen=True)
class QuarterSplit:
    """Base halving line plus perpendicular halving rays in each closed half.

    The base line is vertical at ``offset``; the rays start at (offset, m1)
    going left and (offset, m2) going right; the four closed regions are
    S1 = {x <= offset, y >= m1}, S2 = {x <= offset, y <= m1},
    S3 = {x >= offset, y >= m2}, S4 = {x >= offset, y <= m2}.
    """

    offset: Fraction
    m1: Fraction
    m2: Fraction

    def region_masses(self, P: WeightedPointSet) -> tuple[Fraction, ...]:
        s = [Fraction(0)] * 4
        for (x, y), w in zip(P.points, P.weights):
            if x <= self.offset and y >= self.m1:
                s[0] += w
            if x <= self.offset and y <= self.m1:
                s[1] += w
            if x >= self.offset and y >= self.m2:
                s[2] += w
            if x >= self.offset and y <= self.m2:
                s[3] += w
        return tuple(s)


# -- 1D halving --------------------------------------------------------------


def _median_offset(values: Sequence[Fraction], weights: Sequence[Fraction]) -> Fraction:
    """inf{t : F(t) >= 1/2} for the weighted CDF F (right-continuous)."""
    if not values:
        raise EmptySetError("empty set")
    total = sum(weights, Fraction(0))
    order = sorted(range(len(values)), key=lambda i: values[i])
    half = Fraction(total, 2)
    acc = Fraction(0)
    i = 0
    while i < len(order):
        v = values[order[i]]
        while i < len(order) and values[order[i]] == v:
            acc += weights[order[i]]
            i += 1
        if acc >= half:
            return v
    return values[order[-1]]  # unreachable for positive weights


def halving_line(P: WeightedPointSet, direction: float = 0.0):
    """Halving offset along a direction; both closed half-planes carry >= 1/2.

    Returns (offset, (mass_low, mass_high)) where low is the closed side
    {projection <= offset} and high is {projection >= offset}.
    """
    if len(P) == 0:
        raise EmptySetError("empty set")
    dx = _to_fraction(math.cos(direction)) if direction != 0.0 else Fraction(1)
    dy = _to_fraction(math.sin(direction)) if direction != 0.0 else Fraction(0)
    projs = [dx * x + dy * y for x, y in P.points]
    alpha = _median_offset(projs, P.weights)
    low = sum((w for pr, w in zip(projs, P.weights) if pr <= alpha), Fraction(0))
    high = sum((w for pr, w in zip(projs, P.weights) if pr >= alpha), Fraction(0))
    return alpha, (low, high)


def quarter_partition(P: WeightedPointSet) -> QuarterSplit:
    """Four closed quarter regions each carrying at least 1/4 of the mass."""
    if len(P) == 0:
        raise EmptySetError("empty set")
    alpha, _ = halving_line(P, 0.0)
    left = [(pt, w) for pt, w in zip(P.points, P.weights) if pt[0] <= alpha]
    right = [(pt, w) for pt, w in zip(P.points, P.weights) if pt[0] >= alpha]
    m1 = _median_offset([pt[1] for pt, _ in left], [w for _, w in left])
    m2 = _median_offset([pt[1] for pt, _ in right], [w for _, w in right])
    return QuarterSplit(alpha, m1, m2)


# -- exact angle keys ---------------------------------------------------------
#
# A sweep angle r in [0, pi] is keyed by (cls, slope): cls 0 is r = 0, cls 2
# is r = pi, cls 1 holds r in (0, pi) with slope = -cot(r) strictly
# increasing in r.  Tuple comparison of keys is the exact angle order.

KEY_MIN = (0, Fraction(0))
KEY_MAX = (2, Fraction(0))


def _upper_key(v: FracPoint):
    """Key of the sweep angle whose upper ray from the origin passes v."""
    vx, vy = v
    if vy < 0:
        raise MedianError("upper key needs a closed upper half-plane vector")
    if vy == 0:
        if vx == 0:
            raise MedianError("zero vector has no angle")
        return KEY_MIN if vx < 0 else KEY_MAX
    return (1, Fraction(vx, vy))


def _key_direction(key) -> FracPoint:
    """A rational direction vector of the upper ray at the keyed angle."""
    cls, slope = key
    if cls == 0:
        return (Fraction(-1), Fraction(0))
    if cls == 2:
        return (Fraction(1), Fraction(0))
    return (slope, Fraction(1))


@dataclass
class _SideData:
    """One quarter region's atoms prepared for the angular sweep.

    Atoms are stored with nonnegative y (the lower region is reflected).
    ``lower`` flips the key vector across the vertical axis so that both
    regions share one angle scale: at a common key the upper ray and the
    lower ray extend each other into one straight line.
    """

    rel: list  # (x, y, w) with y >= 0
    total: Fraction
    lower: bool = False

    def _key_of(self, px: Fraction, py: Fraction, x: Fraction):
        vx = (x - px) if self.lower else (px - x)
        return _upper_key((vx, py))

    def _groups(self, x: Fraction):
        base = Fraction(0)  # atoms at the origin lie on every ray
        groups: dict = {}
        for px, py, w in self.rel:
            if px == x and py == 0:
                base += w
                continue
            key = self._key_of(px, py, x)
            groups[key] = groups.get(key, Fraction(0)) + w
        return base, groups

    def interval(self, x: Fraction):
        """The closed interval of sweep angles whose two closed parts of the
        region each carry >= total/4."""
        if self.total == 0:
            return None
        quarter = Fraction(self.total, 4)
        base, groups = self._groups(x)
        if not groups:
            return (KEY_MIN, KEY_MAX)  # all mass at the origin: any angle
        keys = sorted(groups)
        acc = base
        r_lo = keys[-1]
        for k in keys:
            acc += groups[k]
            if acc >= quarter:
                r_lo = k
                break
        if base >= quarter:
            r_lo = KEY_MIN
        acc = base
        r_hi = keys[0]
        for k in reversed(keys):
            acc += groups[k]
            if acc >= quarter:
                r_hi = k
                break
        if base >= quarter:
            r_hi = KEY_MAX
        return (min(r_lo, r_hi), max(r_lo, r_hi))

    def ray_concentration(self, x: Fraction):
        """(key, on_ray_mass) when a single ray from x carries >= total/2."""
        if self.total == 0:
            return None
        base, groups = self._groups(x)
        half = Fraction(self.total, 2)
        for k in sorted(groups):
            if groups[k] + base >= half:
                return (k, groups[k] + base)
        if base >= half:
            return (KEY_MIN, base)
        return None

    def ray_direction(self, key) -> FracPoint:
        """Ray direction in the region's own (reflected) coordinates."""
        d = _key_direction(key)
        return (-d[0], d[1]) if self.lower else d


def _interval_overlap(a, b):
    lo = max(a[0], b[0])
    hi = min(a[1], b[1])
    return (lo, hi) if lo <= hi else None


@dataclass(frozen=True)
class _Frame:
    """Affine frame mapping solver coordinates back to the input plane."""

    alpha: Fraction
    conjugated: bool

    def to_input(self, p: FracPoint) -> FracPoint:
        u, v = p
        if self.conjugated:
            v = -v
        # invert w = -i (z - alpha): z = alpha + i w
        return (self.alpha - v, u)

    def dir_to_input(self, d: FracPoint) -> FracPoint:
        dx, dy = d
        if self.conjugated:
            dy = -dy
        return (-dy, dx)


def complex_median(P: WeightedPointSet) -> OrthoLinePair:
    """Two orthogonal lines whose closed quadrants each hold >= mass/16."""
    if len(P) == 0:
        raise EmptySetError("empty set")
    total = P.total
    need = Fraction(total, 16)

    alpha, _ = halving_line(P, 0.0)
    # rotate so the halving line becomes the real axis: w = -i (z - alpha)
    rotated = [(y, alpha - x) for x, y in P.points]

    def build(conjugated: bool):
        pts = [(x, -y) for x, y in rotated] if conjugated else list(rotated)
        upper = [(x, y, w) for (x, y), w in zip(pts, P.weights) if y >= 0]
        lower = [(x, y, w) for (x, y), w in zip(pts, P.weights) if y <= 0]
        a1 = _median_offset([x for x, _, _ in upper], [w for _, _, w in upper])
        a2 = _median_offset([x for x, _, _ in lower], [w for _, _, w in lower])
        return pts, upper, lower, a1, a2

    pts, upper, lower, a1, a2 = build(False)
    conjugated = False
    if a1 > a2:
        pts, upper, lower, a1, a2 = build(True)
        conjugated = True
    frame = _Frame(alpha, conjugated)

    if a1 == a2:
        pair = pair_from_direction(frame.to_input((a1, Fraction(0))), frame.dir_to_input((Fraction(0), Fraction(1))))
        if _certify(P, pair, need):
            return pair
        # fall through to the sweep with the degenerate split (should not happen)

    # closed quarter regions in sweep coordinates
    s1_orig = [(x, y, w) for x, y, w in upper if x <= a1]
    s4_orig = [(x, y, w) for x, y, w in lower if x >= a2]
    s1 = _SideData([(x, y, w) for x, y, w in s1_orig], sum((w for _, _, w in s1_orig), Fraction(0)))
    s4 = _SideData(
        [(x, -y, w) for x, y, w in s4_orig],
        sum((w for _, _, w in s4_orig), Fraction(0)),
        lower=True,
    )
    A = _median_offset([x for x, _, _ in s1.rel], [w for _, _, w in s1.rel])
    B = _median_offset([x for x, _, _ in s4.rel], [w for _, _, w in s4.rel])

    candidates = _sweep_candidates(s1_orig + s4_orig, A, B)
    ytilde = Fraction(a1 + a2, 2)

    pair = _overlap_search(P, frame, s1, s4, candidates, ytilde, need)
    if pair is not None:
        return pair
    pair = _concentrated_ray_search(P, frame, s1, s4, candidates, need)
    if pair is not None:
        return pair
    raise MedianError("sweep exhausted without a certified pair")


def _sweep_candidates(atoms, A: Fraction, B: Fraction):
    """Sorted candidate origins: atom projections, x-intercepts of lines
    through atom pairs, interval midpoints, and the sweep endpoints.

    Between consecutive marks the angular order of every atom pair is
    constant, so testing marks and midpoints covers the whole sweep.
    Atoms must be in original (unreflected) coordinates.
    """
    marks = {A, B}
    for x, _, _ in atoms:
        if A <= x <= B:
            marks.add(x)
    n = len(atoms)
    for i in range(n):
        xi, yi, _ = atoms[i]
        for j in range(i + 1, n):
            xj, yj, _ = atoms[j]
            if yi == yj:
                continue
            t = xi - yi * (xj - xi) / (yj - yi)  # line through the two atoms meets y=0
            if A <= t <= B:
                marks.add(t)
    base = sorted(marks)
    out = []
    for k, t in enumerate(base):
        out.append(t)
        if k + 1 < len(base):
            out.append(Fraction(t + base[k + 1], 2))
    return out


def _overlap_search(P, frame, s1, s4, candidates, ytilde, need):
    """Binary searches for the overlap of the two admissible-angle intervals."""
    iv1 = {}
    iv4 = {}

    def get1(x):
        if x not in iv1:
            iv1[x] = s1.interval(x)
        return iv1[x]

    def get4(x):
        if x not in iv4:
            iv4[x] = s4.interval(x)
        return iv4[x]

    def p_hi(x):  # r2(x) >= r3(x): true on a left interval of x
        i1, i4 = get1(x), get4(x)
        return i1[1] >= i4[0]

    def p_lo(x):  # r4(x) >= r1(x): true on a right interval of x
        i1, i4 = get1(x), get4(x)
        return i4[1] >= i1[0]

    if s1.total == 0 or s4.total == 0:
        return None
    n = len(candidates)
    # rightmost candidate where p_hi holds
    lo, hi = 0, n - 1
    t1 = None
    if p_hi(candidates[0]):
        lo_i, hi_i = 0, n - 1
        while lo_i < hi_i:
            mid = (lo_i + hi_i + 1) // 2
            if p_hi(candidates[mid]):
                lo_i = mid
            else:
                hi_i = mid - 1
        t1 = lo_i
    # leftmost candidate where p_lo holds
    t2 = None
    if p_lo(candidates[n - 1]):
        lo_i, hi_i = 0, n - 1
        while lo_i < hi_i:
            mid = (lo_i + hi_i) // 2
            if p_lo(candidates[mid]):
                hi_i = mid
            else:
                lo_i = mid + 1
        t2 = lo_i
    if t1 is None or t2 is None or t2 > t1:
        scan = range(n)  # monotone bracket empty; fall back to a full scan
    else:
        scan = range(t2, t1 + 1)
    for idx in scan:
        x = candidates[idx]
        ov = _interval_overlap(get1(x), get4(x))
        if ov is None:
            continue
        for key in _overlap_keys(ov):
            pair = _build_pair(frame, x, key, ytilde)
            if _certify(P, pair, need):
                return pair
    return None


def _overlap_keys(ov):
    """Angles to try inside the overlap: prefer near-vertical, then ends."""
    lo, hi = ov
    vertical = (1, Fraction(0))
    keys = []
    if lo <= vertical <= hi:
        keys.append(vertical)
    keys.extend([lo, hi])
    seen = []
    for k in keys:
        if k not in seen:
            seen.append(k)
    return seen


def _build_pair(frame, x, key, ytilde) -> OrthoLinePair:
    d = _key_direction(key)
    if d[1] == 0:
        # horizontal first line: second line vertical through ytilde
        center = (ytilde, Fraction(0))
    else:
        q = Fraction(d[0], d[1])
        t = q * (ytilde - x) / (q * q + 1)
        center = (x + t * q, t)
    return pair_from_direction(frame.to_input(center), frame.dir_to_input(d))


def _concentrated_ray_search(P, frame, s1, s4, candidates, need):
    """Special case: half of a quarter's mass on one ray from the base line.

    The pair is then the ray's line plus the perpendicular through the
    median point of the on-ray mass, which already gives all four closed
    quadrants at least total/16.
    """
    for side in (s1, s4):
        if side.total == 0:
            continue
        for x in candidates:
            hit = side.ray_concentration(x)
            if hit is None:
                continue
            key, _mass = hit
            d = side.ray_direction(key)  # in the side's reflected coordinates
            params = []
            weights = []
            for px, py, w in side.rel:
                rel = (px - x, py)
                if rel == (Fraction(0), Fraction(0)):
                    params.append(Fraction(0))
                    weights.append(w)
                    continue
                if side._key_of(px, py, x) == key:
                    params.append(d[0] * rel[0] + d[1] * rel[1])
                    weights.append(w)
            if not params:
                continue
            tmid = _median_offset(params, weights)
            nrm = d[0] * d[0] + d[1] * d[1]
            tpoint = (x + tmid * d[0] / nrm, tmid * d[1] / nrm)
            if side.lower:
                tpoint = (tpoint[0], -tpoint[1])
                d_plane = (d[0], -d[1])
            else:
                d_plane = d
            pair = pair_from_direction(frame.to_input(tpoint), frame.dir_to_input(d_plane))
            if _certify(P, pair, need):
                return pair
    return None


# -- quadrant counting --------------------------------------------------------


def quadrant_masses_exact(P: WeightedPointSet, pair: OrthoLinePair) -> tuple[Fraction, ...]:
    """Masses of the four closed quadrants; boundary atoms count on both
    sides, an atom at the center counts in all four."""
    (cx, cy) = pair.exact_center()
    (d1, d2) = pair.exact_axes()
    masses = [Fraction(0)] * 4
    for (x, y), w in zip(P.points, P.weights):
        u = d1[0] * (x - cx) + d1[1] * (y - cy)
        v = d2[0] * (x - cx) + d2[1] * (y - cy)
        if u >= 0 and v >= 0:
            masses[0] += w
        if u <= 0 and v >= 0:
            masses[1] += w
        if u <= 0 and v <= 0:
            masses[2] += w
        if u >= 0 and v <= 0:
            masses[3] += w
    return tuple(masses)


def quadrant_masses(P: WeightedPointSet, pair: OrthoLinePair) -> tuple[float, ...]:
    return tuple(float(m) for m in quadrant_masses_exact(P, pair))


def _certify(P: WeightedPointSet, pair: OrthoLinePair, need: Fraction) -> bool:
    return all(m >= need for m in quadrant_masses_exact(P, pair))


def certify(P: WeightedPointSet, pair: OrthoLinePair, slack: float = 0.0) -> bool:
    """Exact check that every closed quadrant holds >= total/16 (minus slack)."""
    need = Fraction(P.total, 16) - _to_fraction(slack)
    return _certify(P, pair, need)


# -- the exhaustive oracle ----------------------------------------------------


def _grid_directions(count: int = 256) -> list[FracPoint]:
    out = []
    denom = 1 << 20
    for k in range(count):
        theta = math.pi * k / count
        dx = Fraction(round(math.cos(theta) * denom), denom)
        dy = Fraction(round(math.sin(theta) * denom), denom)
        if dx != 0 or dy != 0:
            out.append((dx, dy))
    return out


def _candidate_directions(P: WeightedPointSet) -> list[FracPoint]:
    dirs: list[FracPoint] = [(Fraction(1), Fraction(0))]
    pts = P.points
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            dx = pts[j][0] - pts[i][0]
            dy = pts[j][1] - pts[i][1]
            if dx == 0 and dy == 0:
                continue
            dirs.append((dx, dy))
            dirs.append((-dy, dx))
    dirs.extend(_grid_directions())
    return dirs


def _axis_search(P: WeightedPointSet, d1: FracPoint, need: Fraction):
    """Find a center for the given axes, medians first then all projections."""
    d2 = (-d1[1], d1[0])
    us = [d1[0] * x + d1[1] * y for x, y in P.points]
    vs = [d2[0] * x + d2[1] * y for x, y in P.points]
    w = list(P.weights)
    norm = d1[0] * d1[0] + d1[1] * d1[1]

    def masses_at(t, s):
        m = [Fraction(0)] * 4
        for u, v, wt in zip(us, vs, w):
            du, dv = u - t, v - s
            if du >= 0 and dv >= 0:
                m[0] += wt
            if du <= 0 and dv >= 0:
                m[1] += wt
            if du <= 0 and dv <= 0:
                m[2] += wt
            if du >= 0 and dv <= 0:
                m[3] += wt
        return m

    def center_from(t, s):
        cx = (t * d1[0] + s * d2[0]) / norm
        cy = (t * d1[1] + s * d2[1]) / norm
        return (cx, cy)

    t0 = _median_offset(us, w)
    s0 = _median_offset(vs, w)
    if all(m >= need for m in masses_at(t0, s0)):
        return center_from(t0, s0)
    for t in sorted(set(us)):
        for s in sorted(set(vs)):
            if all(m >= need for m in masses_at(t, s)):
                return center_from(t, s)
    return None


def oracle_search(P: WeightedPointSet) -> OrthoLinePair | None:
    """Exhaustive candidate search for a valid pair, independent of the solver.

    Candidate angles: atom-pair directions and their perpendiculars plus a
    256-point angle grid; candidate centers: projections of atoms on both
    axes (medians tried first).  Early exit on the first certified pair.
    """
    if len(P) == 0:
        raise EmptySetError("empty set")
    need = Fraction(P.total, 16)
    seen = set()
    for d1 in _candidate_directions(P):
        key = _canon_dir(d1)
        if key in seen:
            continue
        seen.add(key)
        center = _axis_search(P, d1, need)
        if center is not None:
            return pair_from_direction(center, d1)
    return None


def _canon_dir(d: FracPoint):
    dx, dy = d
    for _ in range(4):
        if dx > 0 and dy >= 0:
            break
        dx, dy = dy, -dx  # rotate by -90 degrees; the quadrant frame is unchanged
    if dy == 0:
        return (1, 0)
    r = Fraction(dx, dy)
    return (r.numerator, r.denominator)


def result_json(P: WeightedPointSet, pair: OrthoLinePair) -> str:
    masses = quadrant_masses_exact(P, pair)
    need = Fraction(P.total, 16)
    obj = pair.to_json_obj(
        masses=masses, total=P.total, certified=all(m >= need for m in masses)
    )
    return json.dumps(obj, sort_keys=True)
