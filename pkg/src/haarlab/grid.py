"""Truncated d-adic and translated dyadic grids on a finite window.

A grid lives on the half-open window ``origin + [0, side)^n`` truncated to
levels ``0..L``.  Level 0 is the whole window; a level-k cell splits into
``d`` children (n = 1) or ``2^n`` children (n >= 2).  Shifted grids are
realised on the window treated as a torus, so every shifted grid still
tiles the window and all members of a shift family share a single common
leaf partition (the shift offsets are exact multiples of the leaf side).

All coordinates are ``fractions.Fraction`` so cell membership, shifts and
covering checks are exact.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Vec = tuple[Fraction, ...]


class GridError(ValueError):
    pass


class LevelOverflowError(GridError):
    pass


class PointOutsideWindowError(GridError):
    pass


class NoCoverFoundError(GridError):
    pass


def _as_fraction_vec(x, n: int) -> Vec:
    if isinstance(x, (int, float, Fraction, str)):
        x = (x,) * n
    vec = tuple(Fraction(c) for c in x)
    if len(vec) != n:
        raise GridError(f"expected {n} coordinates, got {len(vec)}")
    return vec


@dataclass(frozen=True)
class GridSpec:
    """Descriptor of one truncated grid.

    n: ambient dimension.  d: branching (n = 1 only; forced to 2 when n >= 2,
    so each cube has 2^n children).  L: leaf level.  sigma: per-coordinate
    shift, an exact multiple of the leaf cell side, reduced mod the window.
    """

    n: int
    d: int
    L: int
    origin: Vec = field(default=None)  # type: ignore[assignment]
    side: Fraction = Fraction(1)
    sigma: Vec = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 1:
            raise GridError("dimension must be >= 1")
        if self.n >= 2 and self.d != 2:
            raise GridError("for n >= 2 the per-coordinate branching is fixed to 2")
        if self.d < 2:
            raise GridError("branching must be >= 2")
        if self.L < 1:
            raise GridError("leaf level must be >= 1")
        object.__setattr__(self, "side", Fraction(self.side))
        if self.side <= 0:
            raise GridError("window side must be positive")
        origin = _as_fraction_vec(self.origin if self.origin is not None else 0, self.n)
        object.__setattr__(self, "origin", origin)
        sigma = _as_fraction_vec(self.sigma if self.sigma is not None else 0, self.n)
        ls = self.leaf_side
        reduced = []
        for s in sigma:
            s = s % self.side
            if s % ls != 0:
                raise GridError("shift offsets must be multiples of the leaf cell side")
            reduced.append(s)
        object.__setattr__(self, "sigma", tuple(reduced))

    @property
    def beta(self) -> int:
        """Per-coordinate branching factor."""
        return self.d if self.n == 1 else 2

    @property
    def leaf_side(self) -> Fraction:
        return self.side / self.beta**self.L

    @property
    def leaf_count(self) -> int:
        return self.beta ** (self.n * self.L)

    @property
    def leaf_measure(self) -> Fraction:
        return self.leaf_side**self.n

    def cells_per_axis(self, k: int) -> int:
        return self.beta**k

    def children_per_cell(self) -> int:
        return self.beta**self.n

    def level_count(self, k: int) -> int:
        """Number of cells at level k."""
        return self.beta ** (self.n * k)

    def cell_side(self, k: int) -> Fraction:
        return self.side / self.beta**k

    def cell_measure(self, k: int) -> Fraction:
        return self.cell_side(k) ** self.n

    @property
    def shift_cells(self) -> tuple[int, ...]:
        """sigma expressed in integer leaf steps per coordinate."""
        ls = self.leaf_side
        return tuple(int(s / ls) for s in self.sigma)

    def root(self) -> "Cube":
        return Cube(self, 0, (0,) * self.n)

    def with_sigma(self, sigma) -> "GridSpec":
        return GridSpec(self.n, self.d, self.L, self.origin, self.side, sigma)

    def cubes(self, k: int) -> Iterable["Cube"]:
        """All level-k cubes in lexicographic index order."""
        rng = range(self.cells_per_axis(k))
        for q in itertools.product(rng, repeat=self.n):
            yield Cube(self, k, q)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "d": self.d,
                "L": self.L,
                "origin": [_frac_str(c) for c in self.origin],
                "side": _frac_str(self.side),
                "sigma": [_frac_str(c) for c in self.sigma],
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "GridSpec":
        obj = json.loads(text)
        return GridSpec(
            n=obj["n"],
            d=obj["d"],
            L=obj["L"],
            origin=tuple(Fraction(c) for c in obj["origin"]),
            side=Fraction(obj["side"]),
            sigma=tuple(Fraction(c) for c in obj["sigma"]),
        )


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Cube:
    """Level-k cell of a grid, addressed by its per-coordinate index vector.

    Geometric extent is ``sigma + origin + cell_side*(q + [0,1)^n)`` reduced
    mod the window, so shifted cells may wrap around the window edge; a
    wrapped cell is still one cube.
    """

    grid: GridSpec
    level: int
    q: tuple[int, ...]

    def __post_init__(self):
        g = self.grid
        if not (0 <= self.level <= g.L):
            raise GridError(f"level {self.level} outside 0..{g.L}")
        if len(self.q) != g.n:
            raise GridError("index vector has wrong dimension")
        m = g.cells_per_axis(self.level)
        if any(not (0 <= qi < m) for qi in self.q):
            raise GridError("cell index out of range")

    @property
    def side(self) -> Fraction:
        return self.grid.cell_side(self.level)

    @property
    def measure(self) -> Fraction:
        return self.grid.cell_measure(self.level)

    def children(self) -> list["Cube"]:
        g = self.grid
        if self.level >= g.L:
            raise LevelOverflowError("leaf cells have no children")
        beta = g.beta
        offsets = itertools.product(range(beta), repeat=g.n)
        return [
            Cube(g, self.level + 1, tuple(beta * qi + o for qi, o in zip(self.q, off)))
            for off in sorted(offsets)
        ]

    def parent(self) -> "Cube":
        if self.level == 0:
            raise GridError("the root cube has no parent")
        beta = self.grid.beta
        return Cube(self.grid, self.level - 1, tuple(qi // beta for qi in self.q))

    def child_slot(self) -> int:
        """Position of this cube in ``parent().children()`` (lexicographic)."""
        beta = self.grid.beta
        digits = tuple(qi % beta for qi in self.q)
        slot = 0
        for dgt in digits:
            slot = slot * beta + dgt
        return slot

    def ancestor(self, up: int) -> "Cube":
        c = self
        for _ in range(up):
            c = c.parent()
        return c

    def leaf_axis_ranges(self) -> list[range]:
        """Per-coordinate leaf index range in the cube's own (unwrapped) frame."""
        g = self.grid
        w = g.beta ** (g.L - self.level)
        return [range(qi * w, (qi + 1) * w) for qi in self.q]

    def leaf_indices(self) -> list[tuple[int, ...]]:
        """Leaf cells of this cube as indices into the common leaf partition.

        The common partition is the unshifted grid's leaf lexicographic
        numbering; shifted cubes wrap modulo the axis size.
        """
        g = self.grid
        shift = g.shift_cells
        m = g.cells_per_axis(g.L)
        axes = [
            [(i + s) % m for i in rng]
            for rng, s in zip(self.leaf_axis_ranges(), shift)
        ]
        return list(itertools.product(*axes))

    def corner(self) -> Vec:
        """Lower corner before the periodic wrap (may exceed the window)."""
        g = self.grid
        h = self.side
        return tuple(o + s + h * qi for o, s, qi in zip(g.origin, g.sigma, self.q))

    def center(self) -> Vec:
        """Center of the unwrapped extent."""
        h = self.side
        return tuple(c + h / 2 for c in self.corner())

    def contains(self, x) -> bool:
        g = self.grid
        x = _as_fraction_vec(x, g.n)
        h = self.side
        for xi, o, s, qi in zip(x, g.origin, g.sigma, self.q):
            t = (xi - o - s) % g.side
            if not (h * qi <= t < h * (qi + 1)):
                return False
        return True


def children(c: Cube) -> list[Cube]:
    return c.children()


def cube_at(g: GridSpec, x, k: int) -> Cube:
    """The unique level-k cube of g containing x (half-open, lower-inclusive)."""
    if not (0 <= k <= g.L):
        raise GridError(f"level {k} outside 0..{g.L}")
    x = _as_fraction_vec(x, g.n)
    for xi, o in zip(x, g.origin):
        if not (o <= xi < o + g.side):
            raise PointOutsideWindowError(f"point {x} outside the window")
    h = g.cell_side(k)
    q = tuple(int(((xi - o - s) % g.side) / h) for xi, o, s in zip(x, g.origin, g.sigma))
    return Cube(g, k, q)


@dataclass(frozen=True)
class GridFamily:
    """Grids sharing window and leaf level, differing only in sigma."""

    members: tuple[GridSpec, ...]
    c_n: Fraction = Fraction(7)

    def __post_init__(self):
        g0 = self.members[0]
        for g in self.members:
            if (g.n, g.d, g.L, g.origin, g.side) != (g0.n, g0.d, g0.L, g0.origin, g0.side):
                raise GridError("family members must share window and leaf level")
        object.__setattr__(self, "c_n", Fraction(self.c_n))

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def adjacent_family(n: int, L: int, origin=0, side=1) -> GridFamily:
    """The quantized one-third-shift family of 3^n dyadic grids.

    Per coordinate the offsets are {0, s, 2s} with s = round(2^L/3) * 2^{-L}
    times the window side, so all members share the common leaf partition.
    """
    if L < 2:
        raise GridError("adjacent family needs leaf level >= 2")
    side = Fraction(side)
    steps = (2**L + 1) // 3  # round(2^L / 3); 2^L mod 3 is never exactly 1/2
    s = Fraction(steps, 2**L) * side
    offsets = [Fraction(0), s, 2 * s]
    members = []
    for combo in itertools.product(offsets, repeat=n):
        members.append(GridSpec(n=n, d=2, L=L, origin=origin, side=side, sigma=combo))
    return GridFamily(tuple(members), c_n=Fraction(7))


@dataclass(frozen=True)
class Box:
    """Axis-aligned cube given by lower corner and side."""

    corner: Vec
    side: Fraction

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(Fraction(c) for c in self.corner))
        object.__setattr__(self, "side", Fraction(self.side))


def _cube_covers_box(c: Cube, box: Box) -> bool:
    """True iff box fits in the (unwrapped) extent of c reduced mod window.

    A wrapped cube covers the box only if the box sits inside one contiguous
    piece, checked per coordinate.
    """
    g = c.grid
    h = c.side
    for o, s, qi, lo in zip(g.origin, g.sigma, c.q, box.corner):
        a = (s + h * qi) % g.side  # cell start relative to the window origin
        t = lo - o
        if not (0 <= t and t + box.side <= g.side):
            return False
        # candidate pieces: [a, a+h) possibly split by the wrap at g.side
        if a + h <= g.side:
            if not (a <= t and t + box.side <= a + h):
                return False
        else:
            in_high = a <= t and t + box.side <= g.side
            in_low = 0 <= t and t + box.side <= a + h - g.side
            if not (in_high or in_low):
                return False
    return True


def cover(fam: GridFamily, box: Box) -> Cube:
    """A member cube Q with box ⊆ Q and side(Q) <= c_n * side(box).

    Searches levels from the finest admissible upward; raises
    NoCoverFoundError when the quantized family has no such cube (box
    touching a wrap seam).
    """
    g0 = fam.members[0]
    if box.side < 2 * g0.leaf_side:
        raise GridError("box side must be at least 2 leaf cells")
    limit = fam.c_n * box.side
    for k in range(g0.L, -1, -1):
        h = g0.cell_side(k)
        if h < box.side:
            continue
        if h > limit:
            break
        for g in fam.members:
            try:
                c = cube_at(g, box.corner, k)
            except PointOutsideWindowError:
                continue
            if _cube_covers_box(c, box):
                return c
    raise NoCoverFoundError(f"no member cube covers {box} within ratio {fam.c_n}")
