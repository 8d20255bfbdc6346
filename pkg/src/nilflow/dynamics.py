"""Torus and Heisenberg nilmanifolds with exact actions and Haar sampling.

Points live in the fundamental cube [0,1)^dim in exponential coordinates.
Group elements stay exact rationals until the moment they act; the float
layer only ever adds, multiplies, and reduces mod 1, so no error compounds
across a time loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Tuple

import numpy as np

from .lie_core import GroupElement, LieAlgebraSpec, make_builtin

TWO_PI = 2.0 * np.pi


class NilSystem:
    """A compact quotient of a torus or the 3-dim Heisenberg group.

    `acting_matrix`, when given, is an exact rational matrix mapping an
    auxiliary abelian parameter group into the algebra, so several distinct
    rotations can be driven by one parameter vector.  Only torus systems
    accept one; a linear map need not respect a nonabelian product.
    """

    __slots__ = ("kind", "algebra", "acting_matrix")

    def __init__(
        self,
        kind: str,
        dim: int | None = None,
        acting_matrix: Sequence[Sequence] | None = None,
    ):
        if kind == "torus":
            if dim is None or dim < 1:
                raise ValueError("torus systems need a positive dimension")
            self.algebra = make_builtin("abelian", dim=dim)
        elif kind == "heisenberg3":
            self.algebra = make_builtin("heisenberg", dim=3)
        else:
            raise ValueError(f"unknown system kind {kind!r}")
        self.kind = kind
        if acting_matrix is not None:
            if kind != "torus":
                raise ValueError("acting matrices are only supported on torus systems")
            rows = tuple(tuple(Fraction(entry) for entry in row) for row in acting_matrix)
            if len(rows) != self.algebra.dim:
                raise ValueError("acting matrix must have one row per algebra coordinate")
            self.acting_matrix = rows
        else:
            self.acting_matrix = None

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NilSystem):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.algebra == other.algebra
            and self.acting_matrix == other.acting_matrix
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"NilSystem({self.kind!r}, dim={self.dim})"


def torus(dim: int, acting_matrix: Sequence[Sequence] | None = None) -> NilSystem:
    return NilSystem("torus", dim=dim, acting_matrix=acting_matrix)


def heisenberg3() -> NilSystem:
    return NilSystem("heisenberg3")


@dataclass(frozen=True)
class NilPoint:
    """A point of the nilmanifold in fundamental-domain coordinates."""

    coords: Tuple[float, ...]

    def __post_init__(self) -> None:
        for c in self.coords:
            if not (0.0 <= c < 1.0):
                raise ValueError(f"coordinate {c} outside the fundamental domain [0,1)")

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


# ----------------------------------------------------------------------
# fundamental-domain reduction


def _frac(v: np.ndarray) -> np.ndarray:
    r = v - np.floor(v)
    # roundoff can push x - floor(x) to exactly 1.0 for tiny negative x
    return np.where(r >= 1.0, r - 1.0, r)


def reduce_array(sys: NilSystem, pts: np.ndarray) -> np.ndarray:
    """Canonical fundamental-domain representative, row-wise.

    For the Heisenberg system the representative of the right lattice coset
    is found by clearing the integer parts of x and y first and the central
    coordinate last; killing right cosets is what keeps the left action
    well-defined on the quotient.  When a row is already reduced the output
    is bitwise identical to the input.
    """
    pts = np.asarray(pts, dtype=float)
    if sys.kind == "torus":
        return _frac(pts)
    x = pts[:, 0]
    y = pts[:, 1]
    z = pts[:, 2]
    fx = np.floor(x)
    fy = np.floor(y)
    xr = _frac(x)
    yr = _frac(y)
    offset = x * y / 2 - x * fy - xr * yr / 2
    offset = np.where((fx == 0) & (fy == 0), 0.0, offset)
    zr = _frac(z + offset)
    return np.stack([xr, yr, zr], axis=1)


def reduce_point(sys: NilSystem, coords: Sequence[float]) -> NilPoint:
    row = reduce_array(sys, np.asarray(coords, dtype=float)[None, :])[0]
    return NilPoint(tuple(float(c) for c in row))


# ----------------------------------------------------------------------
# group action


def _group_coords(sys: NilSystem, g: GroupElement) -> Tuple[Fraction, ...]:
    if g.algebra == sys.algebra:
        return tuple(g.coords)
    if sys.acting_matrix is not None and g.algebra.step == 1:
        cols = len(sys.acting_matrix[0]) if sys.acting_matrix else 0
        if g.algebra.dim == cols:
            return tuple(
                sum((r * c for r, c in zip(row, g.coords)), Fraction(0))
                for row in sys.acting_matrix
            )
    raise ValueError("algebra mismatch between group element and system")


def act_array(sys: NilSystem, g: GroupElement, pts: np.ndarray) -> np.ndarray:
    """Left translation by g applied to every row, then reduction."""
    gf = np.array([float(c) for c in _group_coords(sys, g)])
    pts = np.asarray(pts, dtype=float)
    if sys.kind == "torus":
        return reduce_array(sys, pts + gf)
    a, b, c = gf
    x = pts[:, 0]
    y = pts[:, 1]
    z = pts[:, 2]
    moved = np.stack([a + x, b + y, c + z + 0.5 * (a * y - b * x)], axis=1)
    return reduce_array(sys, moved)


def act(sys: NilSystem, g: GroupElement, x: NilPoint) -> NilPoint:
    row = act_array(sys, g, x.as_array()[None, :])[0]
    return NilPoint(tuple(float(c) for c in row))


def fundamental_distance(sys: NilSystem, x: NilPoint, y: NilPoint) -> float:
    """Largest per-coordinate distance on the circle, accounting for wraparound."""
    gaps = np.abs(x.as_array() - y.as_array())
    return float(np.max(np.minimum(gaps, 1.0 - gaps)))


# ----------------------------------------------------------------------
# Haar sampling


def haar_array(sys: NilSystem, seed: int, n: int) -> np.ndarray:
    """n i.i.d. Haar points as an (n, dim) array, deterministic per seed."""
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    return np.random.default_rng(seed).random((n, sys.dim))


def sample_haar(sys: NilSystem, seed: int, n: int) -> list:
    return [NilPoint(tuple(float(c) for c in row)) for row in haar_array(sys, seed, n)]


# ----------------------------------------------------------------------
# test functions


_FN_KINDS = ("torus_character", "heis_abelian", "heis_vertical")


@dataclass(frozen=True)
class TestFunction:
    """A single sinusoid of the fundamental-domain coordinates, bounded by 1.

    The frequency pairs with all coordinates for a torus character, with the
    two abelianized coordinates for the Heisenberg kind, and with all three
    (central coordinate included) for the vertical kind.
    """

    kind: str
    freq: Tuple[int, ...]
    part: str = "cos"

    __test__ = False  # not a pytest class, despite the name

    def __post_init__(self) -> None:
        if self.kind not in _FN_KINDS:
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        if self.part not in ("cos", "sin"):
            raise ValueError(f"part must be 'cos' or 'sin', got {self.part!r}")
        object.__setattr__(self, "freq", tuple(int(k) for k in self.freq))
        if self.kind == "heis_abelian" and len(self.freq) != 2:
            raise ValueError("abelianized Heisenberg characters take a 2-vector frequency")
        if self.kind == "heis_vertical" and len(self.freq) != 3:
            raise ValueError("vertical Heisenberg functions take a 3-vector frequency")

    @property
    def mean_zero(self) -> bool:
        return any(self.freq) or self.part == "sin"


def _fn_coord_slice(f: TestFunction, width: int) -> slice:
    if f.kind == "torus_character":
        if len(f.freq) != width:
            raise ValueError(f"frequency arity {len(f.freq)} != torus dimension {width}")
        return slice(0, width)
    return slice(0, len(f.freq))


def eval_fn_array(f: TestFunction, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    window = pts[:, _fn_coord_slice(f, pts.shape[1])]
    phase = TWO_PI * (window @ np.array(f.freq, dtype=float))
    return np.cos(phase) if f.part == "cos" else np.sin(phase)


def eval_fn(f: TestFunction, x: NilPoint) -> float:
    return float(eval_fn_array(f, x.as_array()[None, :])[0])


# ----------------------------------------------------------------------
# JSON configs


def system_to_json_dict(sys: NilSystem) -> dict:
    out = {"kind": sys.kind, "dim": sys.dim}
    if sys.acting_matrix is not None:
        out["acting_matrix"] = [[str(e) for e in row] for row in sys.acting_matrix]
    return out


def system_from_json_dict(data: Mapping) -> NilSystem:
    kind = data["kind"]
    matrix = data.get("acting_matrix")
    if matrix is not None:
        matrix = [[Fraction(e) for e in row] for row in matrix]
    return NilSystem(kind, dim=data.get("dim"), acting_matrix=matrix)


def function_to_json_dict(f: TestFunction) -> dict:
    return {"kind": f.kind, "freq": list(f.freq), "part": f.part}


def function_from_json_dict(data: Mapping) -> TestFunction:
    return TestFunction(data["kind"], tuple(data["freq"]), data.get("part", "cos"))
