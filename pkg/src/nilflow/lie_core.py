"""Graded nilpotent Lie algebras and their simply connected groups.

An algebra is given by rational structure constants on a finite basis plus a
layer grading; group elements live in exponential coordinates and multiply
through the exact Dynkin expansion of the Baker-Campbell-Hausdorff series,
truncated at the algebra's nilpotency step.  Everything is Fraction-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

MAX_BCH_STEP = 6

BracketRow = Dict[int, Fraction]
BracketTable = Dict[Tuple[int, int], BracketRow]

_F0 = Fraction(0)
_F1 = Fraction(1)


def _as_fraction(value: Union[int, str, Fraction]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


class LieAlgebraSpec:
    """Nilpotent Lie algebra defined by structure constants and a grading.

    `brackets` maps ordered index pairs (i, j) to sparse coefficient rows
    {k: c} meaning [e_i, e_j] = sum c * e_k.  Pairs may be given in either
    orientation; arithmetic uses the canonical i < j table, with the mirror
    entry filled in by antisymmetry when only one orientation is present.
    Construction keeps whatever table it is given so that verify_algebra
    can report violations instead of refusing to build the object.
    """

    __slots__ = ("dim", "labels", "step", "layers", "brackets", "_table", "_key")

    def __init__(
        self,
        labels: Sequence[str],
        layers: Sequence[int],
        brackets: Mapping[Tuple[int, int], Mapping[int, Union[int, str, Fraction]]],
        step: int | None = None,
    ):
        self.labels: Tuple[str, ...] = tuple(labels)
        self.dim: int = len(self.labels)
        if len(layers) != self.dim:
            raise ValueError("layer list length does not match basis size")
        self.layers: Tuple[int, ...] = tuple(int(l) for l in layers)
        if any(l < 1 for l in self.layers):
            raise ValueError("layers must be positive integers")
        self.step: int = int(step) if step is not None else max(self.layers, default=1)
        if self.step < 1:
            raise ValueError("step must be positive")

        raw: BracketTable = {}
        for (i, j), row in brackets.items():
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError(f"bracket pair ({i},{j}) out of range for dim {self.dim}")
            clean: BracketRow = {}
            for k, coef in row.items():
                if not 0 <= k < self.dim:
                    raise ValueError(f"bracket target {k} out of range for dim {self.dim}")
                coef = _as_fraction(coef)
                if coef != 0:
                    clean[int(k)] = coef
            if clean:
                raw[(int(i), int(j))] = clean
        self.brackets: BracketTable = raw

        table: BracketTable = {}
        for (i, j), row in raw.items():
            if i < j:
                table[(i, j)] = dict(row)
        for (i, j), row in raw.items():
            if i > j and (j, i) not in table:
                table[(j, i)] = {k: -c for k, c in row.items()}
        self._table: BracketTable = table

        self._key = (
            self.labels,
            self.layers,
            self.step,
            tuple(sorted((p, tuple(sorted(row.items()))) for p, row in table.items())),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LieAlgebraSpec):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"LieAlgebraSpec(dim={self.dim}, step={self.step}, labels={list(self.labels)})"

    def basis_index(self, label: str) -> int:
        return self.labels.index(label)

    def layer_of(self, index: int) -> int:
        return self.layers[index]


@dataclass(frozen=True)
class LieElement:
    """Algebra element as an exact coordinate vector over the basis."""

    algebra: LieAlgebraSpec
    coords: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        coords = tuple(_as_fraction(c) for c in self.coords)
        if len(coords) != self.algebra.dim:
            raise ValueError(f"expected {self.algebra.dim} coordinates, got {len(coords)}")
        object.__setattr__(self, "coords", coords)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)


@dataclass(frozen=True)
class GroupElement:
    """Group element exp(X) recorded by the exponential coordinates of X."""

    algebra: LieAlgebraSpec
    coords: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        coords = tuple(_as_fraction(c) for c in self.coords)
        if len(coords) != self.algebra.dim:
            raise ValueError(f"expected {self.algebra.dim} coordinates, got {len(coords)}")
        object.__setattr__(self, "coords", coords)

    def is_identity(self) -> bool:
        return all(c == 0 for c in self.coords)


def _check_shared_algebra(x, y) -> LieAlgebraSpec:
    if x.algebra != y.algebra:
        raise ValueError("elements belong to different algebras")
    return x.algebra


def bracket_coords(alg: LieAlgebraSpec, a: Sequence, b: Sequence, zero=_F0) -> list:
    """[a, b] on raw coordinate vectors; entries may be any commutative ring."""
    out = [zero] * alg.dim
    for (i, j), row in alg._table.items():
        d = a[i] * b[j] - a[j] * b[i]
        if d == 0:
            continue
        for k, c in row.items():
            out[k] = out[k] + d * c
    return out


def bracket(x: LieElement, y: LieElement) -> LieElement:
    """Lie bracket [x, y] from the structure constants."""
    alg = _check_shared_algebra(x, y)
    return LieElement(alg, tuple(bracket_coords(alg, x.coords, y.coords)))


@lru_cache(maxsize=None)
def _dynkin_words(step: int) -> Tuple[Tuple[Tuple[int, ...], Fraction], ...]:
    """BCH series as (word, coefficient) pairs up to total degree `step`.

    Letter 0 stands for the left factor, 1 for the right.  A word w encodes
    the right-nested bracket [w_1,[w_2,[...,[w_{m-1},w_m]...]]]; coefficients
    of equal words across all Dynkin compositions are merged, and words whose
    nested bracket vanishes identically (repeated last letter) are dropped.
    """
    coeffs: Dict[Tuple[int, ...], Fraction] = {}

    def extend(seq: List[Tuple[int, int]], used: int) -> None:
        n = len(seq)
        if n:
            denom = Fraction(1)
            letters: List[int] = []
            for p, q in seq:
                denom *= factorial(p) * factorial(q)
                letters.extend([0] * p + [1] * q)
            word = tuple(letters)
            coef = Fraction((-1) ** (n - 1), n) / (used * denom)
            coeffs[word] = coeffs.get(word, _F0) + coef
        for total in range(1, step - used + 1):
            for p in range(total + 1):
                extend(seq + [(p, total - p)], used + total)

    extend([], 0)
    table = [
        (word, coef)
        for word, coef in coeffs.items()
        if coef != 0 and not (len(word) >= 2 and word[-1] == word[-2])
    ]
    table.sort(key=lambda item: (len(item[0]), item[0]))
    return tuple(table)


def bch_coords(alg: LieAlgebraSpec, a: Sequence, b: Sequence, zero=_F0) -> list:
    """Coordinates of log(exp(a) exp(b)) over any commutative ring."""
    if alg.step > MAX_BCH_STEP:
        raise ValueError(
            f"step {alg.step} exceeds the supported BCH truncation bound {MAX_BCH_STEP}"
        )
    out = [zero] * alg.dim
    for word, coef in _dynkin_words(alg.step):
        vec = list(a if word[-1] == 0 else b)
        dead = False
        for letter in reversed(word[:-1]):
            vec = bracket_coords(alg, a if letter == 0 else b, vec, zero)
            if all(v == 0 for v in vec):
                dead = True
                break
        if dead:
            continue
        for k, v in enumerate(vec):
            if v == 0:
                continue
            out[k] = out[k] + coef * v
    return out


def bch_product(x: GroupElement, y: GroupElement) -> GroupElement:
    """exp(x) * exp(y) in exponential coordinates, exact up to the step."""
    alg = _check_shared_algebra(x, y)
    return GroupElement(alg, tuple(bch_coords(alg, x.coords, y.coords)))


def group_inverse(x: GroupElement) -> GroupElement:
    """exp(X)^{-1} = exp(-X)."""
    return GroupElement(x.algebra, tuple(-c for c in x.coords))


def identity(alg: LieAlgebraSpec) -> GroupElement:
    return GroupElement(alg, (_F0,) * alg.dim)


# ----------------------------------------------------------------------
# builtin algebras


def _abelian(dim: int) -> LieAlgebraSpec:
    if dim < 1:
        raise ValueError("abelian algebra needs dim >= 1")
    return LieAlgebraSpec([f"e{i+1}" for i in range(dim)], [1] * dim, {}, step=1)


def _heisenberg(dim: int) -> LieAlgebraSpec:
    if dim < 3 or dim % 2 == 0 or dim > 13:
        raise ValueError("heisenberg algebra needs odd dim between 3 and 13")
    m = (dim - 1) // 2
    labels = [f"x{i+1}" for i in range(m)] + [f"y{i+1}" for i in range(m)] + ["z"]
    layers = [1] * (2 * m) + [2]
    brackets = {(i, m + i): {2 * m: _F1} for i in range(m)}
    return LieAlgebraSpec(labels, layers, brackets, step=2)


def _strictly_upper_triangular(n: int) -> LieAlgebraSpec:
    if not 2 <= n <= 6:
        raise ValueError("strictly_upper_triangular supports 2 <= n <= 6")
    positions = sorted(
        ((i, j) for i in range(n) for j in range(i + 1, n)),
        key=lambda p: (p[1] - p[0], p),
    )
    index = {p: k for k, p in enumerate(positions)}
    labels = [f"e{i+1}{j+1}" for i, j in positions]
    layers = [j - i for i, j in positions]
    brackets: Dict[Tuple[int, int], BracketRow] = {}
    for a in range(len(positions)):
        for b in range(a + 1, len(positions)):
            (i, j), (k, l) = positions[a], positions[b]
            row: BracketRow = {}
            if j == k:
                row[index[(i, l)]] = row.get(index[(i, l)], _F0) + 1
            if l == i:
                row[index[(k, j)]] = row.get(index[(k, j)], _F0) - 1
            row = {t: c for t, c in row.items() if c != 0}
            if row:
                brackets[(a, b)] = row
    return LieAlgebraSpec(labels, layers, brackets, step=n - 1)


# Free nilpotent algebras are built inside the truncated free associative
# algebra: a left-normed bracket word expands to a signed sum of monomials,
# and exact Gaussian elimination per degree picks the independent ones.

_AssocPoly = Dict[Tuple[int, ...], Fraction]


def _assoc_commutator(p: _AssocPoly, letter: int, max_deg: int) -> _AssocPoly:
    out: _AssocPoly = {}
    for w, c in p.items():
        if len(w) + 1 > max_deg:
            continue
        right = w + (letter,)
        left = (letter,) + w
        out[right] = out.get(right, _F0) + c
        out[left] = out.get(left, _F0) - c
    return {w: c for w, c in out.items() if c != 0}


def _assoc_product(p: _AssocPoly, q: _AssocPoly, max_deg: int) -> _AssocPoly:
    out: _AssocPoly = {}
    for w1, c1 in p.items():
        for w2, c2 in q.items():
            if len(w1) + len(w2) > max_deg:
                continue
            w = w1 + w2
            acc = out.get(w, _F0) + c1 * c2
            if acc == 0:
                out.pop(w, None)
            else:
                out[w] = acc
    return out


class _Echelon:
    """Per-degree echelon rows, each remembering its basis combination."""

    def __init__(self) -> None:
        self.rows: List[Tuple[Tuple[int, ...], _AssocPoly, Dict[int, Fraction]]] = []

    def reduce(self, vec: _AssocPoly) -> Tuple[_AssocPoly, Dict[int, Fraction]]:
        vec = dict(vec)
        combo: Dict[int, Fraction] = {}
        for pivot, row, rcombo in self.rows:
            c = vec.get(pivot)
            if not c:
                continue
            for w, rc in row.items():
                acc = vec.get(w, _F0) - c * rc
                if acc == 0:
                    vec.pop(w, None)
                else:
                    vec[w] = acc
            for idx, rc in rcombo.items():
                acc = combo.get(idx, _F0) + c * rc
                if acc == 0:
                    combo.pop(idx, None)
                else:
                    combo[idx] = acc
        return vec, combo

    def insert(self, residual: _AssocPoly, combo: Dict[int, Fraction]) -> None:
        pivot = min(residual)
        lead = residual[pivot]
        row = {w: c / lead for w, c in residual.items()}
        scaled = {idx: c / lead for idx, c in combo.items()}
        self.rows.append((pivot, row, scaled))


def _free_nilpotent(generators: int, step: int) -> LieAlgebraSpec:
    if not 1 <= generators <= 4:
        raise ValueError("free_nilpotent supports 1 to 4 generators")
    if not 1 <= step <= MAX_BCH_STEP:
        raise ValueError(f"free_nilpotent supports step 1 to {MAX_BCH_STEP}")

    labels: List[str] = []
    degrees: List[int] = []
    expansions: List[_AssocPoly] = []
    echelons: Dict[int, _Echelon] = {d: _Echelon() for d in range(1, step + 1)}

    def select(exp: _AssocPoly, degree: int, label: str) -> bool:
        residual, red = echelons[degree].reduce(exp)
        if not residual:
            return False
        index = len(labels)
        # residual = exp - sum(red * basis), so its basis combination is
        # the unit vector at the new index minus red.
        combo = {index: _F1}
        for idx, c in red.items():
            combo[idx] = combo.get(idx, _F0) - c
        echelons[degree].insert(residual, {k: v for k, v in combo.items() if v != 0})
        labels.append(label)
        degrees.append(degree)
        expansions.append(exp)
        return True

    for g in range(generators):
        select({(g,): _F1}, 1, f"x{g+1}")

    def left_normed(word: Tuple[int, ...]) -> _AssocPoly:
        exp: _AssocPoly = {(word[0],): _F1}
        for letter in word[1:]:
            exp = _assoc_commutator(exp, letter, step)
            if not exp:
                break
        return exp

    for degree in range(2, step + 1):
        for word in _lex_words(generators, degree):
            exp = left_normed(word)
            if exp:
                select(exp, degree, "c" + "".join(str(l + 1) for l in word))

    brackets: Dict[Tuple[int, int], BracketRow] = {}
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            d = degrees[i] + degrees[j]
            if d > step:
                continue
            comm = _assoc_product(expansions[i], expansions[j], step)
            neg = _assoc_product(expansions[j], expansions[i], step)
            for w, c in neg.items():
                acc = comm.get(w, _F0) - c
                if acc == 0:
                    comm.pop(w, None)
                else:
                    comm[w] = acc
            if not comm:
                continue
            residual, combo = echelons[d].reduce(comm)
            if residual:
                raise RuntimeError("free Lie element escaped its degree basis")
            row = {k: c for k, c in combo.items() if c != 0}
            if row:
                brackets[(i, j)] = row

    real_step = max(degrees)
    return LieAlgebraSpec(labels, degrees, brackets, step=real_step)


def _lex_words(alphabet: int, length: int) -> Iterable[Tuple[int, ...]]:
    word = [0] * length
    while True:
        yield tuple(word)
        pos = length - 1
        while pos >= 0 and word[pos] == alphabet - 1:
            word[pos] = 0
            pos -= 1
        if pos < 0:
            return
        word[pos] += 1


_BUILTINS = {
    "abelian": _abelian,
    "heisenberg": _heisenberg,
    "strictly_upper_triangular": _strictly_upper_triangular,
    "free_nilpotent": _free_nilpotent,
}


def make_builtin(kind: str, **params) -> LieAlgebraSpec:
    """Construct a named algebra family member.

    Kinds: abelian(dim), heisenberg(dim odd), strictly_upper_triangular(n),
    free_nilpotent(generators, step).
    """
    try:
        builder = _BUILTINS[kind]
    except KeyError:
        raise ValueError(f"unknown builtin algebra kind {kind!r}") from None
    return builder(**params)


# ----------------------------------------------------------------------
# diagnostics


def verify_algebra(alg: LieAlgebraSpec) -> List[str]:
    """Exhaustive invariant check; returns human-readable violations."""
    violations: List[str] = []

    for (i, j), row in alg.brackets.items():
        if i == j:
            for k in sorted(row):
                violations.append(f"antisymmetry violation at ({i},{j},{k})")
    seen = set()
    for (i, j), row in alg.brackets.items():
        if i == j or (j, i) in seen:
            continue
        seen.add((i, j))
        mirror = alg.brackets.get((j, i))
        if mirror is None:
            continue
        keys = set(row) | set(mirror)
        for k in sorted(keys):
            if row.get(k, _F0) != -mirror.get(k, _F0):
                violations.append(f"antisymmetry violation at ({min(i, j)},{max(i, j)},{k})")

    basis = [
        tuple(_F1 if t == s else _F0 for t in range(alg.dim)) for s in range(alg.dim)
    ]
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            for k in range(j + 1, alg.dim):
                acc = [_F0] * alg.dim
                for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                    inner = bracket_coords(alg, basis[a], basis[b])
                    outer = bracket_coords(alg, inner, basis[c])
                    acc = [u + v for u, v in zip(acc, outer)]
                if any(v != 0 for v in acc):
                    violations.append(f"Jacobi violation at ({i},{j},{k})")

    for (i, j), row in alg._table.items():
        need = alg.layers[i] + alg.layers[j]
        for k in sorted(row):
            if alg.layers[k] < need:
                violations.append(f"grading violation at ({i},{j},{k})")

    present = set(alg.layers)
    expected = set(range(1, alg.step + 1))
    if present != expected:
        violations.append(
            f"layer values {sorted(present)} are not contiguous from 1 to step {alg.step}"
        )

    return violations


# ----------------------------------------------------------------------
# serialization


def algebra_to_json_dict(alg: LieAlgebraSpec) -> dict:
    rows = []
    for (i, j) in sorted(alg._table):
        row = alg._table[(i, j)]
        rows.append([i, j, [[k, str(row[k])] for k in sorted(row)]])
    return {
        "dim": alg.dim,
        "labels": list(alg.labels),
        "step": alg.step,
        "layers": list(alg.layers),
        "brackets": rows,
    }


def algebra_from_json_dict(data: Mapping) -> LieAlgebraSpec:
    labels = [str(l) for l in data["labels"]]
    if "dim" in data and int(data["dim"]) != len(labels):
        raise ValueError("dim field disagrees with label count")
    brackets: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
    for i, j, row in data.get("brackets", []):
        brackets[(int(i), int(j))] = {int(k): Fraction(str(v)) for k, v in row}
    return LieAlgebraSpec(labels, data["layers"], brackets, step=data.get("step"))
