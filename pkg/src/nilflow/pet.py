"""Weights, the PET ordering on families of polynomial maps, and the
certified descent trace.

A family is an ordered tuple of maps sharing algebra and variables, each
fixing the identity at time zero.  Members are compared through their
leading terms: the weight of a map is the pair (internal class, leading
degree), ordered by class descending then degree ascending, and a family is
summarized by counting leading-term equivalence classes per weight.  The
trace repeatedly replaces a family by its derived family at a pivot and
certifies that each step strictly descends.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .errors import CertificateError, TruncationError
from .poly_maps import (
    PolyMap,
    leading_term,
    pointwise_inverse,
    pointwise_product,
    polymap_to_json_dict,
    substitute,
)
from .lie_core import algebra_to_json_dict

MAX_MATCHING_FAMILY = 12


@dataclass(frozen=True, order=False)
class Weight:
    internal_class: int
    leading_degree: int

    def to_json(self) -> list:
        return [self.internal_class, self.leading_degree]


def weight(phi: PolyMap) -> Weight:
    """(class, leading degree) of a nonconstant map."""
    lt = leading_term(phi)
    return Weight(lt.internal_class, lt.leading_degree)


def weight_less(w1: Weight, w2: Weight) -> bool:
    """w1 comes strictly earlier: deeper class first, then lower degree."""
    if w1.internal_class != w2.internal_class:
        return w1.internal_class > w2.internal_class
    return w1.leading_degree < w2.leading_degree


def _descending_key(w: Weight) -> Tuple[int, int]:
    # sort so the latest weight in the order comes first
    return (w.internal_class, -w.leading_degree)


class WeightAssignment:
    """Counts of leading-term classes per weight; finitely supported."""

    __slots__ = ("_counts",)

    def __init__(self, counts: Mapping[Weight, int]):
        self._counts: Dict[Weight, int] = {
            w: int(n) for w, n in counts.items() if n != 0
        }
        if any(n < 0 for n in self._counts.values()):
            raise ValueError("class counts must be positive")

    def get(self, w: Weight) -> int:
        return self._counts.get(w, 0)

    def support(self) -> List[Weight]:
        return sorted(self._counts, key=_descending_key)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightAssignment):
            return NotImplemented
        return self._counts == other._counts

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        body = ", ".join(
            f"({w.internal_class},{w.leading_degree}): {n}"
            for w, n in sorted(self._counts.items(), key=lambda kv: _descending_key(kv[0]))
        )
        return "WeightAssignment({" + body + "})"

    def to_json(self) -> list:
        return [
            [w.internal_class, w.leading_degree, self._counts[w]]
            for w in self.support()
        ]


def assignment_less(f: WeightAssignment, g: WeightAssignment) -> bool:
    return _assignment_witness(f, g) is not None


def _assignment_witness(f: WeightAssignment, g: WeightAssignment) -> Weight | None:
    """The weight at which f drops below g, all later weights agreeing."""
    weights = sorted(set(f.support()) | set(g.support()), key=_descending_key)
    for w in weights:
        if f.get(w) != g.get(w):
            return w if f.get(w) < g.get(w) else None
    return None


# ----------------------------------------------------------------------
# families


class PolyFamily:
    """Ordered tuple of maps sharing algebra and variables, e at time 0."""

    __slots__ = ("maps",)

    def __init__(self, maps: Iterable[PolyMap]):
        maps = tuple(maps)
        if maps:
            first = maps[0]
            for phi in maps[1:]:
                if phi.algebra != first.algebra:
                    raise ValueError("family members target different algebras")
                if phi.vars != first.vars:
                    raise ValueError("family members use different variables")
        for n, phi in enumerate(maps):
            if not phi.fixes_time_origin():
                raise ValueError(f"family member {n} does not fix the identity at time 0")
        self.maps = maps

    def __len__(self) -> int:
        return len(self.maps)

    def __iter__(self):
        return iter(self.maps)

    def __getitem__(self, i: int) -> PolyMap:
        return self.maps[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolyFamily):
            return NotImplemented
        return self.maps == other.maps

    __hash__ = None  # type: ignore[assignment]

    def nonconstant_indices(self) -> List[int]:
        return [i for i, phi in enumerate(self.maps) if not phi.is_constant_identity()]


def _lt_class_key(phi: PolyMap):
    lt = leading_term(phi)
    coeff = tuple(tuple(sorted(p.terms.items())) for p in lt.coefficient)
    return (lt.internal_class, lt.leading_degree, coeff)


def lt_partition(family: PolyFamily) -> List[List[int]]:
    """Indices of nonconstant members grouped into leading-term classes."""
    groups: Dict[object, List[int]] = {}
    order: List[object] = []
    for i in family.nonconstant_indices():
        key = _lt_class_key(family[i])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(i)
    return [groups[key] for key in order]


def weight_assignment(family: PolyFamily) -> WeightAssignment:
    """Number of leading-term classes at each weight; constants are skipped."""
    counts: Dict[Weight, int] = {}
    for members in lt_partition(family):
        w = weight(family[members[0]])
        counts[w] = counts.get(w, 0) + 1
    return WeightAssignment(counts)


def _class_sizes_by_weight(family: PolyFamily) -> Dict[Weight, List[int]]:
    sizes: Dict[Weight, List[int]] = {}
    for members in lt_partition(family):
        w = weight(family[members[0]])
        sizes.setdefault(w, []).append(len(members))
    return sizes


def _weight_matching(f_sizes: Sequence[int], g_sizes: Sequence[int]) -> Tuple[bool, bool]:
    """Exhaustive bijection search: (some valid matching, some strict one)."""
    valid = False
    strict = False
    for perm in permutations(range(len(g_sizes))):
        if all(a <= g_sizes[p] for a, p in zip(f_sizes, perm)):
            valid = True
            if any(a < g_sizes[p] for a, p in zip(f_sizes, perm)):
                strict = True
                break
    return valid, strict


def family_precedes(
    f_family: PolyFamily,
    g_family: PolyFamily,
    max_family_size: int = MAX_MATCHING_FAMILY,
) -> bool:
    """Strict order on families: assignment descent, or equal assignments
    with a weight-preserving class matching that shrinks somewhere."""
    f = weight_assignment(f_family)
    g = weight_assignment(g_family)
    if _assignment_witness(f, g) is not None:
        return True
    if f != g:
        return False
    if max(len(f_family), len(g_family)) > max_family_size:
        raise ValueError(
            f"family of size {max(len(f_family), len(g_family))} exceeds the "
            f"exhaustive matching cap {max_family_size}"
        )
    f_sizes = _class_sizes_by_weight(f_family)
    g_sizes = _class_sizes_by_weight(g_family)
    any_strict = False
    for w in f.support():
        valid, strict = _weight_matching(f_sizes[w], g_sizes[w])
        if not valid:
            return False
        any_strict = any_strict or strict
    return any_strict


def pivot(family: PolyFamily) -> int:
    """Index of the earliest member of minimal weight.

    Indices are zero-based positions in the family tuple.
    """
    candidates = family.nonconstant_indices()
    if not candidates:
        raise ValueError("an all-constant family has no pivot")
    best = candidates[0]
    best_w = weight(family[best])
    for i in candidates[1:]:
        w = weight(family[i])
        if weight_less(w, best_w):
            best, best_w = i, w
    return best


def _differencing_tools(base_vars: Tuple[str, ...]):
    """Fresh shift variable plus the three substitutions used by derivation."""
    n = 1
    k_name = "k"
    while k_name in base_vars:
        k_name = f"k{n}"
        n += 1
    new_vars = base_vars + (k_name,)
    t_name = base_vars[0]

    def extended(phi: PolyMap) -> PolyMap:
        return PolyMap(phi.algebra, new_vars, [c.with_vars(new_vars) for c in phi.coords])

    def at_k(phi: PolyMap) -> PolyMap:
        return substitute(
            phi, {t_name: (Fraction(0), {k_name: Fraction(1)})}, new_variables=new_vars
        )

    def shifted(phi: PolyMap) -> PolyMap:
        return substitute(
            phi,
            {t_name: (Fraction(0), {t_name: Fraction(1), k_name: Fraction(1)})},
            new_variables=new_vars,
        )

    return new_vars, extended, at_k, shifted


def derived_family(family: PolyFamily, i: int) -> PolyFamily:
    """The 2k-1 maps obtained by differencing the family against member i.

    A fresh shift variable is appended to the variable list; first come the
    quotient maps for j != i, then the shifted quotients for every j.
    """
    if not 0 <= i < len(family):
        raise ValueError(f"pivot index {i} out of range for family of size {len(family)}")
    _, extended, at_k, shifted = _differencing_tools(family[i].vars)
    inv_pivot = pointwise_inverse(extended(family[i]))
    maps: List[PolyMap] = []
    for j in range(len(family)):
        if j != i:
            maps.append(pointwise_product(extended(family[j]), inv_pivot))
    for j in range(len(family)):
        head = pointwise_product(pointwise_inverse(at_k(family[j])), shifted(family[j]))
        maps.append(pointwise_product(head, inv_pivot))
    derived = PolyFamily(maps)
    for phi in derived:
        if not phi.fixes_time_origin():
            raise RuntimeError("derived member lost the time-origin normalization")
    return derived


# ----------------------------------------------------------------------
# trace
#
# Derived families repeat maps (the shifted quotient of a degree-one member
# equals its plain quotient, for one), and repetition compounds at every
# level.  The trace therefore stores each level as distinct maps paired with
# multiplicities; cardinality bookkeeping is unchanged because classes count
# members, not distinct maps.

Members = Tuple[Tuple[PolyMap, int], ...]


def _coords_key(phi: PolyMap):
    return tuple(tuple(sorted(c.terms.items())) for c in phi.coords)


def _merge_members(pairs: Iterable[Tuple[PolyMap, int]]) -> List[Tuple[PolyMap, int]]:
    """Combine repeats, keeping first-occurrence order."""
    index: Dict[object, int] = {}
    out: List[List[object]] = []
    for phi, mult in pairs:
        if mult == 0:
            continue
        key = _coords_key(phi)
        if key in index:
            out[index[key]][1] += mult
        else:
            index[key] = len(out)
            out.append([phi, mult])
    return [(phi, mult) for phi, mult in out]


def _split_constants(members: Sequence[Tuple[PolyMap, int]]):
    active = [(phi, mult) for phi, mult in members if not phi.is_constant_identity()]
    dropped = sum(mult for phi, mult in members if phi.is_constant_identity())
    return active, dropped


def _member_partition(members: Sequence[Tuple[PolyMap, int]]) -> List[List[int]]:
    groups: Dict[object, List[int]] = {}
    order: List[object] = []
    for i, (phi, _) in enumerate(members):
        if phi.is_constant_identity():
            continue
        key = _lt_class_key(phi)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(i)
    return [groups[key] for key in order]


def _members_assignment(members: Sequence[Tuple[PolyMap, int]]) -> WeightAssignment:
    counts: Dict[Weight, int] = {}
    for group in _member_partition(members):
        w = weight(members[group[0]][0])
        counts[w] = counts.get(w, 0) + 1
    return WeightAssignment(counts)


def _members_class_sizes(members: Sequence[Tuple[PolyMap, int]]) -> Dict[Weight, List[int]]:
    sizes: Dict[Weight, List[int]] = {}
    for group in _member_partition(members):
        w = weight(members[group[0]][0])
        sizes.setdefault(w, []).append(sum(members[i][1] for i in group))
    return sizes


def _sorted_matching(f_sizes: Sequence[int], g_sizes: Sequence[int]) -> Tuple[bool, bool]:
    """Same verdict as the exhaustive bijection search.

    A size-respecting bijection exists exactly when the descending-sorted
    vectors compare componentwise, and it can be strict somewhere exactly
    when the totals differ.
    """
    if len(f_sizes) != len(g_sizes):
        return False, False
    fs = sorted(f_sizes, reverse=True)
    gs = sorted(g_sizes, reverse=True)
    valid = all(a <= b for a, b in zip(fs, gs))
    return valid, valid and sum(fs) < sum(gs)


def _members_precede(
    f_members: Sequence[Tuple[PolyMap, int]], g_members: Sequence[Tuple[PolyMap, int]]
) -> bool:
    f = _members_assignment(f_members)
    g = _members_assignment(g_members)
    if _assignment_witness(f, g) is not None:
        return True
    if f != g:
        return False
    f_sizes = _members_class_sizes(f_members)
    g_sizes = _members_class_sizes(g_members)
    any_strict = False
    for w in f.support():
        valid, strict = _sorted_matching(f_sizes[w], g_sizes[w])
        if not valid:
            return False
        any_strict = any_strict or strict
    return any_strict


def _members_pivot(members: Sequence[Tuple[PolyMap, int]]) -> int:
    best = 0
    best_w = weight(members[0][0])
    for i in range(1, len(members)):
        w = weight(members[i][0])
        if weight_less(w, best_w):
            best, best_w = i, w
    return best


def _derive_members(members: Sequence[Tuple[PolyMap, int]], p: int) -> List[Tuple[PolyMap, int]]:
    """One derivation step on a multiset level, pivoting at entry p.

    Order matches the tuple definition: quotients for members other than the
    pivot, then shifted quotients for every member.  Sibling copies of the
    pivot map quotient to the identity.
    """
    base = members[p][0]
    new_vars, extended, at_k, shifted = _differencing_tools(base.vars)
    inv_pivot = pointwise_inverse(extended(base))
    produced: List[Tuple[PolyMap, int]] = []
    for i, (phi, mult) in enumerate(members):
        if i == p:
            if mult > 1:
                produced.append((PolyMap.constant_identity(base.algebra, new_vars), mult - 1))
        else:
            produced.append((pointwise_product(extended(phi), inv_pivot), mult))
    for phi, mult in members:
        head = pointwise_product(pointwise_inverse(at_k(phi)), shifted(phi))
        produced.append((pointwise_product(head, inv_pivot), mult))
    merged = _merge_members(produced)
    for phi, _ in merged:
        if not phi.fixes_time_origin():
            raise RuntimeError("derived member lost the time-origin normalization")
    return merged


@dataclass(frozen=True)
class PETStep:
    family: Members
    dropped: int
    classes: Tuple[Tuple[int, ...], ...]
    class_cardinalities: Tuple[int, ...]
    assignment: WeightAssignment
    pivot_index: int
    pivot_member: int
    derived: Members
    certificate: dict


@dataclass(frozen=True)
class PETTrace:
    steps: Tuple[PETStep, ...]
    final_family: Members
    final_dropped: int

    @property
    def depth(self) -> int:
        return len(self.steps)


def _descent_certificate(derived: Members, current: Members) -> dict:
    f = _members_assignment(derived)
    g = _members_assignment(current)
    witness = _assignment_witness(f, g)
    if witness is not None:
        return {
            "kind": "weight_descent",
            "weight": witness.to_json(),
            "before": g.get(witness),
            "after": f.get(witness),
        }
    per_weight = []
    f_sizes = _members_class_sizes(derived)
    g_sizes = _members_class_sizes(current)
    for w in g.support():
        per_weight.append(
            [w.internal_class, w.leading_degree, sorted(f_sizes[w]), sorted(g_sizes[w])]
        )
    return {"kind": "class_size_descent", "per_weight": per_weight}


def pet_trace(family: PolyFamily, max_depth: int = 64) -> PETTrace:
    """Run the induction: drop constants, derive at a pivot, certify, repeat.

    Stops when at most one member remains.  A depth overrun raises
    TruncationError; a failed descent check raises CertificateError.
    """
    steps: List[PETStep] = []
    current = _merge_members((phi, 1) for phi in family)
    for _ in range(max_depth + 1):
        active, dropped = _split_constants(current)
        if sum(mult for _, mult in active) <= 1:
            return PETTrace(tuple(steps), tuple(active), dropped)
        p = _members_pivot(active)
        derived = _derive_members(active, p)
        if not _members_precede(derived, active):
            raise CertificateError(
                f"derived family does not precede its parent at depth {len(steps)}"
            )
        certificate = _descent_certificate(derived, active)
        classes = _member_partition(active)
        steps.append(
            PETStep(
                family=tuple(active),
                dropped=dropped,
                classes=tuple(tuple(c) for c in classes),
                class_cardinalities=tuple(
                    sum(active[i][1] for i in group) for group in classes
                ),
                assignment=_members_assignment(active),
                pivot_index=p,
                pivot_member=sum(mult for _, mult in active[:p]),
                derived=tuple(derived),
                certificate=certificate,
            )
        )
        current = derived
    raise TruncationError(f"PET induction exceeded max depth {max_depth}")


def _members_to_json(members: Members) -> list:
    return [
        {"multiplicity": mult, "map": polymap_to_json_dict(phi, include_algebra=False)}
        for phi, mult in members
    ]


def trace_to_json_dict(trace: PETTrace) -> dict:
    """Certificate document: one record per step plus the final family."""
    algebra = None
    if trace.final_family:
        algebra = trace.final_family[0][0].algebra
    elif trace.steps:
        algebra = trace.steps[0].family[0][0].algebra
    steps = []
    for step in trace.steps:
        steps.append(
            {
                "family": _members_to_json(step.family),
                "dropped": step.dropped,
                "classes": [list(c) for c in step.classes],
                "class_cardinalities": list(step.class_cardinalities),
                "assignment": step.assignment.to_json(),
                "pivot": step.pivot_index,
                "pivot_member": step.pivot_member,
                "derived": _members_to_json(step.derived),
                "certificate": step.certificate,
            }
        )
    return {
        "algebra": algebra_to_json_dict(algebra) if algebra is not None else None,
        "depth": trace.depth,
        "steps": steps,
        "final_family": _members_to_json(trace.final_family),
        "final_dropped": trace.final_dropped,
    }
