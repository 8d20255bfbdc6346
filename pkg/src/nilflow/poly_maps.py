"""Polynomial maps R x R^r -> G in exponential coordinates.

A PolyMap stores one exact polynomial per basis coordinate of the algebra;
the map itself is exp of that vector.  The first variable is the time
variable; the `domain` tuple records which variables are inputs of the map
(differencing shifts those), while later-added shift variables act as
parameters.  Products and inverses go through the truncated BCH formula
with polynomial coefficients, so every operation here stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

from .lie_core import GroupElement, LieAlgebraSpec, algebra_from_json_dict, algebra_to_json_dict, bch_coords
from .multipoly import MultiPoly

AffineValue = Union[int, str, Fraction, Tuple, MultiPoly]


class PolyMap:
    """Map into the group, given by exponential-coordinate polynomials."""

    __slots__ = ("algebra", "vars", "coords", "domain")

    def __init__(
        self,
        algebra: LieAlgebraSpec,
        variables: Sequence[str],
        coords: Sequence[MultiPoly],
        domain: Sequence[str] | None = None,
    ):
        self.algebra = algebra
        self.vars: Tuple[str, ...] = tuple(variables)
        if not self.vars:
            raise ValueError("a PolyMap needs at least the time variable")
        if len(set(self.vars)) != len(self.vars):
            raise ValueError("duplicate variable names")
        if len(coords) != algebra.dim:
            raise ValueError(f"expected {algebra.dim} coordinate polynomials, got {len(coords)}")
        fixed = []
        for c in coords:
            if not isinstance(c, MultiPoly):
                c = MultiPoly.const(self.vars, c)
            elif c.vars != self.vars:
                c = c.with_vars(self.vars)
            fixed.append(c)
        self.coords: Tuple[MultiPoly, ...] = tuple(fixed)
        if domain is None:
            domain = self.vars
        self.domain: Tuple[str, ...] = tuple(domain)
        if any(v not in self.vars for v in self.domain):
            raise ValueError("domain variables must be among the map variables")

    # ------------------------------------------------------------------
    # construction helpers

    @classmethod
    def constant_identity(cls, algebra: LieAlgebraSpec, variables: Sequence[str]) -> "PolyMap":
        zero = MultiPoly.zero(tuple(variables))
        return cls(algebra, variables, [zero] * algebra.dim)

    @classmethod
    def build(
        cls,
        algebra: LieAlgebraSpec,
        variables: Sequence[str],
        entries: Mapping[Union[str, int], MultiPoly],
        domain: Sequence[str] | None = None,
    ) -> "PolyMap":
        """Map exp(sum entries[label] * e_label); omitted coordinates are 0."""
        variables = tuple(variables)
        coords = [MultiPoly.zero(variables) for _ in range(algebra.dim)]
        for key, poly in entries.items():
            idx = key if isinstance(key, int) else algebra.basis_index(key)
            if not isinstance(poly, MultiPoly):
                poly = MultiPoly.const(variables, poly)
            coords[idx] = coords[idx] + poly.with_vars(variables)
        return cls(algebra, variables, coords, domain=domain)

    # ------------------------------------------------------------------
    # predicates

    @property
    def time_var(self) -> str:
        return self.vars[0]

    def is_constant_identity(self) -> bool:
        return all(c.is_zero() for c in self.coords)

    def is_constant_on_domain(self) -> bool:
        return not any(c.depends_on(self.domain) for c in self.coords)

    def fixes_time_origin(self) -> bool:
        """True when every coordinate vanishes identically at time 0."""
        t_index = 0
        return all(all(exp[t_index] > 0 for exp in c.terms) for c in self.coords)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolyMap):
            return NotImplemented
        return (
            self.algebra == other.algebra
            and self.vars == other.vars
            and self.coords == other.coords
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        body = ", ".join(f"{l}: {c}" for l, c in zip(self.algebra.labels, self.coords) if not c.is_zero())
        return f"PolyMap({self.vars}; {body or 'e'})"

    # ------------------------------------------------------------------
    # evaluation

    def eval(self, point: Union[Sequence, Mapping]) -> GroupElement:
        """Exact substitution of a rational point into every coordinate."""
        return GroupElement(self.algebra, tuple(c.eval(point) for c in self.coords))


def _check_compatible(phi: PolyMap, psi: PolyMap) -> None:
    if phi.algebra != psi.algebra:
        raise ValueError("maps target different algebras")
    if phi.vars != psi.vars:
        raise ValueError(f"variable mismatch: {phi.vars} vs {psi.vars}")


def pointwise_product(phi: PolyMap, psi: PolyMap) -> PolyMap:
    """x -> phi(x) * psi(x), computed by BCH with polynomial coefficients."""
    _check_compatible(phi, psi)
    zero = MultiPoly.zero(phi.vars)
    coords = bch_coords(phi.algebra, phi.coords, psi.coords, zero=zero)
    return PolyMap(phi.algebra, phi.vars, coords, domain=phi.domain)


def pointwise_inverse(phi: PolyMap) -> PolyMap:
    """x -> phi(x)^{-1}; negation in exponential coordinates."""
    return PolyMap(phi.algebra, phi.vars, [-c for c in phi.coords], domain=phi.domain)


def _as_affine(value: AffineValue) -> Tuple[Fraction, Dict[str, Fraction]]:
    if isinstance(value, tuple):
        const, linear = value
        return Fraction(const), {str(n): Fraction(c) for n, c in linear.items()}
    if isinstance(value, str):
        return Fraction(0), {value: Fraction(1)}
    return Fraction(value), {}


def substitute(
    phi: PolyMap,
    assignment: Mapping[str, AffineValue],
    new_variables: Sequence[str] | None = None,
    new_domain: Sequence[str] | None = None,
) -> PolyMap:
    """Affine change of variables.

    Assignment values are rational constants, variable names, or pairs
    (const, {var: coeff}).  Untouched variables carry over.  The variable
    list of the result keeps the original order, substituted variables being
    replaced in place by the new names their image introduces.
    """
    affine = {v: _as_affine(expr) for v, expr in assignment.items()}
    for v in affine:
        if v not in phi.vars:
            raise ValueError(f"unknown variable {v!r}")

    if new_variables is None:
        ordered: List[str] = []
        for v in phi.vars:
            names = affine[v][1] if v in affine else {v: Fraction(1)}
            for name in names:
                if name not in ordered:
                    ordered.append(name)
        new_variables = tuple(ordered)
    else:
        new_variables = tuple(new_variables)

    if new_domain is None:
        # a substituted variable stays in the domain only when its image
        # still involves it (shifts like t -> t + k), not when it is pinned
        new_domain = tuple(
            v
            for v in phi.domain
            if v in new_variables and (v not in affine or v in affine[v][1])
        )

    coords = [c.substitute(new_variables, affine) for c in phi.coords]
    return PolyMap(phi.algebra, new_variables, coords, domain=new_domain)


def _fresh_shift_names(phi: PolyMap) -> Dict[str, str]:
    n = 1
    while any(f"{v}_d{n}" in phi.vars for v in phi.domain):
        n += 1
    return {v: f"{v}_d{n}" for v in phi.domain}


def difference(phi: PolyMap, direction: Union[Sequence, Mapping, None] = None) -> PolyMap:
    """The map g -> phi(g - h) * phi(g)^{-1} over the domain variables.

    With `direction` a rational vector (or mapping) the shift h is fixed;
    with no direction the shift is symbolic and the fresh shift variables
    join the result as parameters, leaving the domain unchanged.
    """
    if direction is None:
        names = _fresh_shift_names(phi)
        new_vars = phi.vars + tuple(names[v] for v in phi.domain)
        assignment = {
            v: (Fraction(0), {v: Fraction(1), names[v]: Fraction(-1)}) for v in phi.domain
        }
        shifted = substitute(phi, assignment, new_variables=new_vars, new_domain=phi.domain)
        base = PolyMap(
            phi.algebra,
            new_vars,
            [c.with_vars(new_vars) for c in phi.coords],
            domain=phi.domain,
        )
    else:
        if isinstance(direction, Mapping):
            shift = {v: Fraction(direction.get(v, 0)) for v in phi.domain}
        else:
            if len(direction) != len(phi.domain):
                raise ValueError(
                    f"direction arity {len(direction)} does not match domain {phi.domain}"
                )
            shift = {v: Fraction(d) for v, d in zip(phi.domain, direction)}
        assignment = {
            v: (-shift[v], {v: Fraction(1)}) for v in phi.domain if shift[v] != 0
        }
        shifted = (
            substitute(phi, assignment, new_variables=phi.vars, new_domain=phi.domain)
            if assignment
            else phi
        )
        base = phi
    return pointwise_product(shifted, pointwise_inverse(base))


def polynomial_degree(phi: PolyMap, max_iterations: int | None = None) -> int:
    """Least d such that d symbolic differences leave a map constant on the
    domain variables (equivalently, d+1 differences give the identity)."""
    if max_iterations is None:
        max_total = max((c.total_degree_in(phi.domain) for c in phi.coords), default=0)
        max_iterations = phi.algebra.step * (max_total + 1) + 2
    current = phi
    for d in range(max_iterations + 1):
        if current.is_constant_on_domain():
            return d
        current = difference(current)
    raise RuntimeError(f"differencing did not terminate within {max_iterations} iterations")


# ----------------------------------------------------------------------
# leading-term analysis


@dataclass(frozen=True)
class LeadingTerm:
    """Class, time degree, and t^d coefficient vector on the layer-c basis."""

    internal_class: int
    leading_degree: int
    coefficient: Tuple[MultiPoly, ...]

    def __post_init__(self) -> None:
        if all(c.is_zero() for c in self.coefficient):
            raise ValueError("leading coefficient vector is identically zero")


def internal_class(phi: PolyMap) -> int:
    """Greatest c such that every coordinate on layers below c vanishes."""
    if phi.is_constant_identity():
        raise ValueError("the constant identity map has no internal class")
    layers = phi.algebra.layers
    c = phi.algebra.step
    for i, poly in enumerate(phi.coords):
        if not poly.is_zero():
            c = min(c, layers[i])
    return c


def leading_term(phi: PolyMap) -> LeadingTerm:
    """Projection of phi to the layer-c quotient, keeping the top t power."""
    c = internal_class(phi)
    t = phi.time_var
    indices = [i for i, l in enumerate(phi.algebra.layers) if l == c]
    degree = max(phi.coords[i].degree_in(t) for i in indices)
    params = tuple(v for v in phi.vars if v != t)
    zero = MultiPoly.zero(params)
    coefficient = tuple(
        phi.coords[i].coefficients_in(t).get(degree, zero) for i in indices
    )
    return LeadingTerm(c, degree, coefficient)


def lt_equivalent(phi: PolyMap, psi: PolyMap) -> bool:
    """Same internal class and identical leading term."""
    _check_compatible(phi, psi)
    a = leading_term(phi)
    b = leading_term(psi)
    return (
        a.internal_class == b.internal_class
        and a.leading_degree == b.leading_degree
        and a.coefficient == b.coefficient
    )


# ----------------------------------------------------------------------
# serialization


def polymap_to_json_dict(phi: PolyMap, include_algebra: bool = True) -> dict:
    data: dict = {
        "vars": list(phi.vars),
        "coords": [c.to_terms() for c in phi.coords],
    }
    if phi.domain != phi.vars:
        data["domain"] = list(phi.domain)
    if include_algebra:
        data["algebra"] = algebra_to_json_dict(phi.algebra)
    return data


def polymap_from_json_dict(data: Mapping, algebra: LieAlgebraSpec | None = None) -> PolyMap:
    if algebra is None:
        algebra = algebra_from_json_dict(data["algebra"])
    variables = tuple(str(v) for v in data["vars"])
    coords = [MultiPoly.from_terms(variables, entry) for entry in data["coords"]]
    return PolyMap(algebra, variables, coords, domain=data.get("domain"))
