"""Exact sparse multivariate polynomials over the rationals.

A polynomial carries an ordered tuple of variable names and a sparse term
map from exponent tuples to nonzero Fraction coefficients.  All arithmetic
is exact; nothing here touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple, Union

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]

# An affine expression c0 + sum(coeff * var) used by substitute().
Affine = Tuple[Fraction, Dict[str, Fraction]]


def _as_fraction(value: Union[int, str, Fraction]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


class MultiPoly:
    """Sparse exact polynomial in a fixed ordered variable list."""

    __slots__ = ("vars", "terms")

    def __init__(self, variables: Sequence[str], terms: Mapping[Exponent, Fraction] | None = None):
        self.vars: Tuple[str, ...] = tuple(variables)
        clean: Dict[Exponent, Fraction] = {}
        if terms:
            arity = len(self.vars)
            for exp, coef in terms.items():
                coef = _as_fraction(coef)
                if coef == 0:
                    continue
                exp = tuple(int(e) for e in exp)
                if len(exp) != arity or any(e < 0 for e in exp):
                    raise ValueError(f"exponent {exp} does not match variables {self.vars}")
                clean[exp] = clean.get(exp, Fraction(0)) + coef
                if clean[exp] == 0:
                    del clean[exp]
        self.terms: Dict[Exponent, Fraction] = clean

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "MultiPoly":
        return cls(variables)

    @classmethod
    def const(cls, variables: Sequence[str], value: Union[int, str, Fraction]) -> "MultiPoly":
        value = _as_fraction(value)
        if value == 0:
            return cls(variables)
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, variables: Sequence[str], name: str) -> "MultiPoly":
        variables = tuple(variables)
        if name not in variables:
            raise ValueError(f"unknown variable {name!r} among {variables}")
        exp = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exp: Fraction(1)})

    # ------------------------------------------------------------------
    # predicates

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in exp) for exp in self.terms)

    def constant_value(self) -> Fraction:
        """Value of a constant polynomial (zero polynomial gives 0)."""
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return next(iter(self.terms.values()), Fraction(0))

    def depends_on(self, names: Iterable[str]) -> bool:
        """True if any term has a positive exponent on one of `names`."""
        idx = [self.vars.index(n) for n in names]
        return any(any(exp[i] for i in idx) for exp in self.terms)

    # ------------------------------------------------------------------
    # arithmetic

    def _check_vars(self, other: "MultiPoly") -> None:
        if self.vars != other.vars:
            raise ValueError(f"variable mismatch: {self.vars} vs {other.vars}")

    def __add__(self, other: Union["MultiPoly", Scalar]) -> "MultiPoly":
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(self.vars, other)
        self._check_vars(other)
        terms = dict(self.terms)
        for exp, coef in other.terms.items():
            acc = terms.get(exp, Fraction(0)) + coef
            if acc == 0:
                terms.pop(exp, None)
            else:
                terms[exp] = acc
        out = MultiPoly.__new__(MultiPoly)
        out.vars = self.vars
        out.terms = terms
        return out

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        out = MultiPoly.__new__(MultiPoly)
        out.vars = self.vars
        out.terms = {exp: -coef for exp, coef in self.terms.items()}
        return out

    def __sub__(self, other: Union["MultiPoly", Scalar]) -> "MultiPoly":
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(self.vars, other)
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "MultiPoly":
        return (-self) + other

    def __mul__(self, other: Union["MultiPoly", Scalar]) -> "MultiPoly":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return MultiPoly(self.vars)
            other = _as_fraction(other)
            out = MultiPoly.__new__(MultiPoly)
            out.vars = self.vars
            out.terms = {exp: coef * other for exp, coef in self.terms.items()}
            return out
        self._check_vars(other)
        terms: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                acc = terms.get(exp, Fraction(0)) + c1 * c2
                if acc == 0:
                    terms.pop(exp, None)
                else:
                    terms[exp] = acc
        out = MultiPoly.__new__(MultiPoly)
        out.vars = self.vars
        out.terms = terms
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "MultiPoly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = MultiPoly.const(self.vars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_value() == other
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    # ------------------------------------------------------------------
    # evaluation and substitution

    def eval(self, point: Union[Sequence[Union[int, str, Fraction]], Mapping[str, Union[int, str, Fraction]]]) -> Fraction:
        """Exact evaluation at a rational point."""
        if isinstance(point, Mapping):
            values = [_as_fraction(point[v]) for v in self.vars]
        else:
            if len(point) != len(self.vars):
                raise ValueError(f"point arity {len(point)} != {len(self.vars)} variables")
            values = [_as_fraction(p) for p in point]
        total = Fraction(0)
        for exp, coef in self.terms.items():
            prod = coef
            for value, e in zip(values, exp):
                if e:
                    prod *= value ** e
            total += prod
        return total

    def with_vars(self, new_vars: Sequence[str]) -> "MultiPoly":
        """Re-express over a variable list containing all current variables."""
        new_vars = tuple(new_vars)
        positions = []
        for v in self.vars:
            if v not in new_vars:
                raise ValueError(f"variable {v!r} missing from {new_vars}")
            positions.append(new_vars.index(v))
        n = len(new_vars)
        terms: Dict[Exponent, Fraction] = {}
        for exp, coef in self.terms.items():
            out = [0] * n
            for pos, e in zip(positions, exp):
                out[pos] = e
            terms[tuple(out)] = coef
        return MultiPoly(new_vars, terms)

    def substitute(self, new_vars: Sequence[str], assignment: Mapping[str, Affine]) -> "MultiPoly":
        """Affine substitution var -> c0 + sum(coeff * new_var).

        Variables absent from `assignment` are carried over by name and must
        appear in `new_vars`.
        """
        new_vars = tuple(new_vars)
        images: list[MultiPoly] = []
        for v in self.vars:
            if v in assignment:
                c0, linear = assignment[v]
                img = MultiPoly.const(new_vars, c0)
                for name, coeff in linear.items():
                    img = img + MultiPoly.variable(new_vars, name) * _as_fraction(coeff)
            else:
                img = MultiPoly.variable(new_vars, v)
            images.append(img)
        total = MultiPoly(new_vars)
        for exp, coef in self.terms.items():
            term = MultiPoly.const(new_vars, coef)
            for img, e in zip(images, exp):
                if e:
                    term = term * (img ** e)
            total = total + term
        return total

    # ------------------------------------------------------------------
    # structure queries

    def degree_in(self, name: str) -> int:
        """Largest exponent of `name`; 0 for the zero polynomial."""
        i = self.vars.index(name)
        return max((exp[i] for exp in self.terms), default=0)

    def total_degree_in(self, names: Iterable[str]) -> int:
        idx = [self.vars.index(n) for n in names]
        return max((sum(exp[i] for i in idx) for exp in self.terms), default=0)

    def coefficients_in(self, name: str) -> Dict[int, "MultiPoly"]:
        """Coefficients of powers of `name` as polynomials in the other variables."""
        i = self.vars.index(name)
        rest = tuple(v for v in self.vars if v != name)
        buckets: Dict[int, Dict[Exponent, Fraction]] = {}
        for exp, coef in self.terms.items():
            d = exp[i]
            reduced = tuple(e for j, e in enumerate(exp) if j != i)
            buckets.setdefault(d, {})[reduced] = coef
        return {d: MultiPoly(rest, terms) for d, terms in buckets.items()}

    def drop_vars(self, names: Iterable[str]) -> "MultiPoly":
        """Remove variables the polynomial does not depend on."""
        names = set(names)
        if self.depends_on(names & set(self.vars)):
            raise ValueError("cannot drop variables the polynomial depends on")
        keep = [i for i, v in enumerate(self.vars) if v not in names]
        new_vars = tuple(self.vars[i] for i in keep)
        terms = {tuple(exp[i] for i in keep): coef for exp, coef in self.terms.items()}
        return MultiPoly(new_vars, terms)

    # ------------------------------------------------------------------
    # serialization and display

    def to_terms(self) -> list:
        """JSON-friendly term list [{"exp": [...], "coef": "p/q"}, ...]."""
        ordered = sorted(self.terms.items(), key=lambda item: (sum(item[0]), item[0]))
        return [{"exp": list(exp), "coef": str(coef)} for exp, coef in ordered]

    @classmethod
    def from_terms(cls, variables: Sequence[str], data: Iterable[Mapping]) -> "MultiPoly":
        terms = {tuple(entry["exp"]): Fraction(str(entry["coef"])) for entry in data}
        return cls(variables, terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for exp, coef in sorted(self.terms.items(), key=lambda item: (sum(item[0]), item[0])):
            factors = []
            if coef != 1 or not any(exp):
                factors.append(str(coef))
            for v, e in zip(self.vars, exp):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append(f"{v}^{e}")
            pieces.append("*".join(factors))
        return " + ".join(pieces)

    def __repr__(self) -> str:
        return f"MultiPoly({self.vars!r}, {self})"
