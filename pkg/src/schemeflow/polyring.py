"""Exact sparse multivariate polynomials and Groebner-basis ideal arithmetic.

Coefficients are rationals (fractions.Fraction) throughout; floating point
enters only at evaluation.  Monomial orders: grevlex (default) and lex, with
variable precedence given by declaration order.  Basis computation is
Buchberger with the normal selection strategy and a degree cap that aborts
runaway runs with a diagnostic.
"""

from __future__ import annotations

import enum
import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .expr import SmoothExpr, VarList, const, var

__all__ = [
    "MonomialOrder",
    "Polynomial",
    "PolyIdeal",
    "DegreeCapExceeded",
    "groebner_basis",
    "normal_form",
    "s_polynomial",
    "ideal_sum",
    "pullback_ideal",
    "bounded_membership",
]

DEFAULT_DEGREE_CAP = 40


class DegreeCapExceeded(Exception):
    """Basis computation produced a polynomial above the configured degree cap."""


class MonomialOrder(enum.Enum):
    GREVLEX = "grevlex"
    LEX = "lex"

    def key(self, exps: tuple[int, ...]):
        if self is MonomialOrder.LEX:
            return exps
        # grevlex: total degree first, ties broken by the rightmost nonzero
        # entry of the exponent difference being negative
        return (sum(exps), tuple(-e for e in reversed(exps)))


class Polynomial:
    """Sparse map exponent-vector -> nonzero rational coefficient."""

    __slots__ = ("terms", "vars")

    def __init__(self, terms: dict[tuple[int, ...], Fraction], vars_: VarList):
        self.terms = {m: c for m, c in terms.items() if c != 0}
        self.vars = vars_

    # -- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, value, vars_: VarList) -> "Polynomial":
        c = Fraction(value)
        zero = (0,) * vars_.arity
        return cls({zero: c} if c != 0 else {}, vars_)

    @classmethod
    def variable(cls, index: int, vars_: VarList) -> "Polynomial":
        exps = tuple(1 if i == index else 0 for i in range(vars_.arity))
        return cls({exps: Fraction(1)}, vars_)

    @classmethod
    def from_expr(cls, e: SmoothExpr) -> Optional["Polynomial"]:
        from .expr import as_polynomial

        return as_polynomial(e)

    # -- ring structure ----------------------------------------------------

    def _check(self, other: "Polynomial"):
        if self.vars != other.vars:
            raise ValueError("polynomials over different variable lists")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.vars)
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, Fraction(0)) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
        return Polynomial(out, self.vars)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self.terms.items()}, self.vars)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.vars)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(other, self.vars)
        self._check(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(m, Fraction(0)) + c1 * c2
                if s == 0:
                    out.pop(m, None)
                else:
                    out[m] = s
        return Polynomial(out, self.vars)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = Polynomial.constant(1, self.vars)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.vars == other.vars
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.vars, tuple(sorted(self.terms.items()))))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Polynomial({self.to_source()!r})"

    # -- structure queries -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(m) for m in self.terms)

    def leading_monomial(self, order: MonomialOrder) -> tuple[int, ...]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading monomial")
        return max(self.terms, key=order.key)

    def leading_coeff(self, order: MonomialOrder) -> Fraction:
        return self.terms[self.leading_monomial(order)]

    def monic(self, order: MonomialOrder) -> "Polynomial":
        if not self.terms:
            return self
        lc = self.leading_coeff(order)
        if lc == 1:
            return self
        return Polynomial({m: c / lc for m, c in self.terms.items()}, self.vars)

    # -- evaluation / conversion -------------------------------------------

    def eval(self, point: Sequence[float]) -> float:
        if len(point) != self.vars.arity:
            raise ValueError("point length mismatch")
        out = 0.0
        for m, c in self.terms.items():
            term = float(c)
            for x, e in zip(point, m):
                if e:
                    term *= float(x) ** e
            out += term
        return out

    def compose(self, args: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute args[i] for variable i; result lives over args' variables."""
        if len(args) != self.vars.arity:
            raise ValueError("composition arity mismatch")
        target = args[0].vars
        out = Polynomial.constant(0, target)
        for m, c in self.terms.items():
            term = Polynomial.constant(c, target)
            for a, e in zip(args, m):
                if e:
                    term = term * a**e
            out = out + term
        return out

    def to_expr(self) -> SmoothExpr:
        """Expression-tree form (printable in the expression grammar)."""
        terms = sorted(
            self.terms.items(), key=lambda mc: MonomialOrder.GREVLEX.key(mc[0]), reverse=True
        )
        vl = self.vars
        if not terms:
            return const(0, vl)
        parts = []
        for m, c in terms:
            factors: list[SmoothExpr] = []
            if c != 1 or not any(m):
                factors.append(const(c, vl))
            for i, e in enumerate(m):
                if e == 1:
                    factors.append(var(i, vl))
                elif e > 1:
                    factors.append(var(i, vl) ** e)
            term = factors[0]
            for f in factors[1:]:
                term = term * f
            parts.append(term)
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out

    def to_source(self) -> str:
        from .expr import format_expr

        return format_expr(self.to_expr())


def _divides(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _mono_mul(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


def _mono_div(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x - y for x, y in zip(a, b))


def _mono_lcm(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(max(x, y) for x, y in zip(a, b))


def normal_form(
    p: Polynomial, divisors: Sequence[Polynomial] | "PolyIdeal", order: MonomialOrder | None = None
) -> Polynomial:
    """Remainder of multivariate division of ``p`` by ``divisors``.

    Against a reduced Groebner basis this is the canonical normal form:
    zero exactly when ``p`` lies in the (algebraic) ideal.
    """
    if isinstance(divisors, PolyIdeal):
        order = divisors.order
        basis = divisors.groebner()
    else:
        order = order or MonomialOrder.GREVLEX
        basis = [g for g in divisors if not g.is_zero()]
    for g in basis:
        if g.vars != p.vars:
            raise ValueError("incompatible variable lists")
    lead = [(g.leading_monomial(order), g.leading_coeff(order), g) for g in basis]

    remainder: dict[tuple[int, ...], Fraction] = {}
    work = dict(p.terms)
    while work:
        m = max(work, key=order.key)
        c = work[m]
        for lm, lc, g in lead:
            if _divides(lm, m):
                q = _mono_div(m, lm)
                factor = c / lc
                for gm, gc in g.terms.items():
                    mm = _mono_mul(gm, q)
                    s = work.get(mm, Fraction(0)) - factor * gc
                    if s == 0:
                        work.pop(mm, None)
                    else:
                        work[mm] = s
                break
        else:
            remainder[m] = c
            del work[m]
    return Polynomial(remainder, p.vars)


def s_polynomial(f: Polynomial, g: Polynomial, order: MonomialOrder) -> Polynomial:
    lf, lg = f.leading_monomial(order), g.leading_monomial(order)
    lcm = _mono_lcm(lf, lg)
    mf = Polynomial({_mono_div(lcm, lf): Fraction(1) / f.leading_coeff(order)}, f.vars)
    mg = Polynomial({_mono_div(lcm, lg): Fraction(1) / g.leading_coeff(order)}, g.vars)
    return mf * f - mg * g


def groebner_basis(
    gens: Iterable[Polynomial],
    order: MonomialOrder = MonomialOrder.GREVLEX,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> list[Polynomial]:
    """Reduced Groebner basis of the ideal generated by ``gens``.

    Deterministic: normal selection strategy (ascending S-pair lcm degree,
    then first-index tie-break) and a final inter-reduction sorted by leading
    monomial.  Raises DegreeCapExceeded if an intermediate polynomial climbs
    above ``degree_cap``.
    """
    basis = [g.monic(order) for g in gens if not g.is_zero()]
    if not basis:
        return []
    vl = basis[0].vars

    pairs = [(i, j) for j in range(len(basis)) for i in range(j)]

    def pair_key(ij):
        i, j = ij
        lcm = _mono_lcm(basis[i].leading_monomial(order), basis[j].leading_monomial(order))
        return (sum(lcm), i, j)

    while pairs:
        pairs.sort(key=pair_key)
        i, j = pairs.pop(0)
        li = basis[i].leading_monomial(order)
        lj = basis[j].leading_monomial(order)
        if _mono_lcm(li, lj) == _mono_mul(li, lj):
            continue  # coprime leading monomials: S-polynomial reduces to zero
        r = normal_form(s_polynomial(basis[i], basis[j], order), basis, order)
        if r.is_zero():
            continue
        if r.total_degree() > degree_cap:
            raise DegreeCapExceeded(
                f"intermediate degree {r.total_degree()} exceeds cap {degree_cap}; "
                "raise the cap to continue"
            )
        basis.append(r.monic(order))
        pairs.extend((k, len(basis) - 1) for k in range(len(basis) - 1))

    # minimalize: drop elements whose leading monomial is divisible by another's
    basis.sort(key=lambda g: order.key(g.leading_monomial(order)))
    minimal: list[Polynomial] = []
    for g in basis:
        lg = g.leading_monomial(order)
        if not any(_divides(h.leading_monomial(order), lg) for h in minimal):
            minimal.append(g)
    # fully reduce each element against the others
    reduced = []
    for idx, g in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1 :]
        r = normal_form(g, others, order) if others else g
        if not r.is_zero():
            reduced.append(r.monic(order))
    reduced.sort(key=lambda g: order.key(g.leading_monomial(order)))
    _ = vl
    return reduced


@dataclass
class PolyIdeal:
    """Finitely generated ideal with a lazily cached reduced Groebner basis."""

    gens: tuple[Polynomial, ...]
    order: MonomialOrder = MonomialOrder.GREVLEX
    degree_cap: int = DEFAULT_DEGREE_CAP
    _basis: Optional[list[Polynomial]] = field(default=None, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        self.gens = tuple(self.gens)
        if self.gens:
            vl = self.gens[0].vars
            for g in self.gens:
                if g.vars != vl:
                    raise ValueError("ideal generators over different variable lists")

    @property
    def vars(self) -> VarList:
        if not self.gens:
            raise ValueError("empty ideal carries no variable list")
        return self.gens[0].vars

    def groebner(self) -> list[Polynomial]:
        # double-checked lock so concurrent readers see absent or complete
        if self._basis is None:
            with self._lock:
                if self._basis is None:
                    self._basis = groebner_basis(self.gens, self.order, self.degree_cap)
        return self._basis

    def normal_form(self, p: Polynomial) -> Polynomial:
        return normal_form(p, self.groebner(), self.order)

    def contains(self, p: Polynomial) -> bool:
        return self.normal_form(p).is_zero()


def ideal_sum(a: PolyIdeal, b: PolyIdeal) -> PolyIdeal:
    """Ideal generated by the concatenated generators; zero sets intersect."""
    if a.gens and b.gens and a.vars != b.vars:
        raise ValueError("ideal sum over different variable lists")
    return PolyIdeal(a.gens + b.gens, a.order, max(a.degree_cap, b.degree_cap))


def pullback_ideal(ideal: PolyIdeal, components: Sequence[Polynomial]) -> PolyIdeal:
    """Ideal generated by g o f for each generator g, where f has the given
    polynomial components (a map from the components' space into the ideal's).
    """
    if len(components) != ideal.vars.arity:
        raise ValueError(
            f"map has {len(components)} components, ideal lives over "
            f"{ideal.vars.arity} variables"
        )
    pulled = tuple(g.compose(components) for g in ideal.gens)
    return PolyIdeal(pulled, ideal.order, ideal.degree_cap)


def bounded_membership(
    p: Polynomial, gens: Sequence[Polynomial], cofactor_degree: int
) -> bool:
    """Decide whether p = sum(q_i g_i) has a solution with deg(q_i) bounded.

    Brute-force linear algebra over the rationals; exists as an independent
    cross-check of normal-form membership on small instances.
    """
    if p.is_zero():
        return True
    vl = p.vars
    n = vl.arity
    monos = [
        m
        for m in itertools.product(range(cofactor_degree + 1), repeat=n)
        if sum(m) <= cofactor_degree
    ]
    # unknowns: coefficient of each monomial in each cofactor
    columns: list[dict[tuple[int, ...], Fraction]] = []
    for g in gens:
        for m in monos:
            col: dict[tuple[int, ...], Fraction] = {}
            for gm, gc in g.terms.items():
                mm = _mono_mul(gm, m)
                col[mm] = col.get(mm, Fraction(0)) + gc
            columns.append(col)
    rows = sorted(set().union(p.terms, *[c.keys() for c in columns]))
    matrix = [[col.get(r, Fraction(0)) for col in columns] for r in rows]
    rhs = [p.terms.get(r, Fraction(0)) for r in rows]
    return _solvable(matrix, rhs)


def _solvable(matrix: list[list[Fraction]], rhs: list[Fraction]) -> bool:
    rows = [row[:] + [b] for row, b in zip(matrix, rhs)]
    ncols = len(matrix[0]) if matrix else 0
    pivot_row = 0
    for col in range(ncols):
        sel = None
        for r in range(pivot_row, len(rows)):
            if rows[r][col] != 0:
                sel = r
                break
        if sel is None:
            continue
        rows[pivot_row], rows[sel] = rows[sel], rows[pivot_row]
        pr = rows[pivot_row]
        inv = 1 / pr[col]
        rows[pivot_row] = [x * inv for x in pr]
        for r in range(len(rows)):
            if r != pivot_row and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[pivot_row])]
        pivot_row += 1
    # inconsistent iff a zero row has nonzero rhs
    return all(any(x != 0 for x in row[:-1]) or row[-1] == 0 for row in rows)
