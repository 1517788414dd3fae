"""Shared fixtures and independent oracles for the test suite.

Oracles here deliberately avoid the code paths they check: finite
differences for symbolic derivatives, closed-form trajectories for the
integrator, bisection on exact geometry for interval endpoints.
"""

from __future__ import annotations

import math
import random

from schemeflow.cring import SchemePresentation
from schemeflow.derivation import LiftedField
from schemeflow.expr import (
    SmoothExpr,
    VarList,
    cut,
    evaluate,
    parse_expr,
)

XY = VarList(("x", "y"))


def expr_xy(src: str) -> SmoothExpr:
    return parse_expr(src, XY)


def thickened_line(eps_z: float = 1e-9) -> SchemePresentation:
    """Zero set = the x-axis, cut out by y^2 (a nonreduced presentation)."""
    return SchemePresentation(XY, ideal_gens=(expr_xy("y^2"),), eps_z=eps_z)


def crossing_axes(eps_z: float = 1e-9) -> SchemePresentation:
    """Zero set = union of the coordinate axes, cut out by x^2*y."""
    return SchemePresentation(XY, ideal_gens=(expr_xy("x^2*y"),), eps_z=eps_z)


def square(eps_z: float = 1e-9) -> SchemePresentation:
    """The closed unit square as a region presentation: x^2-1 <= 0, y^2-1 <= 0."""
    return SchemePresentation(XY, region=(expr_xy("x^2-1"), expr_xy("y^2-1")), eps_z=eps_z)


def circle(eps_z: float = 1e-7) -> SchemePresentation:
    """The unit circle; looser tolerance absorbs integrator drift along it."""
    return SchemePresentation(XY, ideal_gens=(expr_xy("x^2+y^2-1"),), eps_z=eps_z)


def shear_field(scheme: SchemePresentation) -> LiftedField:
    """d/dx + y d/dy: translates the x-axis, preserves the y^2 ideal."""
    return LiftedField.from_strings(["1", "y"], scheme)


def rotation_field(scheme: SchemePresentation) -> LiftedField:
    """-y d/dx + x d/dy: rigid rotation."""
    return LiftedField.from_strings(["-y", "x"], scheme)


# -- oracles ---------------------------------------------------------------


def central_fd(e: SmoothExpr, index: int, point, h: float = 1e-6) -> float:
    up = list(point)
    dn = list(point)
    up[index] += h
    dn[index] -= h
    return (evaluate(e, up) - evaluate(e, dn)) / (2 * h)


def square_exit_time() -> float:
    """Forward exit time of the rotation trajectory from (0.9, 0.9), located
    by bisection on the closed-form circular trajectory against the square.

    Exact geometry: the point rides the circle of radius 0.9*sqrt(2); the
    curve leaves the square when a coordinate magnitude first exceeds 1.
    """
    r = 0.9 * math.sqrt(2.0)
    theta0 = math.pi / 4

    def inside(t: float) -> bool:
        x = r * math.cos(theta0 + t)
        y = r * math.sin(theta0 + t)
        return abs(x) <= 1.0 and abs(y) <= 1.0

    lo, hi = 0.0, 1.0
    assert inside(lo) and not inside(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_smooth_expr(rng: random.Random, vl: VarList, depth: int = 3) -> SmoothExpr:
    """Random expression over safe heads (no quotients or logs), with
    magnitudes kept tame so finite differences stay well conditioned."""
    from schemeflow.expr import const, var

    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return var(rng.randrange(vl.arity), vl)
        return const(rng.randint(-3, 3), vl)
    pick = rng.random()
    a = random_smooth_expr(rng, vl, depth - 1)
    if pick < 0.25:
        b = random_smooth_expr(rng, vl, depth - 1)
        return a + b
    if pick < 0.5:
        b = random_smooth_expr(rng, vl, depth - 1)
        return a * b
    if pick < 0.6:
        return -a
    if pick < 0.7:
        return a ** rng.randint(1, 3)
    if pick < 0.8:
        from schemeflow.expr import sin as sin_
        return sin_(a)
    if pick < 0.9:
        from schemeflow.expr import cos as cos_
        return cos_(a)
    if pick < 0.97:
        from schemeflow.expr import const, exp as exp_
        return exp_(const(3, vl) / 10 * a)
    return cut(a)


def random_polynomial(rng: random.Random, vl: VarList, degree: int, terms: int = 4):
    """Random exact polynomial as a Polynomial value."""
    from fractions import Fraction

    from schemeflow.polyring import Polynomial

    n = vl.arity
    body = {}
    for _ in range(terms):
        exps = [0] * n
        budget = rng.randint(0, degree)
        for _ in range(budget):
            exps[rng.randrange(n)] += 1
        body[tuple(exps)] = body.get(tuple(exps), Fraction(0)) + Fraction(
            rng.randint(-4, 4)
        )
    return Polynomial(body, vl)
