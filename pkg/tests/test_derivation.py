import random
from fractions import Fraction

import numpy as np
import pytest

from schemeflow.cring import EqualityStatus, SchemePresentation
from schemeflow.derivation import (
    GeneratorStatus,
    LiftedField,
    NotCertifiedError,
    RelatednessStatus,
    apply,
    derivation_equal,
    hadamard_decompose,
    lie_bracket,
    lift,
    preserves_ideal,
    related,
)
from schemeflow.expr import VarList, as_polynomial, parse_expr, simplify, variables
from schemeflow.polyring import Polynomial

from helpers import (
    XY,
    crossing_axes,
    expr_xy,
    random_polynomial,
    shear_field,
    square,
    thickened_line,
)


class TestLift:
    def test_shear_coefficients(self):
        v = shear_field(thickened_line())
        assert np.allclose(lift(v)((3.0, 2.0)), [1.0, 2.0])

    def test_euler_coefficients(self):
        v = LiftedField.from_strings(["x", "y"], crossing_axes())
        assert np.allclose(lift(v)((1.0, 1.0)), [1.0, 1.0])

    def test_zero_field(self):
        v = LiftedField.from_strings(["0", "0"], thickened_line())
        assert np.allclose(lift(v)((5.0, -3.0)), [0.0, 0.0])


class TestPreservesIdeal:
    def test_euler_on_crossing_axes(self):
        v = LiftedField.from_strings(["x", "y"], crossing_axes())
        report = preserves_ideal(v)
        assert report.certified
        image = as_polynomial(report.checks[0].image)
        assert image == as_polynomial(expr_xy("3*x^2*y"))

    def test_shear_on_line(self):
        assert preserves_ideal(shear_field(thickened_line())).certified

    def test_vertical_field_fails_with_residual(self):
        v = LiftedField.from_strings(["0", "1"], thickened_line())
        report = preserves_ideal(v)
        assert not report.certified
        check = report.checks[0]
        assert check.status is GeneratorStatus.NOT_CERTIFIED
        assert check.residual == as_polynomial(expr_xy("2*y"))

    def test_region_only_presentation_is_vacuous(self):
        v = LiftedField.from_strings(["-y", "x"], square())
        report = preserves_ideal(v)
        assert report.certified and not report.checks
        assert "region" in report.note

    def test_transcendental_generator_goes_numeric(self):
        scheme = SchemePresentation(XY, ideal_gens=(expr_xy("y^2"), expr_xy("y*exp(x)")))
        v = LiftedField.from_strings(["1", "y"], scheme)
        report = preserves_ideal(v)
        statuses = {c.status for c in report.checks}
        assert GeneratorStatus.NUMERIC in statuses
        numeric = [c for c in report.checks if c.status is GeneratorStatus.NUMERIC]
        assert all(c.numeric_residual <= 1e-7 for c in numeric)


class TestApply:
    def test_shear_keeps_nilpotent_direction(self):
        line = thickened_line()
        v = shear_field(line)
        out = apply(v, line.element("y"))
        assert as_polynomial(out.rep) == as_polynomial(expr_xy("y"))

    def test_flat_field_kills_nilpotent_direction(self):
        line = thickened_line()
        u = LiftedField.from_strings(["1", "0"], line)
        out = apply(u, line.element("y"))
        assert simplify(out.rep).value == 0

    def test_constants_die(self):
        line = thickened_line()
        out = apply(shear_field(line), line.element("1"))
        assert simplify(out.rep).value == 0

    def test_uncertified_field_rejected(self):
        line = thickened_line()
        v = LiftedField.from_strings(["0", "1"], line)
        with pytest.raises(NotCertifiedError):
            apply(v, line.element("y"))

    def test_well_defined_modulo_ideal(self):
        # changing the representative by an ideal element moves the output
        # by an ideal element
        line = thickened_line()
        v = shear_field(line)
        ideal = line.poly_ideal()
        a = line.element("x*y")
        a_shifted = line.element("x*y + y^2*(x + 2)")
        out = apply(v, a)
        out_shifted = apply(v, a_shifted)
        delta = as_polynomial(simplify(out_shifted.rep - out.rep))
        assert delta is not None and ideal.normal_form(delta).is_zero()


class TestRelated:
    def test_quotient_map_relates_lift_and_derivation(self):
        # identity coordinates into the quotient: certified by construction
        line = thickened_line()
        v_quot = shear_field(line)
        v_free = LiftedField(v_quot.coeffs, None)
        phi = tuple(variables("x y"))
        r = related(phi, v_free, v_quot)
        assert r.status is RelatednessStatus.CERTIFIED

    def test_curve_relates_time_to_field(self):
        # gamma(t) = (x0 + t, 0) intertwines d/dt with the shear field
        tvl = VarList(("s",))
        d_dt = LiftedField((parse_expr("1", tvl),), None)
        target = LiftedField(shear_field(thickened_line()).coeffs, None)
        phi = (parse_expr("2 + s", tvl), parse_expr("0", tvl))
        r = related(phi, target, d_dt)
        assert r.status is RelatednessStatus.CERTIFIED

    def test_identity_map_self_related(self):
        line = thickened_line()
        v = shear_field(line)
        phi = tuple(variables("x y"))
        r = related(phi, v, v)
        assert r.status is RelatednessStatus.CERTIFIED

    def test_unrelated_pair_flagged(self):
        tvl = VarList(("s",))
        d_dt = LiftedField((parse_expr("1", tvl),), None)
        target = LiftedField(shear_field(thickened_line()).coeffs, None)
        phi = (parse_expr("s^2", tvl), parse_expr("0", tvl))  # not an integral curve
        r = related(phi, target, d_dt)
        assert r.status is RelatednessStatus.NOT_CERTIFIED


class TestHadamard:
    def test_difference_of_squares(self):
        x = VarList(("x",))
        f = as_polynomial(parse_expr("x^2", x))
        (g1,) = hadamard_decompose(f)
        assert g1.to_source() == "x + x__y"

    def test_product_telescopes(self):
        f = as_polynomial(expr_xy("x*y"))
        g1, g2 = hadamard_decompose(f)
        assert g1.to_source() == "y"
        assert g2.to_source() == "x__y"

    def test_constant_gives_zeros(self):
        f = as_polynomial(expr_xy("5"))
        assert all(g.is_zero() for g in hadamard_decompose(f))

    def test_identity_exact_on_random_polynomials(self):
        rng = random.Random(21)
        for arity in (1, 2, 3):
            vl = VarList(tuple(f"x{i}" for i in range(arity)))
            doubled = VarList(
                tuple(vl.names) + tuple(f"{n}__y" for n in vl.names)
            )
            xs = [Polynomial.variable(i, doubled) for i in range(arity)]
            ys = [Polynomial.variable(arity + i, doubled) for i in range(arity)]
            for _ in range(17):
                f = random_polynomial(rng, vl, 4)
                gs = hadamard_decompose(f)
                lhs = f.compose(xs) - f.compose(ys)
                rhs = Polynomial({}, doubled)
                for i in range(arity):
                    rhs = rhs + (xs[i] - ys[i]) * gs[i]
                assert (lhs - rhs).is_zero()


class TestDerivationEqual:
    def test_flat_vs_shear_distinct(self):
        line = thickened_line()
        u = LiftedField.from_strings(["1", "0"], line)
        v = shear_field(line)
        assert derivation_equal(u, v).status is EqualityStatus.DISTINCT

    def test_ideal_perturbation_equal(self):
        line = thickened_line()
        v = shear_field(line)
        w = LiftedField.from_strings(["1", "y + y^2"], line)
        assert derivation_equal(v, w).status is EqualityStatus.EQUAL

    def test_reflexive(self):
        v = LiftedField.from_strings(["x", "y"], crossing_axes())
        assert derivation_equal(v, v).status is EqualityStatus.EQUAL


class TestAlgebraicProperties:
    def test_chain_rule_normal_form(self):
        line = thickened_line()
        v = shear_field(line)
        ideal = line.poly_ideal()
        rng = random.Random(31)
        outer_vl = VarList(("u", "w"))
        for _ in range(20):
            f = random_polynomial(rng, outer_vl, 2)
            a1 = random_polynomial(rng, XY, 2)
            a2 = random_polynomial(rng, XY, 2)
            composite = f.compose([a1, a2])
            lhs = as_polynomial(apply(v, line.element(composite.to_expr())).rep)
            partials = []
            for j, aj in enumerate((a1, a2)):
                df = _poly_partial(f, j).compose([a1, a2])
                va = as_polynomial(apply(v, line.element(aj.to_expr())).rep)
                partials.append(df * va)
            rhs = partials[0] + partials[1]
            assert ideal.normal_form(lhs - rhs).is_zero()

    def test_leibniz_normal_form(self):
        line = thickened_line()
        v = shear_field(line)
        ideal = line.poly_ideal()
        rng = random.Random(32)
        for _ in range(20):
            a = random_polynomial(rng, XY, 2)
            b = random_polynomial(rng, XY, 2)
            lhs = as_polynomial(apply(v, line.element((a * b).to_expr())).rep)
            va = as_polynomial(apply(v, line.element(a.to_expr())).rep)
            vb = as_polynomial(apply(v, line.element(b.to_expr())).rep)
            rhs = a * vb + b * va
            assert ideal.normal_form(lhs - rhs).is_zero()

    def test_module_structure(self):
        # (c*d + e)(a) = c*d(a) + e(a) modulo the ideal, c a ring element
        line = thickened_line()
        d = shear_field(line)
        e = LiftedField.from_strings(["x", "0"], line)
        ideal = line.poly_ideal()
        c = as_polynomial(expr_xy("x + 1"))
        combo = LiftedField(
            tuple(
                simplify(expr_xy("x + 1") * dc + ec)
                for dc, ec in zip(d.coeffs, e.coeffs)
            ),
            line,
        )
        a = expr_xy("x^2 + y")
        lhs = as_polynomial(apply(combo, line.element(a)).rep)
        rhs = c * as_polynomial(apply(d, line.element(a)).rep) + as_polynomial(
            apply(e, line.element(a)).rep
        )
        assert ideal.normal_form(lhs - rhs).is_zero()

    def test_lift_quotient_coherence(self):
        line = thickened_line()
        v = shear_field(line)
        ideal = line.poly_ideal()
        a = expr_xy("x*y + x^2")
        via_field = as_polynomial(v.directional(a))
        via_quotient = as_polynomial(apply(v, line.element(a)).rep)
        assert ideal.normal_form(via_field - via_quotient).is_zero()

    def test_bracket_coefficients(self):
        line = thickened_line()
        v = shear_field(line)
        u = LiftedField.from_strings(["1", "0"], line)
        br = lie_bracket(u, v)
        # [d/dx, d/dx + y d/dy] = 0
        assert all(simplify(c).value == 0 for c in br.coeffs)

    def test_bracket_recertified_not_assumed(self):
        axes = crossing_axes()
        a = LiftedField.from_strings(["x", "y"], axes)
        b = LiftedField.from_strings(["y", "x"], axes)
        br = lie_bracket(a, b)
        report = preserves_ideal(br)
        assert report.checks  # certification actually ran


def _poly_partial(p: Polynomial, index: int) -> Polynomial:
    out = {}
    for m, c in p.terms.items():
        if m[index] == 0:
            continue
        lowered = tuple(e - 1 if i == index else e for i, e in enumerate(m))
        out[lowered] = out.get(lowered, Fraction(0)) + c * m[index]
    return Polynomial(out, p.vars)
