import numpy as np
import pytest

from schemeflow.cring import SchemePoint
from schemeflow.curves import IntegratorOptions
from schemeflow.expr import parse_expr
from schemeflow.flow import closed_form_flow
from schemeflow.groupoid import (
    Arrow,
    IncompleteFieldError,
    NonComposableError,
    check_axioms,
    check_ideal_inclusions,
    compose,
    inverse,
    sample_arrows,
    source,
    target,
    unit,
)

from helpers import XY, rotation_field, shear_field, square, thickened_line

OPTS = IntegratorOptions(horizon=20.0)
XYT = XY.extended("t")
PSI = (parse_expr("x + t", XYT), parse_expr("y*exp(t)", XYT))
LINE_BOX = ((-3.0, 3.0), (-1.0, 1.0))


def line_setup():
    line = thickened_line()
    return line, shear_field(line)


class TestStructureMaps:
    def test_source_and_target(self):
        line, v = line_setup()
        a = Arrow(line.point((1.0, 0.0)), 2.0)
        assert source(a).coords == (1.0, 0.0)
        assert np.allclose(target(a, v, OPTS), [3.0, 0.0], atol=1e-9)

    def test_zero_time_target_is_source(self):
        line, v = line_setup()
        a = Arrow(line.point((4.0, 0.0)), 0.0)
        assert tuple(target(a, v, OPTS)) == (4.0, 0.0)

    def test_corner_arrow_has_no_target(self):
        from schemeflow.curves import OutsideDefinitionInterval

        sq = square()
        a = Arrow(sq.point((1.0, 1.0)), 0.3)
        with pytest.raises(OutsideDefinitionInterval):
            target(a, rotation_field(sq), OPTS)

    def test_compose_adds_times_on_first_base(self):
        line, v = line_setup()
        a1 = Arrow(line.point((1.0, 0.0)), 2.0)
        a2 = Arrow(line.point((3.0, 0.0)), 5.0)
        m = compose(a2, a1, v, OPTS)
        assert m.point.coords == (1.0, 0.0) and m.t == 7.0
        assert np.allclose(target(m, v, OPTS), [8.0, 0.0], atol=1e-8)

    def test_compose_with_unit_is_identity(self):
        line, v = line_setup()
        a = Arrow(line.point((1.0, 0.0)), 2.0)
        m = compose(a, unit(a.point), v, OPTS)
        assert m.point.coords == a.point.coords and m.t == a.t

    def test_non_composable_rejected(self):
        line, v = line_setup()
        a1 = Arrow(line.point((1.0, 0.0)), 2.0)
        a2 = Arrow(line.point((9.0, 0.0)), 1.0)
        with pytest.raises(NonComposableError):
            compose(a2, a1, v, OPTS)

    def test_unit_shape(self):
        line, _ = line_setup()
        u = unit(line.point((4.0, 0.0)))
        assert u.point.coords == (4.0, 0.0) and u.t == 0.0

    def test_inverse_anchors_negated_time_at_target(self):
        line, v = line_setup()
        a = Arrow(line.point((1.0, 0.0)), 2.0)
        inv = inverse(a, v, OPTS)
        assert np.allclose(inv.point.coords, (3.0, 0.0), atol=1e-9)
        assert inv.t == -2.0
        back = compose(inv, a, v, OPTS)
        assert back.t == 0.0 and back.point.coords == (1.0, 0.0)

    def test_inverse_of_unit_is_unit(self):
        line, v = line_setup()
        u = unit(line.point((2.0, 0.0)))
        assert inverse(u, v, OPTS) == u


class TestAxioms:
    def test_numeric_flow_passes(self):
        line, v = line_setup()
        arrows = sample_arrows(line, 100, seed=0, box=LINE_BOX)
        report = check_axioms(v, arrows, tol=1e-6, opts=OPTS)
        assert report.passed
        assert max(report.residuals.values()) <= 1e-6

    def test_closed_form_flow_much_tighter(self):
        line, v = line_setup()
        arrows = sample_arrows(line, 100, seed=0, box=LINE_BOX)
        phi = closed_form_flow(line, PSI)
        report = check_axioms(v, arrows, tol=1e-12, opts=OPTS, flow=phi)
        assert report.passed

    def test_unit_arrows_have_zero_residuals(self):
        line, v = line_setup()
        arrows = [unit(line.point((float(k), 0.0))) for k in range(-2, 3)]
        report = check_axioms(v, arrows, tol=1e-12, opts=OPTS)
        assert report.passed
        assert max(report.residuals.values()) == 0.0

    def test_fault_injected_flow_fails_flow_law(self):
        line, v = line_setup()
        arrows = sample_arrows(line, 40, seed=1, box=LINE_BOX)
        bad_psi = (
            parse_expr("x + t + t^2/100", XYT),
            parse_expr("y*exp(t)", XYT),
        )
        bad_phi = closed_form_flow(line, bad_psi)
        report = check_axioms(v, arrows, tol=1e-6, opts=OPTS, flow=bad_phi)
        assert not report.passed
        assert report.residuals["flow_law"] > 1e-6

    def test_incomplete_field_refused(self):
        sq = square()
        arrows = sample_arrows(sq, 10, seed=0, box=((-2, 2), (-2, 2)), resolution=9)
        with pytest.raises(IncompleteFieldError):
            check_axioms(rotation_field(sq), arrows, opts=OPTS)

    def test_deterministic_sampling(self):
        line, _ = line_setup()
        a = sample_arrows(line, 25, seed=7, box=LINE_BOX)
        b = sample_arrows(line, 25, seed=7, box=LINE_BOX)
        assert a == b
        c = sample_arrows(line, 25, seed=8, box=LINE_BOX)
        assert a != c


class TestIdealInclusions:
    def test_pointwise_identities_hold(self):
        line, _ = line_setup()
        arrows = sample_arrows(line, 100, seed=0, box=LINE_BOX)
        report = check_ideal_inclusions(line, PSI, arrows, tol=1e-9)
        assert report.passed
        assert report.projection_identity <= 1e-12
        assert report.flow_identity <= 1e-9

    def test_identities_off_the_zero_set_too(self):
        # the factorization that makes the flow identity work is exact even
        # for base points with y != 0
        line, _ = line_setup()
        arrows = [
            Arrow(SchemePoint((0.5, 0.7)), 1.3),
            Arrow(SchemePoint((-1.0, 0.2)), -0.8),
            Arrow(SchemePoint((2.0, -0.4)), 0.5),
        ]
        report = check_ideal_inclusions(line, PSI, arrows, tol=1e-9)
        assert report.passed

    def test_constant_generator_trivial(self):
        from schemeflow.cring import SchemePresentation
        from helpers import expr_xy

        # augment with a generator that is identically zero
        aug = SchemePresentation(XY, ideal_gens=(expr_xy("y^2"), expr_xy("0")))
        arrows = [Arrow(SchemePoint((1.0, 0.0)), 2.0)]
        report = check_ideal_inclusions(aug, PSI, arrows, tol=1e-12)
        assert report.passed

    def test_fault_injected_flow_fails(self):
        line, _ = line_setup()
        arrows = sample_arrows(line, 40, seed=2, box=LINE_BOX)
        bad_psi = (
            parse_expr("x + t", XYT),
            parse_expr("y*exp(t) + t^2/100", XYT),
        )
        report = check_ideal_inclusions(line, bad_psi, arrows, tol=1e-9)
        assert not report.passed
