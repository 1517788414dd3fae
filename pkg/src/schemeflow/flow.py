"""Flows assembled from maximal curves: the domain table, flow evaluation,
and the presentation of the flow ideal over the extended variable list.

The flow domain is sampled as a table of (base point, definition interval)
rows.  Its two structural facts are checked rather than assumed: slices are
intervals containing 0 (t-convexity, verified by membership of the
trajectory at scaled times) and the unit section sits inside the domain.

The flow ideal over (x_1..x_n, t) carries two generator families: the base
generators reindexed through the projection, and, when a closed-form flow
map is supplied, the generators composed with it.  The third ingredient is
not a generator list at all but a membership predicate (vanishing on the
sampled domain plus a unit-section condition), because its exact generators
are not constructible in closed form.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import cring
from . import curves as cv
from . import derivation as dv
from . import expr as ex

__all__ = [
    "FlowDomain",
    "DomainRow",
    "FlowIdealPresentation",
    "ConvexityReport",
    "ClosedFormReport",
    "flow_domain",
    "flow_eval",
    "t_convexity_check",
    "flow_ideal",
    "validate_closed_form",
    "closed_form_flow",
    "domain_to_csv",
    "scale_row_bounds",
]

TIME_VAR = "t"


@dataclass(frozen=True)
class DomainRow:
    point: cring.SchemePoint
    interval: cv.IntervalRecord
    classification: str
    error: Optional[str] = None


@dataclass(frozen=True)
class FlowDomain:
    scheme: cring.SchemePresentation
    field: dv.LiftedField
    rows: tuple[DomainRow, ...]
    horizon: float

    @property
    def all_horizon_complete(self) -> bool:
        return all(
            r.error is None and r.classification == cv.CurveClass.HORIZON_COMPLETE
            for r in self.rows
        )


def flow_domain(
    field: dv.LiftedField,
    grid: Sequence[cring.SchemePoint],
    opts: cv.IntegratorOptions = cv.IntegratorOptions(),
    jobs: int = 1,
) -> FlowDomain:
    """Integrate every grid point; per-point failures are recorded in the
    row rather than aborting the table."""
    scheme = field.home
    if scheme is None:
        raise ValueError("the field needs a home presentation")

    def run(p: cring.SchemePoint) -> DomainRow:
        try:
            c = cv.integrate_max_curve(field, p, opts)
            return DomainRow(p, c.interval, c.classification)
        except Exception as err:  # recorded, not fatal
            empty = cv.IntervalRecord(0.0, 0.0)
            return DomainRow(p, empty, cv.CurveClass.SINGLETON, error=str(err))

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = tuple(pool.map(run, grid))
    else:
        rows = tuple(run(p) for p in grid)
    return FlowDomain(scheme, field, rows, opts.horizon)


def flow_eval(
    field: dv.LiftedField,
    point: cring.SchemePoint,
    t: float,
    opts: cv.IntegratorOptions = cv.IntegratorOptions(),
) -> np.ndarray:
    """State of the flow at (point, t): exactly the maximal curve evaluated
    at t, same code path, so the two agree bit for bit."""
    curve = cv.integrate_max_curve(field, point, opts)
    return cv.evaluate_curve(curve, t)


@dataclass(frozen=True)
class ConvexityViolation:
    point: cring.SchemePoint
    endpoint: float
    scaled_time: float
    reason: str


@dataclass(frozen=True)
class ConvexityReport:
    violations: tuple[ConvexityViolation, ...]
    checks: int

    @property
    def ok(self) -> bool:
        return not self.violations


def t_convexity_check(
    domain: FlowDomain,
    subdivisions: int = 11,
    opts: Optional[cv.IntegratorOptions] = None,
) -> ConvexityReport:
    """For every row and both interval endpoints, membership of the
    trajectory at a*t for a uniform grid of a in [0, 1]; slices of the
    domain are intervals, so honest tables report zero violations."""
    opts = opts or cv.IntegratorOptions(horizon=domain.horizon)
    scheme = domain.scheme
    residual = scheme.residual_fn()
    tol = 10.0 * scheme.eps_z
    violations = []
    checks = 0
    for row in domain.rows:
        if row.error is not None:
            violations.append(
                ConvexityViolation(row.point, 0.0, 0.0, f"row error: {row.error}")
            )
            continue
        endpoints = {row.interval.lo, row.interval.hi} - {0.0}
        if not endpoints:
            checks += 1
            continue
        try:
            curve = cv.integrate_max_curve(domain.field, row.point, opts)
        except Exception as err:
            violations.append(ConvexityViolation(row.point, 0.0, 0.0, str(err)))
            continue
        for endpoint in sorted(endpoints):
            for a in np.linspace(0.0, 1.0, subdivisions):
                ta = float(a) * endpoint
                checks += 1
                try:
                    state = cv.evaluate_curve(curve, ta)
                except cv.OutsideDefinitionInterval:
                    violations.append(
                        ConvexityViolation(
                            row.point, endpoint, ta, "time outside the recomputed curve"
                        )
                    )
                    continue
                r = residual(state)
                if r > tol:
                    violations.append(
                        ConvexityViolation(
                            row.point, endpoint, ta, f"membership residual {r:.3e}"
                        )
                    )
    return ConvexityReport(tuple(violations), checks)


@dataclass(frozen=True)
class ClosedFormReport:
    max_deviation: float
    samples: int
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tol


def _extended_vars(scheme: cring.SchemePresentation) -> ex.VarList:
    if TIME_VAR in scheme.vars.names:
        raise ValueError(
            f"scheme variables may not shadow the flow time variable {TIME_VAR!r}"
        )
    return scheme.vars.extended(TIME_VAR)


def closed_form_flow(scheme: cring.SchemePresentation, psi: Sequence[ex.SmoothExpr]):
    """Compile closed-form flow components over (x_1..x_n, t) into a map
    (point, t) -> state array."""
    fns = [ex.as_callable(c) for c in psi]

    def phi(point: Sequence[float], t: float) -> np.ndarray:
        args = tuple(point) + (t,)
        return np.array([f(args) for f in fns], dtype=float)

    return phi


def validate_closed_form(
    scheme: cring.SchemePresentation,
    field: dv.LiftedField,
    psi: Sequence[ex.SmoothExpr],
    points: Sequence[cring.SchemePoint],
    times: Sequence[float],
    opts: cv.IntegratorOptions = cv.IntegratorOptions(),
    tol: float = 1e-6,
) -> ClosedFormReport:
    """Compare a claimed closed-form flow against the numeric flow on a
    sample; the closed form is never reconstructed, only validated."""
    phi = closed_form_flow(scheme, psi)
    worst = 0.0
    count = 0
    for p in points:
        curve = cv.integrate_max_curve(field, p, opts)
        for t in times:
            slack = 1e-12 * max(1.0, abs(t))
            if not curve.interval.contains(t, slack):
                continue
            num = cv.evaluate_curve(curve, t)
            sym = phi(p.coords, t)
            worst = max(worst, float(np.max(np.abs(num - sym))))
            count += 1
    return ClosedFormReport(worst, count, tol)


@dataclass(frozen=True)
class FlowIdealPresentation:
    scheme: cring.SchemePresentation
    extended_vars: ex.VarList
    pr_generators: tuple[ex.SmoothExpr, ...]
    psi_generators: tuple[ex.SmoothExpr, ...]
    psi: Optional[tuple[ex.SmoothExpr, ...]]
    domain: Optional[FlowDomain] = None

    def generators(self) -> tuple[ex.SmoothExpr, ...]:
        return self.pr_generators + self.psi_generators

    def iprime_member(
        self, g: ex.SmoothExpr, samples_per_row: int = 9, tol: Optional[float] = None
    ) -> bool:
        """The two defining conditions of the remainder ideal: g vanishes on
        the sampled domain, and g(x, 0) lies in the base ideal (normal-form
        test when polynomial, sampled vanishing on the zero set otherwise).
        """
        if g.vars != self.extended_vars:
            raise ValueError("candidate must live over the extended variables")
        tol = self.scheme.eps_z if tol is None else tol

        if self.domain is not None:
            fn = ex.as_callable(g)
            for row in self.domain.rows:
                if row.error is not None:
                    continue
                lo, hi = row.interval.lo, row.interval.hi
                times = np.linspace(lo, hi, samples_per_row) if hi > lo else [0.0]
                for t in times:
                    if abs(fn(tuple(row.point.coords) + (float(t),))) > tol:
                        return False

        # restriction to t = 0
        n = self.scheme.arity
        unit_args = tuple(
            ex.var(i, self.scheme.vars) for i in range(n)
        ) + (ex.const(0, self.scheme.vars),)
        at_unit = ex.simplify(ex.apply_operation(g, unit_args))
        poly = ex.as_polynomial(at_unit)
        ideal = self.scheme.poly_ideal()
        if poly is not None and ideal is not None:
            return ideal.normal_form(poly).is_zero()
        pts = cring.sample_zero_set(self.scheme, self.scheme.default_box(), 9)
        return all(abs(ex.evaluate(at_unit, p.coords)) <= tol for p in pts)


def flow_ideal(
    scheme: cring.SchemePresentation,
    psi: Optional[Sequence[ex.SmoothExpr]] = None,
    domain: Optional[FlowDomain] = None,
    identity_tol: float = 1e-9,
) -> FlowIdealPresentation:
    """Generators of the flow ideal over (x_1..x_n, t).

    ``psi``, when given, must be expressions over the extended variables
    satisfying psi(x, 0) = x (checked on a sample grid).  Its pullback
    generators join the projection pullbacks; the remainder ideal is exposed
    as the iprime_member predicate on the returned presentation.
    """
    evl = _extended_vars(scheme)
    pr_gens = tuple(ex.extend_vars(g, evl) for g in scheme.ideal_gens)

    psi_gens: tuple[ex.SmoothExpr, ...] = ()
    psi_tuple = None
    if psi is not None:
        psi_tuple = tuple(psi)
        if len(psi_tuple) != scheme.arity:
            raise ValueError("closed form needs one component per scheme variable")
        for c in psi_tuple:
            if c.vars != evl:
                raise ValueError("closed-form components live over (x..., t)")
        _check_time_zero_identity(scheme, psi_tuple, identity_tol)
        psi_gens = tuple(
            ex.apply_operation(g, psi_tuple) for g in scheme.ideal_gens
        )
    return FlowIdealPresentation(scheme, evl, pr_gens, psi_gens, psi_tuple, domain)


def _check_time_zero_identity(scheme, psi, tol):
    fns = [ex.as_callable(c) for c in psi]
    lows_highs = scheme.default_box()
    axes = [np.linspace(lo, hi, 5) for lo, hi in lows_highs]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=-1)
    for row in grid:
        args = tuple(float(c) for c in row) + (0.0,)
        for i, f in enumerate(fns):
            if abs(f(args) - args[i]) > tol:
                raise ValueError(
                    f"closed form fails the t=0 identity at {args[:-1]}: "
                    f"component {i} maps to {f(args)}"
                )


def domain_to_csv(domain: FlowDomain) -> str:
    n = domain.scheme.arity
    header = (
        ",".join(f"x{i + 1}" for i in range(n))
        + ",Kp_lo,Kp_hi,lo_closed,hi_closed,class"
    )
    lines = [header]
    for row in domain.rows:
        cls = row.classification if row.error is None else f"error:{row.error}"
        cells = [f"{c:.17g}" for c in row.point.coords] + [
            f"{row.interval.lo:.17g}",
            f"{row.interval.hi:.17g}",
            str(row.interval.lo_closed).lower(),
            str(row.interval.hi_closed).lower(),
            cls,
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def scale_row_bounds(domain: FlowDomain, index: int, factor: float) -> FlowDomain:
    """Return a copy with one row's interval bounds scaled; exists for fault
    injection in tests and diagnostics."""
    rows = list(domain.rows)
    r = rows[index]
    rows[index] = replace(
        r,
        interval=replace(
            r.interval, lo=r.interval.lo * factor, hi=r.interval.hi * factor
        ),
    )
    return replace(domain, rows=tuple(rows))
