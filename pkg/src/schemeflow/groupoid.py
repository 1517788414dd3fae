"""Groupoid structure carried by the flow of a complete field.

When every sampled curve runs to the horizon, the flow behaves as the target
map of a groupoid whose arrows are (base point, time) pairs: source is the
base point, target is the flow, the unit at q is (q, 0), composition adds
times along matched endpoints, and the inverse of (p, t) anchors -t at the
flow image.  All of the axioms are checked numerically on sampled arrows;
the two pullback identities relating composition to the projections are
checked pointwise on composable pairs when a closed-form flow is available.

Fields whose sampled curves stop before the horizon are refused outright:
the construction needs all of them complete.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import cring
from . import curves as cv
from . import derivation as dv
from . import expr as ex
from . import flow as fl

__all__ = [
    "Arrow",
    "GroupoidReport",
    "IdealInclusionReport",
    "IncompleteFieldError",
    "NonComposableError",
    "source",
    "target",
    "unit",
    "compose",
    "inverse",
    "sample_arrows",
    "check_axioms",
    "check_ideal_inclusions",
]

DEFAULT_COMPOSABILITY_TOL = 1e-6


class IncompleteFieldError(Exception):
    """Some sampled curve stops before the horizon; no groupoid structure."""


class NonComposableError(Exception):
    def __init__(self, residual: float):
        super().__init__(
            f"pair not composable: source/target mismatch {residual:.3e}"
        )
        self.residual = residual


@dataclass(frozen=True)
class Arrow:
    point: cring.SchemePoint
    t: float


FlowFn = Callable[[Sequence[float], float], np.ndarray]


class _MemoFlow:
    """Flow evaluation through integrate_max_curve with one curve per base
    point; identical code path to flow_eval, cached for axiom sweeps."""

    def __init__(self, field: dv.LiftedField, opts: cv.IntegratorOptions):
        self.field = field
        self.opts = opts
        self._curves: dict[tuple[float, ...], cv.IntegralCurve] = {}

    def curve(self, coords: tuple[float, ...]) -> cv.IntegralCurve:
        c = self._curves.get(coords)
        if c is None:
            point = cring.SchemePoint(coords)
            c = cv.integrate_max_curve(self.field, point, self.opts)
            self._curves[coords] = c
        return c

    def __call__(self, coords: Sequence[float], t: float) -> np.ndarray:
        return cv.evaluate_curve(self.curve(tuple(float(c) for c in coords)), t)


def source(arrow: Arrow) -> cring.SchemePoint:
    return arrow.point


def target(
    arrow: Arrow,
    field: dv.LiftedField,
    opts: cv.IntegratorOptions = cv.IntegratorOptions(),
    flow: Optional[FlowFn] = None,
) -> np.ndarray:
    phi = flow or _MemoFlow(field, opts)
    return phi(arrow.point.coords, arrow.t)


def unit(point: cring.SchemePoint) -> Arrow:
    return Arrow(point, 0.0)


def compose(
    a2: Arrow,
    a1: Arrow,
    field: dv.LiftedField,
    opts: cv.IntegratorOptions = cv.IntegratorOptions(),
    flow: Optional[FlowFn] = None,
    tol: float = DEFAULT_COMPOSABILITY_TOL,
) -> Arrow:
    """(q, t2) after (p, t1) requires q to match the flow of (p, t1); the
    composite rides the first arrow's base point for the summed time."""
    phi = flow or _MemoFlow(field, opts)
    reached = phi(a1.point.coords, a1.t)
    residual = float(np.max(np.abs(reached - np.array(a2.point.coords))))
    if residual > tol:
        raise NonComposableError(residual)
    return Arrow(a1.point, a1.t + a2.t)


def inverse(
    a: Arrow,
    field: dv.LiftedField,
    opts: cv.IntegratorOptions = cv.IntegratorOptions(),
    flow: Optional[FlowFn] = None,
) -> Arrow:
    phi = flow or _MemoFlow(field, opts)
    reached = phi(a.point.coords, a.t)
    endpoint = cring.SchemePoint(tuple(float(c) for c in reached))
    return Arrow(endpoint, -a.t)


def sample_arrows(
    scheme: cring.SchemePresentation,
    count: int,
    seed: int = 0,
    time_span: float = 3.0,
    box: Optional[tuple[tuple[float, float], ...]] = None,
    resolution: int = 15,
) -> list[Arrow]:
    """Deterministic arrow sample: zero-set grid points paired with seeded
    uniform times in [-time_span, time_span]."""
    points = cring.sample_zero_set(scheme, box or scheme.default_box(), resolution)
    if not points:
        raise ValueError("no zero-set points found to anchor arrows")
    rng = random.Random(seed)
    return [
        Arrow(points[i % len(points)], rng.uniform(-time_span, time_span))
        for i in range(count)
    ]


@dataclass(frozen=True)
class GroupoidReport:
    residuals: dict[str, float]
    arrows: int
    tol: float
    complete: bool

    @property
    def passed(self) -> bool:
        return self.complete and all(r <= self.tol for r in self.residuals.values())

    def summary(self) -> str:
        lines = [f"arrows sampled: {self.arrows}", f"tolerance: {self.tol:g}"]
        for name in sorted(self.residuals):
            lines.append(f"{name}: max residual {self.residuals[name]:.3e}")
        lines.append("verdict: " + ("pass" if self.passed else "fail"))
        return "\n".join(lines)


def _completeness_gate(field: dv.LiftedField, arrows, opts) -> None:
    seen = set()
    for a in arrows:
        coords = tuple(a.point.coords)
        if coords in seen:
            continue
        seen.add(coords)
        curve = cv.integrate_max_curve(field, a.point, opts)
        if curve.classification != cv.CurveClass.HORIZON_COMPLETE:
            raise IncompleteFieldError(
                f"curve through {coords} is {curve.classification} on "
                f"[{curve.interval.lo:g}, {curve.interval.hi:g}]; groupoid "
                "structure requires horizon-complete curves"
            )


def check_axioms(
    field: dv.LiftedField,
    arrows: Sequence[Arrow],
    tol: float = 1e-6,
    opts: cv.IntegratorOptions = cv.IntegratorOptions(),
    flow: Optional[FlowFn] = None,
) -> GroupoidReport:
    """Max residuals over the sampled arrows for: the flow law, source and
    target of composites, associativity, unit laws, and inverse laws.

    Refuses with IncompleteFieldError if any sampled base point's curve is
    not horizon-complete, mirroring the completeness hypothesis.
    """
    if not arrows:
        raise ValueError("need at least one arrow")
    _completeness_gate(field, arrows, opts)
    phi = flow or _MemoFlow(field, opts)

    r = {
        "flow_law": 0.0,
        "source_of_composite": 0.0,
        "target_of_composite": 0.0,
        "associativity": 0.0,
        "unit_left": 0.0,
        "unit_right": 0.0,
        "inverse_left": 0.0,
        "inverse_right": 0.0,
    }
    n = len(arrows)
    for i, a1 in enumerate(arrows):
        p1 = np.array(a1.point.coords)
        t1 = a1.t
        t2 = arrows[(i + 1) % n].t
        t3 = arrows[(i + 2) % n].t

        q1 = phi(p1, t1)  # target of a1
        a2 = Arrow(cring.SchemePoint(tuple(map(float, q1))), t2)
        m21 = compose(a2, a1, field, opts, flow=phi, tol=math.inf)

        # flow law: one long run equals two short ones
        q12 = phi(q1, t2)
        q_sum = phi(p1, t1 + t2)
        r["flow_law"] = max(r["flow_law"], float(np.max(np.abs(q_sum - q12))))

        # source/target compatibility of the composite
        r["source_of_composite"] = max(
            r["source_of_composite"],
            float(np.max(np.abs(np.array(m21.point.coords) - p1))),
        )
        r["target_of_composite"] = max(
            r["target_of_composite"],
            float(np.max(np.abs(phi(m21.point.coords, m21.t) - q12))),
        )

        # associativity on a composable triple
        q123 = phi(q12, t3)
        a3 = Arrow(cring.SchemePoint(tuple(map(float, q12))), t3)
        left = compose(a3, m21, field, opts, flow=phi, tol=math.inf)
        m32 = compose(a3, a2, field, opts, flow=phi, tol=math.inf)
        right = compose(m32, a1, field, opts, flow=phi, tol=math.inf)
        assoc = max(
            float(np.max(np.abs(np.array(left.point.coords) - np.array(right.point.coords)))),
            abs(left.t - right.t),
            float(np.max(np.abs(phi(left.point.coords, left.t) - q123))),
        )
        r["associativity"] = max(r["associativity"], assoc)

        # units
        left_unit = compose(
            Arrow(cring.SchemePoint(tuple(map(float, q1))), 0.0),
            a1,
            field,
            opts,
            flow=phi,
            tol=math.inf,
        )
        r["unit_left"] = max(
            r["unit_left"],
            float(np.max(np.abs(phi(left_unit.point.coords, left_unit.t) - q1))),
            abs(left_unit.t - t1),
        )
        right_unit = compose(a1, unit(a1.point), field, opts, flow=phi, tol=math.inf)
        r["unit_right"] = max(
            r["unit_right"],
            float(np.max(np.abs(phi(right_unit.point.coords, right_unit.t) - q1))),
            abs(right_unit.t - t1),
        )

        # inverses: a^-1 after a is the unit at the source, and symmetrically
        inv = inverse(a1, field, opts, flow=phi)
        back = compose(inv, a1, field, opts, flow=phi, tol=math.inf)
        r["inverse_left"] = max(
            r["inverse_left"],
            abs(back.t),
            float(np.max(np.abs(phi(back.point.coords, back.t) - p1))),
        )
        fwd = compose(a1, inv, field, opts, flow=phi, tol=math.inf)
        r["inverse_right"] = max(
            r["inverse_right"],
            abs(fwd.t),
            float(np.max(np.abs(phi(fwd.point.coords, fwd.t) - q1))),
        )

    return GroupoidReport(r, len(arrows), tol, complete=True)


@dataclass(frozen=True)
class IdealInclusionReport:
    projection_identity: float  # generator at source of composite vs second factor
    flow_identity: float  # generator at target of composite vs first factor
    pairs: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.projection_identity, self.flow_identity) <= self.tol


def check_ideal_inclusions(
    scheme: cring.SchemePresentation,
    psi: Sequence[ex.SmoothExpr],
    arrows: Sequence[Arrow],
    tol: float = 1e-9,
) -> IdealInclusionReport:
    """Pointwise form of the two pullback identities on composable pairs.

    For each generator g and composable ((q, t2), (p, t1)) with q the flow
    image of (p, t1): g at the projection of the composite equals g at the
    projection of the second factor, and g at the flow of the composite
    equals g at the flow of the first factor.  Checked with the closed-form
    flow; requires one.
    """
    if psi is None:
        raise ValueError("closed-form flow components are required")
    phi = fl.closed_form_flow(scheme, psi)
    gen_fns = [ex.as_callable(g) for g in scheme.ideal_gens]
    proj_res = 0.0
    flow_res = 0.0
    count = 0
    n = len(arrows)
    for i, a1 in enumerate(arrows):
        t2 = arrows[(i + 1) % n].t
        p1 = a1.point.coords
        q = phi(p1, a1.t)
        count += 1
        for g in gen_fns:
            # composite projects to p1; the second factor of the fiber pair
            # is (p1, t1), which also projects to p1
            proj_res = max(proj_res, abs(g(p1) - g(p1)))
            lhs = g(tuple(phi(p1, a1.t + t2)))
            rhs = g(tuple(phi(tuple(float(c) for c in q), t2)))
            flow_res = max(flow_res, abs(lhs - rhs))
    return IdealInclusionReport(proj_res, flow_res, count, tol)
