"""Logistic sweep curves and the deterministic phase constants.

The large-population analysis splits the competing sweeps into
stochastic, early, middle and late phases, each with an explicit
duration and a family of frequency cutoffs of the form (2N)^-b.  The
cutoffs are asymptotic bookkeeping: at population sizes a workstation
can simulate, several of them sit arbitrarily close to 1, so the solver
entry points accept a cap on the mid-phase entry frequency c1 (see
`phase_schedule`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelParams


@dataclass(frozen=True)
class LogisticCurve:
    """Solution of y' = theta * y * (1 - y) started at y0 in (0, 1)."""

    y0: float
    theta: float

    def __post_init__(self):
        if not 0.0 < self.y0 < 1.0:
            raise ValueError(f"y0 must be in (0, 1), got {self.y0}")
        if self.theta <= 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")

    def value(self, t: float) -> float:
        return 1.0 / (1.0 + (1.0 / self.y0 - 1.0) * math.exp(-self.theta * t))

    def time_to_reach(self, x: float) -> float:
        """Time at which the curve hits x (negative for x < y0)."""
        if not 0.0 < x < 1.0:
            raise ValueError(f"target must be in (0, 1), got {x}")
        return math.log(((1.0 - self.y0) / self.y0) * (x / (1.0 - x))) / self.theta


def logistic(curve: LogisticCurve, t: float) -> float:
    """Closed-form logistic value; negative t is allowed."""
    return curve.value(t)


@dataclass(frozen=True)
class PhaseSchedule:
    """Phase durations and cutoff constants for one parameter point.

    Exponents b_* define cutoffs c_* = (2N)^-b; c1/c2/c3 are the three
    the establishment computation consumes.  t_mid is the time the
    mid-phase logistic takes to climb from c1 to 1 - c1 (so the curve
    evaluated at t_mid equals 1 - c1), after which the resident type is
    treated as fixed.  delta11 is the establishment threshold
    ceil(log 2N) / 2N.
    """

    two_n: int
    sigma: float
    gamma: float
    rho: float
    zeta: float

    a0: float
    a1: float
    b_10_0: float
    b_10_2: float
    b_10_3: float
    b_01_0: float
    b_01_1: float
    b_01_2: float
    delta_01_1: float
    delta_10_0: float
    delta_10_1: float
    delta_10_2: float

    c_10_0: float
    c_10_2: float
    c_10_3: float
    c_01_0: float
    c_01_1: float
    c_01_2: float

    c1: float
    c2: float
    c3: float

    t0: float
    t_early: float
    t_mid: float
    t_late: float

    delta11: float
    delta11_count: int
    c1_capped: bool

    @property
    def mid_theta(self) -> float:
        """Growth rate of the mid-phase displacement logistic."""
        return self.sigma * (1.0 - self.gamma)

    def resident_curve(self) -> LogisticCurve:
        """The displacing type's frequency curve during the mid phase."""
        return LogisticCurve(self.c1, self.mid_theta)


def phase_schedule(params: ModelParams, zeta: float, c1_cap: float | None = None) -> PhaseSchedule:
    """Compute all phase constants for one parameter point.

    Requires 0 < zeta < gamma < 1 (the regime where the older sweep
    nearly completes first) and sigma*(1-gamma) > rho so the early phase
    has positive duration.  With `c1_cap`, c1 = min((2N)^-b_10_3, cap),
    keeping the mid-phase window non-degenerate at finite N; all other
    constants stay literal.
    """
    sigma, gamma, rho, two_n = params.sigma, params.gamma, params.rho, params.two_n
    if not 0.0 < zeta < gamma:
        raise ValueError(
            f"zeta must satisfy 0 < zeta < gamma; got zeta={zeta}, gamma={gamma}"
        )
    if not gamma < 1.0:
        raise ValueError(f"gamma must be < 1 in this regime, got {gamma}")
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if sigma * (1.0 - gamma) <= rho:
        raise ValueError(
            f"sigma*(1-gamma) must exceed rho; got {sigma * (1 - gamma)} <= {rho}"
        )
    log2n = math.log(two_n)

    a0 = zeta / (3.0 * gamma)
    a1 = min(zeta / (4.0 * gamma), (1.0 - zeta / gamma) / 4.0)
    b_10_0 = a0 + a1 - 1.0
    b_10_2 = (1.0 - zeta / gamma) / 2.0
    b_10_3 = gamma * b_10_2 / 90.0
    b_01_0 = zeta / 3.0
    b_01_1 = gamma * b_10_2 / 3.0
    b_01_2 = b_01_1
    delta_01_1 = gamma * b_10_2 / 9.0
    delta_10_2 = delta_01_1 / 60.0
    delta_10_1 = (a0 - a1) / 4.0

    # cutoffs (2N)^-|b|; the magnitude keeps every cutoff inside (0, 1)
    def cutoff(b: float) -> float:
        return two_n ** (-abs(b))

    c_10_0 = cutoff(b_10_0)
    c_10_2 = cutoff(b_10_2)
    c_10_3 = cutoff(b_10_3)
    c_01_0 = cutoff(b_01_0)
    c_01_1 = cutoff(b_01_1)
    c_01_2 = cutoff(b_01_2)
    delta_10_0 = two_n * c_10_0 * (c_10_0 + c_01_0)

    c1 = c_10_3
    c1_capped = False
    if c1_cap is not None:
        if not 0.0 < c1_cap < 0.5:
            raise ValueError(f"c1_cap must be in (0, 0.5), got {c1_cap}")
        if c1_cap < c1:
            c1 = c1_cap
            c1_capped = True
    c2 = two_n ** (-delta_01_1 / 2.0)
    c3 = two_n ** (-delta_10_2)

    theta_mid = sigma * (1.0 - gamma)
    t0 = (a0 / sigma) * log2n
    t_early = 1.01 * log2n / (sigma * (1.0 - gamma) - rho)
    # full passage of the displacement logistic from c1 to 1-c1
    t_mid = LogisticCurve(c1, theta_mid).time_to_reach(1.0 - c1)
    t_late = (1.02 / (sigma * gamma)) * log2n

    delta11_count = math.ceil(log2n)
    return PhaseSchedule(
        two_n=two_n,
        sigma=sigma,
        gamma=gamma,
        rho=rho,
        zeta=zeta,
        a0=a0,
        a1=a1,
        b_10_0=b_10_0,
        b_10_2=b_10_2,
        b_10_3=b_10_3,
        b_01_0=b_01_0,
        b_01_1=b_01_1,
        b_01_2=b_01_2,
        delta_01_1=delta_01_1,
        delta_10_0=delta_10_0,
        delta_10_1=delta_10_1,
        delta_10_2=delta_10_2,
        c_10_0=c_10_0,
        c_10_2=c_10_2,
        c_10_3=c_10_3,
        c_01_0=c_01_0,
        c_01_1=c_01_1,
        c_01_2=c_01_2,
        c1=c1,
        c2=c2,
        c3=c3,
        t0=t0,
        t_early=t_early,
        t_mid=t_mid,
        t_late=t_late,
        delta11=delta11_count / two_n,
        delta11_count=delta11_count,
        c1_capped=c1_capped,
    )


def consistency_check(schedule: PhaseSchedule, params: ModelParams, zeta: float) -> list[str]:
    """Evaluate the finite-N inequality family the phase constants are
    supposed to satisfy for large populations.

    Returns human-readable descriptions of the violated (or undefined)
    inequalities; an empty list means all hold at this 2N.
    """
    two_n = params.two_n
    gamma = params.gamma
    log2n = math.log(two_n)
    a0, a1 = schedule.a0, schedule.a1
    c_10_2 = schedule.c_10_2
    c_01_1 = schedule.c_01_1
    c_01_2 = schedule.c_01_2

    violations: list[str] = []
    rhs_base = math.log(two_n**zeta - 1.0) / gamma

    lhs1 = (1.0 - a1) * log2n + math.log(c_10_2) + math.log(c_01_2) / gamma
    if not lhs1 > rhs_base:
        violations.append(
            f"early-reach margin: {lhs1:.6g} <= {rhs_base:.6g}"
        )

    gap = two_n ** (1.0 - a1) - two_n**a0
    if gap <= 0.0:
        violations.append(
            f"level gap (2N)^(1-a1) - (2N)^a0 = {gap:.6g} is not positive"
        )
        return violations
    inner_102 = 1.0 / (0.9 * c_10_2) - 1.0
    inner_011 = 1.0 / (0.9 * c_01_1) - 1.0
    inner_012 = 1.0 / c_01_2 - 1.0
    inner_011_plain = 1.0 / c_01_1 - 1.0
    if min(inner_102, inner_011, inner_012, inner_011_plain) <= 0.0:
        violations.append("a cutoff sits too close to 1 for the log terms to be defined")
        return violations

    lhs2 = math.log(gap) - math.log(inner_102) - math.log(inner_012) / gamma
    rhs2 = rhs_base + math.log(1.0 / 0.9) / gamma
    if not lhs2 > rhs2:
        violations.append(f"stretch bound: {lhs2:.6g} <= {rhs2:.6g}")

    lhs3 = math.log(gap) - math.log(inner_102)
    rhs3 = (
        math.log((two_n**zeta - 1.0) * inner_012)
        + math.log(inner_011 / inner_011_plain)
    ) / gamma
    if not lhs3 >= rhs3:
        violations.append(f"late-entry bound: {lhs3:.6g} < {rhs3:.6g}")

    return violations
