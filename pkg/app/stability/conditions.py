import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from app.config import CERT_BUDGET, CONSISTENCY_RTOL, DEFAULT_SEED
from app.errors import InternalConsistencyError
from app.model_core import ModelParams, cross_coefficient, reproduction_number
from app.stability.matrices import (
    Diagonal,
    Interval,
    Matrix3,
    MinorSet,
    find_diagonal_d,
    is_negative_definite,
    p2_coefficients,
    principal_minors,
    signed_principal_minors,
    symmetric_part,
    volterra_lyapunov_check,
)

log = logging.getLogger(__name__)

VERDICT_GAS = "GAS-certified"
VERDICT_DFE = "DFE-GAS"
VERDICT_INCONCLUSIVE = "inconclusive (condition sufficient only)"


def build_q(p: ModelParams) -> Matrix3:
    """Матрица Q в порядке отклонений (R, M, I)."""
    return np.array([
        [-(p.bC + p.epsilon + p.mu), p.delta * p.epsilon, 0.0],
        [(p.v - p.bC) / p.delta, -(p.v + p.mu), p.a],
        [cross_coefficient(p), p.v - p.bI, -p.a],
    ])


def omega1_threshold(p: ModelParams) -> float:
    """Корень p1 для Q: p1(y) < 0 ровно при y > порога."""
    k = cross_coefficient(p)
    return k * k / (4.0 * (p.bC + p.epsilon + p.mu) * p.a)


def omega1_threshold_as_printed(p: ModelParams) -> float:
    # printed closed form with (a + bI + mu) in the denominator; not a root of p1
    k = cross_coefficient(p)
    return k * k / (4.0 * (p.bC + p.epsilon + p.mu) * (p.a + p.bI + p.mu))


def omega1_interval(p: ModelParams) -> Interval:
    return Interval(omega1_threshold(p), math.inf)


def _p2_parts(p: ModelParams):
    q = build_q(p)
    b1, b2, m12, m23 = p2_coefficients(q)
    q22_det = q[1, 1] * principal_minors(q).M123
    return b1, b2, m12 * m23, q22_det


def p2_discriminant(p: ModelParams) -> float:
    _, _, m12_m23, q22_det = _p2_parts(p)
    return 16.0 * q22_det * m12_m23


def omega2_interval(p: ModelParams) -> Interval:
    """
    Открытый интервал, где p2 < 0 для Q. Меньший корень берётся как
    b2^2 / (b1^2 * hi), чтобы не терять точность при вычитании.
    """
    b1, b2, m12_m23, q22_det = _p2_parts(p)

    if b1 == 0.0:
        return Interval(b2 * b2 / (4.0 * m12_m23), math.inf)

    upper = m12_m23 + q22_det + 2.0 * math.sqrt(m12_m23 * q22_det)
    return Interval(b2 * b2 / upper, upper / (b1 * b1))


def remark_automatic(p: ModelParams) -> bool:
    """Условие выполняется автоматически, когда перекрёстный коэффициент равен нулю."""
    scale = max(p.bC / p.delta, p.bC, p.bI, p.v / p.delta)
    return abs(cross_coefficient(p)) <= 1e-12 * scale


class GasCondition(NamedTuple):
    holds: bool
    lhs: float
    rhs: float


def _closed_form_sides(p: ModelParams):
    m12 = (p.bC + p.mu) * (p.v + p.mu + p.epsilon)
    m23 = p.a * (p.bI + p.mu)
    q22_det = (p.v + p.mu) * p.a * ((p.bI + p.mu) * (p.bC + p.epsilon + p.mu) - p.delta * p.epsilon * (p.bI - p.bC))

    numerator = p.a * p.epsilon * (p.bC - p.delta * p.bC + p.delta * p.bI - p.v)
    lhs = numerator * numerator / (4.0 * (p.bC + p.epsilon + p.mu) * p.a)
    rhs = m12 * m23 + q22_det + 2.0 * math.sqrt(m12 * m23 * q22_det)
    return lhs, rhs


def _close(x: float, y: float, scale: float = 0.0) -> bool:
    return abs(x - y) <= CONSISTENCY_RTOL * max(abs(x), abs(y), scale, 1e-300)


def gas_condition(p: ModelParams) -> GasCondition:
    """
    Явное достаточное условие глобальной устойчивости E*.

    Считается двумя путями: замкнутой формулой и через пересечение
    интервалов Omega1 и Omega2; расхождение означает ошибку в коде.
    """
    lhs, rhs = _closed_form_sides(p)
    holds = lhs < rhs

    threshold = omega1_threshold(p)
    upper = omega2_interval(p).hi
    holds_interval = threshold < upper

    b1_sq = (p.a * p.delta * p.epsilon) ** 2
    # left sides are k^2 with cancellation error in k, so they are measured against rhs
    if b1_sq > 0.0 and math.isfinite(upper):
        if not (_close(lhs, threshold * b1_sq, scale=rhs) and _close(rhs, upper * b1_sq)):
            raise InternalConsistencyError(
                f"closed-form sides ({lhs:.6g}, {rhs:.6g}) disagree with interval form "
                f"({threshold * b1_sq:.6g}, {upper * b1_sq:.6g})"
            )

    if holds != holds_interval and not _close(lhs, rhs):
        raise InternalConsistencyError("closed-form and interval verdicts disagree")

    return GasCondition(holds, lhs, rhs)


def legacy_condition_2b(p: ModelParams) -> bool:
    return -p.mu - p.bC + p.epsilon + p.a * p.n_star * p.delta < 0.0


def legacy_condition_2a(p: ModelParams, c: float) -> bool:
    return p.bI + p.a * p.n_star - p.v - p.a * c - p.bC - p.mu - p.delta * p.a * c < 0.0


# -------------------------
# report
# -------------------------

@dataclass
class StabilityReport:
    r0: float
    q: Matrix3
    minors: MinorSet
    in_class_p: bool
    omega1: Interval
    omega2: Interval
    gas_holds: bool
    gas_lhs: float
    gas_rhs: float
    legacy_2b_holds: bool
    witness_y: Optional[float] = None
    certificate_d: Optional[Diagonal] = None
    legacy_2a_holds: Optional[bool] = None
    remark_automatic: bool = False
    omega1_as_printed: float = math.nan
    warnings: List[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if self.r0 <= 1.0:
            return VERDICT_DFE
        if self.gas_holds and self.certificate_d is not None:
            return VERDICT_GAS
        return VERDICT_INCONCLUSIVE


def stability_report(
    p: ModelParams,
    seed: int = DEFAULT_SEED,
    budget: int = CERT_BUDGET,
    c: Optional[float] = None,
) -> StabilityReport:
    q = build_q(p)
    minors, in_p = signed_principal_minors(q)
    gas = gas_condition(p)

    report = StabilityReport(
        r0=reproduction_number(p),
        q=q,
        minors=minors,
        in_class_p=in_p,
        omega1=omega1_interval(p),
        omega2=omega2_interval(p),
        gas_holds=gas.holds,
        gas_lhs=gas.lhs,
        gas_rhs=gas.rhs,
        legacy_2b_holds=legacy_condition_2b(p),
        legacy_2a_holds=None if c is None else legacy_condition_2a(p, c),
        remark_automatic=remark_automatic(p),
        omega1_as_printed=omega1_threshold_as_printed(p),
    )

    stable, report.witness_y = volterra_lyapunov_check(q)
    if stable != gas.holds and not _close(gas.lhs, gas.rhs):
        raise InternalConsistencyError("Cross criterion and GAS condition disagree")

    if stable:
        report.certificate_d = find_diagonal_d(q, seed=seed, budget=budget)
        if report.certificate_d is None:
            report.warnings.append(f"certificate search exhausted after {budget} trials")
        elif not is_negative_definite(symmetric_part(q, report.certificate_d)):
            raise InternalConsistencyError("certificate failed verification")

    log.info("🧮 R0 = %.6g, condition holds: %s, verdict: %s", report.r0, gas.holds, report.verdict)
    return report
