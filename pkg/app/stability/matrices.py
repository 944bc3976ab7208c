"""
Матрицы порядка 3: главные миноры, класс P, критерий Кросса для
устойчивости по Вольтерре-Ляпунову и положительные диагональные сертификаты.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from app.config import (
    CERT_BATCH,
    CERT_BUDGET,
    CERT_LOG10_RANGE,
    DEFAULT_SEED,
    SYLVESTER_MARGIN,
    SYMMETRY_TOL,
)
from app.errors import NotSymmetric

log = logging.getLogger(__name__)

Matrix3 = np.ndarray
Diagonal = Tuple[float, float, float]


def as_matrix3(m) -> Matrix3:
    arr = np.asarray(m, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def _det2(a: float, b: float, c: float, d: float) -> float:
    return a * d - b * c


def _det3(m: Matrix3) -> float:
    return (
        m[0, 0] * _det2(m[1, 1], m[1, 2], m[2, 1], m[2, 2])
        - m[0, 1] * _det2(m[1, 0], m[1, 2], m[2, 0], m[2, 2])
        + m[0, 2] * _det2(m[1, 0], m[1, 1], m[2, 0], m[2, 1])
    )


# -------------------------
# principal minors
# -------------------------

@dataclass(frozen=True)
class MinorSet:
    M1: float
    M2: float
    M3: float
    M12: float
    M13: float
    M23: float
    M123: float

    def signed(self) -> Tuple[float, ...]:
        """(-1)^j * M для всех семи главных миноров."""
        return (-self.M1, -self.M2, -self.M3, self.M12, self.M13, self.M23, -self.M123)

    def as_dict(self) -> dict:
        return {
            "M1": self.M1,
            "M2": self.M2,
            "M3": self.M3,
            "M12": self.M12,
            "M13": self.M13,
            "M23": self.M23,
            "M123": self.M123,
        }


def principal_minors(m) -> MinorSet:
    q = as_matrix3(m)
    return MinorSet(
        M1=q[0, 0],
        M2=q[1, 1],
        M3=q[2, 2],
        M12=_det2(q[0, 0], q[0, 1], q[1, 0], q[1, 1]),
        M13=_det2(q[0, 0], q[0, 2], q[2, 0], q[2, 2]),
        M23=_det2(q[1, 1], q[1, 2], q[2, 1], q[2, 2]),
        M123=_det3(q),
    )


def signed_principal_minors(m) -> Tuple[MinorSet, bool]:
    minors = principal_minors(m)
    return minors, all(value > 0.0 for value in minors.signed())


def is_class_p(m) -> bool:
    return signed_principal_minors(m)[1]


def is_class_p0_plus(m) -> bool:
    signed = principal_minors(m).signed()
    if any(value < 0.0 for value in signed):
        return False
    orders = (signed[:3], signed[3:6], signed[6:])
    return all(any(value > 0.0 for value in group) for group in orders)


# -------------------------
# intervals on y > 0
# -------------------------

@dataclass(frozen=True)
class Interval:
    """Открытый интервал (lo, hi); hi может быть +inf; при lo >= hi интервал пуст."""

    lo: float
    hi: float

    @classmethod
    def empty(cls) -> "Interval":
        return cls(0.0, 0.0)

    @property
    def is_empty(self) -> bool:
        return not self.lo < self.hi

    def contains(self, y: float) -> bool:
        return self.lo < y < self.hi

    def intersect(self, other: "Interval") -> "Interval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else Interval.empty()

    def midpoint(self) -> Optional[float]:
        if self.is_empty:
            return None
        if math.isinf(self.hi):
            return 2.0 * self.lo if self.lo > 0.0 else 1.0
        return 0.5 * (self.lo + self.hi)

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "empty": self.is_empty}


def negative_set(c2: float, c1: float, c0: float) -> Interval:
    """
    Множество y > 0, где c2*y^2 + c1*y + c0 < 0, при c2 >= 0.

    Корни считаются устойчивой формулой, чтобы меньший корень
    не терял точность при сокращении.
    """
    if c2 == 0.0:
        if c1 < 0.0:
            return Interval(max(-c0 / c1, 0.0), math.inf)
        if c1 > 0.0:
            return Interval(0.0, -c0 / c1) if c0 < 0.0 else Interval.empty()
        return Interval(0.0, math.inf) if c0 < 0.0 else Interval.empty()

    disc = c1 * c1 - 4.0 * c2 * c0
    if disc <= 0.0:
        return Interval.empty()

    t = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
    r1, r2 = sorted((t / c2, c0 / t if t != 0.0 else 0.0))
    if r2 <= 0.0:
        return Interval.empty()
    return Interval(max(r1, 0.0), r2)


# -------------------------
# Cross's order-3 criterion
# -------------------------

def p1_eval(m, y: float) -> float:
    q = as_matrix3(m)
    return (q[0, 2] * y + q[2, 0]) ** 2 - 4.0 * q[0, 0] * q[2, 2] * y


def p2_coefficients(m) -> Tuple[float, float, float, float]:
    """Возвращает (b1, b2, M12, M23) для p2."""
    q = as_matrix3(m)
    b1 = q[0, 1] * q[1, 2] - q[1, 1] * q[0, 2]
    b2 = q[1, 0] * q[2, 1] - q[1, 1] * q[2, 0]
    minors = principal_minors(q)
    return b1, b2, minors.M12, minors.M23


def p2_eval(m, y: float) -> float:
    b1, b2, m12, m23 = p2_coefficients(m)
    return (b1 * y + b2) ** 2 - 4.0 * m12 * m23 * y


def p2_eval_expanded(m, y: float) -> float:
    b1, b2, m12, m23 = p2_coefficients(m)
    q = as_matrix3(m)
    return b1 * b1 * y * y - 2.0 * (m12 * m23 + q[1, 1] * _det3(q)) * y + b2 * b2


def p1_interval(m) -> Interval:
    q = as_matrix3(m)
    a13, a31 = q[0, 2], q[2, 0]
    return negative_set(a13 * a13, 2.0 * a13 * a31 - 4.0 * q[0, 0] * q[2, 2], a31 * a31)


def p2_interval(m) -> Interval:
    b1, b2, m12, m23 = p2_coefficients(m)
    return negative_set(b1 * b1, 2.0 * b1 * b2 - 4.0 * m12 * m23, b2 * b2)


def volterra_lyapunov_check(m) -> Tuple[bool, Optional[float]]:
    """
    Критерий Кросса для матриц 3x3: матрица устойчива по Вольтерра-Ляпунову
    тогда и только тогда, когда она класса P и найдётся y > 0, где p1(y) < 0
    и p2(y) < 0 одновременно.

    Returns:
        Кортеж (stable, witness_y); witness_y: середина пересечения интервалов.
    """
    if not is_class_p(m):
        return False, None

    common = p1_interval(m).intersect(p2_interval(m))
    if common.is_empty:
        return False, None
    return True, common.midpoint()


# -------------------------
# negative definiteness and certificates
# -------------------------

def symmetric_part(m, d: Sequence[float]) -> Matrix3:
    """m*D + D*m^T для D = diag(d)."""
    q = as_matrix3(m)
    dd = np.asarray(d, dtype=float)
    return q * dd[None, :] + dd[:, None] * q.T


def is_negative_definite(sym, margin: float = SYLVESTER_MARGIN) -> bool:
    """
    Критерий Сильвестра: D1 < 0, D2 > 0, D3 < 0 для ведущих миноров.
    Запас margin масштабируется на max|s|^j, чтобы оценка не зависела
    от масштаба матрицы.
    """
    s = as_matrix3(sym)
    scale = float(np.max(np.abs(s)))
    if float(np.max(np.abs(s - s.T))) > SYMMETRY_TOL * max(1.0, scale):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    if scale == 0.0:
        return False

    d1 = s[0, 0]
    d2 = _det2(s[0, 0], s[0, 1], s[1, 0], s[1, 1])
    d3 = _det3(s)
    return d1 < -margin * scale and d2 > margin * scale ** 2 and d3 < -margin * scale ** 3


def _normalized(d: np.ndarray) -> Diagonal:
    d = d / np.max(d)
    return float(d[0]), float(d[1]), float(d[2])


def certificate_from_witness(m, y: float) -> Optional[Diagonal]:
    """
    Строит D = diag(1, d2, y) по свидетелю y: при p1(y) < 0 блок (1, 3)
    матрицы mD + Dm^T отрицательно определён, а d2 выбирается в вершине
    квадратичного условия на дополнение Шура.
    """
    q = as_matrix3(m)
    if not y > 0.0:
        return None

    block = np.array([
        [2.0 * q[0, 0], q[0, 2] * y + q[2, 0]],
        [q[0, 2] * y + q[2, 0], 2.0 * q[2, 2] * y],
    ])
    if not (block[0, 0] < 0.0 and np.linalg.det(block) > 0.0):
        return None

    k = -np.linalg.inv(block)
    c = np.array([q[1, 0], q[1, 2] * y])
    w = np.array([q[0, 1], q[2, 1]])

    alpha = float(w @ k @ w)
    beta = 2.0 * q[1, 1] + 2.0 * float(c @ k @ w)
    gamma = float(c @ k @ c)

    if alpha > 0.0:
        d2 = -beta / (2.0 * alpha)
    elif beta < 0.0:
        d2 = 2.0 * gamma / -beta if gamma > 0.0 else 1.0
    else:
        return None

    if not d2 > 0.0:
        return None

    d = _normalized(np.array([1.0, d2, y]))
    return d if is_negative_definite(symmetric_part(q, d)) else None


def _negative_definite_batch(s: np.ndarray, margin: float = SYLVESTER_MARGIN) -> np.ndarray:
    scale = np.max(np.abs(s), axis=(1, 2))
    d1 = s[:, 0, 0]
    d2 = s[:, 0, 0] * s[:, 1, 1] - s[:, 0, 1] * s[:, 1, 0]
    d3 = np.linalg.det(s)
    return (d1 < -margin * scale) & (d2 > margin * scale ** 2) & (d3 < -margin * scale ** 3)


def _witness_candidates(m) -> list:
    stable, y = volterra_lyapunov_check(m)
    if not stable:
        return []

    common = p1_interval(m).intersect(p2_interval(m))
    candidates = [y]
    if common.lo > 0.0 and math.isfinite(common.hi):
        candidates.extend(np.geomspace(common.lo, common.hi, 11)[1:-1])
    return candidates


def find_diagonal_d(m, seed: int = DEFAULT_SEED, budget: int = CERT_BUDGET) -> Optional[Diagonal]:
    """
    Ищет положительную диагональ D с m*D + D*m^T < 0.

    Сначала пробуется построение по свидетелю критерия Кросса, затем
    случайный поиск с log-равномерными d_i в 10^CERT_LOG10_RANGE.

    Args:
        m: матрица 3x3
        seed: зерно генератора для случайного поиска
        budget: число случайных проб

    Returns:
        (d1, d2, d3) с max = 1 или None, если бюджет исчерпан.
        Отсутствие сертификата не доказывает неустойчивость.
    """
    q = as_matrix3(m)

    for y in _witness_candidates(q):
        d = certificate_from_witness(q, y)
        if d is not None:
            log.debug("certificate from witness y = %.6g", y)
            return d

    rng = np.random.default_rng(seed)
    lo, hi = CERT_LOG10_RANGE
    remaining = int(budget)
    while remaining > 0:
        n = min(CERT_BATCH, remaining)
        remaining -= n

        d = 10.0 ** rng.uniform(lo, hi, size=(n, 3))
        sym = q[None, :, :] * d[:, None, :] + d[:, :, None] * q.T[None, :, :]
        hits = np.flatnonzero(_negative_definite_batch(sym))
        for idx in hits:
            candidate = _normalized(d[idx])
            if is_negative_definite(symmetric_part(q, candidate)):
                log.debug("certificate from random search after %d trials", budget - remaining)
                return candidate

    log.warning("⚠️ no diagonal certificate within %d trials", budget)
    return None
