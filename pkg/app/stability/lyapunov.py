"""
Семейство функций Ляпунова V(M, I, R) для системы в переменных (M, I, R)
и её производная вдоль решений.

Веса tau1, tau2, tau3 относятся к отклонениям R, M и I соответственно,
поэтому в квадратичной форме X (Q D + D Q^T) X^T с X = [R - R2*, M - M2*, I - I2*]
стоит D = diag(tau1, tau2, tau3).
"""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from app.errors import DomainError
from app.model_core import ModelParams, State, transformed_dee, vf_mir
from app.stability.conditions import build_q
from app.stability.matrices import symmetric_part

Scalar = Union[float, np.ndarray]


@dataclass(frozen=True)
class LyapunovWeights:
    tau1: float
    tau2: float
    tau3: float

    def __post_init__(self):
        for name in ("tau1", "tau2", "tau3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")

    @classmethod
    def from_certificate(cls, d: Sequence[float]) -> "LyapunovWeights":
        """d1 -> R, d2 -> M, d3 -> I."""
        return cls(tau1=float(d[0]), tau2=float(d[1]), tau3=float(d[2]))

    def diagonal(self) -> np.ndarray:
        return np.array([self.tau1, self.tau2, self.tau3])


def _deviations(p: ModelParams, s: State):
    x = np.asarray(s, dtype=float)
    M, I, R = np.moveaxis(x, -1, 0)
    if np.any(I <= 0.0):
        raise DomainError("Lyapunov function is defined only for I > 0")

    m_star, i_star, r_star = transformed_dee(p)
    return x, M - m_star, I, i_star, R - r_star


def _scalar(value: np.ndarray) -> Scalar:
    return float(value) if np.ndim(value) == 0 else value


def lyapunov_v(p: ModelParams, w: LyapunovWeights, s: State) -> Scalar:
    _, dm, I, i_star, dr = _deviations(p, s)
    u = (I - i_star) / i_star
    # I - I* - I* ln(I/I*) = I* (u - ln(1 + u))
    log_term = i_star * (u - np.log1p(u))
    return _scalar(w.tau1 * dr ** 2 + w.tau2 * dm ** 2 + 2.0 * w.tau3 * log_term)


def lyapunov_dv(p: ModelParams, w: LyapunovWeights, s: State) -> Scalar:
    """dV/dt по цепному правилу с правыми частями системы (M, I, R)."""
    x, dm, I, i_star, dr = _deviations(p, s)
    dM, dI, dR = np.moveaxis(vf_mir(p, x), -1, 0)
    return _scalar(
        2.0 * w.tau1 * dr * dR
        + 2.0 * w.tau2 * dm * dM
        + 2.0 * w.tau3 * (I - i_star) / I * dI
    )


def lyapunov_dv_quadratic(p: ModelParams, w: LyapunovWeights, s: State) -> Scalar:
    """dV/dt как квадратичная форма X (Q D + D Q^T) X^T."""
    _, dm, I, i_star, dr = _deviations(p, s)
    X = np.stack(np.broadcast_arrays(dr, dm, I - i_star), axis=-1)
    sym = symmetric_part(build_q(p), w.diagonal())
    return _scalar(np.einsum("...i,ij,...j->...", X, sym, X))
