"""
SCIRS-модель распространения вредоносного кода в беспроводных сенсорных сетях.

Четыре формулировки одной и той же динамики:

- full (S, C, I, R, N): исходная система с полной численностью N;
- limit (S, C, I): предельная система при N = A/mu;
- sir (S, I, R): подмодель, где C = A/mu - S - I - R;
- mir (M, I, R): подмодель после замены M = delta*S + I.

Все векторные поля принимают либо именованный кортеж состояния, либо массив
формы (..., dim) и считают батчем по ведущим осям.
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Dict, Mapping, NamedTuple, Optional, Tuple, Type, Union

import numpy as np
from scipy.optimize import root

from app.config import CLAMP_TOL, PARAM_KEYS, RESIDUAL_RTOL
from app.errors import InternalConsistencyError, InvalidParameters, NoEndemicEquilibrium

log = logging.getLogger(__name__)

# file spelling -> attribute name
_FILE_TO_ATTR = {
    "A": "A",
    "epsilon": "epsilon",
    "a": "a",
    "v": "v",
    "mu": "mu",
    "delta": "delta",
    "b_I": "bI",
    "b_C": "bC",
}
_ATTR_TO_FILE = {attr: key for key, attr in _FILE_TO_ATTR.items()}


# -------------------------
# parameters and states
# -------------------------

@dataclass(frozen=True)
class ModelParams:
    """
    Восемь положительных коэффициентов модели.

    Args:
        A: скорость поступления новых узлов (узлов/время)
        epsilon: скорость потери иммунитета R -> S
        a: коэффициент передачи
        v: скорость вакцинации S -> R
        mu: скорость выбытия узлов
        delta: доля заражённых, становящихся инфекционными, 0 < delta < 1
        bI: скорость восстановления инфекционных узлов
        bC: скорость восстановления узлов-носителей
    """

    A: float
    epsilon: float
    a: float
    v: float
    mu: float
    delta: float
    bI: float
    bC: float

    def __post_init__(self):
        for f in fields(self):
            raw = getattr(self, f.name)
            name = _ATTR_TO_FILE[f.name]
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise InvalidParameters(f"{name} must be a number, got {raw!r}", field=name)
            if not math.isfinite(value) or value <= 0.0:
                raise InvalidParameters(f"{name} must be finite and > 0, got {raw!r}", field=name)
            object.__setattr__(self, f.name, value)

        if self.delta >= 1.0:
            raise InvalidParameters(f"delta must lie in (0, 1), got {self.delta!r}", field="delta")

    @property
    def n_star(self) -> float:
        return self.A / self.mu

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "ModelParams":
        """Строит параметры из словаря с ключами в написании файлов (b_I, b_C)."""
        unknown = sorted(set(mapping) - set(PARAM_KEYS))
        if unknown:
            raise InvalidParameters(f"unknown parameter {unknown[0]!r}", field=unknown[0])

        missing = [key for key in PARAM_KEYS if key not in mapping]
        if missing:
            raise InvalidParameters(f"missing parameter {missing[0]!r}", field=missing[0])

        return cls(**{_FILE_TO_ATTR[key]: mapping[key] for key in PARAM_KEYS})

    def to_mapping(self) -> Dict[str, float]:
        return {key: getattr(self, _FILE_TO_ATTR[key]) for key in PARAM_KEYS}

    def with_value(self, key: str, value: float) -> "ModelParams":
        if key not in _FILE_TO_ATTR:
            raise InvalidParameters(f"unknown parameter {key!r}", field=key)
        return replace(self, **{_FILE_TO_ATTR[key]: value})


class StateSCIRN(NamedTuple):
    S: float
    C: float
    I: float
    R: float
    N: float


class StateSCI(NamedTuple):
    S: float
    C: float
    I: float


class StateSIR(NamedTuple):
    S: float
    I: float
    R: float


class StateMIR(NamedTuple):
    M: float
    I: float
    R: float


State = Union[StateSCIRN, StateSCI, StateSIR, StateMIR, np.ndarray]

STATE_TYPES: Dict[str, Type[tuple]] = {
    "full": StateSCIRN,
    "limit": StateSCI,
    "sir": StateSIR,
    "mir": StateMIR,
}


def component_names(system: str) -> Tuple[str, ...]:
    return STATE_TYPES[system]._fields


def _components(s: State):
    x = np.asarray(s, dtype=float)
    return np.moveaxis(x, -1, 0)


def _pack(like: State, *parts, as_type: Optional[Type[tuple]] = None):
    out = np.stack(np.broadcast_arrays(*parts), axis=-1)
    if hasattr(like, "_fields"):
        return (as_type or type(like))(*(float(v) for v in out))
    return out


def clamp_small_negatives(x, tol: float = CLAMP_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where((x < 0.0) & (x >= -tol), 0.0, x)


# -------------------------
# threshold and equilibria
# -------------------------

def reproduction_number(p: ModelParams) -> float:
    return p.a * p.delta * (p.A + p.n_star * p.epsilon) / ((p.bI + p.mu) * (p.v + p.epsilon + p.mu))


def dfe(p: ModelParams) -> StateSCI:
    s0 = (p.A + p.n_star * p.epsilon) / (p.v + p.epsilon + p.mu)
    return StateSCI(s0, 0.0, 0.0)


def _endemic_bracket(p: ModelParams) -> float:
    # (bI + mu)(v + eps + mu)(1 - R0)
    return -p.a * p.delta * (p.A + p.n_star * p.epsilon) + (p.bI + p.mu) * (p.v + p.epsilon + p.mu)


def _endemic_denominator(p: ModelParams) -> float:
    return (
        p.mu * (p.epsilon + p.mu)
        + p.bI * (p.epsilon - p.delta * p.epsilon + p.mu)
        + p.bC * (p.bI + p.delta * p.epsilon + p.mu)
    )


def _require_endemic(p: ModelParams) -> None:
    r0 = reproduction_number(p)
    if r0 <= 1.0:
        raise NoEndemicEquilibrium(r0)


def dee(p: ModelParams) -> StateSCI:
    """Эндемическое равновесие E* = (S*, C*, I*); существует только при R0 > 1."""
    _require_endemic(p)

    bracket = _endemic_bracket(p)
    den = _endemic_denominator(p)

    s_star = (p.bI + p.mu) / (p.a * p.delta)
    c_star = (p.delta - 1.0) * (p.bI + p.mu) * bracket / (p.a * p.delta * den)
    i_star = -(p.bC + p.mu) * bracket / (p.a * den)

    return StateSCI(s_star, c_star, i_star)


def transformed_dee(p: ModelParams) -> StateMIR:
    """Положительное равновесие E2* = (M2*, I2*, R2*) системы в переменных (M, I, R)."""
    _require_endemic(p)

    i_star = -(p.bC + p.mu) * _endemic_bracket(p) / (p.a * _endemic_denominator(p))
    m_star = (p.bI + p.mu) / p.a + i_star

    s, c, i = dee(p)
    r_star = p.n_star - s - i - c

    return StateMIR(m_star, i_star, r_star)


def full_equilibrium(p: ModelParams, s: StateSCI) -> StateSCIRN:
    return StateSCIRN(s.S, s.C, s.I, p.n_star - s.S - s.C - s.I, p.n_star)


def to_sir(p: ModelParams, s: StateSCI) -> StateSIR:
    return StateSIR(s.S, s.I, p.n_star - s.S - s.C - s.I)


def _expect_state(s: State, kind: Type[tuple]) -> None:
    if hasattr(s, "_fields") and not isinstance(s, kind):
        raise TypeError(f"expected {kind.__name__} or a plain array, got {type(s).__name__}")


def to_mir(p: ModelParams, s: State) -> State:
    _expect_state(s, StateSIR)
    S, I, R = _components(s)
    return _pack(s, p.delta * S + I, I, R, as_type=StateMIR)


def from_mir(p: ModelParams, s: State) -> State:
    _expect_state(s, StateMIR)
    M, I, R = _components(s)
    return _pack(s, (M - I) / p.delta, I, R, as_type=StateSIR)


def lift_state(p: ModelParams, s: StateSCI, system: str) -> tuple:
    """Переводит точку множества Omega в вектор состояния нужной системы."""
    if system == "limit":
        return StateSCI(*s)
    if system == "full":
        return full_equilibrium(p, s)
    if system == "sir":
        return to_sir(p, s)
    if system == "mir":
        return to_mir(p, to_sir(p, s))
    raise ValueError(f"unknown system {system!r}")


def equilibrium_identities(p: ModelParams, e: StateMIR) -> Tuple[float, float, float]:
    """Левые части трёх тождеств, которым удовлетворяет E2*; все равны нулю в E2*."""
    M, I, R = e
    k = cross_coefficient(p)
    first = p.delta * p.A + p.delta * p.epsilon * R - (p.v + p.mu) * M + (p.v - p.bI) * I
    second = p.a * M - p.a * I - (p.bI + p.mu)
    third = p.bC * p.n_star + (p.v - p.bC) / p.delta * M + k * I - (p.bC + p.epsilon + p.mu) * R
    return first, second, third


def cross_coefficient(p: ModelParams) -> float:
    """k = bC/delta - bC + bI - v/delta: связь I и R в системе отклонений."""
    return p.bC / p.delta - p.bC + p.bI - p.v / p.delta


# -------------------------
# vector fields
# -------------------------

def vf_full(p: ModelParams, s: State) -> State:
    S, C, I, R, N = _components(s)
    dS = p.A + p.epsilon * R - p.a * I * S - p.v * S - p.mu * S
    dC = p.a * (1.0 - p.delta) * I * S - p.bC * C - p.mu * C
    dI = p.a * p.delta * I * S - p.bI * I - p.mu * I
    dR = p.bC * C + p.bI * I + p.v * S - p.epsilon * R - p.mu * R
    dN = p.A - p.mu * N
    return _pack(s, dS, dC, dI, dR, dN)


def vf_limit(p: ModelParams, s: State) -> State:
    S, C, I = _components(s)
    dS = p.A + p.epsilon * (p.n_star - S - C - I) - p.a * I * S - p.v * S - p.mu * S
    dC = p.a * (1.0 - p.delta) * I * S - p.bC * C - p.mu * C
    dI = p.a * p.delta * I * S - p.bI * I - p.mu * I
    return _pack(s, dS, dC, dI)


def vf_sir(p: ModelParams, s: State) -> State:
    S, I, R = _components(s)
    dS = p.A + p.epsilon * R - p.a * I * S - p.v * S - p.mu * S
    dI = p.a * p.delta * I * S - p.bI * I - p.mu * I
    dR = p.bC * (p.n_star - S - I - R) + p.bI * I + p.v * S - p.epsilon * R - p.mu * R
    return _pack(s, dS, dI, dR)


def vf_mir(p: ModelParams, s: State) -> State:
    M, I, R = _components(s)
    susceptible = (M - I) / p.delta
    dM = p.delta * p.A + p.delta * p.epsilon * R - (p.v + p.mu) * M + (p.v - p.bI) * I
    dI = p.a * (M - I) * I - p.bI * I - p.mu * I
    dR = p.bC * (p.n_star - susceptible - I - R) + p.bI * I + p.v * susceptible - p.epsilon * R - p.mu * R
    return _pack(s, dM, dI, dR)


@dataclass(frozen=True)
class QuadraticField:
    """
    Поле f(x) = c + L x + sum_j w_j * x_i * x_k.

    Все четыре формулировки модели квадратичны, поэтому поле целиком задаётся
    матрицей весов над признаками [x, x_i * x_k, 1]; интегратор использует её
    напрямую.
    """

    constant: np.ndarray
    linear: np.ndarray
    pairs: Tuple[Tuple[int, int], ...]
    quadratic: np.ndarray

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.ascontiguousarray(np.vstack([self.linear.T, self.quadratic, self.constant[None, :]]))

    def __call__(self, s: State) -> np.ndarray:
        x = np.asarray(s, dtype=float)
        out = self.constant + x @ self.linear.T
        for (i, k), w in zip(self.pairs, self.quadratic):
            out = out + np.multiply.outer(x[..., i] * x[..., k], w)
        return out


def _quadratic_full(p: ModelParams) -> QuadraticField:
    # (S, C, I, R, N), monomial S*I
    return QuadraticField(
        constant=np.array([p.A, 0.0, 0.0, 0.0, p.A]),
        linear=np.array([
            [-(p.v + p.mu), 0.0, 0.0, p.epsilon, 0.0],
            [0.0, -(p.bC + p.mu), 0.0, 0.0, 0.0],
            [0.0, 0.0, -(p.bI + p.mu), 0.0, 0.0],
            [p.v, p.bC, p.bI, -(p.epsilon + p.mu), 0.0],
            [0.0, 0.0, 0.0, 0.0, -p.mu],
        ]),
        pairs=((0, 2),),
        quadratic=np.array([[-p.a, p.a * (1.0 - p.delta), p.a * p.delta, 0.0, 0.0]]),
    )


def _quadratic_limit(p: ModelParams) -> QuadraticField:
    # (S, C, I), R = A/mu - S - C - I
    return QuadraticField(
        constant=np.array([p.A + p.epsilon * p.n_star, 0.0, 0.0]),
        linear=np.array([
            [-(p.epsilon + p.v + p.mu), -p.epsilon, -p.epsilon],
            [0.0, -(p.bC + p.mu), 0.0],
            [0.0, 0.0, -(p.bI + p.mu)],
        ]),
        pairs=((0, 2),),
        quadratic=np.array([[-p.a, p.a * (1.0 - p.delta), p.a * p.delta]]),
    )


def _quadratic_sir(p: ModelParams) -> QuadraticField:
    # (S, I, R), C = A/mu - S - I - R
    return QuadraticField(
        constant=np.array([p.A, 0.0, p.bC * p.n_star]),
        linear=np.array([
            [-(p.v + p.mu), 0.0, p.epsilon],
            [0.0, -(p.bI + p.mu), 0.0],
            [p.v - p.bC, p.bI - p.bC, -(p.bC + p.epsilon + p.mu)],
        ]),
        pairs=((0, 1),),
        quadratic=np.array([[-p.a, p.a * p.delta, 0.0]]),
    )


def _quadratic_mir(p: ModelParams) -> QuadraticField:
    # (M, I, R), S = (M - I)/delta; monomials M*I and I*I
    return QuadraticField(
        constant=np.array([p.delta * p.A, 0.0, p.bC * p.n_star]),
        linear=np.array([
            [-(p.v + p.mu), p.v - p.bI, p.delta * p.epsilon],
            [0.0, -(p.bI + p.mu), 0.0],
            [(p.v - p.bC) / p.delta, cross_coefficient(p), -(p.bC + p.epsilon + p.mu)],
        ]),
        pairs=((0, 1), (1, 1)),
        quadratic=np.array([[0.0, p.a, 0.0], [0.0, -p.a, 0.0]]),
    )


_FIELDS: Dict[str, Callable[[ModelParams], QuadraticField]] = {
    "full": _quadratic_full,
    "limit": _quadratic_limit,
    "sir": _quadratic_sir,
    "mir": _quadratic_mir,
}


def vector_field(p: ModelParams, system: str) -> QuadraticField:
    """То же поле, что vf_<system>, в матричной форме для батчевого RK4."""
    try:
        return _FIELDS[system](p)
    except KeyError:
        raise ValueError(f"unknown system {system!r}")


def jacobian_limit(p: ModelParams, s: State) -> np.ndarray:
    S, C, I = (float(v) for v in np.asarray(s, dtype=float))
    return np.array([
        [-p.epsilon - p.a * I - p.v - p.mu, -p.epsilon, -p.epsilon - p.a * S],
        [p.a * (1.0 - p.delta) * I, -(p.bC + p.mu), p.a * (1.0 - p.delta) * S],
        [p.a * p.delta * I, 0.0, p.a * p.delta * S - (p.bI + p.mu)],
    ])


def local_eigenvalues(p: ModelParams, s: State) -> np.ndarray:
    return np.linalg.eigvals(jacobian_limit(p, s))


def refine_equilibrium(p: ModelParams, guess: State) -> StateSCI:
    """
    Находит равновесие предельной системы методом Ньютона (scipy hybr)
    с аналитическим якобианом.
    """
    sol = root(
        lambda x: vf_limit(p, x),
        np.asarray(guess, dtype=float),
        jac=lambda x: jacobian_limit(p, x),
        method="hybr",
        tol=1e-12,
    )
    if not sol.success:
        raise InternalConsistencyError(f"equilibrium refinement failed: {sol.message}")
    return StateSCI(*(float(v) for v in sol.x))


# -------------------------
# feasible sets
# -------------------------

def _sum_bound(p: ModelParams) -> float:
    return p.n_star + CLAMP_TOL * max(1.0, p.n_star)


def in_omega(p: ModelParams, s: State) -> bool:
    x = clamp_small_negatives(s)
    return bool(np.all(x >= 0.0) and x.sum() <= _sum_bound(p))


def in_omega_star(p: ModelParams, s: State) -> bool:
    M, I, R = clamp_small_negatives(s)
    if M < 0.0 or I < 0.0 or R < 0.0:
        return False
    return bool(M <= _sum_bound(p) and I + R <= _sum_bound(p))


# -------------------------
# equilibrium report
# -------------------------

def max_norm(x) -> float:
    return float(np.max(np.abs(np.asarray(x, dtype=float))))


@dataclass
class EquilibriumReport:
    r0: float
    dfe: StateSCI
    dee: Optional[StateSCI] = None
    dee_sir: Optional[StateSIR] = None
    dee_mir: Optional[StateMIR] = None
    dee_full: Optional[StateSCIRN] = None
    residual_norm: Dict[str, float] = field(default_factory=dict)

    @property
    def table_order(self) -> Optional[Tuple[float, float, float]]:
        """E* в порядке (S*, I*, R*), как в таблице численных примеров."""
        if self.dee_sir is None:
            return None
        return self.dee_sir.S, self.dee_sir.I, self.dee_sir.R


def equilibrium_report(p: ModelParams) -> EquilibriumReport:
    r0 = reproduction_number(p)
    report = EquilibriumReport(r0=r0, dfe=dfe(p))
    report.residual_norm["dfe"] = max_norm(vf_limit(p, report.dfe))

    if r0 > 1.0:
        report.dee = dee(p)
        report.dee_sir = to_sir(p, report.dee)
        report.dee_mir = transformed_dee(p)
        report.dee_full = full_equilibrium(p, report.dee)
        report.residual_norm["dee"] = max_norm(vf_limit(p, report.dee))
        report.residual_norm["dee_sir"] = max_norm(vf_sir(p, report.dee_sir))
        report.residual_norm["dee_mir"] = max_norm(vf_mir(p, report.dee_mir))

    limit = RESIDUAL_RTOL * p.n_star
    worst = max(report.residual_norm.values())
    if worst > limit:
        raise InternalConsistencyError(f"equilibrium residual {worst:.3g} exceeds {limit:.3g}")

    log.debug("R0 = %.6g, worst residual %.3g", r0, worst)
    return report


# -------------------------
# reference cases
# -------------------------

class ReferenceCase(NamedTuple):
    params: ModelParams
    r0: float
    table_equilibrium: Tuple[float, float, float]


def reference_cases() -> Dict[str, ReferenceCase]:
    """Два набора параметров численных примеров с напечатанными R0 и E* = (S*, I*, R*)."""
    return {
        "case1": ReferenceCase(
            ModelParams(A=2, epsilon=0.004, a=0.008, v=0.05, mu=0.01, delta=0.9, bI=0.1, bC=0.005),
            2.8636,
            (15.2796, 14.0548, 158.6942),
        ),
        "case2": ReferenceCase(
            ModelParams(A=2, epsilon=0.002, a=0.001, v=0.03, mu=0.01, delta=0.5, bI=0.01, bC=0.05),
            1.4286,
            (39.7946, 17.1194, 137.2670),
        ),
    }
