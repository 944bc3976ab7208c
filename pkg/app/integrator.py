"""
Классический метод Рунге-Кутты 4-го порядка с фиксированным шагом.

Интегрирование идёт батчем: все начальные состояния складываются в массив
(n_runs, dim). Для QuadraticField шаги идут на заранее выделенных буферах
и конечность проверяется раз на интервал записи; любое другое поле
вызывается на каждой стадии с проверкой.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from app.config import DEFAULT_H, DEFAULT_RECORD_EVERY_TIME, DEFAULT_T_END, DEFAULT_TOL
from app.errors import ConfigError, NonFiniteState
from app.model_core import ModelParams, QuadraticField, StateSCI

log = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegrationConfig:
    h: float = DEFAULT_H
    t_end: float = DEFAULT_T_END
    record_stride: Optional[int] = None
    convergence_tol: float = DEFAULT_TOL
    convergence_target: Optional[Sequence[float]] = None

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0.0):
            raise ConfigError(f"h must be > 0, got {self.h!r}", field="h")
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise ConfigError(f"t_end must be > 0, got {self.t_end!r}", field="t_end")
        if self.record_stride is None:
            object.__setattr__(self, "record_stride", max(1, round(DEFAULT_RECORD_EVERY_TIME / self.h)))
        if int(self.record_stride) < 1:
            raise ConfigError(f"record_stride must be >= 1, got {self.record_stride!r}", field="record_stride")
        if not self.convergence_tol > 0.0:
            raise ConfigError(f"tol must be > 0, got {self.convergence_tol!r}", field="tol")

    @classmethod
    def every(cls, h: float, t_end: float, record_every: float, **kwargs) -> "IntegrationConfig":
        """Конфиг с шагом записи, заданным во времени, а не в шагах."""
        return cls(h=h, t_end=t_end, record_stride=max(1, round(record_every / h)), **kwargs)

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.t_end / self.h - 1e-9)))

    @property
    def last_step(self) -> float:
        """Длина последнего шага: остаток до t_end, не больше h."""
        return min(self.h, self.t_end - (self.n_steps - 1) * self.h)

    def time_at(self, step: int) -> float:
        return self.t_end if step >= self.n_steps else step * self.h

    def record_marks(self) -> List[int]:
        """Номера шагов, после которых пишется состояние; последний шаг пишется всегда."""
        n_steps = self.n_steps
        marks = list(range(0, n_steps + 1, int(self.record_stride)))
        if marks[-1] != n_steps:
            marks.append(n_steps)
        return marks


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    converged_at: Optional[float] = None

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def to_frame(self, columns: Sequence[str]) -> pd.DataFrame:
        frame = pd.DataFrame(self.states, columns=list(columns))
        frame.insert(0, "t", self.times)
        return frame


def _check_finite(x: np.ndarray, t: float) -> None:
    if np.all(np.isfinite(x)):
        return
    run = None
    if x.ndim == 2:
        run = int(np.flatnonzero(~np.all(np.isfinite(x), axis=1))[0])
    raise NonFiniteState(t, run=run)


def rk4_step(field: Field, s, h: float, t: float = 0.0) -> np.ndarray:
    x = np.asarray(s, dtype=float)

    k1 = field(x)
    _check_finite(k1, t)
    k2 = field(x + 0.5 * h * k1)
    _check_finite(k2, t)
    k3 = field(x + 0.5 * h * k2)
    _check_finite(k3, t)
    k4 = field(x + h * k3)
    _check_finite(k4, t)

    out = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(out, t + h)
    return out


def converge_time(traj: Trajectory, target: Sequence[float], tol: float) -> Optional[float]:
    target = np.asarray(target, dtype=float)
    if target.shape != (traj.dimension,):
        raise ValueError(f"target has shape {target.shape}, trajectory dimension is {traj.dimension}")

    distance = np.max(np.abs(traj.states - target), axis=1)
    hits = np.flatnonzero(distance <= tol)
    return float(traj.times[hits[0]]) if hits.size else None


class _QuadraticStepper:
    """
    RK4 для QuadraticField на заранее выделенных буферах: каждая стадия это
    произведения x_i * x_k в столбцах признаков и одно умножение на матрицу весов.
    """

    def __init__(self, field: QuadraticField, n_runs: int):
        dim = field.dim
        self.weights = field.weights
        self.features = np.ones((n_runs, self.weights.shape[0]))
        self.state = self.features[:, :dim]
        self.products = [
            (self.features[:, i], self.features[:, k], self.features[:, dim + j])
            for j, (i, k) in enumerate(field.pairs)
        ]
        self.stages = [np.empty((n_runs, dim)) for _ in range(4)]
        self.tmp = np.empty((n_runs, dim))

    def _eval(self, out: np.ndarray) -> None:
        for left, right, column in self.products:
            np.multiply(left, right, out=column)
        np.dot(self.features, self.weights, out=out)

    def step(self, x: np.ndarray, h: float) -> None:
        """Один шаг на месте; x имеет форму (n_runs, dim)."""
        k1, k2, k3, k4 = self.stages
        tmp, state = self.tmp, self.state

        state[...] = x
        self._eval(k1)
        np.multiply(k1, 0.5 * h, out=tmp)
        np.add(x, tmp, out=state)
        self._eval(k2)
        np.multiply(k2, 0.5 * h, out=tmp)
        np.add(x, tmp, out=state)
        self._eval(k3)
        np.multiply(k3, h, out=tmp)
        np.add(x, tmp, out=state)
        self._eval(k4)

        np.add(k2, k3, out=tmp)
        tmp *= 2.0
        tmp += k1
        tmp += k4
        tmp *= h / 6.0
        x += tmp


def _advance_checked(field: Field, x: np.ndarray, first: int, last: int, cfg: IntegrationConfig) -> np.ndarray:
    n_steps = cfg.n_steps
    for step in range(first, last):
        h = cfg.h if step + 1 < n_steps else cfg.last_step
        x = rk4_step(field, x, h, t=step * cfg.h)
    return x


def _advance_quadratic(
    stepper: _QuadraticStepper,
    field: QuadraticField,
    x: np.ndarray,
    first: int,
    last: int,
    cfg: IntegrationConfig,
) -> np.ndarray:
    start = x.copy()
    full = min(last, cfg.n_steps - 1) - first
    for _ in range(max(full, 0)):
        stepper.step(x, cfg.h)
    if last == cfg.n_steps:
        stepper.step(x, cfg.last_step)

    if not np.all(np.isfinite(x)):
        # replay the block with per-stage checks to name the step and the run
        _advance_checked(field, start, first, last, cfg)
        _check_finite(x, cfg.time_at(last))
    return x


def integrate_many(field: Field, initial_states: Sequence, cfg: IntegrationConfig) -> List[Trajectory]:
    """
    Интегрирует все начальные состояния одновременно.

    Последний шаг обрезается до t_end, и конечное состояние записывается
    всегда, даже если t_end не кратно интервалу записи.

    Args:
        field: автономное векторное поле, принимающее массив (..., dim)
        initial_states: начальные состояния одной размерности
        cfg: шаг, горизонт, шаг записи и критерий сходимости

    Returns:
        Траектории в порядке начальных состояний.
    """
    rows = [np.asarray(s, dtype=float) for s in initial_states]
    if not rows or rows[0].ndim != 1 or any(r.shape != rows[0].shape for r in rows):
        raise ConfigError("initial states must share one dimension", field="init")
    x = np.stack(rows)
    _check_finite(x, 0.0)

    marks = cfg.record_marks()
    records = np.empty((len(marks), x.shape[0], x.shape[1]))
    records[0] = x

    stepper = None
    if isinstance(field, QuadraticField) and field.dim == x.shape[1]:
        stepper = _QuadraticStepper(field, x.shape[0])

    log.debug("RK4: %d runs, %d steps, h = %g", x.shape[0], cfg.n_steps, cfg.h)
    for j in range(1, len(marks)):
        if stepper is None:
            x = _advance_checked(field, x, marks[j - 1], marks[j], cfg)
        else:
            x = _advance_quadratic(stepper, field, x, marks[j - 1], marks[j], cfg)
        records[j] = x

    times = np.array([cfg.time_at(step) for step in marks])
    trajectories = [Trajectory(times=times, states=records[:, i, :].copy()) for i in range(x.shape[0])]

    if cfg.convergence_target is not None:
        for traj in trajectories:
            traj.converged_at = converge_time(traj, cfg.convergence_target, cfg.convergence_tol)

    return trajectories


def integrate(field: Field, s0, cfg: IntegrationConfig) -> Trajectory:
    try:
        return integrate_many(field, [s0], cfg)[0]
    except NonFiniteState as exc:
        raise NonFiniteState(exc.time) from exc


def sample_omega(p: ModelParams, n: int, seed: int) -> List[StateSCI]:
    """
    Равномерная выборка из {S, C, I >= 0, S + C + I <= A/mu}: первые три
    координаты точки Дирихле(1, 1, 1, 1), умноженные на A/mu.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n!r}", field="n_init")

    rng = np.random.default_rng(seed)
    points = rng.dirichlet(np.ones(4), size=n)[:, :3] * p.n_star
    return [StateSCI(*(float(v) for v in row)) for row in points]


def closed_form_population(p: ModelParams, n0: float, t):
    return p.n_star + (n0 - p.n_star) * np.exp(-p.mu * np.asarray(t, dtype=float))
