from pathlib import Path
from typing import Callable, List, Tuple

import numpy as np
import pytest

from app.model_core import ModelParams, reference_cases, reproduction_number

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def _draw(rng: np.random.Generator, r0_range: Tuple[float, float]) -> ModelParams:
    def log_uniform(lo: float, hi: float) -> float:
        return float(10.0 ** rng.uniform(lo, hi))

    base = ModelParams(
        A=log_uniform(-1, 1),
        epsilon=log_uniform(-3, -1),
        a=1.0,
        v=log_uniform(-3, -1),
        mu=log_uniform(-3, -1),
        delta=float(rng.uniform(0.05, 0.95)),
        bI=log_uniform(-3, -1),
        bC=log_uniform(-3, -1),
    )
    # R0 is linear in a
    target = float(rng.uniform(*r0_range))
    return base.with_value("a", target / reproduction_number(base))


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def case1() -> ModelParams:
    return reference_cases()["case1"].params


@pytest.fixture
def case2() -> ModelParams:
    return reference_cases()["case2"].params


@pytest.fixture
def case2_below_threshold(case2) -> ModelParams:
    return case2.with_value("a", 1e-4)


@pytest.fixture
def draw_params() -> Callable[..., List[ModelParams]]:
    """Фабрика случайных наборов параметров с R0 в заданном диапазоне."""

    def make(n: int, seed: int, r0_range: Tuple[float, float] = (1.2, 6.0)) -> List[ModelParams]:
        rng = np.random.default_rng(seed)
        return [_draw(rng, r0_range) for _ in range(n)]

    return make
