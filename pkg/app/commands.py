import dataclasses
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from app.config import CERT_BUDGET, DEFAULT_SEED
from app.errors import ConfigError
from app.integrator import IntegrationConfig, Trajectory, integrate_many, sample_omega
from app.json_utils import dumps
from app.model_core import (
    ModelParams,
    component_names,
    dee,
    dfe,
    equilibrium_report,
    lift_state,
    local_eigenvalues,
    reproduction_number,
    vector_field,
)
from app.params_io import RunConfig, SweepSpec
from app.stability import (
    VERDICT_DFE,
    VERDICT_GAS,
    VERDICT_INCONCLUSIVE,
    StabilityReport,
    build_q,
    find_diagonal_d,
    gas_condition,
    is_negative_definite,
    legacy_condition_2b,
    stability_report,
    symmetric_part,
)

log = logging.getLogger(__name__)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_frame(frame: pd.DataFrame, path: Path, output_format: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if output_format == "json":
        _write_text(path, dumps(frame.to_dict(orient="list")))
    else:
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


# -------------------------
# r0 / equilibria / check
# -------------------------

def cmd_r0(params: ModelParams) -> str:
    return f"{reproduction_number(params):.6f}"


def equilibria_payload(params: ModelParams) -> dict:
    report = equilibrium_report(params)
    eigen = {"dfe": local_eigenvalues(params, report.dfe)}
    if report.dee is not None:
        eigen["dee"] = local_eigenvalues(params, report.dee)

    return {
        "r0": report.r0,
        "dfe": report.dfe,
        "dee": report.dee,
        "dee_sir": report.dee_sir,
        "dee_mir": report.dee_mir,
        "dee_full": report.dee_full,
        "table_order": report.table_order,
        "residual_norm": report.residual_norm,
        "local_eigenvalues": eigen,
    }


def cmd_equilibria(params: ModelParams, out: Optional[Path] = None) -> str:
    text = dumps(equilibria_payload(params))
    if out is not None:
        _write_text(out, text + "\n")
    return text


def check_payload(report: StabilityReport) -> dict:
    verified = report.certificate_d is not None and is_negative_definite(
        symmetric_part(report.q, report.certificate_d)
    )
    return {
        "r0": report.r0,
        "verdict": report.verdict,
        "q": report.q,
        "minors": report.minors,
        "signed_minors": report.minors.signed(),
        "in_class_p": report.in_class_p,
        "gas_holds": report.gas_holds,
        "gas_lhs": report.gas_lhs,
        "gas_rhs": report.gas_rhs,
        "omega1": report.omega1,
        "omega2": report.omega2,
        "witness_y": report.witness_y,
        "certificate_d": report.certificate_d,
        "certificate_verified": verified,
        "legacy_2b_holds": report.legacy_2b_holds,
        "legacy_2a_holds": report.legacy_2a_holds,
        "remark_automatic": report.remark_automatic,
        "omega1_as_printed": report.omega1_as_printed,
        "warnings": report.warnings,
    }


def cmd_check(
    params: ModelParams,
    seed: int = DEFAULT_SEED,
    budget: int = CERT_BUDGET,
    c: Optional[float] = None,
    out: Optional[Path] = None,
) -> str:
    text = dumps(check_payload(stability_report(params, seed=seed, budget=budget, c=c)))
    if out is not None:
        _write_text(out, text + "\n")
    return text


# -------------------------
# simulate / phase
# -------------------------

def equilibrium_target(params: ModelParams, system: str) -> np.ndarray:
    """Ожидаемый предел траекторий: E* при R0 > 1, иначе E0."""
    point = dee(params) if reproduction_number(params) > 1.0 else dfe(params)
    return np.asarray(lift_state(params, point, system), dtype=float)


def run_trajectories(run: RunConfig) -> List[Trajectory]:
    target = equilibrium_target(run.params, run.system)
    cfg = dataclasses.replace(run.integration, convergence_target=tuple(target))
    states = run.resolve_initial_states()

    log.info("🚀 integrating %d run(s) of the %s system up to t = %g", len(states), run.system, cfg.t_end)
    trajectories = integrate_many(vector_field(run.params, run.system), states, cfg)

    for i, traj in enumerate(trajectories):
        if traj.converged_at is None:
            log.warning("⚠️ run %d did not reach tol %g by t = %g", i, cfg.convergence_tol, cfg.t_end)
    return trajectories


def cmd_simulate(run: RunConfig) -> dict:
    trajectories = run_trajectories(run)
    columns = component_names(run.system)
    out_dir = run.output_path

    runs = []
    for i, traj in enumerate(trajectories):
        name = f"run_{i:03d}.{run.output_format}"
        _write_frame(traj.to_frame(columns), out_dir / name, run.output_format)
        runs.append({
            "run": i,
            "file": name,
            "initial_state": traj.states[0],
            "final_state": traj.final_state,
            "converged_at": traj.converged_at,
        })

    summary = {
        "system": run.system,
        "params": run.params.to_mapping(),
        "h": run.integration.h,
        "t_end": run.integration.t_end,
        "tol": run.integration.convergence_tol,
        "target": equilibrium_target(run.params, run.system),
        "runs": runs,
    }
    _write_text(out_dir / "summary.json", dumps(summary) + "\n")
    log.info("✅ %d trajectories written to %s", len(runs), out_dir)
    return summary


def cmd_phase(run: RunConfig) -> Path:
    count = run.sampler.count if run.sampler is not None else len(run.initial_states or [])
    if count < 2:
        raise ConfigError("phase portrait needs at least 2 initial states", field="n_init")

    trajectories = run_trajectories(run)
    columns = component_names(run.system)

    blocks = []
    for i, traj in enumerate(trajectories):
        frame = traj.to_frame(columns)
        frame.insert(0, "run_id", str(i))
        blocks.append(frame)

    target = equilibrium_target(run.params, run.system)
    equilibrium = pd.DataFrame([[*target]], columns=list(columns))
    equilibrium.insert(0, "t", np.nan)
    equilibrium.insert(0, "run_id", "equilibrium")
    blocks.append(equilibrium)

    out = run.output_path
    if out.suffix == "":
        out = out / f"phase.{run.output_format}"
    _write_frame(pd.concat(blocks, ignore_index=True), out, run.output_format)
    log.info("✅ phase data for %d runs written to %s", len(trajectories), out)
    return out


# -------------------------
# sweep
# -------------------------

def _sweep_verdict(params: ModelParams, holds: bool, seed: int) -> str:
    if reproduction_number(params) <= 1.0:
        return VERDICT_DFE
    if holds and find_diagonal_d(build_q(params), seed=seed) is not None:
        return VERDICT_GAS
    return VERDICT_INCONCLUSIVE


def sweep_rows(spec: SweepSpec, cfg: IntegrationConfig, seed: int = DEFAULT_SEED) -> pd.DataFrame:
    points = spec.points()

    rows = []
    for value, params in zip(spec.values, points):
        gas = gas_condition(params)
        converged_at = None
        if spec.simulate:
            start = np.asarray(sample_omega(params, 1, seed)[0])
            run_cfg = dataclasses.replace(cfg, convergence_target=tuple(equilibrium_target(params, "limit")))
            converged_at = integrate_many(vector_field(params, "limit"), [start], run_cfg)[0].converged_at

        rows.append({
            "value": value,
            "r0": reproduction_number(params),
            "gas_holds": gas.holds,
            "legacy_2b": legacy_condition_2b(params),
            "verdict": _sweep_verdict(params, gas.holds, seed),
            "converged_at": converged_at,
        })

    spec.outputs = rows
    return pd.DataFrame(rows, columns=["value", "r0", "gas_holds", "legacy_2b", "verdict", "converged_at"])


def cmd_sweep(spec: SweepSpec, cfg: IntegrationConfig, out: Path, seed: int = DEFAULT_SEED) -> pd.DataFrame:
    frame = sweep_rows(spec, cfg, seed)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, lineterminator="\n", encoding="utf-8")
    log.info("✅ sweep over %s (%d values) written to %s", spec.axis, len(frame), out)
    return frame
