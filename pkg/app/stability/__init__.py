from app.stability.conditions import (
    VERDICT_DFE,
    VERDICT_GAS,
    VERDICT_INCONCLUSIVE,
    GasCondition,
    StabilityReport,
    build_q,
    gas_condition,
    legacy_condition_2a,
    legacy_condition_2b,
    omega1_interval,
    omega1_threshold,
    omega1_threshold_as_printed,
    omega2_interval,
    p2_discriminant,
    remark_automatic,
    stability_report,
)
from app.stability.lyapunov import LyapunovWeights, lyapunov_dv, lyapunov_dv_quadratic, lyapunov_v
from app.stability.matrices import (
    Interval,
    MinorSet,
    certificate_from_witness,
    find_diagonal_d,
    is_class_p,
    is_class_p0_plus,
    is_negative_definite,
    negative_set,
    p1_eval,
    p2_eval,
    p2_eval_expanded,
    signed_principal_minors,
    symmetric_part,
    volterra_lyapunov_check,
)
