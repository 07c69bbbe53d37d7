"""winterdyn: metastable-state dynamics of the Winter model.

A particle on the half-line behind a delta barrier at x = pi leaks out of
the cavity (0, pi) through imperfect reflections.  This package computes the
complex resonance poles, the exponential and power-law pieces of the decay,
and the renormalized mixing matrix that relates the cavity resonances to the
eigenstates of a closed box.
"""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    CrossingNotFoundError,
    DomainError,
    IllConditionedError,
    OctantViolationError,
    PoleConvergenceError,
    WinterError,
)
from .evolution import (
    TimeSeries,
    WaveField,
    asymptotic_field,
    cavity_norm,
    direct_field,
    exponential_field,
    integrand_p,
    pole_wavefunction,
    power_field,
    psi_direct,
    psi_exponential,
    psi_power_asym,
    psi_power_quad,
    resonance_exponential_norm,
    resonance_term_norm,
)
from .mixing import (
    IndexMatrix,
    RotatedState,
    U_inverse,
    U_truncated,
    V2_entrywise,
    V_order,
    Z_exact,
    Z_order,
    counter_rotate,
    diagonal_evolution_check,
    exponentiation_gap,
    matrix_A,
    matrix_A_squared_closed,
    matrix_AH,
    matrix_H,
    mixing_V_exact,
    rotated_state_closed_form,
    series_identities_check,
)
from .poles import (
    Pole,
    PoleTable,
    find_pole,
    freq_pert,
    pole_seed,
    pole_table,
    width_pert,
)
from .spectrum import EigenSample, ab_product, coef_a, coef_b, coef_b_dk, eigenfunction

__all__ = [
    "AccuracyError",
    "CrossingNotFoundError",
    "DomainError",
    "EigenSample",
    "IllConditionedError",
    "IndexMatrix",
    "OctantViolationError",
    "Pole",
    "PoleConvergenceError",
    "PoleTable",
    "RotatedState",
    "TimeSeries",
    "U_inverse",
    "U_truncated",
    "V2_entrywise",
    "V_order",
    "WaveField",
    "WinterError",
    "Z_exact",
    "Z_order",
    "ab_product",
    "asymptotic_field",
    "cavity_norm",
    "coef_a",
    "coef_b",
    "coef_b_dk",
    "counter_rotate",
    "diagonal_evolution_check",
    "direct_field",
    "eigenfunction",
    "exponential_field",
    "exponentiation_gap",
    "find_pole",
    "freq_pert",
    "integrand_p",
    "matrix_A",
    "matrix_AH",
    "matrix_A_squared_closed",
    "matrix_H",
    "mixing_V_exact",
    "pole_seed",
    "pole_table",
    "pole_wavefunction",
    "power_field",
    "psi_direct",
    "psi_exponential",
    "psi_power_asym",
    "psi_power_quad",
    "resonance_exponential_norm",
    "resonance_term_norm",
    "rotated_state_closed_form",
    "series_identities_check",
    "width_pert",
]
