"""Dissipative spin-battery simulator.

Models an N-cell spin-1/2 battery coupled to local or spatially correlated
dephasing / amplitude-damping reservoirs, integrates the GKSL master
equation, and computes work-extraction figures of merit (energy, ergotropy,
stored energy, extractable fraction, energy-basis l1-coherence).
"""

__version__ = "0.1.0"

from .closed_forms import (
    DephasingTwoQubitParams,
    correlated_dephasing_energy,
    correlated_dephasing_ergotropy_limit,
    correlated_dephasing_state,
    gamma_nn_eigenvalues,
    local_ad_state,
    local_dephasing_state,
)
from .dissipation import (
    CptpReport,
    CptpViolationError,
    GammaMatrix,
    NoiseSpec,
    build_gamma,
    dissipator_apply,
    jump_operators,
    require_cptp,
    validate_cptp,
)
from .evolution import (
    EvolutionConfig,
    StateInvariantError,
    SteadyStateReport,
    default_dt_internal,
    evolve,
    evolve_stream,
    liouvillian_matrix,
    liouvillian_rhs,
    resolve_time_grid,
    steady_state_probe,
)
from .models import (
    BatteryModel,
    DegenerateGroundStateError,
    EffectiveCoupling,
    all_pair_bonds,
    battery_hamiltonian,
    effective_hamiltonian,
    field_product_eigenbasis,
    ground_state,
    product_minus_state,
    ring_bonds,
)
from .observables import (
    ErgotropyReport,
    coherence_l1_energy_basis,
    energy_eigenbasis,
    ergotropy,
    ergotropy_bruteforce_oracle,
    extraction_ratio,
)
from .operators import (
    anticommutator,
    commutator,
    dagger,
    embed,
    expectation,
    is_hermitian,
    kron_all,
    pauli,
)
from .scenarios import (
    CompareReport,
    ConfigError,
    GridMismatchError,
    PRESETS,
    ScenarioConfig,
    ScenarioResult,
    compare_runs,
    config_from_mapping,
    get_preset,
    list_presets,
    load_config,
    parse_config_text,
    read_run_csv,
    run_scenario,
    validate_config,
)

__all__ = [
    "BatteryModel",
    "CompareReport",
    "ConfigError",
    "CptpReport",
    "CptpViolationError",
    "DegenerateGroundStateError",
    "DephasingTwoQubitParams",
    "EffectiveCoupling",
    "ErgotropyReport",
    "EvolutionConfig",
    "GammaMatrix",
    "GridMismatchError",
    "NoiseSpec",
    "PRESETS",
    "ScenarioConfig",
    "ScenarioResult",
    "StateInvariantError",
    "SteadyStateReport",
    "all_pair_bonds",
    "anticommutator",
    "battery_hamiltonian",
    "build_gamma",
    "coherence_l1_energy_basis",
    "commutator",
    "compare_runs",
    "config_from_mapping",
    "correlated_dephasing_energy",
    "correlated_dephasing_ergotropy_limit",
    "correlated_dephasing_state",
    "dagger",
    "default_dt_internal",
    "dissipator_apply",
    "effective_hamiltonian",
    "embed",
    "energy_eigenbasis",
    "ergotropy",
    "ergotropy_bruteforce_oracle",
    "evolve",
    "evolve_stream",
    "expectation",
    "extraction_ratio",
    "field_product_eigenbasis",
    "gamma_nn_eigenvalues",
    "get_preset",
    "ground_state",
    "is_hermitian",
    "jump_operators",
    "kron_all",
    "liouvillian_matrix",
    "liouvillian_rhs",
    "list_presets",
    "load_config",
    "local_ad_state",
    "local_dephasing_state",
    "parse_config_text",
    "pauli",
    "product_minus_state",
    "read_run_csv",
    "require_cptp",
    "resolve_time_grid",
    "ring_bonds",
    "run_scenario",
    "steady_state_probe",
    "validate_cptp",
    "__version__",
]
