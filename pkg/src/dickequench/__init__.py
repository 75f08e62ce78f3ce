"""Sudden-quench dynamics of the Dicke model and its effective field reductions."""

from .errors import (
    ConfigError,
    DickeError,
    NumericalFailure,
    PositivityWarning,
    RegimeError,
    SpaceMismatchError,
    SubcriticalCouplingError,
    TruncationLossError,
)
from .fock_algebra import (
    DensityOperator,
    FockSpace,
    Operator,
    ProductSpace,
    SpinSpace,
    StateVector,
    coherent_state,
    create,
    destroy,
    fock_state,
    number_operator,
    quadratures,
    spin_operators,
    tensor,
    vacuum_spin_down,
)
from .hamiltonians import (
    ModelKind,
    ModelParams,
    build_hamiltonian,
    critical_coupling,
    critical_photon_number,
    critical_position,
    critical_time,
    critical_time_exact,
    double_well_potential,
    effective_frequency,
    parity_operator,
    polaron_transform,
    well_minima,
)
from .observables import (
    FrameSpec,
    HusimiFrame,
    husimi_q,
    invariance_overlap,
    photon_number,
    quadrature_variances,
    reduce_field,
    spin_expectations,
)
from .propagators import (
    CovarianceState,
    EchoTrace,
    TimeGrid,
    Trajectory,
    echo_overlap,
    evolve_lindblad,
    evolve_unitary,
    gaussian_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "build_hamiltonian",
    "coherent_state",
    "ConfigError",
    "CovarianceState",
    "create",
    "critical_coupling",
    "critical_photon_number",
    "critical_position",
    "critical_time",
    "critical_time_exact",
    "DensityOperator",
    "destroy",
    "DickeError",
    "double_well_potential",
    "echo_overlap",
    "EchoTrace",
    "effective_frequency",
    "evolve_lindblad",
    "evolve_unitary",
    "fock_state",
    "FockSpace",
    "FrameSpec",
    "gaussian_oracle",
    "husimi_q",
    "HusimiFrame",
    "invariance_overlap",
    "ModelKind",
    "ModelParams",
    "number_operator",
    "NumericalFailure",
    "Operator",
    "parity_operator",
    "photon_number",
    "polaron_transform",
    "PositivityWarning",
    "ProductSpace",
    "quadrature_variances",
    "quadratures",
    "reduce_field",
    "RegimeError",
    "SpaceMismatchError",
    "spin_expectations",
    "spin_operators",
    "SpinSpace",
    "StateVector",
    "SubcriticalCouplingError",
    "tensor",
    "TimeGrid",
    "Trajectory",
    "TruncationLossError",
    "vacuum_spin_down",
    "well_minima",
]
