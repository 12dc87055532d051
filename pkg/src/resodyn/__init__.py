"""Resonance dynamics of N-level open quantum systems in thermal boson baths.

Computes level shift operators per Bohr frequency, their complex eigenvalues
(resonance energies), reduced-density-matrix trajectories, decoherence and
thermalization rates, equilibrium corrections, and register constructions,
cross-validated against the exactly solvable energy-conserving model.
"""

from .dephasing import (
    DephasingModel,
    asymptotic_generator,
    discrete_mode_oracle,
    exact_trajectory,
    full_decoherence,
    gamma_decoherence,
    gamma_infinity,
    rate_limit_check,
    s_phase,
)
from .dynamics import (
    ObservableEvolution,
    RateSummary,
    ResonanceDynamics,
    ResonanceExpansion,
    Trajectory,
    amplitude,
    rates,
)
from .equilibrium import EquilibriumReport, equilibrium_offdiagonal_qubit, gibbs_reduced
from .errors import (
    DegeneracyError,
    DivergentIntegralError,
    InfiniteRateError,
    InvalidStateError,
    NonSemisimpleError,
    NumericalError,
    QuadratureError,
    ResodynError,
    SignViolationError,
    ValidationError,
)
from .lso import (
    BohrFrequency,
    LevelShiftOperator,
    ResonanceMode,
    ResonanceSet,
    bohr_frequencies,
    level_shift,
    level_shift_qubit_closed,
    lso_eigensystem,
    resonance_energies,
)
from .model import (
    DensityMatrix,
    Observable,
    SpinBosonParameters,
    SystemSpec,
    SystemVector,
    ThermalConfig,
    commutant_factor,
    coupling_split,
    gibbs_vector,
    gibbs_weights,
    gns_vector,
    spin_boson_map,
)
from .register import (
    CoherentSubspaceReport,
    CollectiveRegister,
    IndependentRegisterTrajectory,
    RegisterSpec,
    coherent_subspace_report,
    collective_system,
    independent_register_trajectory,
)
from .spectral import (
    AnalyticityReport,
    CorrelationSet,
    FormFactor,
    analyticity_check,
    g_omega_inverse,
    line_density,
    pv_coth,
    sokhotski,
    thermal_form_factor,
    xi,
    xi_lorentzian,
    xi_lorentzian_richardson,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
