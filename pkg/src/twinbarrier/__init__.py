"""Wave packets scattering off a pair of rectangular potential barriers."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateDistribution,
    DetectorOutOfGrid,
    EmptyRegion,
    EnergyOutOfRange,
    NoPeaksFound,
    NumericalOverflow,
    ParseError,
    QuadratureNotConverged,
    ResonanceSingularity,
    SingularMatching,
    TwinBarrierError,
    ValidationError,
    WavenumberOutOfRange,
)
from .kinematics import (
    KinematicState,
    PhysicalConfig,
    delay_time,
    hartman_delay_length,
    kinematics_from_energy,
    kinematics_from_wavenumber,
)
from .scattering import (
    ScatteringSolution,
    exact_amplitudes,
    interior_coefficients,
    stationary_wavefunction,
    transfer_matrix_amplitudes,
)
from .series import (
    opaque_amplitudes,
    series_decomposition,
    spm_exit_time,
    spm_peak_spacing,
    transmitted_partial_sum,
    transmitted_series_term,
)
from .wavepacket import (
    ModulationSpec,
    detect_peaks,
    effective_momentum,
    probability_time_series,
    synthesize_packet,
)
from .scenario import ScenarioConfig, config_from_dict, emit_report, load_config, run_scenario
