"""Security impact of DWDM spectral side channels on decoy-state BB84 under
Trojan-horse attack: spectra -> photon budgets -> key rates and distances."""

from .core import (
    FIG6_PARAMS,
    ChannelParams,
    Observables,
    binary_entropy,
    forward_observables,
    glp_key_rate,
    poisson_single_photon_prob,
    transmittance,
)
from .decoy import (
    SinglePhotonBounds,
    apply_distinguishability,
    coherent_trace_distance,
    decoy_bounds,
    e1_upper_bound_no_tha,
    y1_lower_bound,
)
from .exceptions import (
    CoverageError,
    DegenerateDecoyError,
    DomainError,
    DwdmThaError,
    NoOverlapError,
    OrderingError,
    ParameterError,
    SpectrumParseError,
)
from .solver import (
    DistanceMap,
    DistanceScan,
    coherent_distinguishability,
    constant_distinguishability,
    distance_map_over_wavelengths,
    key_rate_at,
    max_secure_distance,
    no_distinguishability,
    rate_curves_sweep,
    scan_distance,
)
from .spectra import (
    IsolationProfile,
    Peak,
    PeakSet,
    Spectrum,
    conversion_fractions,
    detect_peaks,
    isolation_from_pair,
    parse_isolation,
    parse_spectrum,
    synthesize_comb,
    synthesize_lines,
)
from .tha import ThaBudget, budget_from_fraction, compute_budget, phase_error_with_tha, quantum_coin_delta

__version__ = "0.1.0"
