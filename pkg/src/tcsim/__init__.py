"""Fault-tolerance Monte Carlo for 3D topological cluster states with heralded bond loss."""

from tcsim.damage import (
    CorrelationSurface,
    DamageReport,
    NoiseParams,
    PercolationError,
    Scheme,
    build_correlation_surface,
    form_superchecks,
    map_failures,
    sample_bond_failures,
    sample_damage,
)
from tcsim.decoder import (
    FastDecoder,
    Matching,
    MeasurementErrors,
    SyndromeGraph,
    TrialOutcome,
    build_matching_graph,
    decode_lattice,
    extract_syndrome,
    mwpm,
    sample_measurement_errors,
)
from tcsim.experiment import (
    PointEstimate,
    SweepSpec,
    ThresholdEstimate,
    estimate_threshold,
    fit_threshold_curve,
    percolation_limit_analytic,
    run_batch,
    run_trial,
    wilson_interval,
)
from tcsim.lattice import (
    DUAL,
    PRIMAL,
    Bond,
    Cube,
    LatticeGeometry,
    Site,
    build_lattice,
    code_distance,
    neighbors,
)
from tcsim.oracle import OracleConfig, exact_small_logical_rate, exhaustive_mwpm

__version__ = "0.1.0"
