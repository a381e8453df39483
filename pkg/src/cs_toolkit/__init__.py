"""Compressive spectrum sensing toolkit.

Sparse signal models, structured sensing matrices with FFT-backed operators,
recovery solvers (basis pursuit, OMP, CoSaMP, Bayesian, one-bit BIHT),
narrowband detectors, blind eigenvalue SNR estimation, and a reproducible
Monte-Carlo experiment harness with CSV/JSON artifacts.
"""

from .errors import IllConditionedError
from .signals import (
    MetricBundle,
    NoisySignal,
    PilotSignal,
    SparseSignal,
    add_awgn,
    apply_basis,
    evaluate_metrics,
    gen_pilot_bpsk,
    gen_pilot_qpsk,
    gen_sparse_signal,
)
from .matrices import (
    MeasurementVector,
    SensingMatrix,
    build_matrix,
    compress,
    mutual_coherence,
    required_measurements,
    rip_estimate,
)
from .recovery import (
    BayesOpts,
    BayesianResult,
    RecoveryResult,
    SignVector,
    SolverOpts,
    basis_pursuit,
    bayesian_recover,
    biht_recover,
    cosamp,
    omp,
    one_bit_quantize,
)
from .detectors import (
    IDLE,
    OCCUPIED,
    DetectionOutcome,
    RocPoint,
    WaveletOpts,
    autocorr_detect,
    closed_form_roc,
    compressive_detect,
    energy_detect,
    energy_threshold,
    euclid_detect,
    matched_filter_detect,
    quiet_time_threshold,
    wavelet_detect,
)
from .snr import SnrEstimate, estimate_snr, mdl_order, mp_fit, pso_tune
from .harness import (
    BandPlan,
    ExperimentConfig,
    OccupancyReport,
    PdPfaCurve,
    RecoveryReport,
    TrafficModel,
    default_band_plan,
    run_detection_mc,
    run_recovery_mc,
    run_scan_sim,
)
from .io import (
    RunManifest,
    config_hash,
    load_config,
    matrix_descriptor,
    matrix_from_descriptor,
    read_report,
    save_config,
    serialize_report,
    write_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "IllConditionedError",
    "SparseSignal", "PilotSignal", "NoisySignal", "MetricBundle",
    "gen_sparse_signal", "gen_pilot_qpsk", "gen_pilot_bpsk", "add_awgn",
    "apply_basis", "evaluate_metrics",
    "SensingMatrix", "MeasurementVector", "build_matrix", "compress",
    "mutual_coherence", "rip_estimate", "required_measurements",
    "SolverOpts", "BayesOpts", "RecoveryResult", "BayesianResult", "SignVector",
    "basis_pursuit", "omp", "cosamp", "bayesian_recover", "one_bit_quantize",
    "biht_recover",
    "OCCUPIED", "IDLE", "DetectionOutcome", "RocPoint", "WaveletOpts",
    "energy_detect", "energy_threshold", "closed_form_roc", "autocorr_detect",
    "euclid_detect", "wavelet_detect", "matched_filter_detect",
    "quiet_time_threshold", "compressive_detect",
    "SnrEstimate", "estimate_snr", "mdl_order", "mp_fit", "pso_tune",
    "ExperimentConfig", "PdPfaCurve", "RecoveryReport", "BandPlan",
    "TrafficModel", "OccupancyReport", "run_detection_mc", "run_recovery_mc",
    "run_scan_sim", "default_band_plan",
    "RunManifest", "config_hash", "load_config", "save_config",
    "serialize_report", "read_report", "matrix_descriptor",
    "matrix_from_descriptor", "write_manifest",
]
