"""qlan: simulation and analysis for a three-node flex-grid entanglement network.

The package models an eight-channel polarization-entangled source feeding a
wavelength-selective switch that provisions channel pairs to node pairs,
GPS-synchronized timetaggers at the nodes, and the full analysis chain from
raw timetags to per-link entanglement metrics (fidelity, log-negativity,
ebits/s) and remote state preparation.
"""

from .allocation import (ChannelAllocation, LinkBudget, link_id, optimize,
                         predicted_link_rates, validate, werner_log_negativity)
from .coincidence import (CoincidenceResult, correlate, count_coincidences,
                          delay_histogram, estimate_accidentals, find_offset,
                          subtracted_counts)
from .config import (ExperimentConfig, default_config, load_config,
                     parse_config, stable_seed)
from .experiment import (calibrate_link, run_experiment, run_link,
                         run_rsp_task, simulate_link_setting)
from .polarization import (AnalyzerSetting, analyzer_projector, analyzer_state,
                           coincidence_probability, hwp_jones, label_setting,
                           qwp_jones, solve_compensation_x)
from .quantum import (EntanglementSummary, ebit_rate, fidelity_with_pure,
                      hermitian_eigenvalues, ket_phi_minus, ket_phi_plus,
                      ket_psi_minus, ket_psi_plus, kron, log_negativity,
                      mixed_state_fidelity, partial_trace, partial_transpose,
                      pure_state_density, trace_norm, werner_state)
from .rsp import RspTask, rsp_predict
from .source import (ChannelGrid, ChannelPairSpec, car, channel_frequencies,
                     channel_state, jsi_matrix, visibility_from_fidelity)
from .timetag import (ClockModel, DetectorModel, GateSpec, TimetagStream,
                      apply_dead_time, read_stream, sample_clock_offset,
                      sample_clock_offsets, simulate_link, write_stream)
from .tomography import (LinkReport, MeasurementRecord, PosteriorEnsemble,
                         log_likelihood, qubit_tomography, sample_posterior,
                         summarize_link)

__version__ = "0.1.0"
