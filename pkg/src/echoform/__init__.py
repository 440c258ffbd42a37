"""Photon-echo simulation of inhomogeneously broadened two-level ensembles
driven by spatially non-uniform square pulses."""
from .config import (ConfigError, ConfigErrors, ExperimentSpec, dump_config,
                     load_config, parse_config, read_config, validate_spec)
from .dynamics import (AtomParams, DriveSegment, TwoLevelState,
                       propagate_segment, rk4_oracle)
from .grids import (SpatialProfile, SpectralGrid, build_spatial_profile,
                    build_spectral_grid)
from .sequence import (EchoReport, EnsembleResult, PulseEvent, PulseTimeline,
                       analyze, build_timeline, echo_times, efficiency,
                       emissive_filter, extract_amplitude, simulate_ensemble,
                       simulate_group)
from .theory import (EmissiveWindowParams, FitResult, emissive_window,
                     find_zero_crossings, fit_sin_power, predict_e1,
                     predict_e2)

__version__ = "0.1.0"
