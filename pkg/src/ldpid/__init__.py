"""Long-memory discrete-time PID (LDPID) design workbench."""
from .controller import (ControllerState, DiscreteController, LdpidController, cost_per_step,
                         from_fopid, ldpid_freq, step, tustin_pid)
from .fracseries import (BackwardDiffWeights, CoefficientSeries, SeriesKind, backward_diff_weights,
                         expand_fk, prewarp_alpha)
from .lti import (ContinuousFopid, ContinuousPlant, FrequencyResponse, fopid_freq, loop_response,
                  margins, plant_freq, routh_stable, sensitivity_bounds_check)
from .sim import Amigo2Dof, SimConfig, StepInput, StepMetrics, StepTrace, metrics, simulate, simulate_2dof_amigo
from .tuning import TuningResult, TuningSpec, optimizer, tune_frequency, tune_integral

__version__ = "0.1.0"
