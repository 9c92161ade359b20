"""Online non-stochastic control with disturbance-action policies."""

from .constants import ControlConstants, control_constants, control_meta_rate, control_step_pool
from .controller import (KINDS, ControlRun, ControllerError, constants_for,
                         dac_comparator_from_gains, run_controller, simulate_dac,
                         simulate_linear_policy)
from .costs import QuadraticCost
from .dac import (TruncatedLossMaps, dac_action, state_via_psi, surrogate_action_v,
                  surrogate_state_y, transfer_matrix_psi, truncated_loss,
                  unary_truncated_gradient, unary_truncated_value)
from .system import (LtvSystem, StabilityError, lqr_gain, ltv_step, recover_noise,
                     stability_margins, strong_stability_check)
