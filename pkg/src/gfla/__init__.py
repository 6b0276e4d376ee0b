"""Grant-free mMTC uplink simulator with learned link adaptation.

Machine-type devices pick radio state, modulation order, transmit power and
subcarrier every TTI under rate-adaptive listen-before-talk contention,
Gauss-Markov fading and finite buffers. Policies are recurrent actor-critic
networks trained with clipped-surrogate updates under three distribution
schemes (independent learners, distributed actors with a central critic,
centralized learning with distributed inference), benchmarked against a
reactive-HARQ power-boosting baseline.
"""

from .channel import (FadingState, Topology, bit_error_prob,
                      correlation_coefficient, interference_power,
                      packet_loss_prob, step_fading)
from .config import ConfigError, RealizationConfig, parse_config
from .engine import Realization, run_campaign, run_realization
from .mac import (ContentionConfig, PacketTiming, cw_min, draw_backoff,
                  harq_feedback, packets_per_tti, resolve_contention)
from .neural import (AdamState, NetworkDims, WeightBundle, adam_step,
                     clip_gradients, count_weights, deserialize_weights,
                     forward, serialize_weights)
from .posg import (ActionSpace, CostParams, average_cost, global_cost,
                   local_cost, overflow_penalty)
from .ppo import (PPOHyperparams, RolloutBuffer, clipped_surrogate,
                  compute_returns_and_advantages, ppo_update)
from .special import bessel_j0, erfc
from .traffic import BufferState, realize_goodput, sample_arrivals, update_buffer

__version__ = "0.1.0"
