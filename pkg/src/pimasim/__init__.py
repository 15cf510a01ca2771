"""Simulator for count-scheduled semi-grant-free multiple access.

The core idea: instead of learning which users want to transmit, the base
station only counts them from one superposed symbol, then sizes and deals a
slotted data sub-frame for that count.  The package bundles that scheme
with three baselines (round-robin TDMA, stabilized slotted random access,
and two-step preamble access) under identical traffic and a shared
collision channel, plus the campaign harness reproducing the headline
efficiency / latency / drop / burst-time comparisons.
"""

from .enumeration import (ActivePrior, DecisionRegions, NoiseModel,
                          decision_regions, error_probability, iid_prior,
                          map_estimate, observe, pattern_prior, poisson_prior,
                          uniform_prior)
from .harness import (CampaignConfig, ProtocolEntry, derive_seed, make_rng,
                      rate_per_user_usd, run_campaign, run_point)
from .metrics import MetricsLedger, eccdf
from .protocols import (Cra2Simulator, PimaSimulator, ProtocolConfig,
                        SalohaIidSimulator, SalohaStabilizedSimulator,
                        SlotOutcome, TdmaSimulator, run_cra2_burst,
                        run_pima_burst)
from .scheduling import (FrameSchedule, PermutationPool, build_schedule,
                         efficiency, optimal_dt_slots, optimal_L2_asymptotic,
                         optimal_L2_finite, slot_loads, success_probability)
from .traffic import (Packet, TrafficModel, UserState, active_set,
                      generate_arrivals, make_users, pop_for_transmission,
                      spawn_burst)

__version__ = "0.1.0"
