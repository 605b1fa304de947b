"""QoS-driven power allocation for uplink NOMA visual sensors.

Devices stream scalable video to one base station over a shared channel
decoded by successive interference cancellation. The package picks transmit
powers that maximize the average delivered PSNR under per-device power caps
and energy-efficiency floors, using polyblock outer approximation, and
compares the result against a sum-rate NOMA baseline and a time-division
baseline.
"""

from .channel import ChannelParams, dbm_to_mw, mw_to_dbm, noise_power_mw, path_loss_db, sample_channels
from .noma import Device, UplinkScenario, energy_efficiency, is_in_g, is_in_h, powers_from_sinr, rate, sinr
from .oracle import enumerate_layer_optimum, grid_search
from .poa import Polyblock, SolveOutcome, SolverConfig, solve
from .qos import Frame, SvcLayerTable, average_qos, qos_of_rate, synth_table
from .schemes import Allocation, solve_noma_mt, solve_oma, solve_proposed

__version__ = "0.1.0"
