"""Age-of-information analysis for an energy-harvesting status-update transmitter.

Closed forms for FCFS and LCFS with instantaneous service, a general penalty
engine, large-buffer asymptotics, a matrix-geometric solver for exponential
service, and a discrete-event simulator used as an oracle.
"""
from .analysis import analyze_point, engine_penalty, theorem_penalty, update_stats
from .asymptotics import asymptotic_limit, asymptotic_penalty, battery_decay_rate
from .errors import (AoIError, DegenerateArgument, DegenerateNullSpace, Infeasible,
                     InvalidCapacity, InvalidParams, InvalidRate, MgfDiverges,
                     ModeUnsupported, NegativePenalty, NonIntegrable, NotConverged,
                     PenaltyDiverges, QuadratureFailed, UnstableSystem, UnsupportedPenalty)
from .fcfs import (fcfs_avg_aoi, fcfs_avg_exp_penalty, fcfs_interarrival_cdf, fcfs_peak_cdf,
                   fcfs_sojourn_cdf, fcfs_stats, fcfs_valid_rate, fcfs_violation_prob,
                   min_battery_for_aoi)
from .lcfs import (lcfs_avg_aoi, lcfs_avg_exp_penalty, lcfs_peak_cdf, lcfs_sojourn_cdf,
                   lcfs_stats, lcfs_valid_rate, lcfs_violation_prob)
from .model import (Custom, Discipline, Exponential, ExpPolyDist, Linear, Penalty,
                    PenaltySpec, Step, SystemParams, UpdateProcessStats, parse_penalty,
                    validate_params)
from .penalty import average_penalty, avg_aoi_from_moments, avg_peak_from_stats, expected_G
from .qbd import (QbdModel, QbdSolution, build_qbd, qbd_avg_peak_aoi, qbd_mean_sojourn,
                  solve_boundary, solve_qbd, solve_R)
from .sim import SimConfig, SimResult, kolmogorov_distance, run_sim

__version__ = "0.1.0"
