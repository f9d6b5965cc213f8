"""Numerical laboratory for global conservative solutions of a coupled
peakon-bearing wave system, posed in characteristic coordinates.

The pipeline: closed-form data on the line are pulled back through the
characteristic relabeling (initial), time-stepped with the nonlocal
source terms (sources, evolution), pushed forward to physical fields
and measures (reconstruct), scanned for angle-level events with local
cancellation checks (breaking), and compared in a shift-invariant
Finsler-type distance (metric).
"""

from .breaking import (CancellationCheck, CancellationReport, SingularPoint,
                       classify, find_crossings, fit_exponent,
                       max_accessible_y_derivative, min_two_point_exponent,
                       synthetic_case_state, verify_cancellations)
from .config import ScenarioConfig, load_config, parse_config, quick_override
from .errors import (AnalysisError, ConfigError, ContractError, EvolveAbort,
                     NovlabError, NumericalAbort, QueryError)
from .evolution import (ConservedSet, OmegaBounds, StateDeriv, Trajectory,
                        check_omega, conserved, evolve, rhs, rk4_step,
                        y_formula_gap)
from .grid import (Grid, fd_derivative, fd_truncation_orders, integrate,
                   make_grid, prefix_integral)
from .initial import (EulerDatum, TransformedState, builtin_datum,
                      direct_transform, invert_y0, pair_datum,
                      transform_with_map, zero_datum)
from .metric import (NormInfo, PathOfStates, RatioRow, ShiftField,
                     TangentVector, distance_upper, lipschitz_experiment,
                     path_length, phi_values, straight_line_path,
                     tangent_norm, tangent_norm_info, z_shift, zero_tangent)
from .reconstruct import (EulerField, conserved_euler, crest_position,
                          euler_fields, measure_interval, sample_at)
from .sources import (KernelAccumulator, SourceFields, assemble_sources,
                      exp_convolve, exp_convolve_bruteforce,
                      half_angle_factors, kernel_accumulator)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
