"""Competing SIS epidemics on overlaid graphs: simulation and classification."""

from .analysis import (CoexistenceBracket, KamkeReport, MonotoneReport,
                       Outcome, TrichotomyVerdict, bracket_coexistence,
                       check_kamke, check_monotone_flow, classify,
                       southeast_le, southeast_ll, southeast_lt,
                       verify_against_simulation)
from .dynamics import (BiVirusSystem, FixedPointResult, StateD,
                       TerminalReason, Trajectory, bivirus_field,
                       bivirus_jacobian, integrate, single_virus_fixed_point)
from .errors import (AssumptionError, BivirusError, BracketError, DomainError,
                     GraphFormatError, SpectralError, SweepError)
from .graph import (Graph, SpectralResult, complete_graph, cycle_graph,
                    degrees, load_edge_list, path_graph, pf_eigen, star_graph,
                    wheel_graph)
from .kernels import BACKEND, NUMBA_ENABLED
from .rates import (AssumptionReport, DFRReport, LinearInfection,
                    LinearRecovery, LogInfection, PolyRecovery, RateModel,
                    check_assumptions, check_dfr, parse_rate_pair)
from .sweep import (RegionGrid, default_tau_range, region_label, sweep_linear,
                    threshold_curves)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
