"""Two coupled active rotators with windowed excitatory coupling.

Modules: :mod:`~hco.model` (vector field and symmetries),
:mod:`~hco.integrator` (adaptive integration and spike events),
:mod:`~hco.equilibria`, :mod:`~hco.cycles`, :mod:`~hco.portrait`
(separatrices and saddle connections), :mod:`~hco.regimes` (regime labels
and parameter sweeps), :mod:`~hco.properties` and :mod:`~hco.cli`.
"""
from .cycles import (BranchInvalid, IntegralSingular, LimitCycle, PhaseClass, Undecided,
                     antiphase_condition, antiphase_condition_closed_form,
                     antiphase_condition_quadrature,
                     detect_cycle, find_cycles, floquet_multiplier, scan_return_map)
from .equilibria import (Equilibrium, EquilibriumCensus, Kind, census, classify_equilibrium,
                         find_equilibria)
from .integrator import (Event, EventKind, IntegratorSettings, StepSizeUnderflow, Trajectory,
                         detect_events, integrate)
from .model import (Params, TorusState, eval_coupling, jacobian, parameter_mirror,
                    reversibility_defect, vector_field)
from .portrait import (BracketInvalid, ConnectionGap, NoApproach, Separatrix, connection_gap,
                       locate_connection, trace_separatrices)
from .regimes import (Label, RegimeReport, SweepGrid, classify_regime, locate_boundary,
                      sweep_plane, symmetry_fold)

__version__ = "0.1.0"
