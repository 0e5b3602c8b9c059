"""Turn MCPP paths into conflict-free continuous-time trajectories."""
from .pbs import (PLANNERS, DeconflictFailure, DeconflictResult, DeconflictTimeout, PbsNode,
                  pbs_deconflict)
from .sipp import (POSTPONE, PlannerContext, PlannerTimeout, SippNode, ada_plan, cha_plan,
                   mla_plan, sipp_expand, start_node)
from .trajectory import (INF, Conflict, ReservationError, ReservationTable, State, TrajectoryReport,
                         build_reservation_table, check_conflicts, collapse_repeats, occupancy,
                         preprocess_well_formed, verify_trajectories)
