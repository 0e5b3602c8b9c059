"""Multi-robot coverage path planning on 4-connected weighted grids."""
from .baselines import single_tree_split, vor
from .estc import EstcOptions, estc
from .grid import GridGraph, Instance, Solution, makespan, path_cost, verify_solution
from .local_search import LsParams, ls_mcpp
from .mutation import generate_mutation

__version__ = "0.1.0"
