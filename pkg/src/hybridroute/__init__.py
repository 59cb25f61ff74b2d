"""Multi-objective order routing across heterogeneous AMM pools."""

from .amm import (BalancerPool, CurvePool, DodoPool, KyberPool, Pool, SwapResult, Token, UniV2Pool, UniV3Pool,
                  VenueKind, pool_from_dict, spot_price, swap_exact_in)
from .baselines import deterministic_solve, simplex_grid_search, water_fill_split
from .errors import RoutingError
from .graph import DexGraph, build_graph, enumerate_paths, find_negative_cycles, has_negative_cycle
from .hybrid import HybridConfig, HybridResult, solve_hybrid
from .indicators import hypervolume
from .instance import Instance, Order
from .nsga2 import GAConfig, GAResult, crowding_distance, evolve, non_dominated_sort
from .objectives import Evaluator, GasModel, ObjectiveVector, RouteGenome, dominates

__version__ = "0.1.0"
