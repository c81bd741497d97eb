__version__ = "0.1.0"

from .bailout import Allocation, BailoutProblem, SolverReport, brute_force, evaluate_allocation, solve_relaxation
from .fairness import FairnessSpec, price_of_fairness, solve_fair_relaxation
from .greedy import greedy
from .heuristics import heuristic
from .network import FinancialNetwork, build_network, clear_fixed_point, clear_lp
from .objectives import Objective, make_objective
from .rounding import round_dependent, round_independent
from .shocks import SeededRng, ShockDistribution
