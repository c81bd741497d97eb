import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    CLEAR_TOL = float(os.getenv('CLEAR_TOL', 1e-10))  # Absolute fixed-point residual
    CLASSIFY_RTOL = float(os.getenv('CLASSIFY_RTOL', 1e-8))  # Default test: pbar_j < p_j - rtol * max(1, p_j)
    MAX_ITER_FLOOR = int(os.getenv('MAX_ITER_FLOOR', 1000))
    DENSE_LIMIT = int(os.getenv('DENSE_LIMIT', 2000))  # Sparse matrices above this node count
    LP_METHOD = os.getenv('LP_METHOD', 'highs-ds')
    LP_TOL = float(os.getenv('LP_TOL', 1e-10))  # Primal/dual feasibility passed to HiGHS
    AS_EPS = float(os.getenv('AS_EPS', 0.1))  # Accuracy of the augmented absolute solvency objective
    ROUNDING_EPS = float(os.getenv('ROUNDING_EPS', 0.1))  # Simulation accuracy, sets T = ceil(4 ln n / eps^2)
    OVERSPEND_DELTA = float(os.getenv('OVERSPEND_DELTA', 0.01))  # Failure probability inside the overspend bound
    BRUTE_FORCE_CAP = int(os.getenv('BRUTE_FORCE_CAP', 10**6))
    CONDUCTANCE_CAP = int(os.getenv('CONDUCTANCE_CAP', 24))
    FAIR_LP_MAX_N = int(os.getenv('FAIR_LP_MAX_N', 500))
    FAIR_TOL = float(os.getenv('FAIR_TOL', 1e-6))  # Relative, coefficient <= g + tol
    CENTRALITY_MAX_ITER = int(os.getenv('CENTRALITY_MAX_ITER', 2000))
    MAX_WORKERS = int(os.getenv('MAX_WORKERS', os.cpu_count() or 1))
    LOG_FILE = os.getenv('LOG_FILE', 'pybailout.log')
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'WARNING')
    OTLP_ENDPOINT = os.getenv('OTLP_ENDPOINT', '')  # Empty disables export
    RESULTS_DB = os.getenv('RESULTS_DB', '')  # sqlite path, empty disables the store
