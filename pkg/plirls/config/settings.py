# Non-sensitive settings
from typing import List

# Environment variables read by Config (process environment wins over app/config/.env)
RECOGNISED_ENV_VARS: List[str] = ['PLIRLS_THREADS', 'PLIRLS_LOG_DIR', 'PLIRLS_LOG_LEVEL']

# App Settings
APP_NAME: str = 'PL-IRLS solver'
APP_VERSION: str = '1.0.0'
CONFIG_SCHEMA_VERSION: int = 1

# Batch / logging
PLIRLS_THREADS: int = 1
PLIRLS_LOG_DIR: str = ''
PLIRLS_LOG_LEVEL: str = 'INFO'

# Solver defaults
DEFAULT_GAMMA: float = 1.1
DEFAULT_EPSILON: float = 0.1
DEFAULT_MAX_ITERS: int = 100_000
STOP_TOL_FACTOR: float = 1e-8
TAU_INITIAL_FACTOR: float = 10.0
TAU_DOUBLING_CAP: int = 60
INVARIANT_SLACK: float = 1e-9
WEIGHT_BOX_RTOL: float = 1e-12

# Operator norms
POWER_ITERATION_MAX: int = 200
POWER_ITERATION_TOL: float = 1e-10
POWER_ITERATION_SAFETY: float = 1.01
DENSE_NORM_LIMIT: int = 500
PROX_SVD_LIMIT: int = 1000

# Trace files
TRACE_COLUMNS: List[str] = ['k', 'objective', 'step_norm', 'w_norm', 'c_k', 'rho1_witness', 'rho2_witness']
MULTIBLOCK_TRACE_COLUMNS: List[str] = TRACE_COLUMNS + ['step_norm_X', 'step_norm_Y']
