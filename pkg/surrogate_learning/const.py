"""Constants for the surrogate learning toolkit."""

import enum

DOMAIN = "surrogate_learning"

# Predictor outputs and class conditionals are clamped to [eps, 1 - eps].
DEFAULT_CLAMP_EPSILON = 1e-6
MAX_CLAMP_EPSILON = 1e-3

# Gradient descent defaults for the logistic base predictor.
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_L2_PENALTY = 1e-4
DEFAULT_MAX_EPOCHS = 5000
DEFAULT_TOLERANCE = 1e-7
DEFAULT_SEED = 7

DEFAULT_HISTOGRAM_BINS = 64

# Example class-conditional densities of x2: Gaussian for y=0, Laplace for y=1.
DEFAULT_GAUSSIAN_MEAN = -1.0
DEFAULT_GAUSSIAN_STD = 1.0
DEFAULT_LAPLACE_LOCATION = 1.0
DEFAULT_LAPLACE_SCALE = 1.0

# Joint P(x1, y) tables ordered (x1=0,y=0), (x1=0,y=1), (x1=1,y=0), (x1=1,y=1).
EXAMPLE1_JOINT_X1_Y = (0.3, 0.1, 0.2, 0.4)
EXAMPLE2_JOINT_X1_Y = (0.3, 0.0, 0.2, 0.5)

# The discretised grid covers [-6 sigma, 6 sigma] around zero.
GRID_HALF_WIDTH_SIGMAS = 6.0

DEFAULT_MIN_MARGIN = 0.05

# Synthetic record-linkage corpus.
DEFAULT_N_MASTER = 10_000
DEFAULT_N_UPDATE = 500
DEFAULT_MATCH_FRACTION = 0.9
DEFAULT_YEAR_RANGE = (1950, 2005)
DEFAULT_NAME_POOL_SIZE = 1000

DEFAULT_HOLDOUT_FRACTION = 0.2
DEFAULT_DECISION_THRESHOLD = 0.5
DEFAULT_BASELINE_FRACTIONS = (0.5, 0.2)

DEFAULT_SWEEP_GRID = 21

# Config document keys.
CONF_EXPERIMENT = "experiment"
CONF_SEED = "seed"
CONF_CORE = "core"
CONF_PREDICTOR = "predictor"
CONF_DATAGEN = "datagen"
CONF_LINKAGE = "linkage"
CONF_EVAL = "eval"

# Exit codes for the command line.
EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_ACCEPTANCE_FAILURE = 2
EXIT_IO_ERROR = 3


class Mode(enum.Enum):
    """How the surrogate feature relates to the class."""

    GENERAL = "general"
    HUNDRED_PERCENT_RECALL = "hundred_percent_recall"


class Objective(enum.Enum):
    """Objective maximised when choosing a decision threshold."""

    F1 = "f1"
    ACCURACY = "accuracy"


class SurrogateField(enum.Enum):
    """The record field whose equality serves as the surrogate label x1."""

    GRAD_YEAR = "grad_year"
    MIDDLE_INITIAL = "middle_initial"


class PredictorKind(enum.Enum):
    """Base learners available for estimating P(x1=1|x2)."""

    LOGISTIC = "logistic"
    HISTOGRAM = "histogram"


class ExperimentName(enum.Enum):
    """Experiments that can be run from a config document."""

    EXAMPLE1_POSTERIOR = "example1-posterior"
    EXAMPLE2_SCORING = "example2-scoring"
    CI_ORACLE_FUZZ = "ci-oracle-fuzz"
    LINKAGE_SYNTHETIC = "linkage-synthetic"
    LINKAGE_BASELINE_COMPARISON = "linkage-baseline-comparison"
