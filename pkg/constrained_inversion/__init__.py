from .stats import GaussianSpec
from .model import (
    ForwardModel,
    SyntheticModel,
    ObservationOperator,
    MinimumGroup,
    synthetic_operator,
    classify_minimum,
    cost_function,
    reconstruct_output,
)
from .constraints import (
    ConstraintKind,
    ConstraintTerm,
    ConstraintSet,
    register_constraint,
    get_constraint,
)
from .exact import PriorSpec, DataSpec, WeightedSamples, ExactEstimate
from .enkf import Ensemble, EnkfConfig, EnkfResult, IterationTrace
from .config import RunConfig, parse_config, load_config, dump_config
from .schema import ConfigParam
from .after_checks import AbstractAfterCheck
from .presets import preset, preset_names
from .cli import RunResult, run_from_config
