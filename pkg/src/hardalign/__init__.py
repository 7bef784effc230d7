"""Hard monotonic alignment: transition distributions, exact marginals and search."""
from .decoding import (
    DecodeResult,
    Distribution,
    Mode,
    SearchConfig,
    beam_decode,
    decode,
    greedy_decode,
    greedy_step,
)
from .distributions import (
    EMIT,
    SHIFT,
    BinConcreteParams,
    NoiseSource,
    TransitionAction,
    binconcrete_log_density,
    binconcrete_sample,
    binconcrete_sample_grad,
    discretize,
    emit_prob,
    sample_bernoulli,
    sample_logistic,
    sigmoid_temp,
)
from .errors import InfeasibleError, ValidationError
from .lattice import (
    LatticeInstance,
    TransitionLogits,
    enumerate_paths,
    path_log_prob,
    transition_log_prob,
    validate_path,
)
from .likelihood import brute_force_marginal, forward_marginal, negative_log_likelihood

__version__ = "0.1.0"
