"""Online nonlinear Neyman-Pearson classification.

NP-NN is a single-hidden-layer network whose hidden layer starts as random
Fourier features of the rbf kernel; it is trained one sample at a time by
SGD on a Lagrangian objective that keeps the false positive rate near a
user-set target.  OLNP is the linear counterpart.
"""

__version__ = "0.1.0"

from .core import FprWindow, Hyperparams, LabeledSample, RunTrace, sigmoid_loss  # noqa: E402
from .data import Dataset, Normalizer, gen_ring, gen_two_gaussians, load_delimited, load_sparse  # noqa: E402
from .evaluate import np_score, protocol_run, rates_from_decisions, roc_over_grid  # noqa: E402
from .rff import FrequencyBank, kernel_estimate, sample_bank, transform  # noqa: E402

__all__ = [
    "FprWindow", "Hyperparams", "LabeledSample", "RunTrace", "sigmoid_loss",
    "Dataset", "Normalizer", "gen_ring", "gen_two_gaussians", "load_delimited", "load_sparse",
    "np_score", "protocol_run", "rates_from_decisions", "roc_over_grid",
    "FrequencyBank", "kernel_estimate", "sample_bank", "transform",
]
