"""prior-forge: prior elicitation from judgements about observable data.

The package turns an expert's probability judgements over bins of the
outcome space into hyperparameters of a prior distribution, by modelling
the judgements as Dirichlet-distributed around the model's prior
predictive bin probabilities and maximizing that likelihood.  The fitted
concentration α̂ doubles as a goodness diagnostic: high values mean the
chosen prior family can reproduce the judgements closely.
"""

__version__ = "0.1.0"

from .errors import PriorForgeError
from .fisher import FisherMatrix, dirichlet_fisher, hyper_fisher
from .judgements import (ConcentrationEstimate, Judgement, JudgementSet,
                         alpha_hat, chips_to_probabilities, dirichlet_logpdf,
                         exact_alpha_mle, joint_loglik, kl_divergence,
                         make_judgement, quantile_judgement, sample_judgements)
from .models import (GaussianMixtureModel, GrowthWeibullModel, ProbitGLMModel,
                     create_model, growth_curve, model_names)
from .optimizers import (FitResult, OptimizerConfig, fit, nelder_mead_minimize)
from .partition import (Bin, CovariateSet, Partition, SampleSpace,
                        interval_bin, validate_partition)
from .predictive import (BinProbabilities, GenerativeModel, bin_probabilities,
                         rectangle_probability)
from .transforms import HyperParams, TransformBlock, TransformSpec

__all__ = [
    "__version__",
    "PriorForgeError",
    "Bin", "Partition", "CovariateSet", "SampleSpace", "interval_bin",
    "validate_partition",
    "HyperParams", "TransformBlock", "TransformSpec",
    "BinProbabilities", "GenerativeModel", "bin_probabilities",
    "rectangle_probability",
    "GaussianMixtureModel", "ProbitGLMModel", "GrowthWeibullModel",
    "create_model", "model_names", "growth_curve",
    "Judgement", "JudgementSet", "make_judgement", "quantile_judgement",
    "chips_to_probabilities", "sample_judgements",
    "dirichlet_logpdf", "joint_loglik", "kl_divergence", "alpha_hat",
    "exact_alpha_mle", "ConcentrationEstimate",
    "FisherMatrix", "dirichlet_fisher", "hyper_fisher",
    "OptimizerConfig", "FitResult", "fit", "nelder_mead_minimize",
]
