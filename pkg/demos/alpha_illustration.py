"""How the concentration α grades judgement fidelity.

Draws one synthetic judgement vector per α on a ten-bin partition around
a two-component Gaussian mixture predictive, then prints the judged bars
next to the exact bin masses.  Large α means the bars hug the curve; the
fitted α̂ therefore doubles as a "can this prior family represent this
expert" diagnostic.

Run:  python demos/alpha_illustration.py
"""

import numpy as np

from prior_forge import CovariateSet, bin_probabilities, sample_judgements
from prior_forge.experiments import fig1_partition
from prior_forge.judgements import alpha_hat
from prior_forge.models import GaussianMixtureModel, fig1_hyperparams

model = GaussianMixtureModel(2)
lam = fig1_hyperparams(model)          # means ∓2, unit variances, equal weights
partition = fig1_partition()           # 8 interior bins on [-6, 6] plus tails
x = CovariateSet(label="illustration")

exact = bin_probabilities(model, lam, x, partition).values
print("exact bin masses:", np.round(exact, 4), "\n")

for alpha in (1.0, 15.0, 50.0, 100.0, 300.0, 1000.0):
    js = sample_judgements(alpha, lam, model, [partition], [x], seed=0)
    p = js.items[0].p
    est = alpha_hat(js, lam, model)
    bars = "  ".join(f"{v:5.3f}" for v in p)
    print(f"alpha={alpha:6.0f}  judged: {bars}")
    print(f"{'':14}max |p - P| = {np.max(np.abs(p - exact)):.4f}, "
          f"recovered alpha-hat = {est.alpha_hat:8.1f}\n")

print("The recovered alpha-hat tracks the generating concentration: noisy")
print("judgements (alpha=1) are flagged by a small diagnostic, near-exact")
print("ones (alpha=1000) by a large one.")
