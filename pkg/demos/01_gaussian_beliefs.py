#!/usr/bin/env python3
"""
Gaussian belief recursion
=========================

A hidden vector theta is observed one noisy linear measurement at a time;
the posterior stays Gaussian and updates in closed form.
"""

import numpy as np

from beliefopt import GaussianBelief, ObservationModel, gaussian_predictive, gaussian_update
from beliefopt.beliefs import belief_to_text
from beliefopt.oracle import batch_conditioning

# start with an uninformative prior over a 3-point function
prior = GaussianBelief(np.zeros(3), np.eye(3))
model = ObservationModel.direct(3, noise_variances=0.5)

print("prior mean       ", prior.mean)
print("prior variances  ", np.diag(prior.covariance))

# before observing index 1, what should z look like?
pred_mean, pred_var = gaussian_predictive(prior, model, 1)
print(f"predictive of z_1: mean {pred_mean:.3f}, variance {pred_var:.3f}")

# observe z_1 = 0.8, then z_0 = -0.4, then z_1 again
belief = gaussian_update(prior, model, 1, 0.8)
belief = gaussian_update(belief, model, 0, -0.4)
belief = gaussian_update(belief, model, 1, 1.1)
print("posterior mean     ", belief.mean.round(4))
print("posterior variances", np.diag(belief.covariance).round(4))

# the recursion agrees with one-shot batch conditioning on the same data
batch = batch_conditioning(prior, model, [(1, 0.8), (0, -0.4), (1, 1.1)])
print("max |recursive - batch| =", np.abs(belief.mean - batch.mean).max())

# linear (non-direct) observations work the same way: observe theta_0 + theta_2
sum_model = ObservationModel(
    np.array([[1.0, 0.0, 1.0]]), np.array([0.1]), np.array([0.0])
)
belief = gaussian_update(belief, sum_model, 0, 0.2)
print("after observing theta_0 + theta_2 = 0.2:", belief.mean.round(4))

# snapshots round-trip through a plain-text format with 17 significant digits
print("snapshot:", belief_to_text(belief)[:80], "...")
