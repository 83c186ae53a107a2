# %% [markdown]
# # Why the ICM weight collapses in high dimension
#
# The ICM statistic weights residual pairs by ``exp(-|X_j - X_k|^2 / 2)``.
# For standard normal covariates the expected off-diagonal weight is
# ``3^{-p/2}``, so with a dozen covariates nearly every pair is ignored and
# only the diagonal survives. Projecting onto a few estimated directions
# first keeps the weights informative.

# %%
import numpy as np

from aicm import ProjectionBundle, aicm, icm
from aicm.stats import gaussian_gram, offdiagonal_mean

rng = np.random.default_rng(0)
n = 200

# %%
print(f"{'p':>3} {'mean weight':>12} {'3^(-p/2)':>10}")
for p in (1, 2, 4, 8, 12, 20):
    X = rng.standard_normal((n, p))
    print(f"{p:>3} {offdiagonal_mean(gaussian_gram(X)):>12.2e} {3 ** (-p / 2):>10.2e}")

# %% [markdown]
# With ``p = 12`` the statistic is almost exactly the mean squared
# residual, whatever the residuals look like.

# %%
X = rng.standard_normal((n, 12))
e = rng.standard_normal(n)
print("ICM            ", icm(e, X))
print("mean of e^2    ", np.mean(e * e))

# %% [markdown]
# The adaptive statistic applies the same kernel to one fitted index and
# one SDR direction, a two-dimensional space, so off-diagonal pairs still
# carry weight.

# %%
b = np.ones(12) / np.sqrt(12)
proj = ProjectionBundle.from_directions(X, b, b)
W = gaussian_gram(proj.stacked())
print("AICM mean off-diagonal weight", offdiagonal_mean(W))
print("AICM                         ", aicm(e, proj))
