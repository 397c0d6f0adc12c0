# %% [markdown]
# # Null steering and receive cancelation gains
#
# A transmitter with `N` antennas that nulls `k` victims keeps a desired-link
# gain distributed as Gamma(N - k, 1); its gain towards anyone else stays
# Exp(1). A receiver cancelling `m` interferers with `M` antennas keeps
# Gamma(M - m, 1). Here the literal constructions are sampled and tested.

# %%
import numpy as np
from scipy import stats

from cogcap.channel import draw_gaussian_matrix, null_space_basis, transmit_beamformer
from cogcap.montecarlo import TrialPlan
from cogcap.validation import cancelation_gain_checks, nulling_gain_checks

rng = np.random.default_rng(3)
G = draw_gaussian_matrix(2, 4, rng)          # channels towards two victims
bf = transmit_beamformer(draw_gaussian_matrix(1, 4, rng)[0], null_space_basis(G, 4), G)
print("residual leakage", bf.residuals())

# %%
for check in nulling_gain_checks(TrialPlan(trials=2000)) + cancelation_gain_checks(TrialPlan(trials=2000)):
    print(f"{'ok ' if check.passed else 'BAD'} {check.name}: {check.statistic:.3g}"
          + ("" if np.isnan(check.pvalue) else f" p={check.pvalue:.3f}"))

# %% [markdown]
# The mean desired gain is N - k, so spending antennas on nulling costs
# signal power one dimension at a time.

# %%
print([float(stats.gamma(4 - k).mean()) for k in range(4)])
