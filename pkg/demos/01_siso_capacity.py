# %% [markdown]
# # Secondary intensity for single-antenna links
#
# A primary network of transmit/receive pairs (intensity `lambda_p`) shares
# spectrum with a secondary network. The secondary may grow until either the
# primary outage rises by `delta_p` over its no-secondary baseline, or its own
# outage reaches `eps_s`. This script compares the closed forms with simulation.

# %%
import numpy as np

from cogcap import ScenarioConfig
from cogcap.analytic import baseline_outage, crossover_delta, lambda_star_siso
from cogcap.montecarlo import TrialPlan, estimate_outage, max_intensity_search

cfg = ScenarioConfig(lambda_p=0.005, delta_p=0.05, eps_s=0.1)
print("baseline primary outage", baseline_outage(cfg.lambda_p, cfg.beta_p, cfg.d_p, cfg.alpha))

# %% [markdown]
# Three conventions for the cross-power terms are available. `derived` is the
# exact Rayleigh/PPP outage, `corrected` keeps the original first term and
# fixes the power ratio in the second, `paper_literal` reproduces the formula
# as printed.

# %%
for mode in ("paper_literal", "corrected", "derived"):
    r = lambda_star_siso(cfg, mode, check_consistency=False)
    print(f"{mode:14s} first={r.first_term:.5f} second={r.second_term:.5f} "
          f"lambda*={r.lambda_star:.5f} ({r.binding_constraint})")

# %% [markdown]
# Simulation: bisection over the secondary intensity, with every level
# sharing one set of draws so the empirical outage is monotone.

# %%
res = max_intensity_search(cfg, "siso", TrialPlan(trials=3000), tolerance=0.01)
print(f"MC lambda* = {res.lambda_star_mc:.5f}, 95% interval {res.ci}")

# %%
at = cfg.replace(lambda_s=lambda_star_siso(cfg, "corrected").lambda_star)
for which in ("primary", "secondary"):
    est = estimate_outage(at, "siso", which, TrialPlan(trials=5000))
    print(which, f"outage {est.p_hat:.4f} [{est.ci_low:.4f}, {est.ci_high:.4f}]")

# %% [markdown]
# The allowed intensity grows with `delta_p` until the secondary constraint
# takes over; the exact crossover is

# %%
print("derived crossover delta_p", crossover_delta(cfg, "derived"))
for d in np.linspace(0.005, 0.05, 4):
    print(f"delta_p={d:.3f}", lambda_star_siso(cfg.replace(delta_p=d), "derived").lambda_star)
