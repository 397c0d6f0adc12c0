# %% [markdown]
# # How the secondary intensity grows with antennas
#
# With `k = ceil(N/2)` nulls, simulation gives lambda* at a few antenna
# counts, to be compared with the scaling exponents `1 - 2/alpha` and
# `2/alpha`. A few hundred trials and three antenna counts give a noisy slope;
# the acceptance suite repeats the sweep with 10^4 trials and N up to 16.

# %%
from cogcap import ScenarioConfig
from cogcap.analytic import fit_scaling_exponent, scaling_bounds
from cogcap.experiments import nulling_count
from cogcap.montecarlo import TrialPlan, max_intensity_search

base = ScenarioConfig(lambda_p=0.01, delta_p=0.02, eps_s=0.3)
plan = TrialPlan(trials=800, eta=0.05)
points = []
for n in (2, 4, 8):
    res = max_intensity_search(base.replace(N=n, k=nulling_count(n, 0.5)), "miso", plan, 0.02)
    points.append((n, res.lambda_star_mc))
    print(n, res.lambda_star_mc, res.binding_constraint)

# %%
slope = fit_scaling_exponent(points)[0]
b = scaling_bounds("miso", base.alpha)
print(f"slope {slope:.2f}, bounds {b.lower_exponent:.3f} .. {b.upper_exponent:.3f}")
