# %% [markdown]
# # Heston call price as the expensive model
#
# The fine model prices a European call with 10000 Euler paths; the
# coarse model reuses the first 5000 of the same paths. Here both are
# scaled down (1000 / 500 paths, h = 0.01) so the pilot runs in seconds.
# Pass ``Heston()`` for the full configuration.

# %%
import os

from mfsobol import Heston, optimize_plan, run_pilot

model = Heston(m_fine=1000, m_coarse=500, h=0.01)
print(model.descriptor()["z"])

# %%
pilot, sample = run_pilot(model, n_pilot=100, master_seed=0, workers=os.cpu_count() or 1)
print(f"sigma_c={pilot.sigma_c:.4f} sigma_e={pilot.sigma_e:.4f} sigma_t_eta={pilot.sigma_t_eta:.4f}")
print(f"S(nu0) ~ {pilot.s_hat:.3f}, coarse {pilot.s_c_hat:.3f}")

# %%
for mode in ("paper_figure", "theorem"):
    plan = optimize_plan(0.05, 0.1, pilot, model.cost_model, mode)
    print(f"{mode}: efficiency {plan.efficiency:+.3f} at alpha_e={plan.alpha_e:.4f}, mu={plan.mu:.3f}")
