# %% [markdown]
# # From mean field to the local limit
#
# The kernel width sigma = alpha * std(walkers) interpolates between two
# limits. For huge alpha every guide wave sees the same averaged potential
# (Hartree): all guide waves coincide and the one-body state is pure. For
# tiny alpha each guide wave only sees the partner walker at its own index
# (local), and the ensemble becomes a strongly mixed state.

# %%
import numpy as np

from tdqmc import ExperimentConfig, KernelParams, ModelSpec, RelaxSchedule, relax_ground_state
from tdqmc.effective import HARTREE, LOCAL

model = ModelSpec("soft_coulomb", 2)
base = ExperimentConfig(model, n_walkers=300, grid_length=25.6, grid_points=128,
                        kernel=KernelParams(m_pot=128), relax=RelaxSchedule(dtau=0.1, steps=600), seed=2)

# with a few hundred walkers the energies carry error bars of ~0.01
print(" alpha     E        +-       S_L     1/Tr rho^2")
for alpha in (0.1, 0.3, 1.0, 3.0, 10.0, 100.0):
    r = relax_ground_state(base, alpha)
    print(f"{alpha:6.3g}  {r.energy:.4f}  {r.energy_error:.4f}  {r.linear_entropy:.5f}  {1 / (1 - r.linear_entropy):.3f}")

# %%
for name, mode in (("hartree", HARTREE), ("local", LOCAL)):
    r = relax_ground_state(base.with_changes(kernel=KernelParams(mode=mode, m_pot=128)), 1.0)
    print(f"{name:8s} E = {r.energy:.4f} +- {r.energy_error:.4f}  S_L = {r.linear_entropy:.5f}")
