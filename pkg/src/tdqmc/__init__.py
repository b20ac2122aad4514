"""Time-dependent quantum Monte Carlo for one-dimensional model atoms.

Walkers and guide waves evolve together: guide waves live on a 1D grid and
feel a kernel-averaged effective potential built from the other particles'
walkers, walkers follow their guide waves. One-body density matrices, linear
entropy and occupation spectra come from the guide-wave ensembles.
"""
from .config import ExperimentConfig, RealtimeSchedule, RelaxSchedule, load_config
from .effective import KernelParams, WalkerSnapshot, effective_potential_for, effective_potentials
from .engine import (
    EnsembleState,
    GroundStateResult,
    load_checkpoint,
    local_energies,
    local_energy,
    optimize_alpha,
    propagate_real,
    relax_ground_state,
    save_checkpoint,
)
from .grid import Grid1D, step_imag, step_real
from .observables import (
    DensityMatrix,
    EntanglementRecord,
    density_matrix,
    inverse_purity,
    linear_entropy,
    mean_trajectory,
    occupation_spectrum,
)
from .oracles import MoshinskyAnalytic, exact_ground_state, exact_propagate, reduced_density, release_entropy
from .potentials import ModelSpec, PulseSpec

__version__ = "0.1.0"
