"""Quantum discord and criticality toolkit for the anisotropic spin-1 chain."""

from .crit import Curve, PeakResult, ScalingFit, crossing_point, derivative, extrapolate_critical, fss_collapse, peak_location
from .discord import (
    DiscordResult,
    OptimizerConfig,
    asymmetric_discord,
    global_discord,
    global_objective,
    mutual_information,
    one_way_classical,
    symmetric_discord,
    symmetric_objective,
)
from .errors import ConvergenceError, PositivityError, ResourceLimitError, SupportError
from .measure import (
    MeasurementAngles,
    ProjectiveBasis,
    basis_from_angles,
    dephase,
    dephased_probabilities,
    real_basis_from_angles,
)
from .model import (
    SparseHamiltonian,
    SpectrumSlice,
    SpinOperators,
    build_hamiltonian,
    ground_state,
    low_spectrum,
    reduced_pair_state,
    spin_operators,
    thermal_state,
)
from .qalgebra import (
    DensityMatrix,
    StateVector,
    partial_trace,
    relative_entropy,
    shannon_entropy,
    tensor_product,
    von_neumann_entropy,
)

__version__ = "0.1.0"
