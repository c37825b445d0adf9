"""EEG/MEG source imaging with a landmark spanning-tree prior.

Library layout:

- mesh: two-hemisphere source spaces, graph geodesics, smoothing basis
- forward: synthetic lead fields, whitening, matrix text format
- solvers: certified l1-quadratic and row-group-l21 solvers
- model: the landmark/tree estimator and its alternating solver
- baselines: MNE, sLORETA, MCE, l21 benchmark solvers
- simulate: state-switching AR(5) sources with exact-SNR noise
- metrics: DF, RE, LE, AUC
- pipeline / cli: benchmark grid orchestration and the command line
"""

from .baselines import l21_solve, mce_solve, mne_solve, sloreta_solve
from .forward import (
    LeadField,
    SensorArray,
    compose_with_basis,
    fibonacci_sensor_array,
    load_matrix,
    save_matrix,
    synth_lead_field,
    whiten,
)
from .mesh import (
    SpatialBasis,
    TriangleMesh,
    apply_basis,
    build_spatial_basis,
    build_two_hemisphere_mesh,
    geodesic_distance,
    geodesic_distances_from,
    load_mesh,
    nearest_geodesic_neighbors,
    save_mesh,
)
from .metrics import MetricReport, auc, data_fit, evaluate, localization_error, reconstruction_error
from .model import (
    Hyperparams,
    ModelState,
    TreeGraph,
    denoised_signal,
    fit,
    kde_objective,
    kmeans_init,
    objective_value,
    project_tree_pca,
    to_source_space,
    update_assignments,
    update_landmarks,
    update_sources,
    update_tree,
)
from .simulate import GroundTruth, SimulationConfig, add_noise_snr, build_ground_truth, gen_ar5, select_patches, simulate
from .solvers import L1QuadProblem, SolverReport, solve_group_l21, solve_l1_quad, solve_l1_quad_batch

__version__ = "0.1.0"
