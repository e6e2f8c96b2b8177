"""3D level-set segmentation toolkit: classical and geodesic front
evolution with Lax-Friedrichs finite differences, CT-style preprocessing,
connected-component cleanup and segmentation metrics."""

from .metrics import MetricsReport, assd, compute_report, dice, hausdorff, jaccard, surface_voxels
from .phantom import OrganSpec, PhantomSpec, TubeSpec, default_suite, generate_phantom, tube_seed
from .postprocess import clean_spurious, label_components_2d, postprocess, reduce_components
from .preprocess import (
    PreprocessConfig,
    clip_hu,
    equalize_slices,
    gaussian_smooth,
    preprocess_pipeline,
    tissue_mask,
)
from .solver import (
    EvolutionResult,
    LevelSetField,
    SolverConfig,
    curvature_3d,
    evolve,
    extract_mask,
    init_levelset,
    llf_hamiltonian,
    step,
    upwind_diffs,
)
from .speed import Model, SpeedField, build_speed, cfl_dt, gradient_centered
from .volumes import (
    BinaryMask,
    ScalarVolume,
    VoxelIndex,
    linear_index,
    load_mask,
    load_volume,
    store_volume,
)

__version__ = "0.1.0"
