"""Multi-frame superresolution with simultaneous nonuniform defocus removal.

A numpy library for reconstructing a high-resolution image from shifted,
low-resolution frames degraded by position-dependent defocus blur, plus the
forward simulator, baseline solvers and reproducible experiment sweeps.
"""

from .grid import (
    inner_product,
    project_unit_interval,
    relative_rms,
    translate,
)
from .operators import BlurOperator, FrameModel, convolve_same, downsample, upsample
from .optics import (
    DefocusSpec,
    build_psf_stack,
    build_zone_masks,
    circular_aperture,
    psf_for_distance,
    zernike_defocus,
)
from .simulate import (
    NoiseSpec,
    SceneSpec,
    add_gaussian_noise_snr,
    add_poisson_noise,
    apply_noise,
    bandlimited_random,
    butterworth_window,
    generate_frames,
    make_scene,
    resolution_target,
    shift_grid_order,
)
from .solvers import (
    BtvConfig,
    IterationTrace,
    NumericError,
    SolverConfig,
    baseline_solve,
    btv_gradient,
    fista_deconvolve,
    momentum_sequence,
    pg,
    sandr,
    sm,
)
from .sweeps import (
    ExperimentConfig,
    SweepResult,
    run_baseline_comparison,
    run_convergence_trace,
    run_cropping_study,
    run_frame_count_study,
    run_noise_sweep,
    run_solvability_sweep,
    summarize,
)

__version__ = "0.1.0"
