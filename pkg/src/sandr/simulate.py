"""Synthetic data generation: scenes, frame synthesis, noise, windowing.

A scene couples a ground-truth SR image with per-frame shifts and defocus
parameters; frame synthesis runs the exact forward model and is bitwise
reproducible from the scene alone. Noise injection is seeded separately so
the same scene can be reused across noise realizations, with every frame
drawing from its own stream derived from (seed, frame index).
"""

from dataclasses import dataclass

import numpy as np

from .operators import BlurOperator, FrameModel, _check_rate, convolve_same
from .optics import (
    HORIZONTAL,
    VERTICAL,
    DefocusSpec,
    build_psf_stack,
    build_zone_masks,
)

__all__ = [
    "SceneSpec",
    "NoiseSpec",
    "make_scene",
    "generate_frames",
    "add_poisson_noise",
    "add_gaussian_noise_snr",
    "apply_noise",
    "butterworth_profile",
    "butterworth_window",
    "shift_grid_order",
    "resolution_target",
    "bandlimited_random",
]

D_MIN = 0.001  # lower end of every random blur-coefficient draw


@dataclass(frozen=True)
class SceneSpec:
    """Ground truth plus the full description of every LR frame to synthesize."""

    truth: np.ndarray
    tau: int
    shifts: tuple
    defocus: tuple  # one DefocusSpec per frame, blur coefficient already drawn
    seed: int = 0

    def __post_init__(self):
        _check_rate(self.tau)
        if len(self.shifts) != len(self.defocus):
            raise ValueError("one DefocusSpec per shift is required")
        if not self.shifts:
            raise ValueError("a scene needs at least one frame")
        truth = np.asarray(self.truth, dtype=np.float64)
        if truth.ndim != 2:
            raise ValueError("truth must be a 2D image")
        if truth.min() < 0.0 or truth.max() > 1.0:
            raise ValueError("truth intensities must lie in [0, 1]")
        rows, cols = truth.shape
        if rows % self.tau or cols % self.tau:
            raise ValueError(
                f"truth shape {truth.shape} is not divisible by tau={self.tau}"
            )
        object.__setattr__(self, "truth", truth)

    @property
    def lr_shape(self) -> tuple[int, int]:
        return (self.truth.shape[0] // self.tau, self.truth.shape[1] // self.tau)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: 'none', 'poisson' (photon budget) or 'gaussian_snr' (dB).

    The default photon budget of 1e12 reproduces the behaviour of common
    toolbox Poisson routines on double images in [0, 1] (pixel values scaled
    by 1e12 and used as Poisson means), i.e. very mild shot noise. Lower it
    for visibly noisy frames.
    """

    kind: str = "poisson"
    photon_budget: float = 1e12
    snr_db: float = 45.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "poisson", "gaussian_snr"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "poisson" and self.photon_budget <= 0:
            raise ValueError("photon_budget must be positive")


def make_scene(
    truth: np.ndarray,
    tau: int,
    shifts,
    n_zones: int,
    d_max: float,
    focal_index: int | None = None,
    d_min: float = D_MIN,
    psf_size: int = 11,
    pupil_grid: int = 64,
    seed: int = 0,
) -> SceneSpec:
    """Draw per-frame blur coefficients and assemble a SceneSpec.

    Blur coefficients are uniform in [d_min, d_max]; frames alternate
    between vertical and horizontal defocus orientation, so half of the
    frames vary each way. focal_index defaults to the central zone.
    """
    truth = np.asarray(truth, dtype=np.float64)
    lr_rows, lr_cols = truth.shape[0] // tau, truth.shape[1] // tau
    if focal_index is None:
        focal_index = (n_zones + 1) // 2
    rng = np.random.default_rng(np.random.SeedSequence((seed, 1)))
    specs = []
    for m in range(len(shifts)):
        orientation = VERTICAL if m % 2 == 0 else HORIZONTAL
        extent = lr_rows if orientation == VERTICAL else lr_cols
        if extent % n_zones:
            raise ValueError(
                f"LR extent {extent} is not divisible into {n_zones} zones"
            )
        d = float(rng.uniform(d_min, d_max)) if d_max > d_min else float(d_max)
        specs.append(
            DefocusSpec(
                d=d,
                n_zones=n_zones,
                focal_index=focal_index,
                orientation=orientation,
                zone_width=extent // n_zones,
                psf_size=psf_size,
                pupil_grid=pupil_grid,
            )
        )
    return SceneSpec(
        truth=truth, tau=tau, shifts=tuple(shifts), defocus=tuple(specs), seed=seed
    )


def generate_frames(scene: SceneSpec):
    """Noiseless LR frames via the exact forward model.

    Returns a list of (FrameModel, frame) pairs, deterministic for a given
    scene (all randomness lives in the blur-coefficient draws of make_scene
    and in the separate noise stage).
    """
    rows, cols = scene.lr_shape
    out = []
    for shift, spec in zip(scene.shifts, scene.defocus):
        op = BlurOperator(build_psf_stack(spec), build_zone_masks(rows, cols, spec))
        fm = FrameModel(op, tuple(shift), scene.tau)
        out.append((fm, fm.forward(scene.truth)))
    return out


def _frame_rng(spec: NoiseSpec, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((spec.seed, 2, frame_index)))


def add_poisson_noise(frame: np.ndarray, spec: NoiseSpec, frame_index: int = 0):
    """Replace each pixel v by Poisson(budget * v) / budget."""
    if frame.min() < 0.0:
        raise ValueError("Poisson noise requires nonnegative intensities")
    rng = _frame_rng(spec, frame_index)
    return rng.poisson(spec.photon_budget * frame) / spec.photon_budget


def add_gaussian_noise_snr(frame: np.ndarray, spec: NoiseSpec, frame_index: int = 0):
    """Add white Gaussian noise with variance signal_power / 10^(snr_db / 10).

    Signal power is the mean squared intensity of the given (noiseless)
    frame, so the injected noise realizes the requested SNR in decibels.
    """
    rng = _frame_rng(spec, frame_index)
    power = float(np.mean(frame**2))
    sigma = np.sqrt(power * 10.0 ** (-spec.snr_db / 10.0))
    return frame + sigma * rng.standard_normal(frame.shape)


def apply_noise(frame: np.ndarray, spec: NoiseSpec, frame_index: int = 0):
    """Dispatch on spec.kind; 'none' returns the frame unchanged."""
    if spec.kind == "poisson":
        return add_poisson_noise(frame, spec, frame_index)
    if spec.kind == "gaussian_snr":
        return add_gaussian_noise_snr(frame, spec, frame_index)
    return np.array(frame, dtype=np.float64)


def butterworth_profile(
    shape: tuple[int, int], order: int, cutoff_fraction: float
) -> np.ndarray:
    """Radial multiplier 1 / (1 + (r / r_c)^(2 * order)) centered on the frame.

    r_c is cutoff_fraction times half the smaller dimension; the multiplier
    is 1 at the center and exactly 0.5 at r = r_c.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if not 0.0 < cutoff_fraction <= 1.0:
        raise ValueError(f"cutoff_fraction must lie in (0, 1], got {cutoff_fraction}")
    rows, cols = shape
    yy = np.arange(rows) - (rows - 1) / 2.0
    xx = np.arange(cols) - (cols - 1) / 2.0
    r = np.hypot(yy[:, None], xx[None, :])
    r_c = cutoff_fraction * min(rows, cols) / 2.0
    return 1.0 / (1.0 + (r / r_c) ** (2 * order))


def butterworth_window(
    frame: np.ndarray, order: int = 4, cutoff_fraction: float = 0.85
) -> np.ndarray:
    """Taper frame borders by the Butterworth radial profile."""
    return frame * butterworth_profile(frame.shape, order, cutoff_fraction)


def shift_grid_order(tau: int):
    """Deterministic max-spread ordering of the tau x tau subpixel shift grid.

    Greedy farthest-point traversal starting at (0, 0) with lexicographic
    tie-breaks, so any prefix of the list covers the grid as evenly as
    possible. Returned shifts are in LR-pixel units (multiples of 1/tau).
    For tau = 4 the first entries are (0,0), (3/4,3/4), (0,3/4), (3/4,0), ...
    """
    tau = _check_rate(tau)
    remaining = [(i, j) for i in range(tau) for j in range(tau)]
    chosen = [(0, 0)]
    remaining.remove((0, 0))
    while remaining:
        best = max(
            remaining,
            key=lambda p: (
                min((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 for q in chosen),
                (-p[0], -p[1]),
            ),
        )
        chosen.append(best)
        remaining.remove(best)
    return [(i / tau, j / tau) for i, j in chosen]


def bandlimited_random(size: int, seed: int = 0, fraction: float = 0.75) -> np.ndarray:
    """Seeded random image with spectrum confined below `fraction` * Nyquist.

    Block-average downsampling has vanishing response at the Nyquist rows
    and columns of the SR grid, so images with energy there cannot be
    recovered from shifted LR frames no matter the solver. Closure tests
    therefore use truths confined to the well-conditioned band. Rescaling
    (affine) into [0, 1] only touches the zero-frequency bin.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    spectrum = np.fft.fft2(rng.random((size, size)))
    freq = np.fft.fftfreq(size)  # cycles per pixel, Nyquist = 0.5
    keep = np.abs(freq) <= 0.5 * fraction
    spectrum *= keep[:, None] * keep[None, :]
    img = np.fft.ifft2(spectrum).real
    return (img - img.min()) / (img.max() - img.min())


def resolution_target(size: int, smooth_sigma: float = 0.7) -> np.ndarray:
    """Synthetic test object: bar groups, checkerboard, disk, ring and ramp
    on a flat background, constant near the border. Values lie in [0, 1].

    smooth_sigma (pixels) applies a light Gaussian roll-off to the edges,
    mimicking the band limit of a physically imaged target; razor edges
    would put energy into the Nyquist modes that block-average sampling
    cannot see at all. Pass 0 for the ideal sharp pattern.
    """
    if size < 16:
        raise ValueError(f"target size must be >= 16, got {size}")
    img = np.full((size, size), 0.1)
    m = max(2, size // 10)
    half = size // 2
    yy, xx = np.indices((size, size))

    # top-left: vertical bar groups of shrinking pitch
    pitches = (8, 6, 4, 3, 2)
    block = max(1, (half - m) // len(pitches))
    for i, pitch in enumerate(pitches):
        rows = (yy >= m + i * block) & (yy < m + (i + 1) * block - 1)
        band = rows & (xx >= m) & (xx < half - 2)
        img[band & ((xx // pitch) % 2 == 0)] = 0.9

    # top-right: horizontal bar groups
    for i, pitch in enumerate(pitches):
        cols = (xx >= half + 2 + i * block) & (xx < half + 2 + (i + 1) * block - 1)
        band = cols & (yy >= m) & (yy < half - 2) & (xx < size - m)
        img[band & ((yy // pitch) % 2 == 0)] = 0.85

    # bottom-left: checkerboard patch and an intensity ramp
    checker = (yy >= half + 2) & (yy < size - m) & (xx >= m) & (xx < half - block)
    img[checker & (((yy // 2) + (xx // 2)) % 2 == 0)] = 0.75
    ramp = (yy >= half + 2) & (yy < size - m) & (xx >= half - block) & (xx < half - 2)
    img[ramp] = 0.1 + 0.8 * (yy[ramp] - (half + 2)) / max(1, size - m - half - 2)

    # bottom-right: filled disk inside a ring
    cy = cx = (half + size - m) / 2.0
    radius = (size - m - half) / 2.0 - 2.0
    r = np.hypot(yy - cy, xx - cx)
    img[(r < radius * 1.0) & (r > radius * 0.75)] = 0.55
    img[r <= radius * 0.55] = 0.95

    if smooth_sigma > 0:
        width = min(2 * int(np.ceil(3 * smooth_sigma)) + 1, size - (size + 1) % 2)
        coords = np.arange(width) - width // 2
        g1 = np.exp(-0.5 * (coords / smooth_sigma) ** 2)
        kernel = np.outer(g1, g1)
        img = convolve_same(img, kernel / kernel.sum())
    return np.clip(img, 0.0, 1.0)
