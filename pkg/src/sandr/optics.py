"""Defocus PSF synthesis and zone-mask construction.

A frame's nonuniform blur is described by a stack of per-zone PSF kernels
plus binary zone masks that partition the frame into bands perpendicular to
the defocus direction. PSFs come from Fourier optics: the squared modulus of
the DFT of a circular pupil carrying a quadratic (defocus) phase, cropped to
a small square support and renormalized to unit sum.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DefocusSpec",
    "defocus_phase_profile",
    "zernike_defocus",
    "circular_aperture",
    "psf_for_distance",
    "build_psf_stack",
    "build_zone_masks",
    "zone_of_index",
]

SQRT3 = np.sqrt(3.0)

VERTICAL = "vertical"
HORIZONTAL = "horizontal"


@dataclass(frozen=True)
class DefocusSpec:
    """Parameters of one frame's position-dependent defocus blur.

    d: blur coefficient scaling the per-zone defocus distance d*(n0 - n).
    n_zones: number of defocus zones N (1-based zone indices 1..N).
    focal_index: in-focus zone n0, 1 <= n0 <= N.
    orientation: "vertical" (zones are row bands) or "horizontal" (column bands).
    zone_width: band width in pixels; n_zones * zone_width must equal the
        frame extent along the orientation axis.
    psf_size: odd kernel support (pixels per side).
    pupil_grid: sampling size of the square pupil used for PSF synthesis.
    """

    d: float
    n_zones: int
    focal_index: int
    orientation: str = VERTICAL
    zone_width: int = 3
    psf_size: int = 11
    pupil_grid: int = 64

    def __post_init__(self):
        if self.n_zones < 1:
            raise ValueError(f"n_zones must be >= 1, got {self.n_zones}")
        if not 1 <= self.focal_index <= self.n_zones:
            raise ValueError(
                f"focal_index must lie in [1, {self.n_zones}], got {self.focal_index}"
            )
        if self.orientation not in (VERTICAL, HORIZONTAL):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.zone_width < 1:
            raise ValueError(f"zone_width must be >= 1, got {self.zone_width}")
        if self.psf_size < 1 or self.psf_size % 2 == 0:
            raise ValueError(f"psf_size must be odd and positive, got {self.psf_size}")
        if self.pupil_grid < self.psf_size:
            raise ValueError(
                f"pupil_grid ({self.pupil_grid}) must be >= psf_size ({self.psf_size})"
            )


def _pupil_radius_grid(grid_size: int) -> np.ndarray:
    """Normalized radius at each pixel center; r = 1 on the inscribed circle."""
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    coords = np.arange(grid_size) - (grid_size - 1) / 2.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    return np.hypot(yy, xx) / (grid_size / 2.0)


def defocus_phase_profile(r):
    """Radial defocus polynomial sqrt(3) * (2 r^2 - 1), Noll-normalized."""
    return SQRT3 * (2.0 * np.asarray(r, dtype=np.float64) ** 2 - 1.0)


def zernike_defocus(grid_size: int) -> np.ndarray:
    """Defocus phase map sampled on a square grid over the unit disk.

    Values outside the inscribed disk are zero; the aperture mask removes
    them again downstream, so the fill value never reaches a PSF.
    """
    r = _pupil_radius_grid(grid_size)
    z = defocus_phase_profile(r)
    z[r > 1.0] = 0.0
    return z


def circular_aperture(grid_size: int) -> np.ndarray:
    """Binary mask: 1 inside the centered disk of diameter grid_size."""
    r = _pupil_radius_grid(grid_size)
    return (r <= 1.0).astype(np.float64)


def psf_for_distance(spec: DefocusSpec, distance: float) -> np.ndarray:
    """PSF kernel for one defocus distance.

    Squared modulus of the 2D DFT of aperture * exp(j * distance * defocus
    phase), shifted so zero frequency is central, cropped to psf_size x
    psf_size, then renormalized to unit sum (blur preserves total intensity).
    """
    g = spec.pupil_grid
    pupil = circular_aperture(g) * np.exp(1j * distance * zernike_defocus(g))
    psf = np.abs(np.fft.fft2(pupil)) ** 2
    psf = np.fft.fftshift(psf)
    c = g // 2
    half = spec.psf_size // 2
    kernel = psf[c - half : c + half + 1, c - half : c + half + 1].copy()
    total = kernel.sum()
    if total <= 0.0:
        raise ValueError("PSF crop captured no energy; increase psf_size or pupil_grid")
    return kernel / total


def build_psf_stack(spec: DefocusSpec) -> np.ndarray:
    """Per-zone kernels, shape (N, psf_size, psf_size).

    Zone n (1-based) sits at defocus distance d * (n0 - n); the kernel at the
    focal zone is the diffraction-limited one.
    """
    distances = spec.d * (spec.focal_index - np.arange(1, spec.n_zones + 1))
    return np.stack([psf_for_distance(spec, dn) for dn in distances])


def build_zone_masks(frame_rows: int, frame_cols: int, spec: DefocusSpec) -> np.ndarray:
    """Binary zone masks, shape (N, frame_rows, frame_cols).

    Zone n covers the contiguous band of zone_width rows (vertical
    orientation) or columns (horizontal) starting at (n-1) * zone_width.
    The masks partition the frame exactly.
    """
    extent = frame_rows if spec.orientation == VERTICAL else frame_cols
    if spec.n_zones * spec.zone_width != extent:
        raise ValueError(
            f"n_zones * zone_width = {spec.n_zones * spec.zone_width} does not "
            f"match the frame extent {extent} along the {spec.orientation} axis"
        )
    masks = np.zeros((spec.n_zones, frame_rows, frame_cols))
    for n in range(spec.n_zones):
        band = slice(n * spec.zone_width, (n + 1) * spec.zone_width)
        if spec.orientation == VERTICAL:
            masks[n, band, :] = 1.0
        else:
            masks[n, :, band] = 1.0
    return masks


def zone_of_index(extent: int, spec: DefocusSpec) -> np.ndarray:
    """Zone index (0-based) of each row/column along the orientation axis."""
    if spec.n_zones * spec.zone_width != extent:
        raise ValueError(
            f"n_zones * zone_width = {spec.n_zones * spec.zone_width} does not "
            f"match extent {extent}"
        )
    return np.arange(extent) // spec.zone_width
