"""Linear operators of the imaging chain and their adjoints.

The measured low-resolution frame m of a superresolution image O is

    frame_m = blur_m( downsample_tau( translate(O, tau * v_m) ) ) + noise,

with integer-pixel periodic translation, tau x tau block-average
downsampling, and a zone-wise nonuniform blur. All boundaries are periodic,
so every operator here has an exact, cheap adjoint.

Upsampling is block-constant replication, the right inverse of downsampling
(down(up(u)) == u bitwise). It equals tau^2 times the true adjoint of
downsampling; the per-frame gradient below follows the replication
convention, so it returns tau^2 times the exact gradient of the quadratic
data-fit term. The factor folds into the solver step size.
"""

from dataclasses import dataclass

import numpy as np

from .grid import translate

__all__ = [
    "downsample",
    "upsample",
    "convolve_same",
    "BlurOperator",
    "FrameModel",
]


def downsample(image: np.ndarray, tau: int) -> np.ndarray:
    """Average every tau x tau block into one output pixel.

    Block means are computed relative to the block's first sample so that
    blocks of identical values average back to that value bitwise; this
    keeps downsample(upsample(u)) == u exact for every tau.
    """
    tau = _check_rate(tau)
    if tau == 1:
        return np.array(image, dtype=np.float64)
    rows, cols = image.shape
    if rows % tau or cols % tau:
        raise ValueError(f"image shape {image.shape} is not divisible by tau={tau}")
    blocks = image.reshape(rows // tau, tau, cols // tau, tau)
    first = blocks[:, 0, :, 0]
    return first + (blocks - first[:, None, :, None]).sum(axis=(1, 3)) / tau**2


def upsample(image: np.ndarray, tau: int) -> np.ndarray:
    """Replicate every pixel into a tau x tau block."""
    tau = _check_rate(tau)
    if tau == 1:
        return np.array(image, dtype=np.float64)
    return np.repeat(np.repeat(image, tau, axis=0), tau, axis=1)


def _check_rate(tau) -> int:
    if tau != int(tau) or tau < 1:
        raise ValueError(f"sampling rate must be a positive integer, got {tau}")
    return int(tau)


def _embed_kernel(kernel: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Place an odd-sized kernel on a full-size grid, center at index (0, 0)."""
    kh, kw = kernel.shape
    out = np.zeros(shape)
    out[:kh, :kw] = kernel
    return np.roll(out, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def _check_kernel(kernel: np.ndarray, shape: tuple[int, int]) -> None:
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"kernel must be odd-sized, got {kernel.shape}")
    if kh > shape[0] or kw > shape[1]:
        raise ValueError(f"kernel {kernel.shape} larger than image {shape}")


def convolve_same(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Periodic 2D convolution with a centered odd-sized kernel, same size out."""
    _check_kernel(kernel, image.shape)
    k = np.fft.rfft2(_embed_kernel(kernel, image.shape))
    return np.fft.irfft2(np.fft.rfft2(image) * k, s=image.shape)


class BlurOperator:
    """Zone-wise nonuniform blur: apply(x) = sum_n conv(mask_n * x, kernel_n).

    kernels: (N, rho, rho) stack, odd rho; masks: (N, rows, cols) binary
    partition of the frame. When every mask is constant along rows or along
    columns (the band geometry produced by build_zone_masks) a direct
    windowed multiply-add path is used; arbitrary partitions fall back to
    FFT convolution per zone. Both paths realize the same periodic operator,
    and adjoint() is its exact transpose.
    """

    def __init__(self, kernels: np.ndarray, masks: np.ndarray):
        kernels = np.asarray(kernels, dtype=np.float64)
        masks = np.asarray(masks, dtype=np.float64)
        if kernels.ndim != 3 or masks.ndim != 3:
            raise ValueError("kernels and masks must be 3D stacks")
        if kernels.shape[0] != masks.shape[0]:
            raise ValueError(
                f"zone counts differ: {kernels.shape[0]} kernels, {masks.shape[0]} masks"
            )
        self.n_zones = kernels.shape[0]
        self.frame_shape = masks.shape[1:]
        _check_kernel(kernels[0], self.frame_shape)
        if kernels.shape[1] != kernels.shape[2]:
            raise ValueError(f"kernels must be square, got {kernels.shape[1:]}")
        if not np.all((masks == 0.0) | (masks == 1.0)):
            raise ValueError("masks must be binary")
        if not np.array_equal(masks.sum(axis=0), np.ones(self.frame_shape)):
            raise ValueError("masks must partition the frame (pointwise sum 1)")
        self.kernels = kernels
        self.masks = masks
        self._band_axis = self._detect_band_axis(masks)
        if self._band_axis is None:
            self._kernel_ffts = np.stack(
                [np.fft.rfft2(_embed_kernel(k, self.frame_shape)) for k in kernels]
            )
        else:
            self._prepare_banded()

    @staticmethod
    def _detect_band_axis(masks: np.ndarray):
        if np.all(masks == masks[:, :, :1]):
            return 0  # masks depend on the row only
        if np.all(masks == masks[:, :1, :]):
            return 1  # masks depend on the column only
        return None

    def _prepare_banded(self) -> None:
        rho = self.kernels.shape[1]
        half = rho // 2
        if self._band_axis == 0:
            zone = np.argmax(self.masks[:, :, 0], axis=0)
            kernels = self.kernels
        else:
            zone = np.argmax(self.masks[:, 0, :], axis=0)
            kernels = self.kernels.transpose(0, 2, 1)
        extent = zone.size
        # Forward: out[R, C] = sum_{i,j} flip(k)[zone(R+i-h)][i, j] * xpad[R+i, C+j];
        # weights are indexed by padded row, adjoint weights by output row.
        flipped = kernels[:, ::-1, ::-1]
        pad_index = (np.arange(extent + 2 * half) - half) % extent
        self._fwd_weights = flipped[zone[pad_index]]
        self._adj_weights = kernels[zone]
        self._half = half

    def _banded_pass(self, x: np.ndarray, weights: np.ndarray, padded_rows: bool):
        rho = self.kernels.shape[1]
        half = self._half
        rows, cols = x.shape
        xpad = np.pad(x, half, mode="wrap")
        out = np.zeros((rows, cols))
        for i in range(rho):
            window = xpad[i : i + rows]
            w = weights[i : i + rows, i, :] if padded_rows else weights[:, i, :]
            for j in range(rho):
                out += w[:, j : j + 1] * window[:, j : j + cols]
        return out

    def _check_frame(self, image: np.ndarray) -> None:
        if image.shape != self.frame_shape:
            raise ValueError(
                f"image shape {image.shape} does not match frame {self.frame_shape}"
            )

    def apply(self, image: np.ndarray) -> np.ndarray:
        """Blur a frame-sized image."""
        self._check_frame(image)
        if self._band_axis == 0:
            return self._banded_pass(image, self._fwd_weights, padded_rows=True)
        if self._band_axis == 1:
            return self._banded_pass(image.T, self._fwd_weights, padded_rows=True).T
        acc = np.zeros(
            (self.frame_shape[0], self.frame_shape[1] // 2 + 1), dtype=np.complex128
        )
        for n in range(self.n_zones):
            acc += np.fft.rfft2(self.masks[n] * image) * self._kernel_ffts[n]
        return np.fft.irfft2(acc, s=self.frame_shape)

    def adjoint(self, image: np.ndarray) -> np.ndarray:
        """Transpose of apply(): sum_n mask_n * conv(image, flipped kernel_n)."""
        self._check_frame(image)
        if self._band_axis == 0:
            return self._banded_pass(image, self._adj_weights, padded_rows=False)
        if self._band_axis == 1:
            return self._banded_pass(image.T, self._adj_weights, padded_rows=False).T
        spectrum = np.fft.rfft2(image)
        out = np.zeros(self.frame_shape)
        for n in range(self.n_zones):
            out += self.masks[n] * np.fft.irfft2(
                spectrum * np.conj(self._kernel_ffts[n]), s=self.frame_shape
            )
        return out


@dataclass(frozen=True)
class FrameModel:
    """One low-resolution frame's forward chain blur o downsample o translate.

    shift is the frame's offset v_m in LR pixels; tau * shift must be an
    integer pair. blur=None means the identity (no defocus), in which case
    lr_shape must be given explicitly.
    """

    blur: BlurOperator | None
    shift: tuple[float, float]
    tau: int
    lr_shape: tuple[int, int] | None = None

    def __post_init__(self):
        _check_rate(self.tau)
        if self.blur is not None:
            object.__setattr__(self, "lr_shape", self.blur.frame_shape)
        elif self.lr_shape is None:
            raise ValueError("lr_shape is required when blur is None")
        for component in self.shift:
            scaled = component * self.tau
            if abs(scaled - round(scaled)) > 1e-9:
                raise ValueError(
                    f"shift {self.shift} is not on the 1/{self.tau}-pixel grid"
                )

    @property
    def sr_shape(self) -> tuple[int, int]:
        return (self.lr_shape[0] * self.tau, self.lr_shape[1] * self.tau)

    @property
    def scaled_shift(self) -> tuple[int, int]:
        return (
            int(round(self.shift[0] * self.tau)),
            int(round(self.shift[1] * self.tau)),
        )

    def _check_sr(self, image: np.ndarray) -> None:
        if image.shape != self.sr_shape:
            raise ValueError(
                f"SR image shape {image.shape} does not match {self.sr_shape}"
            )

    def sample(self, sr_image: np.ndarray) -> np.ndarray:
        """Downsampled, shifted view of the SR image before any blur."""
        self._check_sr(sr_image)
        return downsample(translate(sr_image, self.scaled_shift), self.tau)

    def forward(self, sr_image: np.ndarray) -> np.ndarray:
        """Noiseless LR frame predicted from an SR image."""
        x = self.sample(sr_image)
        return self.blur.apply(x) if self.blur is not None else x

    def lift(self, lr_image: np.ndarray) -> np.ndarray:
        """Back-shifted block replication of an LR image onto the SR grid."""
        if lr_image.shape != self.lr_shape:
            raise ValueError(
                f"LR image shape {lr_image.shape} does not match {self.lr_shape}"
            )
        vr, vc = self.scaled_shift
        return translate(upsample(lr_image, self.tau), (-vr, -vc))

    def gradient(self, sr_image: np.ndarray, frame: np.ndarray) -> np.ndarray:
        """Replication-lifted gradient of 0.5 * ||forward(O) - frame||^2.

        Equals tau^2 times the exact gradient (see module docstring).
        """
        x = self.sample(sr_image)
        if frame.shape != self.lr_shape:
            raise ValueError(
                f"frame shape {frame.shape} does not match {self.lr_shape}"
            )
        if self.blur is not None:
            residual_grad = self.blur.adjoint(self.blur.apply(x) - frame)
        else:
            residual_grad = x - frame
        return self.lift(residual_grad)
