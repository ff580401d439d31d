"""Elementwise and geometric primitives on 2D intensity grids.

Images are plain 2D float64 numpy arrays in row-major (row, column) order,
row = vertical axis. All functions are pure; none mutates its input.
Translation uses periodic wrap-around boundaries, which makes it an exact
linear bijection whose adjoint is the opposite shift.
"""

import math

import numpy as np

__all__ = [
    "as_image",
    "translate",
    "project_unit_interval",
    "relative_rms",
    "inner_product",
]


def as_image(data) -> np.ndarray:
    """Coerce array-like data to a float64 2D image, validating its shape."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image must be a non-empty 2D array, got shape {img.shape}")
    return img


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")


def translate(image: np.ndarray, shift: tuple[int, int]) -> np.ndarray:
    """Shift image content by whole pixels with periodic wrap-around.

    out(r, c) = image(r - shift[0], c - shift[1]), indices taken modulo the
    image dimensions. Any integer shift is valid.
    """
    vr, vc = shift
    if vr != int(vr) or vc != int(vc):
        raise ValueError(f"translate requires integer shifts, got {shift}")
    return np.roll(image, (int(vr), int(vc)), axis=(0, 1))


def project_unit_interval(image: np.ndarray) -> np.ndarray:
    """Clamp every intensity to [0, 1]; interior values pass through."""
    return np.clip(image, 0.0, 1.0)


def relative_rms(estimate: np.ndarray, reference: np.ndarray) -> float:
    """Frobenius norm of (estimate - reference) divided by that of reference."""
    _check_same_shape(estimate, reference)
    ref_norm = np.linalg.norm(reference)
    if ref_norm == 0.0:
        raise ValueError("reference image has zero norm")
    return float(np.linalg.norm(estimate - reference) / ref_norm)


def inner_product(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of elementwise products of two equally sized images.

    Summed with math.fsum so the result is the correctly rounded value and
    independent of element order: adjoint identities that hold as multiset
    equalities of products (e.g. for translations) then hold bitwise.
    """
    _check_same_shape(a, b)
    return math.fsum((a * b).ravel())
