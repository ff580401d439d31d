import numpy as np
import pytest

from sandr.grid import (
    as_image,
    inner_product,
    project_unit_interval,
    relative_rms,
    translate,
)

rng = np.random.default_rng(1234)


def test_translate_identity():
    u = rng.random((5, 7))
    assert np.array_equal(translate(u, (0, 0)), u)


def test_translate_one_row_periodic():
    u = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(translate(u, (1, 0)), np.array([[3.0, 4.0], [1.0, 2.0]]))


def test_translate_inverse():
    u = rng.random((6, 9))
    for shift in [(1, 2), (-3, 5), (17, -40)]:
        back = translate(translate(u, shift), (-shift[0], -shift[1]))
        assert np.array_equal(back, u)


def test_translate_rejects_fractional_shift():
    with pytest.raises(ValueError):
        translate(np.zeros((4, 4)), (0.5, 0))


def test_translate_adjoint_is_negated_shift():
    x = rng.random((8, 8))
    y = rng.random((8, 8))
    for shift in [(0, 0), (1, 3), (-2, 6), (11, -7)]:
        lhs = inner_product(translate(x, shift), y)
        rhs = inner_product(x, translate(y, (-shift[0], -shift[1])))
        assert lhs == rhs


def test_project_interior_and_endpoints():
    assert np.array_equal(project_unit_interval(np.array([[0.5]])), [[0.5]])
    assert np.array_equal(
        project_unit_interval(np.array([[-0.2, 1.7]])), [[0.0, 1.0]]
    )


def test_project_idempotent_and_nonexpansive():
    for _ in range(20):
        x = rng.normal(size=(6, 6)) * 3
        y = rng.normal(size=(6, 6)) * 3
        px, py = project_unit_interval(x), project_unit_interval(y)
        assert np.array_equal(project_unit_interval(px), px)
        assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-15


def test_relative_rms_trivial_cases():
    u = rng.random((5, 5)) + 0.1
    assert relative_rms(u, u) == 0.0
    assert relative_rms(2 * u, u) == pytest.approx(1.0, abs=1e-12)


def test_relative_rms_matches_elementwise_oracle():
    a = rng.random((8, 8))
    b = rng.random((8, 8)) + 0.05
    num = 0.0
    den = 0.0
    for i in range(8):
        for j in range(8):
            num += (a[i, j] - b[i, j]) ** 2
            den += b[i, j] ** 2
    expected = (num / den) ** 0.5
    assert relative_rms(a, b) == pytest.approx(expected, rel=1e-13)


def test_relative_rms_errors():
    with pytest.raises(ValueError):
        relative_rms(np.zeros((2, 2)), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        relative_rms(np.ones((2, 2)), np.zeros((2, 2)))


def test_relative_rms_positive_unless_equal():
    u = rng.random((4, 4))
    v = u.copy()
    v[2, 3] += 1e-9
    assert relative_rms(v, u) > 0.0


def test_inner_product_cases():
    u = rng.random((3, 4))
    assert inner_product(u, np.zeros_like(u)) == 0.0
    assert inner_product(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]])) == 11.0
    a, b = rng.random((5, 5)), rng.random((5, 5))
    assert inner_product(a, b) == inner_product(b, a)
    with pytest.raises(ValueError):
        inner_product(np.zeros((2, 2)), np.zeros((2, 3)))


def test_as_image_validates():
    img = as_image([[1, 2], [3, 4]])
    assert img.dtype == np.float64 and img.shape == (2, 2)
    with pytest.raises(ValueError):
        as_image([1.0, 2.0])
