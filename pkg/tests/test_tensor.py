import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from softremish import tensor as T
from softremish.errors import DivergedTrainingError, InvalidShapeError


def naive_matmul(a, b):
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            s = 0.0
            for p in range(k):
                s += a[i, p] * b[p, j]
            out[i, j] = s
    return out


def linear_scan_argmax(row):
    best, idx = row[0], 0
    for i, v in enumerate(row):
        if v > best:
            best, idx = v, i
    return idx


def test_zeros():
    z = T.zeros([2, 2], "double")
    assert z.dtype == np.float64 and z.tolist() == [[0, 0], [0, 0]]
    assert T.zeros([1], "single").dtype == np.float32
    z = T.zeros([3, 1, 2])
    assert z.shape == (3, 1, 2) and z.size == 6 and not z.any()


@pytest.mark.parametrize("shape", [[], [0], [2, 0, 3]])
def test_zeros_rejects_bad_shapes(shape):
    with pytest.raises(InvalidShapeError):
        T.zeros(shape)


def test_from_values_is_row_major():
    t = T.from_values([2, 2], [1, 2, 3, 4])
    assert t[1, 0] == 3
    assert T.reshape(T.from_values([4], [1, 2, 3, 4]), [2, 2]).ravel().tolist() == [1, 2, 3, 4]
    with pytest.raises(InvalidShapeError):
        T.from_values([2, 3], [1, 2, 3, 4, 5])


def test_from_values_copies():
    vals = np.array([1.0, 2.0])
    t = T.from_values([2], vals)
    vals[0] = 9
    assert t[0] == 1.0


def test_map_elementwise():
    assert T.map_elementwise(np.array([-1.0, 2.0]), lambda v: max(0.0, v)).tolist() == [0, 2]
    x = np.random.default_rng(0).standard_normal((3, 4))
    assert np.array_equal(T.map_elementwise(x, lambda v: v), x)
    assert T.map_elementwise(np.array([0.0]), np.tanh).tolist() == [0.0]


def test_map_elementwise_refuses_non_finite():
    with pytest.raises(DivergedTrainingError):
        T.map_elementwise(np.array([1.0, 0.0]), lambda v: 1.0 / v if v else float("inf"))


def test_matmul():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(T.matmul(np.eye(2), b), b)
    assert T.matmul(b, np.ones((2, 1))).tolist() == [[3.0], [7.0]]
    with pytest.raises(InvalidShapeError):
        T.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_matches_triple_loop(rng):
    a = rng.uniform(-1, 1, (4, 5))
    b = rng.uniform(-1, 1, (5, 3))
    np.testing.assert_allclose(T.matmul(a, b), naive_matmul(a, b), rtol=1e-13, atol=1e-14)


def test_matmul_associativity(rng):
    a, b, c = (rng.uniform(-1, 1, (4, 4)) for _ in range(3))
    lhs = T.matmul(T.matmul(a, b), c)
    rhs = T.matmul(a, T.matmul(b, c))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_elementwise_binary(rng):
    a = rng.standard_normal((2, 3))
    assert np.array_equal(T.elementwise_binary(a, np.zeros_like(a), "add"), a)
    assert not T.elementwise_binary(a, a, "sub").any()
    assert T.elementwise_binary(np.array([2.0, 3.0]), np.array([4.0, 5.0]), "mul").tolist() == [8, 15]
    with pytest.raises(InvalidShapeError):
        T.elementwise_binary(a, a.T, "add")
    with pytest.raises(ValueError):
        T.elementwise_binary(a, a, "div")


def test_argmax_last_axis(rng):
    assert T.argmax_last_axis(np.array([[0.1, 0.9]])).tolist() == [1]
    assert T.argmax_last_axis(np.array([[0.5, 0.5]])).tolist() == [0]
    x = rng.standard_normal((8, 10))
    assert T.argmax_last_axis(x).tolist() == [linear_scan_argmax(r) for r in x]


@given(st.integers(1, 12), st.floats(-1e6, 1e6))
def test_argmax_of_constant_row_is_zero(n, v):
    assert T.argmax_last_axis(np.full((3, n), v)).tolist() == [0, 0, 0]


@given(st.lists(st.floats(-1e300, 1e300), min_size=1, max_size=60), st.data())
def test_reshape_round_trip_is_bit_exact(values, data):
    n = len(values)
    divisors = [d for d in range(1, n + 1) if n % d == 0]
    d = data.draw(st.sampled_from(divisors))
    t = T.from_values([n], values)
    back = T.flatten(T.reshape(t, [d, n // d]))
    assert back.tobytes() == np.array(values, dtype=np.float64).tobytes()


@given(st.sampled_from(["add", "sub", "mul"]), st.integers(1, 4), st.integers(1, 4))
def test_elementwise_ops_preserve_shape(op, m, n):
    a = np.ones((m, n))
    assert T.elementwise_binary(a, a, op).shape == (m, n)
    assert T.map_elementwise(a, np.exp).shape == (m, n)


def test_deterministic_context_runs():
    a = np.ones((3, 3))
    with T.deterministic(True):
        r1 = a @ a
    with T.deterministic(False):
        r2 = a @ a
    assert np.array_equal(r1, r2)
