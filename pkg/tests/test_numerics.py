import numpy as np
import pytest

from pcinr.errors import NonFiniteError
from pcinr.numerics import Rng, as_real, check_finite, hamming_window, next_pow2, real_dtype, rfft, use_precision

SEED = 1234
DRAWS = 1000


def test_same_seed_and_stream_repeat() -> None:
    a = Rng(SEED).child(3, 12).normal(0.0, 1.0, DRAWS, dtype=np.float64)
    b = Rng(SEED).child(3, 12).normal(0.0, 1.0, DRAWS, dtype=np.float64)
    np.testing.assert_array_equal(a, b)


def test_child_streams_are_independent_of_parent_draws() -> None:
    root = Rng(SEED)
    untouched = root.child(5).permutation(50)
    root.uniform(0.0, 1.0, 10_000)
    np.testing.assert_array_equal(root.child(5).permutation(50), untouched)
    assert not np.array_equal(Rng(SEED).child(5).permutation(50), Rng(SEED).child(6).permutation(50))


def test_position_advances() -> None:
    r = Rng(SEED)
    start = r.position
    r.uniform(0.0, 1.0, 64)
    assert r.position > start


def test_uniform_stays_below_upper_bound_in_float32() -> None:
    draws = Rng(0).uniform(-1.0, 1.0, 100_000, dtype=np.float32)
    assert draws.dtype == np.float32
    assert draws.min() >= -1.0
    assert draws.max() < 1.0


def test_draw_moments() -> None:
    n = 200_000
    u = Rng(SEED).child(1).uniform(0.0, 1.0, n, dtype=np.float64)
    assert u.mean() == pytest.approx(0.5, abs=0.005)
    assert u.std() == pytest.approx(1.0 / np.sqrt(12.0), abs=0.005)
    g = Rng(SEED).child(2).normal(0.3, 2.0, n, dtype=np.float64)
    assert g.mean() == pytest.approx(0.3, abs=0.02)
    assert g.std() == pytest.approx(2.0, abs=0.02)


@pytest.mark.parametrize("bad", [-1, 2**64])
def test_seed_range(bad: int) -> None:
    with pytest.raises(ValueError):
        Rng(bad)


def test_precision_context_restores() -> None:
    assert real_dtype() == np.float32
    with use_precision(np.float64):
        assert real_dtype() == np.float64
        assert as_real([1, 2]).dtype == np.float64
    assert real_dtype() == np.float32
    with pytest.raises(ValueError):
        with use_precision(np.float16):
            pass


def test_check_finite_carries_context() -> None:
    check_finite("ok", np.zeros(3))
    with pytest.raises(NonFiniteError) as info:
        check_finite("layer out", np.array([0.0, np.nan]), layer=2)
    assert info.value.context["layer"] == 2


@pytest.mark.parametrize("n", [1, 2, 8, 400, 1024, 1600, 3200, 4096])
def test_rfft_matches_numpy(n: int) -> None:
    size = next_pow2(n)
    x = np.random.default_rng(n).standard_normal((3, n))
    np.testing.assert_allclose(rfft(x, size), np.fft.rfft(x, size), rtol=1e-10, atol=1e-9)


@pytest.mark.parametrize("size", [2, 16, 512, 4096])
def test_rfft_preserves_energy(size: int) -> None:
    x = np.random.default_rng(size).standard_normal(size)
    spec = np.abs(rfft(x, size)) ** 2
    # half spectrum: interior bins stand for their mirrored twins too
    energy = (spec[0] + spec[-1] + 2.0 * spec[1:-1].sum()) / size
    assert energy == pytest.approx(float(np.dot(x, x)), rel=1e-10)


def test_rfft_float32_stays_complex64() -> None:
    x = np.ones(16, dtype=np.float32)
    assert rfft(x, 16).dtype == np.complex64


def test_rfft_rejects_bad_sizes() -> None:
    with pytest.raises(ValueError):
        rfft(np.ones(8), 12)
    with pytest.raises(ValueError):
        rfft(np.ones(17), 16)


def test_next_pow2() -> None:
    assert [next_pow2(n) for n in (1, 2, 3, 400, 1024, 1025)] == [1, 2, 4, 512, 1024, 2048]


def test_hamming_window_is_symmetric() -> None:
    w = hamming_window(9)
    np.testing.assert_allclose(w, w[::-1])
    assert w[0] == pytest.approx(0.08)
    assert w[4] == pytest.approx(1.0)
    np.testing.assert_allclose(hamming_window(400), np.hamming(400))
