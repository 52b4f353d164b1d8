import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adarpr import RprProblem
from adarpr.objective import distance_to_truth, objective_value, relative_error, residuals
from adarpr.operators import spectral_norm
from adarpr.problems import (ImageSpec, SyntheticSpec, covariance_profile, gen_hadamard_problem,
                             gen_synthetic, image_to_signal, lower_median, read_ppm,
                             signal_to_image, spectral_init, warm_start, write_ppm)


def test_covariance_profile():
    for n in (2, 5, 200):
        s = covariance_profile(n)
        assert s[0] == 1.0 and s[-1] == 0.25
        assert np.all(np.diff(s) < 0)
    np.testing.assert_array_equal(covariance_profile(1), [1.0])


def test_lower_median():
    assert lower_median([1.0, 4.0]) == 1.0
    assert lower_median([3.0, 1.0, 2.0]) == 2.0
    assert lower_median([4.0, 1.0, 3.0, 2.0]) == 2.0


def test_corruption_count_small():
    p = gen_synthetic(SyntheticSpec(3, 10, 0.1, 0))
    assert p.corrupted.size == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(20, 120), st.floats(0.0, 0.45), st.integers(0, 2**63 - 1))
def test_corruption_model(n, m, p_fail, seed):
    n_bad = math.ceil(round(m * p_fail, 9))
    if not 2 * n_bad < m:
        with pytest.raises(ValueError):
            gen_synthetic(SyntheticSpec(n, m, p_fail, seed))
        return
    p = gen_synthetic(SyntheticSpec(n, m, p_fail, seed))
    idx = p.corrupted
    assert idx.size == n_bad == np.unique(idx).size
    assert np.all(p.b[idx] > 0)
    clean = np.setdiff1d(np.arange(m), idx)
    assert np.max(residuals(p, p.truth)[clean], initial=0.0) <= 1e-20 + 1e-12 * np.max(p.b)
    assert set(np.unique(p.truth)) <= {-1.0, 1.0}


def test_corruption_uses_clean_median():
    p = gen_synthetic(SyntheticSpec(5, 50, 0.1, 4))
    clean_b = (p.op.apply(p.truth)) ** 2
    M = lower_median(clean_b)
    ratio = p.b[p.corrupted] / M
    assert np.all(ratio > 0)
    # b = M tan(pi U / 2) with U uniform means 2/pi * atan(b / M) lies in (0, 1)
    u = 2 / np.pi * np.arctan(ratio)
    assert np.all((u > 0) & (u < 1))


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(0, 10)
    with pytest.raises(ValueError):
        SyntheticSpec(3, 10, 0.5)
    with pytest.raises(ValueError):
        ImageSpec(n_blocks=0)
    with pytest.raises(ValueError):
        gen_synthetic(SyntheticSpec(3, 2, 0.4))


def test_reproducible():
    a = gen_synthetic(SyntheticSpec(10, 50, 0.1, 9))
    b = gen_synthetic(SyntheticSpec(10, 50, 0.1, 9))
    c = gen_synthetic(SyntheticSpec(10, 50, 0.1, 10))
    np.testing.assert_array_equal(a.op.matrix, b.op.matrix)
    np.testing.assert_array_equal(a.b, b.b)
    np.testing.assert_array_equal(a.truth, b.truth)
    assert a.L == b.L
    assert not np.array_equal(a.b, c.b)


def test_L_matches_definition():
    p = gen_synthetic(SyntheticSpec(10, 50, 0.1, 1))
    assert p.L == pytest.approx(2 * np.linalg.norm(p.op.matrix, 2) ** 2 / p.m, rel=1e-7)


def _image(h, w, seed=0):
    return np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8)


def test_hadamard_problem_sizes():
    p = gen_hadamard_problem(ImageSpec(n_blocks=6, seed=0), image=_image(64, 64))
    assert (p.n, p.m) == (16384, 98304)
    assert p.L == 2.0
    assert p.meta["image_shape"] == (64, 64, 3)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_hadamard_L_is_two(seed):
    p = gen_hadamard_problem(ImageSpec(n_blocks=6, seed=seed), image=_image(4, 4, seed))
    assert 2 * spectral_norm(p.op) ** 2 / p.m == pytest.approx(2.0, abs=1e-5)


def test_hadamard_noiseless():
    p = gen_hadamard_problem(ImageSpec(p_fail=0.0), image=_image(5, 3))
    np.testing.assert_allclose(p.b, p.op.apply(p.truth) ** 2)
    assert objective_value(p, p.truth) <= 1e-12


def test_image_signal_round_trip():
    img = _image(7, 5, 3)
    sig = image_to_signal(img)
    assert sig.size == 128 and np.all(sig[105:] == 0)
    assert np.all((sig >= 0) & (sig <= 1))
    np.testing.assert_array_equal(signal_to_image(sig, 7, 5), img)
    np.testing.assert_array_equal(signal_to_image(-sig, 7, 5), img)


def test_ppm_round_trip(tmp_path):
    img = _image(6, 9, 1)
    path = tmp_path / "a.ppm"
    write_ppm(path, img)
    np.testing.assert_array_equal(read_ppm(path), img)


def test_ppm_header_comments(tmp_path):
    img = _image(2, 3, 2)
    path = tmp_path / "c.ppm"
    path.write_bytes(b"P6\n# made by hand\n3 2\n255\n" + img.tobytes())
    np.testing.assert_array_equal(read_ppm(path), img)


@pytest.mark.parametrize("data", [
    b"P3\n1 1\n255\n\x00\x00\x00",
    b"P6\n2 2\n255\n\x00\x00\x00",
    b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00",
    b"P6\n0 1\n255\n",
    b"",
])
def test_ppm_malformed(tmp_path, data):
    path = tmp_path / "bad.ppm"
    path.write_bytes(data)
    with pytest.raises(ValueError):
        read_ppm(path)


def test_image_spec_needs_source():
    with pytest.raises(ValueError):
        gen_hadamard_problem(ImageSpec())


@pytest.mark.parametrize("method", ["orthogonal", "truncated"])
def test_spectral_init_one_dimensional(tiny, method):
    x0 = spectral_init(tiny, method=method)
    assert abs(abs(x0[0]) - 1.0) <= 1e-12
    assert distance_to_truth(tiny, x0) <= 1e-12


def test_truncated_norm_is_root_median():
    p = gen_synthetic(SyntheticSpec(20, 160, 0.1, 0))
    x0 = spectral_init(p, method="truncated")
    assert np.linalg.norm(x0) == pytest.approx(np.sqrt(lower_median(p.b)), rel=1e-12)


def test_spectral_init_errors():
    wide = RprProblem.from_operator(np.ones((2, 3)), [1.0, 1.0])
    with pytest.raises(ValueError):
        spectral_init(wide)
    zero = RprProblem.from_operator(np.eye(2), [0.0, 0.0])
    with pytest.raises(ValueError):
        spectral_init(zero)
    p = gen_synthetic(SyntheticSpec(4, 40, 0.1, 0))
    with pytest.raises(ValueError):
        spectral_init(p, method="bogus")


def test_spectral_init_quality():
    errs = []
    for seed in range(10):
        p = gen_synthetic(SyntheticSpec(100, 800, 0.1, seed))
        errs.append(relative_error(p, spectral_init(p, seed=seed)))
    assert np.median(errs) <= 0.5


def test_spectral_init_hadamard_path():
    p = gen_hadamard_problem(ImageSpec(seed=0), image=_image(8, 8))
    assert relative_error(p, spectral_init(p)) < 1.0


def test_warm_start():
    p = gen_synthetic(SyntheticSpec(100, 300, 0.1, 0))
    np.testing.assert_array_equal(warm_start(p, 0.0), p.truth)
    x0 = warm_start(p, 0.1, seed=3)
    assert np.linalg.norm(x0 - p.truth) == pytest.approx(1.0)
    assert distance_to_truth(p, x0) <= np.linalg.norm(x0 - p.truth)
    np.testing.assert_array_equal(x0, warm_start(p, 0.1, seed=3))
    with pytest.raises(ValueError):
        warm_start(p, -0.1)
    with pytest.raises(ValueError):
        warm_start(RprProblem(p.op, p.b, p.L), 0.1)
