import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mriq import (Volume, apply_bias_field, apply_blur, apply_contrast, apply_gibbs_ringing,
                  apply_motion_ghosting, apply_rician_noise, fft3_centered,
                  phantoms, sample_params)
from mriq import distortion as D
from mriq.distortion import DistortionKind
from mriq.errors import ParameterError


def pop_std(values):
    values = [float(x) for x in values]
    m = math.fsum(values) / len(values)
    return math.sqrt(math.fsum((x - m) ** 2 for x in values) / len(values)), m


# --- contrast ----------------------------------------------------------------

def test_contrast_identity(smooth32):
    out, rec = apply_contrast(smooth32, 1.0)
    np.testing.assert_array_equal(out.data, smooth32.data)
    assert rec.score == 1.0


@pytest.mark.parametrize("gamma", [0.5, 0.8, 1.7, 2.0])
def test_contrast_binary_fixed_point(gamma):
    data = (np.random.default_rng(3).random((6, 6, 6)) > 0.5).astype(float)
    out, rec = apply_contrast(Volume(data), gamma)
    np.testing.assert_array_equal(out.data, data)
    assert rec.score == 1.0


def test_contrast_ramp_gamma2():
    v = phantoms.ramp(64)
    line = v.data[:, 0, 0]
    s_i, _ = pop_std(line)
    s_j, _ = pop_std(line ** 2)
    expected = s_i / s_j
    _, rec = apply_contrast(v, 2.0)
    assert rec.score == pytest.approx(expected, abs=1e-12)
    # continuum value sqrt(1/12) / sqrt(4/45)
    assert rec.score == pytest.approx(0.968, abs=2e-3)


@pytest.mark.parametrize("gamma", [0.49, 2.01, -1])
def test_contrast_range(smooth32, gamma):
    with pytest.raises(ParameterError):
        apply_contrast(smooth32, gamma)


# --- bias --------------------------------------------------------------------

def test_bias_center_one_matches_oracle(rng):
    data = rng.random((8, 8, 8))
    v = Volume(data)
    out, rec = apply_bias_field(v, (1, 1, 1))
    # independent field: voxel p in 1..8 sits at 28 p on the 224 grid
    p = np.arange(1, 9) * 28.0
    g = sum(np.meshgrid(*(((p - 1) / 224) ** 2,) * 3, indexing="ij"))
    j = data * g
    j = j / j.max()
    np.testing.assert_allclose(out.data, j, atol=1e-12)
    s_i, m_i = pop_std(data.ravel())
    s_j, m_j = pop_std(j.ravel())
    assert rec.score == pytest.approx(min(1.0, s_i * m_j / (s_j * m_i)), abs=1e-12)
    assert rec.score < 1


def test_bias_field_224_grid():
    g = D.bias_field((224, 224, 224), (1.0, 224.0, 112.0))
    assert g[0, 223, 111] == 0.0
    # grid point 1 on z is 111 away from the centre at 112
    assert g[223, 0, 0] == pytest.approx((223 / 224) ** 2 * 2 + (111 / 224) ** 2)


def test_bias_range(smooth32):
    with pytest.raises(ParameterError):
        apply_bias_field(smooth32, (0.5, 10, 10))
    with pytest.raises(ParameterError):
        apply_bias_field(smooth32, (10, 10, 225))


def test_bias_zero_volume():
    out, rec = apply_bias_field(Volume(np.zeros((4, 4, 4))), (5, 5, 5))
    assert not out.data.any() and rec.score == 1.0


# --- ringing -----------------------------------------------------------------

@pytest.mark.parametrize("fc", [32, 112, 224])
def test_ringing_score(step32, fc):
    _, rec = apply_gibbs_ringing(step32, fc)
    assert rec.score == fc / 224


def test_ringing_full_band_identity(step32):
    out, _ = apply_gibbs_ringing(step32, 224)
    assert np.max(np.abs(out.data - step32.data)) < 1e-5


def test_ringing_zeroes_outside_cube(step32):
    out, _ = apply_gibbs_ringing(step32, 112)
    k = np.abs(fft3_centered(out).data)
    # 32 grid, side 16: offsets beyond 8 are gone (no clipping on this phantom)
    assert out.data.min() > 0 and out.data.max() < 1
    assert k[:16 - 8].max() < 1e-9 and k[16 + 9:].max() < 1e-9
    assert k[16 - 8:16 + 9, 16 - 8:16 + 9, 16 - 8:16 + 9].max() > 1


@pytest.mark.parametrize("fc", [40, 112, 200])
def test_ringing_projection(step32, fc):
    once, _ = apply_gibbs_ringing(step32, fc)
    twice, _ = apply_gibbs_ringing(once, fc)
    assert np.max(np.abs(once.data - twice.data)) < 1e-5


@pytest.mark.parametrize("fc", [31, 225, 100.5])
def test_ringing_range(step32, fc):
    with pytest.raises(ParameterError):
        apply_gibbs_ringing(step32, fc)


# --- ghosting ----------------------------------------------------------------

def ratio_oracle(ref, img):
    fi = np.abs(np.fft.fftn(ref.data))
    fj = np.abs(np.fft.fftn(img.data))
    sig = fi > 1e-9
    return float(np.min(fj[sig] / fi[sig]))


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_ghost_ratio_oracle(rng, axis):
    v = Volume(rng.random((8, 8, 8)))
    out, rec = apply_motion_ghosting(v, 0.5, axis)
    assert rec.score == 0.5
    assert ratio_oracle(v, out) == pytest.approx(0.5, abs=1e-6)


def test_ghost_identity(smooth32):
    out, rec = apply_motion_ghosting(smooth32, 1.0, 1)
    assert np.max(np.abs(out.data - smooth32.data)) < 1e-5
    assert rec.score == 1.0


def test_ghost_is_half_fov_blend(smooth32):
    a = 0.35
    out, _ = apply_motion_ghosting(smooth32, a, 0)
    shifted = np.roll(smooth32.data, 16, axis=0)
    expected = (1 + a) / 2 * smooth32.data + (1 - a) / 2 * shifted
    np.testing.assert_allclose(out.data, expected, atol=1e-12)


def test_ghost_lower_bound_score(smooth32):
    assert apply_motion_ghosting(smooth32, 0.35, 2)[1].score == 0.35


@pytest.mark.parametrize("alpha,axis", [(0.34, 0), (1.5, 0), (0.5, 3)])
def test_ghost_range(smooth32, alpha, axis):
    with pytest.raises(ParameterError):
        apply_motion_ghosting(smooth32, alpha, axis)


# --- noise -------------------------------------------------------------------

def test_noise_zero_variance_identity(smooth32):
    out, rec = apply_rician_noise(smooth32, 0.0, 0)
    np.testing.assert_array_equal(out.data, smooth32.data)
    assert rec.score == 1.0


def test_noise_is_rician_magnitude(smooth32):
    out, rec = apply_rician_noise(smooth32, 1e-3, 99)
    r = np.random.default_rng(99)
    sd = math.sqrt(1e-3)
    n1 = r.normal(0, sd, smooth32.dims)
    n2 = r.normal(0, sd, smooth32.dims)
    expected = np.clip(np.hypot(smooth32.data + n1, n2), 0, 1)
    np.testing.assert_allclose(out.data, expected, atol=1e-15)
    mse = np.mean((expected - smooth32.data) ** 2)
    assert rec.score == pytest.approx(min(1, 10 * math.log10(1 / mse) / 100), abs=1e-12)
    assert rec.params == {"variance": 1e-3, "seed": 99}


def test_noise_seed_determinism(smooth32):
    a, _ = apply_rician_noise(smooth32, 1e-2, 5)
    b, _ = apply_rician_noise(smooth32, 1e-2, 5)
    np.testing.assert_array_equal(a.data, b.data)


@pytest.mark.parametrize("var", [1e-7, 0.02, -1e-3])
def test_noise_range(smooth32, var):
    with pytest.raises(ParameterError):
        apply_rician_noise(smooth32, var, 0)


# --- blur --------------------------------------------------------------------

def hf_oracle(a, b):
    def count(x):
        m = np.abs(np.fft.fftn(x))
        return int(np.sum(m > m.max() / 1000))
    return min(1.0, count(b) / count(a))


def test_blur_resample_identity(smooth32):
    out, rec = apply_blur(smooth32, "resample", scale=1.0)
    np.testing.assert_array_equal(out.data, smooth32.data)
    assert rec.score == 1.0


def test_blur_gaussian_impulse_monotone():
    data = np.zeros((16, 16, 16))
    data[8, 8, 8] = 1.0
    v = Volume(data)
    sharp, r1 = apply_blur(v, "gaussian", kernel=3, sigma=0.25)
    soft, r2 = apply_blur(v, "gaussian", kernel=11, sigma=5.0)
    assert r1.score == pytest.approx(hf_oracle(data, sharp.data))
    assert r2.score == pytest.approx(hf_oracle(data, soft.data))
    assert r1.score > 0.9
    assert r1.score >= r2.score
    # sigma=0.25 kernel is dominated by its centre tap
    assert sharp.data[8, 8, 8] > 0.99


def test_blur_gaussian_kernel_normalised():
    w = D.gaussian_kernel(7, 1.3)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(w, w[::-1])


@pytest.mark.parametrize("mode,kw", [
    ("resample", {"scale": 0.4}),
    ("gaussian", {"kernel": 5, "sigma": 2.0}),
])
def test_blur_constant_volume(mode, kw):
    v = Volume(np.full((10, 10, 10), 0.5))
    _, rec = apply_blur(v, mode, **kw)
    assert rec.score == 1.0


def test_blur_score_oracle(smooth32):
    out, rec = apply_blur(smooth32, "resample", scale=0.3)
    assert rec.score == pytest.approx(hf_oracle(smooth32.data, out.data))
    assert rec.score < 1


@pytest.mark.parametrize("kw", [
    {"mode": "gaussian", "kernel": 4, "sigma": 1.0},
    {"mode": "gaussian", "kernel": 13, "sigma": 1.0},
    {"mode": "gaussian", "kernel": 5, "sigma": 6.0},
    {"mode": "resample", "scale": 0.1},
    {"mode": "box", "scale": 1.0},
])
def test_blur_range(smooth32, kw):
    with pytest.raises(ParameterError):
        apply_blur(smooth32, **kw)


# --- sampling and dispatch ---------------------------------------------------

@given(st.integers(0, 2 ** 32))
def test_sample_params_in_range(seed):
    rng = np.random.default_rng(seed)
    p = sample_params(DistortionKind.CONTRAST, rng)
    assert 0.5 <= p["gamma"] <= 2
    p = sample_params(DistortionKind.BIAS, rng)
    assert all(1 <= c <= 224 for c in p["center"])
    p = sample_params(DistortionKind.RING, rng)
    assert 32 <= p["f_c"] <= 224 and isinstance(p["f_c"], int)
    p = sample_params(DistortionKind.GHOST, rng)
    assert 0.35 <= p["alpha"] <= 1 and p["axis"] in (0, 1, 2)
    p = sample_params(DistortionKind.NOISE, rng)
    assert 1e-6 <= p["variance"] <= 1e-2
    p = sample_params(DistortionKind.BLUR, rng)
    if p["mode"] == "resample":
        assert 0.2 <= p["scale"] <= 2
    else:
        assert p["kernel"] in (3, 5, 7, 9, 11) and 0.25 <= p["sigma"] <= 5


def test_sample_params_deterministic():
    for kind in DistortionKind:
        a = sample_params(kind, np.random.default_rng(42))
        b = sample_params(kind, np.random.default_rng(42))
        assert a == b


def test_blur_modes_both_sampled():
    rng = np.random.default_rng(0)
    modes = {sample_params(DistortionKind.BLUR, rng)["mode"] for _ in range(50)}
    assert modes == {"resample", "gaussian"}


def test_canonical_order():
    assert [k.value for k in DistortionKind] == ["contrast", "bias", "ring", "ghost", "noise", "blur"]


@pytest.mark.parametrize("kind", list(DistortionKind))
def test_dispatch_matches_direct(smooth32, kind):
    params = sample_params(kind, np.random.default_rng(11))
    out, rec = D.apply(kind, smooth32, params)
    assert rec.kind is kind
    assert 0 <= rec.score <= 1
    assert out.data.min() >= 0 and out.data.max() <= 1
    assert np.isfinite(out.data).all()
    again, rec2 = D.apply(kind, smooth32, rec.params)
    np.testing.assert_array_equal(out.data, again.data)
    assert rec2.score == rec.score


def test_record_round_trip():
    rec = D.DistortionRecord(DistortionKind.GHOST, {"alpha": 0.5, "axis": 1}, 0.5)
    assert D.DistortionRecord.from_dict(rec.to_dict()) == rec
    with pytest.raises(ValueError):
        D.DistortionRecord(DistortionKind.GHOST, {}, 1.5)
