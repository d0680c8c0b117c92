import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glowgan.camera import (
    MEAN_CRF,
    CameraPriors,
    CrfParams,
    blend_hdr,
    camera_project,
    crf_apply,
    crf_invert,
    ev_sweep,
    expose_and_clip,
    merge_exposures,
    preview_tonemap,
    read_merge_manifest,
    sample_cameras,
    sample_crf,
    sample_exposure,
    saturation_mask,
)
from glowgan.image import LdrImage, RadianceImage, write_ppm

mpmath.mp.dps = 40


def mp_crf(x, beta, gamma):
    x, beta, gamma = mpmath.mpf(x), mpmath.mpf(beta), mpmath.mpf(gamma)
    xg = x**gamma
    return (1 + beta) * xg / (beta + xg)


def mp_crf_inv(y, beta, gamma):
    y, beta, gamma = mpmath.mpf(y), mpmath.mpf(beta), mpmath.mpf(gamma)
    return (y * beta / (1 + beta - y)) ** (1 / gamma)


def rad(values):
    return RadianceImage(np.asarray(values, dtype=np.float64))


# -- response curve -------------------------------------------------------------


def test_crf_endpoints():
    for p in (MEAN_CRF, CrfParams(0.3, 1.4), CrfParams(2.0, 0.5)):
        assert crf_apply(0.0, p) == 0.0
        assert crf_apply(1.0, p) == 1.0
        assert crf_invert(0.0, p) == 0.0
        assert crf_invert(1.0, p) == 1.0


def test_crf_half_matches_extended_precision():
    expected = float(mp_crf("0.5", "0.6", "0.9"))
    assert crf_apply(0.5, MEAN_CRF) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.7548, abs=5e-5)


def test_crf_invert_example():
    y = float(mp_crf("0.5", "0.6", "0.9"))
    assert crf_invert(y, MEAN_CRF) == pytest.approx(0.5, abs=1e-12)
    assert crf_invert(0.7548, MEAN_CRF) == pytest.approx(0.5, abs=1e-4)


def test_crf_rejects_out_of_range():
    with pytest.raises(ValueError):
        crf_apply(1.2, MEAN_CRF)
    with pytest.raises(ValueError):
        crf_apply(-0.1, MEAN_CRF)
    with pytest.raises(ValueError):
        CrfParams(0.0, 1.0)


def test_crf_roundtrip_over_random_params():
    rng = np.random.default_rng(3)
    grid = np.linspace(0, 1, 1000)
    for _ in range(100):
        beta, gamma = sample_crf(CameraPriors(), rng).__dict__.values()
        p = CrfParams(beta, gamma)
        assert np.max(np.abs(crf_apply(crf_invert(grid, p), p) - grid)) <= 1e-6
        assert np.max(np.abs(crf_invert(crf_apply(grid, p), p) - grid)) <= 1e-6
        assert np.all(np.diff(crf_apply(grid, p)) > 0)


# -- exposure and projection ------------------------------------------------------


def test_expose_and_clip_examples():
    img = rad([[0.1, 0.9]])
    np.testing.assert_array_equal(expose_and_clip(img, 0).data, img.data)
    assert expose_and_clip(rad([[0.25]]), 2).data.item() == 0.5
    assert expose_and_clip(rad([[4.0]]), 0).data.item() == 1.0


def test_camera_project_examples():
    for p in (MEAN_CRF, CrfParams(0.2, 1.3)):
        assert camera_project(rad([[4.0]]), 0, p).data.item() == 1.0
    expected = float(mp_crf("0.5", "0.6", "0.9"))
    assert camera_project(rad([[0.25]]), 2, MEAN_CRF).data.item() == pytest.approx(expected, abs=1e-7)
    assert np.all(camera_project(rad(np.zeros((3, 3, 3))), 1.3, MEAN_CRF).data == 0)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0, 1e4),
    st.floats(-10, 10),
    st.floats(0, 5),
    st.floats(0.1, 2.0),
    st.floats(0.3, 2.0),
)
def test_camera_project_bounded_and_monotone_in_exposure(r, e, de, beta, gamma):
    p = CrfParams(beta, gamma)
    a = camera_project(rad([[r]]), e, p).data.item()
    b = camera_project(rad([[r]]), e + de, p).data.item()
    assert 0.0 <= a <= 1.0
    assert b >= a


# -- priors -------------------------------------------------------------------------------


def test_sampling_degenerate_and_fixed():
    rng = np.random.default_rng(0)
    assert all(sample_exposure(CameraPriors(sigma_e_sq=0.0), rng) == 0.0 for _ in range(10))
    fixed = CameraPriors(crf_mode="fixed")
    assert all(sample_crf(fixed, rng) == CrfParams(0.6, 0.9) for _ in range(10))
    e, b, g = sample_cameras(fixed, rng, 5)
    assert np.all(b == 0.6) and np.all(g == 0.9)


def test_exposure_sample_moments():
    rng = np.random.default_rng(42)
    priors = CameraPriors(sigma_e_sq=1.0)
    e = np.array([sample_exposure(priors, rng) for _ in range(100_000)])
    assert abs(e.mean()) <= 0.02
    assert abs(e.var() - 1.0) <= 0.03


def test_crf_samples_truncated_and_sd_not_variance():
    rng = np.random.default_rng(5)
    wide = CameraPriors(beta_sd=0.5, gamma_sd=0.5)
    _, b, g = sample_cameras(wide, rng, 20_000)
    assert b.min() > 0.05 and g.min() > 0.05
    _, b, g = sample_cameras(CameraPriors(), rng, 20_000)
    assert np.std(b) == pytest.approx(0.1, rel=0.05)
    assert np.std(g) == pytest.approx(0.1, rel=0.05)


def test_cameras_are_independent_per_image():
    e, b, g = sample_cameras(CameraPriors(), np.random.default_rng(0), 64)
    assert len(set(np.round(e, 12))) == 64
    assert len(set(np.round(b, 12))) == 64


# -- mask and blend -----------------------------------------------------------------------


def test_mask_ramp_examples():
    ldr = LdrImage(np.array([[[1, 1, 1], [0.97, 0.2, 0.1], [0.5, 0.985, 0.0], [0.3, 0.3, 0.3]]]))
    m = saturation_mask(ldr, 0.97)
    assert m[0, 0] == 1.0
    assert m[0, 1] == pytest.approx(0.0, abs=1e-6)
    assert m[0, 2] == pytest.approx(0.5, abs=1e-5)
    assert m[0, 3] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_mask_zero_below_tau_one_at_peak(px):
    m = saturation_mask(LdrImage(np.array([[px]])), 0.97)[0, 0]
    peak = np.float32(max(px))
    assert 0.0 <= m <= 1.0
    if peak < 0.97:
        assert m == 0.0
    if peak == 1.0:
        assert m == 1.0


def test_blend_identities():
    rng = np.random.default_rng(2)
    l = LdrImage(rng.uniform(0, 0.9, (4, 4, 3)))
    r = rad(rng.exponential(2.0, (4, 4, 3)))
    out = blend_hdr(l, r, 1.5, MEAN_CRF)
    np.testing.assert_array_equal(out.data, RadianceImage(crf_invert(l.data.astype(np.float64), MEAN_CRF)).data)

    sat = LdrImage(np.ones((4, 4, 3)))
    out = blend_hdr(sat, r, 1.5, MEAN_CRF)
    np.testing.assert_allclose(out.data, r.data * 2 ** 0.75, rtol=1e-6)


def test_blend_half_mask_pixel():
    l = LdrImage(np.full((1, 1, 3), 0.985))
    r = rad(np.full((1, 1, 3), 2.0))
    expected = 0.5 * 2 + 0.5 * float(mp_crf_inv(float(np.float32(0.985)), "0.6", "0.9"))
    m = saturation_mask(l)[0, 0]
    assert m == pytest.approx(0.5, abs=1e-5)
    out = blend_hdr(l, r, 0.0, MEAN_CRF).data[0, 0, 0]
    direct = m * 2 + (1 - m) * float(mp_crf_inv(float(np.float32(0.985)), "0.6", "0.9"))
    assert out == pytest.approx(direct, rel=1e-6)
    assert out == pytest.approx(expected, rel=1e-4)


def test_blend_literal_factor_flag_and_shape_check():
    l = LdrImage(np.ones((1, 1, 3)))
    r = rad(np.full((1, 1, 3), 2.0))
    assert blend_hdr(l, r, 3.0, MEAN_CRF, literal_factor=True).data.max() == pytest.approx(6.0)
    with pytest.raises(ValueError):
        blend_hdr(l, rad(np.ones((2, 1, 3))), 0.0, MEAN_CRF)


# -- exposure merging ------------------------------------------------------------------------


def _stack(radiance, exposures, p=MEAN_CRF):
    return [(camera_project(radiance, e, p), e) for e in exposures]


def test_merge_single_value():
    stack = _stack(rad(np.full((1, 1, 3), 0.3)), [-2, 0, 2])
    assert merge_exposures(stack, MEAN_CRF).data.max() == pytest.approx(0.3, abs=1e-3)


def test_merge_zero():
    stack = _stack(rad(np.zeros((2, 2, 3))), [-2, 0, 2])
    assert np.all(merge_exposures(stack, MEAN_CRF).data == 0)


def test_merge_bright_value():
    # per-exposure brute-force inversion: only e = -8 is unsaturated
    per = [crf_invert(float(camera_project(rad([[8.0]]), e, MEAN_CRF).data.item()), MEAN_CRF) / 2 ** (e / 2) for e in (-8,)]
    assert per[0] == pytest.approx(8.0, rel=1e-5)
    stack = _stack(rad(np.full((1, 1, 3), 8.0)), [-8, -6, -4])
    assert merge_exposures(stack, MEAN_CRF).data.max() == pytest.approx(8.0, rel=0.01)


def test_merge_all_saturated_falls_back_to_shortest_exposure():
    stack = _stack(rad(np.full((1, 1, 1), 100.0)), [0, 2])
    assert merge_exposures(stack, MEAN_CRF).data.item() == pytest.approx(1.0, rel=1e-3)


def test_merge_errors():
    with pytest.raises(ValueError):
        merge_exposures([], MEAN_CRF)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 1.5), st.floats(0.5, 1.4))
def test_merge_recovers_radiance_within_one_percent(seed, beta, gamma):
    rng = np.random.default_rng(seed)
    p = CrfParams(beta, gamma)
    r = rad(np.exp2(rng.uniform(-6, 6, (6, 6, 3))))
    exps = [-4, -2, 0, 2, 4]
    stack = _stack(r, exps, p)
    merged = merge_exposures(stack, p).data.astype(np.float64)
    ldr = np.stack([s[0].data for s in stack])
    ok = np.any(ldr < 1 - 0.5 / 255, axis=0)
    rel = np.abs(merged - r.data) / r.data
    assert np.all(rel[ok] <= 0.01)


def test_merge_manifest(tmp_path):
    r = rad(np.full((2, 2, 3), 0.4))
    rows = ["path,e"]
    for i, e in enumerate([-2, 0, 2]):
        write_ppm(camera_project(r, e, MEAN_CRF), tmp_path / f"{i}.ppm")
        rows.append(f"{i}.ppm,{e}")
    (tmp_path / "stack.csv").write_text("\n".join(rows) + "\n")
    stack = read_merge_manifest(tmp_path / "stack.csv")
    assert [e for _, e in stack] == [-2.0, 0.0, 2.0]
    assert merge_exposures(stack, MEAN_CRF).data.mean() == pytest.approx(0.4, rel=0.02)


# -- display --------------------------------------------------------------------------------


def test_preview_tonemap_examples():
    out = preview_tonemap(rad([[0.0, 1.0, 1e30]])).data[0, :, 0]
    assert out[0] == 0.0
    assert out[1] == pytest.approx(float(mpmath.mpf("0.5") ** (1 / mpmath.mpf("2.2"))), rel=1e-6)
    assert out[1] == pytest.approx(0.7297, abs=1e-4)
    assert out[2] == pytest.approx(1.0, abs=1e-6)


def test_ev_sweep_examples():
    r = rad(np.linspace(0.01, 1.0, 12).reshape(2, 2, 3))
    (l0,) = ev_sweep(r, [0])
    np.testing.assert_allclose(l0.data, crf_apply(r.data.astype(np.float64), MEAN_CRF), rtol=1e-6)
    (lm1,) = ev_sweep(r, [-1])
    np.testing.assert_allclose(lm1.data, crf_apply(r.data.astype(np.float64) / 2, MEAN_CRF), rtol=1e-6)


def test_ev_sweep_emitter_stays_saturated():
    r = rad(np.array([[0.01, 32.0]]))
    frames = ev_sweep(r, range(-3, 4))
    assert all(f.data[0, 1, 0] == 1.0 for f in frames)
    assert ev_sweep(r, [-5])[0].data[0, 1, 0] == pytest.approx(1.0)
    assert ev_sweep(r, [-6])[0].data[0, 1, 0] < 1.0
