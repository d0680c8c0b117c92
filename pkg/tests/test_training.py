import numpy as np
import pytest

from glowgan.camera import CameraPriors, sample_cameras
from glowgan.image import LdrImage, RadianceImage
from glowgan.nn import NetConfig
from glowgan.nn.networks import init_generator
from glowgan.scenes import SceneConfig, build_ldr_dataset
from glowgan.training import TrainConfig, TrainingDiverged, _streams, interpolate, sample_hdr, train

NET = NetConfig(latent_dim=4, mapping_width=16, width=16, layers=2, height=4, img_width=4, disc_width=16)


@pytest.fixture(scope="module")
def data():
    return build_ldr_dataset(SceneConfig(height=4, width=4), CameraPriors(), 64, np.random.default_rng(0))


def _cfg(**kw):
    base = dict(net=NET, batch_size=8, steps=10, log_every=5, eval_samples=8)
    base.update(kw)
    return TrainConfig(**base)


def test_zero_steps_returns_initial_params(data):
    res = train(data, _cfg(steps=0))
    expected = init_generator(NET, _streams(0)[0])
    assert list(res.generator.params) == list(expected)
    for k in expected:
        np.testing.assert_array_equal(res.generator.params[k], expected[k])
    assert res.log == []


def test_fixed_seed_is_deterministic(data, tmp_path):
    a = train(data, _cfg(seed=3), out_dir=tmp_path / "a")
    b = train(data, _cfg(seed=3), out_dir=tmp_path / "b")
    assert a.log == b.log
    assert (tmp_path / "a" / "final.bin").read_bytes() == (tmp_path / "b" / "final.bin").read_bytes()
    c = train(data, _cfg(seed=4))
    assert c.log != a.log


def test_log_rows_have_monotone_steps(data):
    res = train(data, _cfg(steps=15))
    assert [r["step"] for r in res.log] == [5, 10, 15]
    assert set(res.log[0]) == {"step", "g_loss", "d_loss", "dr50", "dr90", "hist_chi2"}


def test_checkpoint_cadence(data, tmp_path):
    train(data, _cfg(steps=6, ckpt_every=3, log_every=0), out_dir=tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["ckpt_000003.bin", "ckpt_000006.bin", "final.bin"]


def test_cameras_drawn_per_image(data):
    calls = []

    def spy(priors, rng, n):
        calls.append(n)
        return sample_cameras(priors, rng, n)

    train(data, _cfg(steps=2, log_every=0), camera_sampler=spy)
    assert calls == [8, 8, 8, 8]


def test_vanilla_mode_bypasses_camera(data):
    calls = []
    res = train(data, _cfg(steps=2, log_every=0, mode="vanilla"), camera_sampler=lambda *a: calls.append(1))
    assert calls == []
    img = sample_hdr(res.generator, 1, np.random.default_rng(0))[0]
    assert isinstance(img, LdrImage)


def test_non_finite_camera_aborts_with_diagnostic(data):
    def broken(priors, rng, n):
        e, b, g = sample_cameras(priors, rng, n)
        return np.full(n, np.nan), b, g

    with pytest.raises(TrainingDiverged, match="step 1"):
        train(data, _cfg(steps=3, log_every=0), camera_sampler=broken)


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        TrainConfig(lr_g=0)
    with pytest.raises(ValueError):
        TrainConfig(mode="other")
    cfg = _cfg(mode="vanilla", priors=CameraPriors(sigma_e_sq=3.0))
    assert cfg.net.mode == "vanilla"
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_dataset_shape_mismatch(data):
    with pytest.raises(ValueError):
        train(data, _cfg(net=NetConfig(height=8, img_width=8)))


def test_sampling_and_interpolation(data):
    gen = train(data, _cfg(steps=0)).generator
    a = sample_hdr(gen, 1, np.random.default_rng(5))[0]
    b = sample_hdr(gen, 1, np.random.default_rng(5))[0]
    assert isinstance(a, RadianceImage) and a.data.min() > 0
    np.testing.assert_array_equal(a.data, b.data)
    z1, z2 = np.ones(4), -np.ones(4)
    frames = interpolate(gen, z1, z2, 5)
    assert len(frames) == 5
    np.testing.assert_array_equal(frames[0].data, gen.generate(z1).data)
    np.testing.assert_allclose(frames[-1].data, gen.generate(z2).data, rtol=1e-6)
    with pytest.raises(ValueError):
        sample_hdr(gen, 0, np.random.default_rng(0))
