import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwbtbd.scenario import SPEED_OF_LIGHT, SensorLayout, active_targets, load_scenario_file
from uwbtbd.synth import EchoModel, expected_delay, scan_rng, synth_scan

C = SPEED_OF_LIGHT


def test_expected_delay_examples():
    mono = SensorLayout("monostatic", ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)))
    assert expected_delay(mono, 0, (3.0, 4.0)) == pytest.approx(10 / C, rel=1e-12)
    assert expected_delay(mono, 0, (0.0, 0.0)) == 0.0
    multi = SensorLayout("multistatic", ((6.0, 0.0), (0.0, 6.0), (6.0, 6.0)), transmitter=(0.0, 0.0))
    assert expected_delay(multi, 0, (3.0, 4.0)) == pytest.approx(4 / C, rel=1e-12)


QUIET = dict(background_scale=0.0, static_clutter_level=0.0, nonstatic_clutter_rate=0.0)


def test_empty_scene_is_all_zero(minimal_spec):
    import dataclasses
    from uwbtbd.scenario import GroundTruth
    spec = dataclasses.replace(minimal_spec, truth=GroundTruth((), 10))
    for prof in synth_scan(spec, EchoModel(**QUIET), 1, scan_rng(0, 1)):
        assert not prof.samples.any()


def test_static_scene_identical_every_scan(minimal_spec):
    import dataclasses
    from uwbtbd.scenario import GroundTruth
    spec = dataclasses.replace(minimal_spec, truth=GroundTruth((), 10))
    model = EchoModel(background_scale=0.0, nonstatic_clutter_rate=0.0)
    first = synth_scan(spec, model, 1, scan_rng(0, 1))
    for scan in range(2, 6):
        for a, b in zip(first, synth_scan(spec, model, scan, scan_rng(0, scan))):
            np.testing.assert_array_equal(a.samples, b.samples)


def test_same_seed_bit_identical(minimal_spec):
    a = synth_scan(minimal_spec, EchoModel(), 4, scan_rng(11, 4))
    b = synth_scan(minimal_spec, EchoModel(), 4, scan_rng(11, 4))
    for pa, pb in zip(a, b):
        assert pa.samples.tobytes() == pb.samples.tobytes()
    c = synth_scan(minimal_spec, EchoModel(), 4, scan_rng(12, 4))
    assert any(not np.array_equal(pa.samples, pc.samples) for pa, pc in zip(a, c))


def test_profiles_nonnegative_and_sized(minimal_spec):
    for prof in synth_scan(minimal_spec, EchoModel(), 2, scan_rng(3, 2)):
        assert prof.samples.shape == (minimal_spec.params.n_c,)
        assert (prof.samples >= 0).all()


def test_scan_out_of_range(minimal_spec):
    with pytest.raises(IndexError):
        synth_scan(minimal_spec, EchoModel(), 11, scan_rng(0, 11))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), scan=st.integers(1, 10))
def test_target_argmax_near_expected_bin(minimal_spec, seed, scan):
    model = EchoModel(**QUIET, target_extent_bins=9)
    pos = active_targets(minimal_spec.truth, scan)[0]
    for n, prof in enumerate(synth_scan(minimal_spec, model, scan, scan_rng(seed, scan))):
        b0 = round(expected_delay(minimal_spec.layout, n, pos) / minimal_spec.params.sample_period)
        assert abs(int(np.argmax(prof.samples)) - b0) <= model.target_extent_bins


def test_larger_snr_scale_raises_target_bin_mean(minimal_spec):
    pos = active_targets(minimal_spec.truth, 1)[0]
    b0 = round(expected_delay(minimal_spec.layout, 0, pos) / minimal_spec.params.sample_period)
    means = []
    for scale in (32.0, 64.0, 128.0):
        model = EchoModel(snr_scale=scale)
        vals = [synth_scan(minimal_spec, model, 1, scan_rng(s, 1))[0].samples[b0] for s in range(1000)]
        means.append(np.mean(vals))
    assert means[0] < means[1] < means[2]


def test_target_out_of_range_contributes_nothing(minimal_spec):
    import dataclasses
    params = dataclasses.replace(minimal_spec.params, n_c=10)
    spec = dataclasses.replace(minimal_spec, params=params)
    for prof in synth_scan(spec, EchoModel(**QUIET), 1, scan_rng(0, 1)):
        assert not prof.samples.any()


def test_echo_model_validation():
    with pytest.raises(ValueError):
        EchoModel(target_extent_bins=0)
    with pytest.raises(ValueError):
        EchoModel(background_scale=-1.0)


def test_bundled_target_bins_exceed_three_times_background_median():
    spec = load_scenario_file("exp1_test1")
    model = spec.echo
    vals, bg = [], []
    for scan in range(1, 41, 4):
        pos = active_targets(spec.truth, scan)
        for n, prof in enumerate(synth_scan(spec, model, scan, scan_rng(5, scan))):
            for p in pos.values():
                b0 = round(expected_delay(spec.layout, n, p) / spec.params.sample_period)
                vals.append(prof.samples[b0])
            bg.append(np.median(prof.samples))
    assert np.median(vals) >= 3 * np.median(bg)
