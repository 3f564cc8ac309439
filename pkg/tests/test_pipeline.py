import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snndetect.datagen import GenParams, gen_healthy
from snndetect.errors import ConfigError, DataError
from snndetect.pipeline import (
    AdaptivePolicy,
    DeviationSeries,
    FilterConfig,
    FixedPolicy,
    SignalSeries,
    cascade_filter,
    flag_anomalies,
    load_layer_series,
    percent_deviation,
    snn_filter,
)
from snndetect.presets import TAU_TABLE, get_preset, preset_names


def series(layers, values, condition="healthy"):
    return SignalSeries(sensor="PD1", condition=condition,
                        layers=np.asarray(layers), values=np.asarray(values, float))


# ---------------------------------------------------------------- ingestion

def test_load_direct_parse(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("layer,value\n570,1010\n571,1005\n")
    s = load_layer_series(path)
    assert s.layers.tolist() == [570, 571]
    assert s.values.tolist() == [1010.0, 1005.0]


def test_load_duplicate_layer_names_row(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("layer,value\n570,1010\n570,990\n")
    with pytest.raises(DataError, match="row 3"):
        load_layer_series(path)


def test_load_window_size(tmp_path):
    path = tmp_path / "s.csv"
    lines = ["layer,value"] + [f"{l},{1000 + l}" for l in range(570, 651)]
    path.write_text("\n".join(lines) + "\n")
    assert load_layer_series(path).layers.size == 81


def test_load_missing_column(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("layer,intensity\n570,1010\n")
    with pytest.raises(DataError, match="value"):
        load_layer_series(path)


def test_load_non_numeric_value(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("layer,value\n570,1010\n571,oops\n")
    with pytest.raises(DataError, match="row 3"):
        load_layer_series(path)


def test_load_sorts_rows_and_skips_comments(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("# seed=1 preset=x version=0\nlayer,value\n572,3\n570,1\n571,2\n")
    s = load_layer_series(path)
    assert s.layers.tolist() == [570, 571, 572]
    assert s.values.tolist() == [1.0, 2.0, 3.0]


def test_load_missing_file():
    with pytest.raises(DataError, match="does not exist"):
        load_layer_series("/nonexistent/file.csv")


def test_load_rejects_negative_values(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("layer,value\n570,-4\n")
    with pytest.raises(DataError, match="row 2"):
        load_layer_series(path)


def test_series_validation():
    with pytest.raises(DataError):
        series([570, 570], [1.0, 2.0])
    with pytest.raises(DataError):
        series([571, 570], [1.0, 2.0])
    with pytest.raises(DataError):
        series([570], [np.inf])


# ---------------------------------------------------------------- config

def test_config_presentation_must_be_multiple_of_dt():
    with pytest.raises(ConfigError):
        FilterConfig(presentation_time=0.0105)
    assert FilterConfig(presentation_time=0.01).presentation_steps == 10


def test_config_json_round_trip_and_strict_keys():
    cfg = FilterConfig(tau_in=0.004, tau_out=0.004, seed=3, stages=2)
    again = FilterConfig.from_dict(cfg.to_dict())
    assert again == cfg
    with pytest.raises(ConfigError):
        FilterConfig.from_dict({"neurons": 10, "bogus": 1})
    with pytest.raises(DataError):
        FilterConfig.from_json("not json")


def test_config_stage_sizes():
    assert FilterConfig(neurons=500, stages=2).stage_sizes() == [250, 250]
    assert FilterConfig(neurons=501, stages=2).stage_sizes() == [251, 250]
    with pytest.raises(ConfigError):
        FilterConfig(neurons=2, stages=3)


def test_preset_table_values():
    # every preset carries the shared simulation scale
    base = get_preset("cpu-pd1-33")
    assert (base.neurons, base.radius, base.dt, base.presentation_time) == (500, 1100.0, 0.001, 0.01)
    # spot checks of the shipped per-hardware time constants
    assert get_preset("cpu-pd1-33").tau_in == 0.003
    assert get_preset("cpu-pd1-66").tau_out == 0.002
    assert get_preset("cpu-bd-100").tau_in == 0.005
    assert get_preset("fpga-pd2-33").tau_in == 0.008
    assert get_preset("loihi-bd-33").tau_in == 0.02
    assert get_preset("loihi-pd2-66").tau_in == 0.008
    assert get_preset("fpga-pd1-66").stages == 2
    assert get_preset("cpu-pd1-66").stages == 1
    assert len(preset_names()) == 27
    assert all(tau > 0 for hw in TAU_TABLE.values() for s in hw.values() for tau in s.values())
    with pytest.raises(ConfigError):
        get_preset("cpu-pd1-50")
    with pytest.raises(ConfigError):
        get_preset("gpu-pd1-66")


# ---------------------------------------------------------------- filtering

@pytest.fixture(scope="module")
def cfg():
    return FilterConfig(tau_in=0.002, tau_out=0.002, seed=7)


def test_constant_series_filters_to_constant():
    # tau large enough that the per-window snapshot averages over spikes;
    # the first few layers are the synapse warm-up and are excluded
    cfg8 = FilterConfig(tau_in=0.008, tau_out=0.008, seed=7)
    s = series(range(600, 640), [550.0] * 40)
    out = snn_filter(s, cfg8)
    np.testing.assert_allclose(out.values[5:], 550.0, rtol=0.05)
    assert out.layers.tolist() == s.layers.tolist()


def test_lone_spike_is_clipped(cfg):
    values = [770.0] * 30
    values[15] = 3 * 1100.0
    s = series(range(600, 630), values)
    out = snn_filter(s, cfg)
    assert out.values.max() <= 1.1 * 1100.0


def test_cascade_single_stage_equals_snn_filter(cfg):
    s = series(range(600, 620), np.linspace(300, 900, 20))
    np.testing.assert_array_equal(cascade_filter(s, cfg, 1).values, snn_filter(s, cfg).values)


def test_cascade_constant_matches_single_stage():
    cfg8 = FilterConfig(tau_in=0.008, tau_out=0.008, seed=7)
    s = series(range(600, 660), [550.0] * 60)
    one = cascade_filter(s, cfg8, 1).values[-10:].mean()
    two = cascade_filter(s, cfg8, 2).values[-10:].mean()
    assert two == pytest.approx(one, rel=0.05)


def test_cascade_smooths_white_noise_harder():
    cfg8 = FilterConfig(tau_in=0.008, tau_out=0.008, seed=7)
    rng = np.random.default_rng(3)
    vals = np.clip(550 + 80 * rng.standard_normal(1000), 0, None)
    s = series(range(1000), vals)
    var1 = cascade_filter(s, cfg8, 1).values[50:].var()
    var2 = cascade_filter(s, cfg8, 2).values[50:].var()
    assert var2 <= var1


# ---------------------------------------------------------------- deviation

def test_deviation_identity_is_zero():
    s = series(range(570, 580), np.linspace(900, 1100, 10))
    dev = percent_deviation(s, s)
    np.testing.assert_array_equal(dev.values, 0.0)


def test_deviation_hand_value():
    h = series([570], [1000.0])
    d = series([570], [900.0], condition="defective")
    dev = percent_deviation(d, h)
    assert dev.values[0] == pytest.approx(-10.0)


def test_deviation_seven_layer_dip():
    layers = list(range(570, 651))
    h = series(layers, [1000.0] * 81)
    dvals = [1000.0] * 81
    for l in range(613, 620):
        dvals[l - 570] = 400.0
    d = series(layers, dvals, condition="defective")
    dev = percent_deviation(d, h)
    m = dev.as_dict()
    for l in range(613, 620):
        assert m[l] == pytest.approx(-60.0)
    assert sum(1 for v in m.values() if v != 0.0) == 7


def test_deviation_domain_is_intersection():
    h = series(range(570, 600), [1000.0] * 30)
    d = series(range(590, 620), [900.0] * 30, condition="defective")
    dev = percent_deviation(d, h)
    assert dev.layers.tolist() == list(range(590, 600))


def test_deviation_near_zero_healthy_is_undefined():
    h = series([570, 571, 572], [1000.0, 0.0, 1000.0])
    d = series([570, 571, 572], [900.0, 5.0, 900.0], condition="defective")
    dev = percent_deviation(d, h)
    assert dev.undefined == (571,)
    assert 571 not in dev.as_dict()


def test_deviation_requires_overlap():
    h = series([570], [1000.0])
    d = series([571], [900.0], condition="defective")
    with pytest.raises(DataError):
        percent_deviation(d, h)


# ---------------------------------------------------------------- flagging

def dev_series(mapping):
    layers = sorted(mapping)
    return DeviationSeries(layers=np.array(layers), values=np.array([mapping[l] for l in layers]))


def test_fixed_policy_no_flags_on_zero_deviation():
    dev = dev_series({l: 0.0 for l in range(570, 651)})
    report = flag_anomalies(dev, FixedPolicy(threshold_pct=5.0))
    assert report.flagged_layers == ()


def test_fixed_policy_flags_single_dip():
    mapping = {l: 0.0 for l in range(570, 651)}
    mapping[615] = -30.0
    report = flag_anomalies(dev_series(mapping), FixedPolicy(threshold_pct=5.0))
    assert report.flagged_layers == (615,)


def test_adaptive_policy_mad_threshold():
    rng = np.random.default_rng(9)
    mapping = {l: float(rng.uniform(-1.0, 1.0)) for l in range(570, 613)}
    for l in range(613, 622):
        mapping[l] = -20.0
    for l in range(622, 651):
        mapping[l] = float(rng.uniform(-1.0, 1.0))
    dev = dev_series(mapping)
    policy = AdaptivePolicy(k=6.0, calibration=(570, 608))
    report = flag_anomalies(dev, policy)
    # oracle: recompute the MAD of the calibration draw by hand
    cal = np.array([mapping[l] for l in range(570, 609)])
    mad = np.median(np.abs(cal - np.median(cal)))
    assert report.threshold_used == pytest.approx(6.0 * mad)
    assert report.flagged_layers == tuple(range(613, 622))
    assert not report.fallback_used


def test_adaptive_policy_zero_mad_falls_back():
    mapping = {l: 0.0 for l in range(570, 651)}
    mapping[615] = -30.0
    policy = AdaptivePolicy(k=6.0, calibration=(570, 608), min_threshold_pct=5.0)
    report = flag_anomalies(dev_series(mapping), policy)
    assert report.fallback_used
    assert report.threshold_used == 5.0
    assert report.flagged_layers == (615,)


def test_adaptive_policy_empty_calibration_errors():
    dev = dev_series({l: 0.0 for l in range(570, 580)})
    with pytest.raises(ConfigError):
        flag_anomalies(dev, AdaptivePolicy(calibration=(100, 200)))


@settings(max_examples=50, deadline=None)
@given(
    devs=st.lists(st.floats(min_value=-100, max_value=100), min_size=3, max_size=40),
    theta_lo=st.floats(min_value=0.5, max_value=50),
    delta=st.floats(min_value=0.1, max_value=40),
)
def test_lowering_fixed_threshold_never_removes_flags(devs, theta_lo, delta):
    dev = dev_series({i: v for i, v in enumerate(devs)})
    low = flag_anomalies(dev, FixedPolicy(threshold_pct=theta_lo))
    high = flag_anomalies(dev, FixedPolicy(threshold_pct=theta_lo + delta))
    assert set(high.flagged_layers) <= set(low.flagged_layers)


def test_flagged_layers_exist_in_both_series(cfg):
    p = GenParams(seed=21)
    healthy = gen_healthy(p)
    defective = gen_healthy(GenParams(seed=22))
    dev = percent_deviation(snn_filter(defective, cfg), snn_filter(healthy, cfg))
    report = flag_anomalies(dev, FixedPolicy(threshold_pct=1.0))
    both = set(healthy.layers.tolist()) & set(defective.layers.tolist())
    assert set(report.flagged_layers) <= both


def test_report_serializes(cfg):
    mapping = {l: 0.0 for l in range(570, 600)}
    mapping[580] = -50.0
    report = flag_anomalies(dev_series(mapping), FixedPolicy(threshold_pct=5.0))
    doc = json.dumps(report.to_dict())
    assert "580" in doc
