"""Exit criteria. Each test carries ``@pytest.mark.acceptance(n, title)``;
conftest prints one pass/fail line per criterion at the end of the run."""

import json
import os
import time
from dataclasses import replace
from datetime import timedelta
from pathlib import Path

import numpy as np
import pytest

from helpers import FS, T0, lowpass_noise
from tribokit.cli import main
from tribokit.core import ZA_2115, MetaParameters, VibrationRecord, compute_fault_frequencies, default_asset
from tribokit.degrade import FeatureSeries, goodness_metrics, select_degradation_feature
from tribokit.detect import amplitudes_by_spectrum, decide, envelope_view, peak_amplitude_near, steady_state_alarm_levels
from tribokit.dsp import band_edges, squared_envelope_spectrum, wavelet_decompose
from tribokit.framework import PHASES, BearingFaultDetector, DirectoryMeasurementData, analyze_condition, default_registry
from tribokit.io import SyntheticFaultSpec, feature_series, synthesize_fault_signal, synthesize_run, write_ims_record
from tribokit.rul import adaptive_metropolis, estimate_rul

N = int(FS)


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# -- 1 ----------------------------------------------------------------------------------


@pytest.mark.acceptance(1, "kinematics of the ZA-2115 fixture")
def test_kinematics():
    compute_fault_frequencies(ZA_2115, 33.3)  # warm-up
    with Stopwatch() as sw:
        f = compute_fault_frequencies(ZA_2115, 33.3)
    assert f.bpfi == pytest.approx(297, rel=0.01)
    assert f.bpfo == pytest.approx(236, rel=0.01)
    assert 2 * f.bsf == pytest.approx(278, rel=0.01)
    assert f.bpfi + f.bpfo == 16 * 33.3
    assert sw.elapsed < 1e-3


# -- 2 ----------------------------------------------------------------------------------


@pytest.mark.acceptance(2, "wavelet banding and perfect reconstruction")
def test_wavelet_banding():
    rng = np.random.default_rng(2)
    with Stopwatch() as sw:
        assert band_edges(FS, 12)[0] == (5120.0, 10240.0)
        worst = 0.0
        for _ in range(100):
            x = rng.standard_normal(N)
            dec = wavelet_decompose(VibrationRecord(T0, FS, x), "bior6.8", 12)
            assert dec.band_edges[0] == (5120.0, 10240.0)
            worst = max(worst, np.linalg.norm(dec.reconstruction() - x) / np.linalg.norm(x))
    print(f"worst relative residual {worst:.2e}, {sw.elapsed:.2f} s")
    assert worst < 1e-8
    assert sw.elapsed < 5.0


# -- 3 ----------------------------------------------------------------------------------


@pytest.mark.acceptance(3, "end-to-end detection on a synthetic run")
def test_detection_end_to_end():
    asset = default_asset()
    with Stopwatch() as sw:
        base = SyntheticFaultSpec(fault_frequency=236.0, noise_std=0.1, slip=0.005)
        run = synthesize_run(200, fault_onset=100, base=base, onset_amplitude=0.25, seed=11)

        # fault records carry >= 5x the baseline envelope amplitude at 236 Hz
        amp = np.array([peak_amplitude_near(squared_envelope_spectrum(r), 236.0)[0] for r in run])
        ratio = amp[100:].min() / amp[:100].mean()

        detector = BearingFaultDetector()
        detector.calibrate(run[:50], asset)
        fired = [k for k in range(50, 200) if detector.detect(run[k], asset).is_faulty]
    print(f"envelope ratio {ratio:.1f}, first fire at record {fired[0] + 1}, {sw.elapsed:.1f} s")
    assert ratio >= 5
    assert 100 <= fired[0] <= 104  # records 101-105, 1-based
    assert sw.elapsed < 60.0


def band_limited_run(n=110, healthy=60, seed=5):
    """Weak impacts on a 7.5 kHz resonance under strong noise below 4 kHz."""
    rng = np.random.default_rng(seed)
    spec = SyntheticFaultSpec(fault_frequency=236.0, resonance_frequency=7500.0, noise_std=0.02, slip=0.005)
    ramp = np.r_[np.zeros(healthy), np.linspace(0.02, 3.0, n - healthy)]
    records = []
    for k in range(n):
        r = synthesize_fault_signal(
            replace(spec, amplitude=float(ramp[k]), seed=1000 + k, timestamp=spec.timestamp + k * timedelta(minutes=10))
        )
        records.append(VibrationRecord(r.timestamp, FS, r.samples + lowpass_noise(rng, N, 4000.0, 0.5)))
    return records


@pytest.mark.acceptance(3, "end-to-end detection on a synthetic run")
def test_band_limited_wavelet_not_later_than_raw():
    asset = default_asset()
    freqs = asset.fault_frequencies
    with Stopwatch() as sw:
        records = band_limited_run()
        alarms = steady_state_alarm_levels(records[:50], asset.meta)
        first = {"raw": None, "wavelet": None}
        for k in range(50, len(records)):
            amps = amplitudes_by_spectrum(envelope_view(records[k], asset.meta), freqs)
            for path, part in (("raw", slice(0, 1)), ("wavelet", slice(1, None))):
                status = decide({f: v[part] for f, v in amps.items()}, alarms.for_path(path), records[k].timestamp)
                if status.is_faulty and first[path] is None:
                    first[path] = k
    print(f"first fire: wavelet {first['wavelet']}, raw {first['raw']}, {sw.elapsed:.1f} s")
    assert first["wavelet"] is not None and first["wavelet"] >= 60
    assert first["raw"] is None or first["wavelet"] <= first["raw"]
    assert sw.elapsed < 60.0


# -- 4 ----------------------------------------------------------------------------------


@pytest.mark.acceptance(4, "goodness-based feature selection")
def test_selection():
    with Stopwatch() as sw:
        t = np.arange(300) / 6
        rng = np.random.default_rng(4)
        cands = [
            FeatureSeries(1, t, np.exp(0.03 * t)),
            FeatureSeries(2, t, 0.5 + 0.1 * t),
            FeatureSeries(3, t, rng.standard_normal(t.size)),
        ]
        report = select_degradation_feature(cands, MetaParameters(deg_param_weights=(1, 1, 1)))
        ramp_mon = goodness_metrics(cands[1], 20)[1]
    assert report.scores[1] > report.scores[3]
    assert ramp_mon == 1.0 and report.metrics[2][1] == 1.0
    for m in report.metrics.values():
        assert all(0 <= v <= 1 for v in m)
    assert sw.elapsed < 1.0


# -- 5 ----------------------------------------------------------------------------------


@pytest.mark.acceptance(5, "RUL recovery and sampler accuracy")
def test_rul_recovery():
    analytic = np.log(3.5) / 0.02
    with Stopwatch() as sw:
        t = np.linspace(0, 50, 500)
        x = np.exp(0.02 * t) * (1 + 0.05 * np.random.default_rng(5).standard_normal(t.size))
        series = FeatureSeries(6, t, x, start=T0)
        meta = MetaParameters(alarm_level_rul=3.5)
        r1 = estimate_rul(series, meta, seed=17)
        r2 = estimate_rul(series, meta, seed=17)

        post = adaptive_metropolis(lambda p: -0.5 * float(p @ p), (0.5, -0.5), 50_000, seed=3)
    print(f"q05/q50/q95 = {r1.q05:.2f}/{r1.q50:.2f}/{r1.q95:.2f} h vs {analytic:.2f} h, {sw.elapsed:.1f} s")
    assert r1.q50 == pytest.approx(analytic, rel=0.05)
    assert r1.q05 <= r1.q50 <= r1.q95
    assert r1.to_json() == r2.to_json()
    assert np.array_equal(r1.posterior.samples, r2.posterior.samples)
    np.testing.assert_allclose(post.samples.mean(axis=0), 0.0, atol=0.05)
    cov = np.cov(post.samples.T)
    np.testing.assert_allclose(np.diag(cov), 1.0, rtol=0.1)
    assert abs(cov[0, 1]) < 0.1
    assert sw.elapsed < 120.0


# -- 6 ----------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    base = SyntheticFaultSpec(noise_std=0.1)
    for name, run in (
        ("healthy", synthesize_run(30, None, base, seed=1)),
        ("faulty", synthesize_run(40, 25, base, onset_amplitude=0.5, growth=0.05, seed=2)),
    ):
        for r in run:
            write_ims_record(root / name, [r])
    return root


@pytest.mark.acceptance(6, "pipeline contract")
def test_pipeline_contract(pipeline_runs, tmp_path, capsys):
    meta = MetaParameters(n_simulations=3000)
    healthy = analyze_condition("ims-za2115", default_registry(), pipeline_runs / "healthy", meta, seed=1, baseline_count=20)
    assert healthy.rul is None and healthy.timings.rul_skipped
    assert "rulEstimation" not in healthy.timings.as_dict()
    assert "rul" not in healthy.to_dict()

    faulty = analyze_condition("ims-za2115", default_registry(), pipeline_runs / "faulty", meta, seed=1, baseline_count=20)
    assert faulty.fault_status.is_faulty and faulty.rul is not None
    t = faulty.timings.as_dict()
    assert all(t[p] > 0 for p in PHASES)

    ini = tmp_path / "meta.ini"
    ini.write_text("[meta]\nnOfSimulations = 3000\n")
    code = main([
        "perf", "--data-dir", str(pipeline_runs / "faulty"), "--meta-config", str(ini),
        "--out", str(tmp_path), "--runs", "2", "--baseline-count", "20",
    ])
    out = capsys.readouterr().out
    assert code == 0
    rows = (tmp_path / "perf.tsv").read_text().splitlines()
    assert [r.split("\t")[0] for r in rows[1:]] == list(PHASES)
    assert all(r.split("\t")[3] == "2" for r in rows[1:])
    lines = out.splitlines()
    assert lines[0].startswith("2 RUNS / FUNCTION")
    for label in ("Mean [s]", "Std [s]"):
        row = next(ln for ln in lines if ln.startswith(label))
        assert len(row.split()[2:]) == 4  # one cell per phase


# -- 7 ----------------------------------------------------------------------------------

IMS_DIR = os.environ.get("TRIBOKIT_IMS_DIR")
REFERENCE_SCORES = {1: 0.438, 2: 0.342, 3: 0.418, 4: 0.348, 5: 0.424, 6: 0.453, 7: 0.359, 8: 0.328, 9: 0.270, 10: 0.235}
IMS_CASES = [
    # (run directory, channel, fault type, detection day)
    ("1st_test", 4, "BPFI", 31.5),
    ("2nd_test", 0, "BPFO", 3.8),
]


def _ims_run(name):
    if not IMS_DIR or not (Path(IMS_DIR) / name).is_dir():
        pytest.skip(f"IMS dataset {name} not found; set TRIBOKIT_IMS_DIR")
    return Path(IMS_DIR) / name


@pytest.mark.dataset
@pytest.mark.acceptance(7, "IMS dataset reproduction (optional)")
@pytest.mark.parametrize("name, channel, fault_type, day", IMS_CASES)
def test_ims_detection_day(name, channel, fault_type, day):
    path = _ims_run(name)
    asset = replace(default_asset(), channel=channel)
    records = DirectoryMeasurementData(path).records(channel)
    detector = BearingFaultDetector()
    detector.calibrate(records[:50], asset)
    status = next(s for s in (detector.detect(r, asset) for r in records[50:]) if s.is_faulty)
    days = (status.detection_time - records[0].timestamp).total_seconds() / 86400
    print(f"{name}: {status.fault_type} at {days:.2f} days")
    assert status.fault_type == fault_type
    assert days == pytest.approx(day, abs=1.0)


@pytest.mark.dataset
@pytest.mark.acceptance(7, "IMS dataset reproduction (optional)")
def test_ims_goodness_scores():
    path = _ims_run("1st_test")
    asset = replace(default_asset(), channel=4)
    outcome = analyze_condition(asset.asset_id, default_registry([asset]), path, asset.meta, seed=0)
    series = feature_series(outcome.features)
    report = select_degradation_feature(series, MetaParameters(deg_param_weights=(1, 1, 1)))
    print(json.dumps(report.scores))
    assert report.selected_feature_id == 6
    for fid, score in REFERENCE_SCORES.items():
        assert report.scores[fid] == pytest.approx(score, abs=0.05)
