import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from raptrain import (
    BLACKMAN,
    ContinuousPulse,
    EnvelopeShape,
    PulseTrain,
    Subpulse,
    SubpulseIntegrals,
    comb_train,
    digitize_matched,
    digitize_scaled,
    subpulse_integrals,
    verify_matching,
)
from raptrain.digitizer import TRAIN_COLUMNS, write_train_csv
from raptrain.pulses import continuous_detuning, continuous_rabi
from raptrain.tables import read_table


def test_strong_chirp_train_layout(strong_chirp_pulse, strong_chirp_train):
    tr = strong_chirp_train
    assert tr.n_subpulses == 100
    assert tr.regime == "matched"
    # dt = 1/99 = (T + tau); T = 100 tau
    assert tr.tau == pytest.approx(1 / 99 / 101, rel=1e-14)
    assert tr.period == pytest.approx(100 / 99 / 101, rel=1e-14)
    assert np.ptp(np.diff(tr.peak_times)) < 1e-15
    assert tr.peak_times[0] == 0 and tr.peak_times[-1] == 1.0


def test_middle_sample_is_resonant_and_strongest():
    # odd N puts a sample exactly at the ramp centre
    tr = digitize_matched(ContinuousPulse.from_area(5 * math.pi, chirp=291.6), 101, 100)
    mid = 50
    assert tr.detunings[mid] == 0.0
    assert np.argmax(tr.peak_rabis) == mid


def test_even_n_middle_pair_symmetric(strong_chirp_train):
    d = strong_chirp_train.detunings
    assert d[49] == pytest.approx(-d[50], rel=1e-12)
    assert np.argmax(strong_chirp_train.peak_rabis) in (49, 50)


def test_exact_prefactors(strong_chirp_pulse, strong_chirp_train):
    t = strong_chirp_train.peak_times
    ratio = strong_chirp_train.detunings / continuous_detuning(strong_chirp_pulse, t)
    assert np.allclose(ratio, 1 + 1 / 100, rtol=1e-14)
    inner = slice(1, -1)
    rr = strong_chirp_train.peak_rabis[inner] / continuous_rabi(strong_chirp_pulse, t[inner])
    assert np.allclose(rr, 101 / 0.42, rtol=1e-13)


def test_zero_field_source():
    src = ContinuousPulse(0.0, chirp_rate=50.0)
    tr = digitize_matched(src, 10, 5)
    assert np.all(tr.peak_rabis == 0)
    assert np.allclose(tr.detunings, continuous_detuning(src, tr.peak_times) * 1.2)
    rep = verify_matching(tr)
    assert rep.max_area_residual == 0 and rep.max_phase_residual < 1e-13
    assert np.all(digitize_scaled(src, 10, 5, 1).peak_rabis == 0)


def test_two_subpulse_example():
    flat = EnvelopeShape.sampled([(0, 1), (1, 1)])
    src = ContinuousPulse(3.0, envelope=flat)
    tr = digitize_matched(src, 2, 1)
    assert list(tr.peak_times) == [0.0, 1.0]
    # rabi(t_k) (1 + r1) / S0 with S0 = 1
    assert np.allclose(tr.peak_rabis, 3.0 * 2)
    assert tr.tau == pytest.approx(0.5)


def test_scaled_layout_example():
    tr = digitize_scaled(ContinuousPulse.from_area(math.pi), 100, 100, 1)
    assert tr.tau == pytest.approx(0.01)
    assert tr.period == pytest.approx(1.0)
    assert tr.spacing == pytest.approx(1.0)
    assert tr.peak_times[0] == pytest.approx(0.005)


@settings(max_examples=30)
@given(st.integers(2, 300), st.floats(1, 300), st.floats(0.1, 4), st.floats(-400, 400), st.floats(0, 60))
def test_matching_holds_by_construction(n, r1, r2, chirp, area):
    src = ContinuousPulse.from_area(area, chirp=chirp)
    for tr in (digitize_matched(src, n, r1), digitize_scaled(src, n, r1, r2)):
        rep = verify_matching(tr)
        scale = max(1.0, float(np.max(tr.areas)), float(np.max(np.abs(tr.period * tr.detunings))))
        assert rep.max_area_residual <= 1e-12 * scale
        assert rep.max_phase_residual <= 1e-12 * scale


@settings(max_examples=30)
@given(st.integers(2, 300), st.floats(1, 300), st.floats(-400, 400), st.floats(0, 60))
def test_regime_consistency(n, r1, chirp, area):
    # r2 = (N - 1)(1 + r1)/N gives the matched subpulse duration
    src = ContinuousPulse.from_area(area, chirp=chirp)
    a = digitize_matched(src, n, r1)
    b = digitize_scaled(src, n, r1, (n - 1) * (1 + r1) / n)
    assert b.tau == pytest.approx(a.tau, rel=1e-12)
    assert np.allclose(b.peak_rabis, a.peak_rabis, rtol=1e-12, atol=0)
    assert np.allclose(b.detunings, a.detunings, rtol=1e-12, atol=1e-300)


def test_perturbed_train_residual(strong_chirp_train):
    k = 37
    subs = list(strong_chirp_train.subpulses)
    subs[k] = replace(subs[k], peak_rabi=subs[k].peak_rabi * 1.1)
    bad = replace(strong_chirp_train, subpulses=tuple(subs))
    rep = verify_matching(bad)
    assert rep.max_area_residual == pytest.approx(0.1 * strong_chirp_train.areas[k], rel=1e-10)
    assert int(np.argmax(rep.area_residuals)) == k


def test_verify_matching_errors(comb, strong_chirp_pulse, strong_chirp_train):
    with pytest.raises(ValueError):
        verify_matching(comb)
    other = digitize_matched(strong_chirp_pulse, 50, 100)
    with pytest.raises(ValueError):
        verify_matching(replace(strong_chirp_train, sample_times=other.sample_times + other.sample_times))
    odd = replace(strong_chirp_train, sample_times=tuple(np.array(strong_chirp_train.sample_times) * 0.9))
    with pytest.raises(ValueError):
        verify_matching(odd)


def test_riemann_sum_approaches_area():
    src = ContinuousPulse.from_area(5 * math.pi, chirp=291.6)
    for n in (50, 200, 1000):
        tr = digitize_matched(src, n, 10)
        dt = 1 / (n - 1)
        # the train carries exactly the Riemann sum of the source
        assert tr.areas.sum() == pytest.approx(continuous_rabi(src, tr.peak_times).sum() * dt, rel=1e-13)
    assert digitize_matched(src, 1000, 10).areas.sum() == pytest.approx(5 * math.pi, rel=1e-6)


@pytest.mark.parametrize("n, r1", [(1, 10), (10, 0.5), (2.5, 10)])
def test_invalid_counts(n, r1):
    with pytest.raises(ValueError):
        digitize_matched(ContinuousPulse(1.0), n, r1)
    with pytest.raises(ValueError):
        digitize_scaled(ContinuousPulse(1.0), n, r1, 1.0)


def test_overlap_message():
    with pytest.raises(ValueError, match="subpulses overlap: r1 must be >= 1"):
        digitize_matched(ContinuousPulse(1.0), 10, 0.5)
    with pytest.raises(ValueError):
        digitize_scaled(ContinuousPulse(1.0), 10, 10, 0.0)


def test_train_validation():
    sp = [Subpulse(1.0, 0.0, t, 0.1) for t in (0.0, 1.0, 2.5)]
    with pytest.raises(ValueError, match="uniform"):
        PulseTrain(sp, 1.0, 10)
    with pytest.raises(ValueError, match="at least 2"):
        PulseTrain(sp[:1], 1.0, 10)
    with pytest.raises(ValueError, match="overlap"):
        PulseTrain([Subpulse(1.0, 0.0, t, 2.0) for t in (0.0, 1.0)], 1.0, 1)
    with pytest.raises(ValueError, match="share"):
        PulseTrain([Subpulse(1.0, 0.0, 0.0, 0.1), Subpulse(1.0, 0.0, 1.0, 0.2)], 1.0, 10)
    with pytest.raises(ValueError):
        Subpulse(-1.0, 0.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        Subpulse(1.0, 0.0, 0.0, 0.0)


def test_subpulse_integrals():
    assert subpulse_integrals(Subpulse(0.0, 0.0, 0.0, 0.1), 1.0) == SubpulseIntegrals(0.0, 0.0)
    assert SubpulseIntegrals(3.0, 4.0).effective_area == 5.0
    with pytest.raises(ValueError):
        SubpulseIntegrals(-1.0, 0.0)


def test_middle_subpulse_area_by_quadrature(strong_chirp_train):
    sp = strong_chirp_train.subpulses[50]
    a = integrate.quad(lambda t: sp.peak_rabi * float(BLACKMAN((t - sp.start) / sp.duration)),
                       sp.start, sp.start + sp.duration, epsabs=0, epsrel=1e-13)[0]
    si = subpulse_integrals(sp, strong_chirp_train.period)
    assert si.area == pytest.approx(a, rel=1e-11)
    assert si.phase == pytest.approx(strong_chirp_train.period * sp.detuning)


def test_comb_train_area_and_phases():
    tr = comb_train(100, 100, area=math.pi, detuning=2.0)
    assert tr.areas.sum() == pytest.approx(math.pi, rel=1e-14)
    assert np.allclose(tr.phases, 2.0 * tr.peak_times)
    assert tr.spacing == pytest.approx(1.0)
    shifted = tr.with_carrier(5.0, 2.0)
    assert np.allclose(shifted.phases, 5.0 * tr.peak_times)
    assert shifted.areas.sum() == pytest.approx(2 * math.pi)
    assert tr.scaled(0.5).areas.sum() == pytest.approx(math.pi / 2)


def test_train_csv_roundtrip(tmp_path, strong_chirp_train):
    path = write_train_csv(strong_chirp_train, tmp_path / "train.csv")
    header, rows = read_table(path)
    assert tuple(header) == TRAIN_COLUMNS
    assert len(rows) == 100
    # 17 significant digits round-trip exactly
    assert [r[2] for r in rows] == list(strong_chirp_train.peak_rabis)
    assert [r[5] for r in rows] == list(strong_chirp_train.period * strong_chirp_train.detunings)
