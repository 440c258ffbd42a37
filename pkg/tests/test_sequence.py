import dataclasses
import math

import numpy as np
import pytest

from echoform.config import ConfigErrors, ExperimentSpec, PulseSpec, SpatialSection
from echoform.dynamics import MHZ, US, AtomParams, DriveSegment
from echoform.grids import (FWHM_TO_SIGMA, build_spatial_profile,
                            build_spectral_grid)
from echoform.presets import fig1_spec, fig3_spec, run_spec
from echoform.sequence import (PulseEvent, PulseTimeline,
                               UndefinedEfficiencyError, analyze,
                               build_timeline, echo_times, efficiency,
                               emissive_filter, extract_amplitude,
                               simulate_ensemble, simulate_group)

PI = math.pi


def half_pi_timeline(total=4.0, dt=0.1):
    return PulseTimeline([PulseEvent("D", 0.1 * US,
                                     DriveSegment.from_area(PI / 2), False)],
                         total * US, dt * US)


def two_pulse(t0, t1):
    seg = DriveSegment.from_area(PI)
    return PulseTimeline([PulseEvent("D", t0 * US, seg), PulseEvent("R", t1 * US, seg)],
                         2 * t1 * US + 1e-6)


# ------------------------------------------------------------ timelines

def test_two_pulse_preset_timeline():
    tl = build_timeline(fig1_spec("d"))
    assert [e.name for e in tl.events] == ["D", "R"]
    assert [round(e.start / US, 9) for e in tl.events] == [0.1, 2.1]
    assert all(e.segment.duration == pytest.approx(0.1 * US) for e in tl.events)


def test_drpe_preset_timeline():
    tl = build_timeline(fig3_spec())
    assert [round(e.start / US, 9) for e in tl.events] == [0.1, 3.1, 9.1]
    assert tl.n_samples == 131


def test_overlap_rejected():
    seg = DriveSegment.from_area(PI)
    with pytest.raises(ValueError, match="D and R1"):
        PulseTimeline([PulseEvent("D", 0.1 * US, seg),
                       PulseEvent("R1", 0.15 * US, seg)], 5 * US)
    spec = ExperimentSpec(pulses=[PulseSpec("D", 0.1, area_pi=0.5),
                                  PulseSpec("R1", 0.15, area_pi=1.0)])
    with pytest.raises(ConfigErrors) as info:
        build_timeline(spec)
    assert "D and R1" in str(info.value)


def test_echo_times():
    assert [round(t / US, 9) for t in echo_times(two_pulse(0.1, 2.1))] == [4.1]
    assert [round(t / US, 9) for t in echo_times(build_timeline(fig3_spec()))] \
        == [6.1, 12.1]
    assert echo_times(two_pulse(0.0, 1.7))[0] == pytest.approx(3.4 * US)
    with pytest.raises(ValueError):
        echo_times(half_pi_timeline())


def test_compiled_steps_cover_timeline():
    tl = build_timeline(fig3_spec())
    st = tl.compile()
    assert st.dur.sum() == pytest.approx(13.0 * US, abs=1e-15)
    assert np.array_equal(st.rec[st.rec >= 0], np.arange(1, 131))
    assert st.rabi.max() == pytest.approx(5.0 * MHZ)


# ------------------------------------------------------------ single group

def test_resonant_group_holds_coherence():
    tr = simulate_group(half_pi_timeline(), 1.0, AtomParams(0.0))
    after = tr.times >= 0.2 * US - 1e-15
    np.testing.assert_allclose(np.abs(tr.im_rho12[after]), 0.5, atol=1e-12)
    assert tr.im_rho12[0] == 0.0


def test_detuned_group_phase_rotation():
    det = 0.5 * MHZ
    tr = simulate_group(half_pi_timeline(dt=0.05), 1.0, AtomParams(det))
    rho = tr.re_rho12 + 1j * tr.im_rho12
    k0 = int(round(0.2 / 0.05))
    for k in range(k0, len(tr.times)):
        want = rho[k0] * np.exp(-1j * det * (tr.times[k] - tr.times[k0]))
        assert abs(rho[k] - want) < 1e-10


def test_group_purity_conserved():
    tl = build_timeline(fig3_spec())
    for g in (1.0, 0.4):
        tr = simulate_group(tl, g, AtomParams(0.83 * MHZ))
        assert np.max(np.abs(tr.purity - 1)) <= 1e-9


def test_group_rejects_bad_amplitude():
    with pytest.raises(ValueError):
        simulate_group(half_pi_timeline(), 0.0)


# ------------------------------------------------------------ ensembles

def test_free_induction_decay_envelope():
    tl = half_pi_timeline(total=1.0, dt=0.01)
    spec = build_spectral_grid(281, 10e3, 1.2e6)
    res = simulate_ensemble(tl, build_spatial_profile("uniform", 1), spec)
    k0 = 20  # end of the pulse
    c = np.abs(res.total_im_rho12)
    assert c[k0] > 0.4
    # a pi/2 pulse of length T dephases like free evolution for 2T/pi
    s = 2 * PI * 1.2e6 * FWHM_TO_SIGMA
    lead = 2 * 0.1 * US / PI
    for tau_us in (0.1, 0.2, 0.3, 0.5, 0.8):
        tau = tau_us * US
        pred = math.exp(-0.5 * s * s * ((tau + lead) ** 2 - lead ** 2))
        got = c[k0 + int(round(tau_us / 0.01))] / c[k0]
        assert abs(got - pred) < 0.02


def test_totals_are_group_sums(fig3_focus):
    res = fig3_focus.result
    np.testing.assert_allclose(res.total_im_rho12,
                               res.per_group_im_rho12.sum(axis=0), atol=1e-15)
    assert res.per_group_im_rho12.shape == (41, 131)


def test_two_pulse_revival(fig1_runs):
    run = fig1_runs["d"].run
    data = extract_amplitude(run.result, 0.2 * US)
    echo = extract_amplitude(run.result, 4.1 * US)
    assert abs(echo) == pytest.approx(abs(data), rel=0.02)
    assert efficiency(echo, data) == pytest.approx(1.0, abs=0.02)


def test_data_coherence_dephased_before_echo(fig1_runs):
    # Flipping the data phase flips every term linear in the data coherence
    # and leaves the free decay of the rephasing pulse (driven by the
    # population) unchanged, so the two can be separated.
    spec = fig1_spec("d")
    flipped = dataclasses.replace(spec, pulses=[
        dataclasses.replace(spec.pulses[0], phase_pi=1.0), spec.pulses[1]])
    a_run = fig1_runs["d"].run
    b_run = run_spec(flipped)
    data = abs(a_run.report.data_amplitude)
    for t in (1.5, 3.0):
        a = extract_amplitude(a_run.result, t * US)
        b = extract_amplitude(b_run.result, t * US)
        assert abs(a - b) / 2 < 0.01 * data
    # before the rephasing pulse nothing but data coherence exists
    a = extract_amplitude(a_run.result, 1.5 * US)
    b = extract_amplitude(b_run.result, 1.5 * US)
    assert abs(a + b) < 1e-12 * data


def test_fig1_efficiencies(fig1_runs):
    assert fig1_runs["dr"].efficiency == pytest.approx(0.70, abs=0.05)
    assert 0.40 <= fig1_runs["r"].efficiency <= 0.55


def test_uniform_pi_pi_second_echo_absorptive():
    spec = ExperimentSpec(spatial=SpatialSection(mode="uniform", n_groups=1),
                          pulses=[PulseSpec("D", 0.1, area_pi=0.5),
                                  PulseSpec("R1", 3.1, area_pi=1.0),
                                  PulseSpec("R2", 9.1, area_pi=1.0)])
    run = run_spec(spec)
    e2 = extract_amplitude(run.result, 12.1 * US)
    assert e2 < 0
    assert abs(e2) == pytest.approx(abs(run.report.data_amplitude), rel=0.05)
    assert not run.report.emissive_mask.any()
    assert run.report.e2_eff == 0.0
    assert run.report.efficiency == 0.0


def test_extract_out_of_range(fig3_focus):
    with pytest.raises(ValueError):
        extract_amplitude(fig3_focus.result, 14.0 * US)
    with pytest.raises(ValueError):
        extract_amplitude(fig3_focus.result, -1.0 * US)


def test_extract_with_mask(fig3_focus):
    res = fig3_focus.result
    mask = np.zeros(41, dtype=bool)
    mask[[3, 20]] = True
    k = res.index_of(12.1 * US)
    assert extract_amplitude(res, 12.1 * US, mask) == pytest.approx(
        res.per_group_im_rho12[3, k] + res.per_group_im_rho12[20, k], abs=1e-15)


# ------------------------------------------------------------ emissive filter

def test_emissive_filter_basics():
    mask, total = emissive_filter([0.2, -0.1, 0.0, 0.3])
    assert mask.tolist() == [True, False, False, True]
    assert total == pytest.approx(0.5)
    mask, total = emissive_filter([-1.0, -2.0])
    assert not mask.any() and total == 0.0


def test_fig3_mask_follows_area_window(fig3_focus):
    rep = fig3_focus.report
    G = fig3_focus.result.amplitudes
    e2 = rep.per_group_echo[-1]
    # outermost groups carry only residual coherence of order 1e-5
    big = np.abs(e2) >= 1e-3 * np.abs(e2).max()
    assert big.sum() >= 30
    assert np.array_equal(rep.emissive_mask[big], G[big] < 0.625)
    edge = np.abs(fig3_focus.result.positions[G < 0.625]).min()
    assert edge == pytest.approx(0.97, abs=0.1)


def test_small_areas_all_emissive():
    run = run_spec(fig3_spec(0.5))
    e2 = run.report.per_group_echo[-1]
    big = np.abs(e2) >= 1e-3 * np.abs(e2).max()
    assert run.report.emissive_mask[big].all()
    assert run.report.efficiency == pytest.approx(0.26, abs=0.04)


def test_efficiency_values():
    assert efficiency(-0.3, 0.6) == 0.5
    with pytest.raises(UndefinedEfficiencyError):
        efficiency(0.1, 0.0)
    with pytest.raises(ZeroDivisionError):
        efficiency(0.1, 0.0)


# ------------------------------------------------------------ invariants

@pytest.mark.parametrize("which", ["d", "r", "dr", "fig3"])
def test_echo_peak_at_analytic_time(which, fig1_runs, fig3_focus):
    run = fig3_focus if which == "fig3" else fig1_runs[which].run
    peaked = analyze(run.result, run.timeline, peak_search=True)
    for a, b in zip(peaked.sample_index, run.report.sample_index):
        assert abs(a - b) <= 1


def test_weak_data_linearity():
    amps = {}
    for area in (0.05, 0.1):
        spec = fig3_spec(1.0).with_pulse_area(["D"], area)
        rep = run_spec(spec).report
        amps[area] = (rep.amplitudes[0], rep.amplitudes[1], rep.data_amplitude)
    e1a, e2a, da = amps[0.05]
    e1b, e2b, db = amps[0.1]
    for lo, hi in ((e1a, e1b), (e2a, e2b)):
        assert hi / lo == pytest.approx(2.0, rel=0.01)
        # relative to the data coherence, which carries the sin of the area
        assert (hi / lo) / (db / da) == pytest.approx(1.0, abs=0.01)


def test_worker_count_independence():
    tl = build_timeline(fig3_spec(0.75))
    sp = build_spatial_profile()
    sg = build_spectral_grid(61, 40e3, 1.2e6)
    ref = simulate_ensemble(tl, sp, sg, workers=1)
    for w in (2, 3, 8, 64):
        res = simulate_ensemble(tl, sp, sg, workers=w)
        assert res.total_im_rho12.tobytes() == ref.total_im_rho12.tobytes()
        assert res.per_group_rho22.tobytes() == ref.per_group_rho22.tobytes()


def test_worker_env(monkeypatch):
    from echoform.sequence import worker_count
    monkeypatch.setenv("ECHOFORM_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.delenv("ECHOFORM_THREADS")
    assert worker_count() == 1
