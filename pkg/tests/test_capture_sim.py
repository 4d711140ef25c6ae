import math

import numpy as np
import pytest

from a2gsounder.array_geometry import PatternParams, build_cylindrical_array
from a2gsounder.capture_sim import (AttenuatorModel, build_system_response,
                                    ideal_system_response, simulate_b2b,
                                    simulate_snapshot)
from a2gsounder.channel_synth import Scene, synthesize_paths
from a2gsounder.waveform import SPEED_OF_LIGHT, TonePlan

PLAN = TonePlan(tone_count=128)


def los_paths(distance=12.0):
    scene = Scene(facets=(), rx_position=[0.0, 0.0, 0.0])
    return synthesize_paths(scene, [distance, 0.0, 0.0], 3.5e9)


class TestSystemResponse:
    def test_seeded_build_contracts(self):
        sys_resp = build_system_response(PLAN, 32, seed=4)
        mags_db = 20 * np.log10(np.abs(sys_resp.common_chain))
        assert np.max(np.abs(mags_db)) <= 1.5 + 1e-9
        assert np.all(np.abs(sys_resp.common_chain) > 0)
        port_db = 20 * np.log10(np.abs(sys_resp.per_port_gain))
        assert np.max(np.abs(port_db)) <= 3.0
        again = build_system_response(PLAN, 32, seed=4)
        np.testing.assert_array_equal(sys_resp.common_chain, again.common_chain)

    def test_drift_is_identity_when_disabled(self):
        sys_resp = ideal_system_response(PLAN, 8)
        assert sys_resp.drift(0) == 1.0 + 0.0j
        assert sys_resp.drift(197) == 1.0 + 0.0j

    def test_drift_streams_differ_between_meas_and_b2b(self):
        sys_resp = build_system_response(PLAN, 8, seed=1,
                                         phase_drift_deg=1.0, amplitude_jitter_db=0.01)
        assert sys_resp.drift(3, "meas") != sys_resp.drift(3, "b2b")
        assert sys_resp.drift(3, "meas") == sys_resp.drift(3, "meas")


class TestSimulateSnapshot:
    def test_single_path_linear_phase_per_port(self):
        geom = build_cylindrical_array(2, 1, 0.05, 0.04)
        paths = los_paths(9.0)
        system = ideal_system_response(PLAN, geom.n_ports)
        rec = simulate_snapshot(paths, geom, PLAN, system)
        los = paths.components[0]
        freqs = PLAN.tone_frequencies
        for k in range(geom.n_ports):
            gain = geom.port_gain(k, los.arrival_direction, los.jones_gain)
            advance = np.dot(geom.port_phase_center(k), los.arrival_direction) / SPEED_OF_LIGHT
            expected = gain * np.exp(-2j * math.pi * freqs * (los.delay - advance))
            np.testing.assert_allclose(rec.tf[k], expected, rtol=0, atol=5e-13 * abs(gain))

    def test_identical_ports_identical_rows(self):
        # one element, XPD 0 dB: both polarization ports respond equally
        geom = build_cylindrical_array(1, 1, 0.05, 0.04, PatternParams(xpd_db=0.0))
        rec = simulate_snapshot(los_paths(), geom, PLAN,
                                ideal_system_response(PLAN, 2))
        np.testing.assert_array_equal(rec.tf[0], rec.tf[1])

    def test_noise_variance_matches_snr_definition(self):
        geom = build_cylindrical_array(4, 2, 0.1091, 0.0429)
        plan = TonePlan(tone_count=1024)
        system = ideal_system_response(plan, geom.n_ports)
        clean = simulate_snapshot(los_paths(), geom, plan, system)
        noisy = simulate_snapshot(los_paths(), geom, plan, system,
                                  noise_snr_db=30.0, seed=5)
        peak_power = np.max(np.mean(np.abs(clean.tf) ** 2, axis=1))
        noise = noisy.tf - clean.tf
        measured = np.mean(np.abs(noise) ** 2)
        assert measured == pytest.approx(peak_power / 1e3, rel=0.05)

    def test_deterministic_given_seeds(self):
        geom = build_cylindrical_array(2, 2, 0.1, 0.04)
        system = build_system_response(PLAN, geom.n_ports, seed=9)
        a = simulate_snapshot(los_paths(), geom, PLAN, system, noise_snr_db=20,
                              snapshot_index=3, seed=7)
        b = simulate_snapshot(los_paths(), geom, PLAN, system, noise_snr_db=20,
                              snapshot_index=3, seed=7)
        np.testing.assert_array_equal(a.tf, b.tf)

    def test_per_port_path_list_length_checked(self):
        geom = build_cylindrical_array(2, 2, 0.1, 0.04)
        with pytest.raises(ValueError, match="per-port"):
            simulate_snapshot([los_paths()] * 3, geom, PLAN,
                              ideal_system_response(PLAN, geom.n_ports))

    def test_per_port_list_matches_shared_when_static(self):
        geom = build_cylindrical_array(4, 1, 0.1, 0.04)
        paths = los_paths()
        system = ideal_system_response(PLAN, geom.n_ports)
        shared = simulate_snapshot(paths, geom, PLAN, system)
        listed = simulate_snapshot([paths] * geom.n_ports, geom, PLAN, system)
        np.testing.assert_allclose(listed.tf, shared.tf, rtol=0, atol=1e-15)


class TestSimulateB2B:
    def test_no_stochastic_terms_means_identical_snapshots(self):
        system = ideal_system_response(PLAN, 8)
        records = simulate_b2b(PLAN, system, AttenuatorModel(), snapshot_count=4)
        for rec in records[1:]:
            np.testing.assert_array_equal(rec.tf, records[0].tf)
        assert all(r.record_type == "B2B" for r in records)

    def test_attenuation_arithmetic(self):
        system = ideal_system_response(PLAN, 8)
        rec = simulate_b2b(PLAN, system, AttenuatorModel(nominal_loss_db=30.0),
                           snapshot_count=1)[0]
        np.testing.assert_allclose(np.abs(rec.tf), 10 ** -1.5, rtol=1e-12)

    def test_chain_and_port_gains_enter_b2b(self):
        system = build_system_response(PLAN, 8, seed=2, phase_drift_deg=0.0,
                                       amplitude_jitter_db=0.0)
        rec = simulate_b2b(PLAN, system, AttenuatorModel(nominal_loss_db=20.0),
                           snapshot_count=1)[0]
        expected = (system.common_chain[np.newaxis, :]
                    * system.per_port_gain[:, np.newaxis] * 0.1)
        np.testing.assert_allclose(rec.tf, expected, rtol=1e-12)

    def test_snapshot_count_validated(self):
        with pytest.raises(ValueError):
            simulate_b2b(PLAN, ideal_system_response(PLAN, 4), AttenuatorModel(),
                         snapshot_count=0)


class TestAttenuator:
    def test_loss_must_be_positive(self):
        with pytest.raises(ValueError):
            AttenuatorModel(nominal_loss_db=0.0)

    def test_ripple_shape(self):
        att = AttenuatorModel(nominal_loss_db=30.0, ripple_db=0.5, ripple_cycles=2.0)
        plan = TonePlan(tone_count=129)  # grid hits the ripple extrema exactly
        db = 20 * np.log10(np.abs(att.response(plan))) + 30.0
        assert np.max(db) == pytest.approx(0.5, abs=1e-9)
        assert np.min(db) == pytest.approx(-0.5, abs=1e-9)


class TestMountingRotation:
    def test_rotation_moves_boresight_column(self):
        geom = build_cylindrical_array(8, 1, 0.1, 0.04)
        paths = los_paths()  # arrival from +x (world azimuth 0)
        plan = TonePlan(tone_count=16)
        system = ideal_system_response(plan, geom.n_ports)
        # with a -90 deg mounting, world +x maps to array azimuth +90,
        # which is column 2 of 8
        rec = simulate_snapshot(paths, geom, plan, system,
                                mounting_rotation=-math.pi / 2)
        energy = np.sum(np.abs(rec.tf) ** 2, axis=1)
        v_ports = [p.port_id for p in geom.ports if p.polarization == "V"]
        best = geom.port(v_ports[int(np.argmax(energy[v_ports]))])
        assert best.column == 2
