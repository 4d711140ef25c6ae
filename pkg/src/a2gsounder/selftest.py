"""Built-in invariant suite (the `a2gs selftest` command).

Each check exercises one contract of the processing pipeline or the
file format on small seeded inputs and reports pass/fail. The suite is
intentionally independent of pytest so a deployed installation can
verify itself.
"""

import math
import os
import tempfile

import numpy as np

from .calibration import CalibratedResponse
from .capture_file import read_capture, write_capture
from .config import parse_scenario
from .pipeline import analyze_records, calibrate_records, run_b2b, run_synthesis
from .processing import (GateConfig, GatedCIR, cir_from_tf,
                         correlation_and_eigen, rms_delay_spread, rx_power,
                         threshold_and_gate)
from .waveform import TonePlan


def _random_cal(rng, ports=8, tones=64):
    plan = TonePlan(center_frequency=3.5e9, tone_spacing=20e3, tone_count=tones)
    h = rng.standard_normal((ports, tones)) + 1j * rng.standard_normal((ports, tones))
    # add a dominant path so gating has structure
    h += 10.0 * np.exp(-2j * math.pi * plan.tone_frequencies * plan.delay_bins[3])
    return CalibratedResponse(h_f=h, tone_plan=plan)


def check_gating_monotonicity(rng):
    cal = _random_cal(rng)
    raw = cir_from_tf(cal)
    gated = threshold_and_gate(raw, GateConfig(delay_gate=200e-9))
    raw_energy = float(np.sum(np.abs(raw.h) ** 2))
    return rx_power(gated) <= raw_energy + 1e-12 * raw_energy, \
        f"gated {rx_power(gated):.6g} vs raw {raw_energy:.6g}"


def check_phase_rotation_invariance(rng):
    cal = _random_cal(rng)
    gated = threshold_and_gate(cir_from_tf(cal))
    p0 = rx_power(gated)
    phases = np.exp(1j * rng.uniform(0, 2 * math.pi, gated.n_ports))
    rotated = GatedCIR(
        h_tau=gated.h_tau * phases[:, np.newaxis],
        raw=gated.raw,
        delays=gated.delays,
        noise_floor=gated.noise_floor,
        threshold=gated.threshold,
        all_zero_ports=gated.all_zero_ports,
    )
    p1 = rx_power(rotated)
    return abs(p0 - p1) <= 1e-9 * p0, f"{p0:.12g} vs {p1:.12g}"


def _two_tap_gated(delays, amps):
    delays = np.asarray(delays, dtype=np.float64)
    h = np.asarray(amps, dtype=np.complex128)[np.newaxis, :]
    return GatedCIR(h_tau=h, raw=h.copy(), delays=delays,
                    noise_floor=np.zeros(1), threshold=np.zeros(1))


def check_delay_spread_invariances(rng):
    delays = np.sort(rng.uniform(0, 1e-6, 6))
    amps = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    base = rms_delay_spread(_two_tap_gated(delays, amps)).sigma_tau_s
    shifted = rms_delay_spread(_two_tap_gated(delays + 3.7e-7, amps)).sigma_tau_s
    scaled = rms_delay_spread(_two_tap_gated(delays, amps * 7.3)).sigma_tau_s
    ok = (abs(base - shifted) <= 1e-9 * max(base, 1e-12)
          and abs(base - scaled) <= 1e-9 * max(base, 1e-12))
    return ok, f"base {base:.6g}, shifted {shifted:.6g}, scaled {scaled:.6g}"


def check_correlation_psd_and_trace(rng):
    cal = _random_cal(rng)
    report = correlation_and_eigen(cal)
    r = report.correlation
    hermitian = np.allclose(r, r.conj().T, rtol=0, atol=1e-12 * np.abs(r).max())
    trace = float(np.real(np.trace(r)))
    direct = float(np.mean(np.sum(np.abs(cal.h_f) ** 2, axis=0)))
    trace_ok = abs(trace - direct) <= 1e-12 * direct
    eig_ok = np.all(report.eigenvalues >= -1e-9 * trace)
    return hermitian and trace_ok and eig_ok, \
        f"trace {trace:.9g} vs {direct:.9g}, min eig {report.eigenvalues[-1]:.3g}"


def check_gamma_ordering(rng):
    for _ in range(20):
        cal = _random_cal(rng, ports=6, tones=32)
        report = correlation_and_eigen(cal)
        if math.isfinite(report.gamma12_db) and math.isfinite(report.gamma14_db):
            if report.gamma12_db > report.gamma14_db + 1e-9:
                return False, f"gamma12 {report.gamma12_db} > gamma14 {report.gamma14_db}"
    return True, "gamma12 <= gamma14 on 20 random cases"


def check_parseval(rng):
    cal = _random_cal(rng)
    raw = cir_from_tf(cal)
    a = float(np.sum(np.abs(raw.h) ** 2))
    b = float(np.sum(np.abs(cal.h_f) ** 2))
    return abs(a - b) <= 1e-12 * b, f"{a:.12g} vs {b:.12g}"


def _tiny_scenario():
    return parse_scenario({
        "preset": "olin-static",
        "array": {"columns": 4, "rows": 2},
        "timing": {"ports_per_simo": 16},
        "tone_plan": {"tone_count": 64},
        "capture": {"burst_count": 1, "b2b_snapshot_count": 2},
    })


def check_file_round_trip():
    config = _tiny_scenario()
    records = run_synthesis(config)
    with tempfile.TemporaryDirectory() as tmp:
        path1 = os.path.join(tmp, "a.bin")
        path2 = os.path.join(tmp, "b.bin")
        write_capture(path1, records, config_hash=config.scenario_hash,
                      geometry_hash=config.geometry.content_hash())
        back, header = read_capture(path1)
        write_capture(path2, back, config_hash=header["config_hash"],
                      geometry_hash=header["geometry_hash"],
                      record_type=header["record_type"])
        with open(path1, "rb") as f1, open(path2, "rb") as f2:
            same = f1.read() == f2.read()
    expected_payload = len(records) * records[0].tf.size * 8
    return same, f"round trip bytes identical, payload {expected_payload} B/snapshot-set"


def check_cross_run_determinism():
    config = _tiny_scenario()
    first = run_synthesis(config)
    second = run_synthesis(config)
    for a, b in zip(first, second):
        if not np.array_equal(a.tf, b.tf):
            return False, "re-run produced different samples"
    ref = run_b2b(config, snapshot_count=2)
    cal = calibrate_records(first, ref, config.attenuator)
    m1 = analyze_records(cal, config.geometry, config.gate)
    m2 = analyze_records(cal, config.geometry, config.gate)
    same = all(np.array_equal(x.column_power_db, y.column_power_db)
               and x.p_rx == y.p_rx for x, y in zip(m1, m2))
    return same, "bit-identical captures and metrics across runs"


CHECKS = (
    ("gating monotonicity", check_gating_monotonicity, True),
    ("rx power phase-rotation invariance", check_phase_rotation_invariance, True),
    ("delay spread shift/scale invariance", check_delay_spread_invariances, True),
    ("correlation PSD and trace identity", check_correlation_psd_and_trace, True),
    ("gamma12 <= gamma14", check_gamma_ordering, True),
    ("Parseval identity", check_parseval, True),
    ("capture file round trip", check_file_round_trip, False),
    ("cross-run determinism", check_cross_run_determinism, False),
)


def run_selftest(verbose=True):
    """Run every invariant check; returns the number of failures."""
    failures = 0
    for name, fn, needs_rng in CHECKS:
        rng = np.random.Generator(np.random.Philox(key=20240301))
        try:
            ok, detail = fn(rng) if needs_rng else fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        if verbose:
            print(f"[{status}] {name}: {detail}")
        if not ok:
            failures += 1
    return failures
