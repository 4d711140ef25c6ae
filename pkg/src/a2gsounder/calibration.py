"""Back-to-back calibration and sounder stability analysis.

Calibration divides each measured transfer function by the back-to-back
reference and multiplies by the known attenuator response, leaving the
antenna+channel response per port. Stability statistics reduce a B2B
series to one relative amplitude/phase sample per snapshot against the
first snapshot.
"""

from dataclasses import dataclass

import numpy as np


class CalibrationError(ValueError):
    pass


@dataclass
class CalibratedResponse:
    """Antenna+channel transfer function, ports x tones."""

    h_f: np.ndarray
    tone_plan: object
    timestamp: float = 0.0
    tx_position: np.ndarray = None
    tx_tilt: np.ndarray = None
    snapshot_index: int = 0

    @property
    def n_ports(self):
        return self.h_f.shape[0]

    @property
    def n_tones(self):
        return self.h_f.shape[1]


@dataclass
class StabilityReport:
    """Per-snapshot relative amplitude/phase against the first snapshot."""

    amplitude_std_db: float
    phase_std_deg: float
    rel_amp_db: np.ndarray
    rel_phase_deg: np.ndarray


def calibrate(meas, ref, attenuator, reference_floor_db=120.0, ref_median=None):
    """Antenna+channel response: meas / ref times the attenuator response.

    A reference tone more than ``reference_floor_db`` below the
    reference's median magnitude indicates corrupt calibration data and
    raises, naming the port and tone, rather than being regularized.
    ``ref_median`` may carry a precomputed median of |ref.tf| when many
    measurements share one reference.
    """
    if meas.tf.shape != ref.tf.shape:
        raise CalibrationError(
            f"measurement {meas.tf.shape} and reference {ref.tf.shape} dimensions differ")
    if meas.tone_plan.to_dict() != ref.tone_plan.to_dict():
        raise CalibrationError("measurement and reference tone plans differ")

    ref_mag = np.abs(ref.tf)
    if ref_median is None:
        ref_median = float(np.median(ref_mag))
    floor = ref_median * 10.0 ** (-reference_floor_db / 20.0)
    bad = np.argwhere(ref_mag <= floor)
    if bad.size:
        port, tone = bad[0]
        raise CalibrationError(
            f"reference tone below floor at port {port}, tone {tone} "
            f"(|Y_ref| = {ref_mag[port, tone]:.3e})")

    g_att = attenuator.response(meas.tone_plan)
    h = meas.tf / ref.tf * g_att[np.newaxis, :]
    return CalibratedResponse(
        h_f=h,
        tone_plan=meas.tone_plan,
        timestamp=meas.timestamp,
        tx_position=meas.tx_position,
        tx_tilt=meas.tx_tilt,
        snapshot_index=meas.snapshot_index,
    )


def stability_stats(b2b_series, port=0):
    """Snapshot-to-snapshot stability of a B2B series at one port.

    Each snapshot is reduced to the mean over tones of the complex ratio
    against the first snapshot (the noise-optimal scalar); amplitude is
    reported as 20*log10 magnitude and phase as the argument in degrees.
    """
    if len(b2b_series) < 2:
        raise CalibrationError("stability analysis needs at least 2 snapshots")
    first = b2b_series[0].tf[port]
    if np.any(np.abs(first) == 0.0):
        raise CalibrationError(f"first snapshot has a zero tone at port {port}")

    # tf/first evaluated as tf*conj(first)/|first|^2 in explicit real
    # arithmetic: identical snapshots divide to exactly 1 (no fused
    # multiply-add residue), so an unchanged series reports exactly 0
    fr, fi = first.real, first.imag
    denom = fr * fr + fi * fi
    ratios = np.empty(len(b2b_series), dtype=np.complex128)
    for s, rec in enumerate(b2b_series):
        tr, ti = rec.tf[port].real, rec.tf[port].imag
        re = (tr * fr + ti * fi) / denom
        im = (ti * fr - tr * fi) / denom
        ratios[s] = complex(np.mean(re), np.mean(im))
    rel_amp_db = 20.0 * np.log10(np.abs(ratios))
    rel_phase_deg = np.degrees(np.angle(ratios))
    return StabilityReport(
        amplitude_std_db=float(np.std(rel_amp_db)),
        phase_std_deg=float(np.std(rel_phase_deg)),
        rel_amp_db=rel_amp_db,
        rel_phase_deg=rel_phase_deg,
    )
