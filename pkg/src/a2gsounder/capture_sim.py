"""Receiver-chain and fast-switching capture emulation.

One shared downconversion chain (a smooth random ripple over the tone
grid) feeds per-port scalar switch-path gains, mirroring a switched
single-chain architecture. A per-snapshot complex drift factor models
clock stability; additive white Gaussian noise is injected per tone in
the frequency domain. Back-to-back captures replace the antenna with an
attenuator so the same chain can be divided out later.

All randomness is counter-based (see _rng), so snapshots can be
simulated in any order or in parallel with bit-identical results.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import (TAG_CHAIN, TAG_DRIFT_B2B, TAG_DRIFT_MEAS, TAG_NOISE,
                   TAG_PORT_GAIN, stream)
from .waveform import SPEED_OF_LIGHT


@dataclass(frozen=True)
class SystemResponse:
    """Frequency response of the receiver chain plus switch paths."""

    common_chain: np.ndarray
    per_port_gain: np.ndarray
    phase_drift_deg: float = 0.6
    amplitude_jitter_db: float = 0.0071
    seed: int = 0

    def __post_init__(self):
        if np.any(np.abs(self.common_chain) <= 0.0):
            raise ValueError("common_chain must have no zeros")
        mags_db = 20.0 * np.log10(np.abs(self.per_port_gain))
        if np.any(np.abs(mags_db) > 3.0 + 1e-9):
            raise ValueError("per-port gains must stay within +-3 dB of unity")
        if self.phase_drift_deg < 0 or self.amplitude_jitter_db < 0:
            raise ValueError("drift sigmas must be non-negative")

    def drift(self, snapshot_index, kind="meas"):
        """Per-snapshot complex drift factor; exactly 1 when sigmas are zero."""
        if self.amplitude_jitter_db == 0.0 and self.phase_drift_deg == 0.0:
            return 1.0 + 0.0j
        tag = TAG_DRIFT_MEAS if kind == "meas" else TAG_DRIFT_B2B
        a_db, phi_deg = stream(self.seed, tag, snapshot_index).standard_normal(2)
        a = 10.0 ** (self.amplitude_jitter_db * a_db / 20.0)
        phi = math.radians(self.phase_drift_deg * phi_deg)
        return a * complex(math.cos(phi), math.sin(phi))


def _smooth_curve(rng, n_tones, components):
    """Random low-order Fourier series over the band, peak-normalized to 1."""
    u = np.linspace(0.0, 1.0, n_tones)
    curve = np.zeros(n_tones)
    amps = rng.standard_normal(components)
    phases = rng.uniform(0.0, 2.0 * math.pi, components)
    for m in range(components):
        curve += amps[m] * np.cos(2.0 * math.pi * (m + 1) * u + phases[m])
    peak = np.max(np.abs(curve))
    if peak == 0.0:
        return curve
    return curve / peak


def build_system_response(tones, n_ports, seed=0, ripple_db=1.5, ripple_components=4,
                          phase_span_deg=90.0, port_gain_spread_db=2.0,
                          phase_drift_deg=0.6, amplitude_jitter_db=0.0071):
    """Draw a seeded system response.

    The common chain magnitude ripples within +-ripple_db with a smooth
    random shape; its phase is a smooth curve within +-phase_span_deg.
    Port gains are uniform within +-port_gain_spread_db with random
    phases (spread must stay below the 3 dB contract).
    """
    rng = stream(seed, TAG_CHAIN)
    mag_db = ripple_db * _smooth_curve(rng, tones.tone_count, ripple_components)
    phase = np.radians(phase_span_deg) * _smooth_curve(rng, tones.tone_count, ripple_components)
    chain = 10.0 ** (mag_db / 20.0) * np.exp(1j * phase)

    prng = stream(seed, TAG_PORT_GAIN)
    gains_db = prng.uniform(-port_gain_spread_db, port_gain_spread_db, n_ports)
    gain_phase = prng.uniform(-math.pi, math.pi, n_ports)
    per_port = 10.0 ** (gains_db / 20.0) * np.exp(1j * gain_phase)

    return SystemResponse(
        common_chain=chain,
        per_port_gain=per_port,
        phase_drift_deg=phase_drift_deg,
        amplitude_jitter_db=amplitude_jitter_db,
        seed=seed,
    )


def ideal_system_response(tones, n_ports):
    """Flat chain, unity port gains, no drift. Useful for oracles."""
    return SystemResponse(
        common_chain=np.ones(tones.tone_count, dtype=np.complex128),
        per_port_gain=np.ones(n_ports, dtype=np.complex128),
        phase_drift_deg=0.0,
        amplitude_jitter_db=0.0,
        seed=0,
    )


@dataclass(frozen=True)
class AttenuatorModel:
    """Characterized attenuator inserted for back-to-back runs."""

    nominal_loss_db: float = 30.0
    ripple_db: float = 0.0
    ripple_cycles: float = 1.0

    def __post_init__(self):
        if self.nominal_loss_db <= 0:
            raise ValueError("attenuator loss must be positive (dB)")

    def response(self, tones):
        """Complex response on the tone grid, 10^(-loss/20) times the ripple."""
        base = 10.0 ** (-self.nominal_loss_db / 20.0)
        if self.ripple_db == 0.0:
            return np.full(tones.tone_count, base, dtype=np.complex128)
        u = np.linspace(0.0, 1.0, tones.tone_count)
        ripple = 10.0 ** (self.ripple_db * np.cos(2.0 * math.pi * self.ripple_cycles * u) / 20.0)
        return (base * ripple).astype(np.complex128)

    def to_dict(self):
        return {
            "nominal_loss_db": self.nominal_loss_db,
            "ripple_db": self.ripple_db,
            "ripple_cycles": self.ripple_cycles,
        }


@dataclass
class CaptureRecord:
    """One SIMO snapshot of measured transfer functions, ports x tones."""

    timestamp: float
    tx_position: np.ndarray
    tx_tilt: np.ndarray
    tf: np.ndarray
    tone_plan: object
    snr_db: float = None
    seed: int = 0
    snapshot_index: int = 0
    record_type: str = "MEAS"

    @property
    def n_ports(self):
        return self.tf.shape[0]

    @property
    def n_tones(self):
        return self.tf.shape[1]


def _rotate_z(vectors, angle):
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return vectors @ rot.T


def _tone_phases(effective_delays, tones):
    """exp(-j*2*pi*f_n*T) for every entry of ``effective_delays``.

    The tone grid is uniform, so the phase over n is a geometric
    sequence: one exp for the first tone and one for the per-tone step,
    then a cumulative product along the tone axis (the unit-modulus
    rounding drift over 1841 steps is ~1e-13, far below the oracle
    tolerances).
    """
    t = np.asarray(effective_delays)
    f0 = tones.tone_frequencies[0]
    base = np.exp(-2j * math.pi * f0 * t)
    step = np.exp(-2j * math.pi * tones.tone_spacing * t)
    powers = np.empty(t.shape + (tones.tone_count,), dtype=np.complex128)
    powers[..., 0] = base
    powers[..., 1:] = step[..., np.newaxis]
    np.cumprod(powers, axis=-1, out=powers)
    return powers


def port_stack_response(paths, geometry, tones, mounting_rotation=0.0):
    """Noise-free antenna+channel transfer function, ports x tones.

    Plane-wave model: each path reaches port k with the element gain for
    its arrival direction and an extra phase 2*pi*f*(d . r_k)/c from the
    port's offset toward the source, on top of exp(-j*2*pi*f*delay).
    """
    out = np.zeros((geometry.n_ports, tones.tone_count), dtype=np.complex128)
    if len(paths) == 0:
        return out
    dirs_array = _rotate_z(paths.directions(), -mounting_rotation)
    gains = geometry.port_gains(dirs_array, paths.jones())  # (K, P)
    if not np.all(np.isfinite(gains)):
        raise ValueError("non-finite path gains")
    delays = paths.delays()
    # V and H ports share element positions, so phases are per element
    elem_pos = geometry.positions[0::2]
    advance = (elem_pos @ dirs_array.T) / SPEED_OF_LIGHT  # (K/2, P)
    phases = _tone_phases(delays[np.newaxis, :] - advance, tones)  # (K/2, P, N)
    paired = gains.reshape(elem_pos.shape[0], 2, len(paths))
    return np.einsum("eqp,epn->eqn", paired, phases).reshape(out.shape)


def port_response_row(paths, geometry, tones, port_index, mounting_rotation=0.0):
    """Single port's row of port_stack_response (for per-port path sets)."""
    if len(paths) == 0:
        return np.zeros(tones.tone_count, dtype=np.complex128)
    dirs_array = _rotate_z(paths.directions(), -mounting_rotation)
    gains = geometry.port_gains(dirs_array, paths.jones())[port_index]  # (P,)
    if not np.all(np.isfinite(gains)):
        raise ValueError("non-finite path gains")
    advance = (geometry.positions[port_index] @ dirs_array.T) / SPEED_OF_LIGHT
    phases = _tone_phases(paths.delays() - advance, tones)  # (P, N)
    return gains @ phases


def _add_noise(tf, snr_db, seed, snapshot_index):
    if snr_db is None or snr_db == math.inf:
        return tf
    ref_power = float(np.max(np.mean(np.abs(tf) ** 2, axis=1)))
    sigma2 = ref_power * 10.0 ** (-snr_db / 10.0)
    scale = math.sqrt(sigma2 / 2.0)
    n_ports, n_tones = tf.shape
    # one counter block per snapshot; ports are laid out in fixed order
    draws = stream(seed, TAG_NOISE, snapshot_index).standard_normal((n_ports, 2 * n_tones))
    return tf + scale * (draws[:, :n_tones] + 1j * draws[:, n_tones:])


def simulate_snapshot(paths, geometry, tones, system, noise_snr_db=None,
                      snapshot_index=0, timestamp=0.0, tx_position=None,
                      tx_tilt=(0.0, 0.0), mounting_rotation=0.0, seed=0,
                      base_tf=None):
    """Capture one SIMO snapshot.

    ``paths`` is a PathSet shared by all ports, or a sequence of one
    PathSet per port when the transmitter moves within the snapshot
    (square route: port k is captured at its own switch slot). Noise is
    scaled to ``noise_snr_db`` below the strongest port's mean tone
    power; None disables it. ``base_tf`` may carry a precomputed
    noise-free antenna+channel response for this geometry (snapshots
    with identical TX state can share it).
    """
    if isinstance(paths, (list, tuple)):
        if len(paths) != geometry.n_ports:
            raise ValueError(
                f"per-port path list has {len(paths)} entries for {geometry.n_ports} ports")
        if base_tf is None:
            base_tf = np.zeros((geometry.n_ports, tones.tone_count), dtype=np.complex128)
            for k, pset in enumerate(paths):
                base_tf[k] = port_response_row(pset, geometry, tones, k, mounting_rotation)
        ref_paths = paths[0]
    else:
        if base_tf is None:
            base_tf = port_stack_response(paths, geometry, tones, mounting_rotation)
        ref_paths = paths
    tf = base_tf

    drift = system.drift(snapshot_index, kind="meas")
    tf = tf * system.common_chain[np.newaxis, :] * system.per_port_gain[:, np.newaxis] * drift
    tf = _add_noise(tf, noise_snr_db, seed, snapshot_index)

    if tx_position is None:
        tx_position = ref_paths.tx_position
    return CaptureRecord(
        timestamp=timestamp,
        tx_position=np.asarray(tx_position, dtype=np.float64),
        tx_tilt=np.asarray(tx_tilt, dtype=np.float64),
        tf=tf,
        tone_plan=tones,
        snr_db=noise_snr_db,
        seed=seed,
        snapshot_index=snapshot_index,
        record_type="MEAS",
    )


def simulate_b2b(tones, system, attenuator, snapshot_count=1, seed=0,
                 noise_snr_db=None, snapshot_period=0.05):
    """Back-to-back capture series: chain and switch paths through the
    attenuator, no channel and no antenna pattern."""
    if snapshot_count < 1:
        raise ValueError("snapshot_count must be >= 1")
    att = attenuator.response(tones)
    n_ports = len(system.per_port_gain)
    base = system.common_chain[np.newaxis, :] * system.per_port_gain[:, np.newaxis] * att[np.newaxis, :]
    records = []
    for s in range(int(snapshot_count)):
        tf = base * system.drift(s, kind="b2b")
        tf = _add_noise(tf, noise_snr_db, seed, s)
        records.append(CaptureRecord(
            timestamp=s * snapshot_period,
            tx_position=np.zeros(3),
            tx_tilt=np.zeros(2),
            tf=tf,
            tone_plan=tones,
            snr_db=noise_snr_db,
            seed=seed,
            snapshot_index=s,
            record_type="B2B",
        ))
    return records
