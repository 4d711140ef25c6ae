"""Per-snapshot channel metrics.

Pipeline, per calibrated SIMO snapshot: the impulse response is the
unitary inverse DFT of each port's transfer function; a dual noise
threshold (the larger of noise floor + 6 dB and peak - 20 dB) and a
2 us delay gate anchored at the first surviving bin clean it; total
received power adds the gated energies of all ports non-coherently; the
RMS delay spread is computed from the strongest port's gated power
delay profile; the correlation matrix is the tone-averaged outer
product of the stacked port responses, summarized by eigenvalue ratios;
and the angular picture is the mean gated energy per column and
polarization.

Delay spreads are quoted in dBs, decibels relative to one second
(-90 dBs is 1 ns).
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GateConfig:
    """Dual-threshold and delay-gate settings."""

    noise_margin_db: float = 6.0
    peak_margin_db: float = 20.0
    delay_gate: float = 2e-6
    noise_window_fraction: float = 0.2

    def __post_init__(self):
        if self.noise_margin_db <= 0 or self.peak_margin_db <= 0:
            raise ValueError("gate margins must be positive")
        if self.delay_gate <= 0:
            raise ValueError("delay_gate must be positive")
        if not 0.0 < self.noise_window_fraction < 1.0:
            raise ValueError("noise_window_fraction must be in (0, 1)")

    def to_dict(self):
        return {
            "noise_margin_db": self.noise_margin_db,
            "peak_margin_db": self.peak_margin_db,
            "delay_gate": self.delay_gate,
            "noise_window_fraction": self.noise_window_fraction,
        }


@dataclass
class RawCIR:
    """Per-port impulse response before thresholding."""

    h: np.ndarray          # ports x delay bins, complex
    delays: np.ndarray     # seconds, one per bin
    window: str = "rect"


@dataclass
class GatedCIR:
    """Impulse response after noise thresholding and delay gating."""

    h_tau: np.ndarray        # gated, zeroed bins are exactly zero
    raw: np.ndarray          # pre-gating impulse response
    delays: np.ndarray
    noise_floor: np.ndarray  # linear power per port
    threshold: np.ndarray    # applied P_lambda per port
    all_zero_ports: tuple = ()

    @property
    def n_ports(self):
        return self.h_tau.shape[0]

    def port_energy(self):
        """Gated energy per port."""
        return np.sum(np.abs(self.h_tau) ** 2, axis=1)


@dataclass
class DelaySpread:
    sigma_tau_s: float
    sigma_tau_dbs: float
    strongest_port: int
    single_bin: bool = False


@dataclass
class EigenReport:
    correlation: np.ndarray
    eigenvalues: np.ndarray   # sorted descending
    gamma12_db: float
    gamma14_db: float


@dataclass
class SnapshotMetrics:
    """Everything the reports need for one snapshot."""

    timestamp: float
    tx_position: np.ndarray
    p_rx: float
    sigma_tau_s: float
    sigma_tau_dbs: float
    strongest_port: int
    los_bin_power_db: float
    gamma12_db: float
    gamma14_db: float
    eigenvalues: np.ndarray
    column_power_db: np.ndarray   # columns x 2 (V, H)
    snapshot_index: int = 0

    @property
    def eigen_span_db(self):
        e = self.eigenvalues
        if len(e) < 2 or e[0] <= 0 or e[-1] <= 0:
            return math.inf
        return 10.0 * math.log10(e[0] / e[-1])

    @property
    def argmax_v_column(self):
        return int(np.argmax(self.column_power_db[:, 0]))


_WINDOWS = ("rect", "hann")


def cir_from_tf(cal, window="rect"):
    """Unitary inverse DFT of each port's transfer function.

    Delay bins are spaced 1/(tone_count*tone_spacing). A non-rectangular
    window tapers the band edges before the transform; note the usual
    trade: it lowers delay sidelobes but widens (scallops) each path's
    main lobe, spreading energy to neighboring bins.
    """
    if window not in _WINDOWS:
        raise ValueError(f"window must be one of {_WINDOWS}")
    plan = cal.tone_plan
    freqs = plan.tone_frequencies
    spacing = np.diff(freqs)
    if spacing.size and (np.max(spacing) - np.min(spacing)) > 1e-6 * plan.tone_spacing:
        raise ValueError("tone grid must be uniform")

    h_f = cal.h_f
    if window == "hann":
        h_f = h_f * np.hanning(plan.tone_count)[np.newaxis, :]
    h = np.fft.ifft(h_f, axis=1, norm="ortho")
    return RawCIR(h=h, delays=plan.delay_bins, window=window)


def threshold_and_gate(raw, gate=None):
    """Apply the dual noise threshold and the excess-delay gate.

    Per port: the noise floor is the mean power over the tail of the
    delay axis; P_lambda is the larger of noise floor + noise margin and
    peak - peak margin; bins below P_lambda are zeroed, then bins later
    than the first surviving bin plus the delay gate are zeroed. Ports
    where nothing survives are reported, not fatal.
    """
    gate = gate or GateConfig()
    if raw.h.size == 0:
        raise ValueError("empty impulse response")
    if gate.delay_gate >= raw.delays[-1] + (raw.delays[1] - raw.delays[0] if len(raw.delays) > 1 else 0):
        raise ValueError("delay_gate must be below the maximum unambiguous delay")

    power = np.abs(raw.h) ** 2
    n_ports, n_bins = power.shape
    tail = max(1, int(math.ceil(gate.noise_window_fraction * n_bins)))
    noise_floor = np.mean(power[:, n_bins - tail:], axis=1)
    peak = np.max(power, axis=1)
    threshold = np.maximum(noise_floor * 10.0 ** (gate.noise_margin_db / 10.0),
                           peak * 10.0 ** (-gate.peak_margin_db / 10.0))

    keep = power >= threshold[:, np.newaxis]
    any_kept = keep.any(axis=1) & (peak > 0.0)
    first_delay = raw.delays[np.argmax(keep, axis=1)]  # undefined rows masked below
    late = raw.delays[np.newaxis, :] > (first_delay[:, np.newaxis] + gate.delay_gate)
    gated = np.where(keep & ~late, raw.h, 0.0)
    gated[~any_kept] = 0.0
    return GatedCIR(
        h_tau=gated,
        raw=raw.h,
        delays=raw.delays,
        noise_floor=noise_floor,
        threshold=threshold,
        all_zero_ports=tuple(np.nonzero(~any_kept)[0].tolist()),
    )


def rx_power(gated):
    """Total received power: non-coherent sum of gated energy over all
    ports and delay bins."""
    return float(np.sum(np.abs(gated.h_tau) ** 2))


def rms_delay_spread(gated):
    """RMS delay spread of the strongest port's gated power delay profile.

    The strongest port maximizes gated energy (ties break to the lowest
    port id). A single-bin profile yields sigma 0 and a -inf dBs
    sentinel, flagged via ``single_bin``.
    """
    energy = gated.port_energy()
    for k in gated.all_zero_ports:
        energy[k] = -1.0
    if np.all(energy <= 0.0):
        raise ValueError("no port has surviving bins")
    strongest = int(np.argmax(energy))

    pdp = np.abs(gated.h_tau[strongest]) ** 2
    nz = np.nonzero(pdp)[0]
    if nz.size == 1:
        return DelaySpread(0.0, -math.inf, strongest, single_bin=True)
    p = pdp[nz]
    tau = gated.delays[nz]
    total = np.sum(p)
    mean = np.sum(p * tau) / total
    second = np.sum(p * tau * tau) / total
    var = max(second - mean * mean, 0.0)
    sigma = math.sqrt(var)
    dbs = 10.0 * math.log10(sigma) if sigma > 0 else -math.inf
    return DelaySpread(sigma, dbs, strongest, single_bin=sigma == 0.0)


def correlation_and_eigen(cal):
    """Tone-averaged correlation matrix of the stacked port responses.

    R = mean over tones of H(f) H(f)^dagger (ports x ports). Eigenvalues
    are computed on the Hermitian-symmetrized matrix and sorted
    descending; gamma12 and gamma14 are the dB ratios of the first to
    the second and fourth. Ratios degenerate to +inf when the divisor
    eigenvalue vanishes (rank-deficient response) and gamma14 is NaN
    with fewer than 4 ports.
    """
    h = cal.h_f
    n_ports, n_tones = h.shape
    r = (h @ h.conj().T) / n_tones
    r = 0.5 * (r + r.conj().T)
    eig = np.linalg.eigvalsh(r)[::-1].copy()

    trace = float(np.sum(eig))
    tiny = max(trace, 0.0) * 1e-12

    def ratio_db(i):
        if trace <= 0.0:
            return math.nan
        if eig[i] <= tiny:
            return math.inf
        return 10.0 * math.log10(eig[0] / eig[i])

    gamma12 = ratio_db(1) if n_ports >= 2 else math.nan
    gamma14 = ratio_db(3) if n_ports >= 4 else math.nan
    return EigenReport(correlation=r, eigenvalues=eig,
                       gamma12_db=gamma12, gamma14_db=gamma14)


def column_power_profile(gated, geometry):
    """Mean gated energy per (column, polarization), in dB.

    Non-coherent: each cell is 10*log10 of the average of the column's
    per-port gated energies for one polarization (V first).
    """
    if gated.n_ports != geometry.n_ports:
        raise ValueError(
            f"gated CIR has {gated.n_ports} ports but geometry has {geometry.n_ports}")
    energy = gated.port_energy()
    out = np.zeros((geometry.columns, 2))
    for col in range(geometry.columns):
        for pol in (0, 1):
            ids = [p.port_id for p in geometry.ports
                   if p.column == col and (0 if p.polarization == "V" else 1) == pol]
            mean = float(np.mean(energy[ids]))
            with np.errstate(divide="ignore"):
                out[col, pol] = 10.0 * np.log10(mean) if mean > 0 else -math.inf
    return out


def los_bin_power_db(gated, strongest_port):
    """Power of the strongest gated bin of the strongest port, dB."""
    pdp = np.abs(gated.h_tau[strongest_port]) ** 2
    peak = float(np.max(pdp))
    return 10.0 * math.log10(peak) if peak > 0 else -math.inf


def snapshot_metrics(cal, geometry, gate=None, window="rect"):
    """Run the full per-snapshot pipeline on a calibrated response."""
    raw = cir_from_tf(cal, window=window)
    gated = threshold_and_gate(raw, gate)
    spread = rms_delay_spread(gated)
    eig = correlation_and_eigen(cal)
    columns = column_power_profile(gated, geometry)
    return SnapshotMetrics(
        timestamp=cal.timestamp,
        tx_position=np.asarray(cal.tx_position) if cal.tx_position is not None else np.zeros(3),
        p_rx=rx_power(gated),
        sigma_tau_s=spread.sigma_tau_s,
        sigma_tau_dbs=spread.sigma_tau_dbs,
        strongest_port=spread.strongest_port,
        los_bin_power_db=los_bin_power_db(gated, spread.strongest_port),
        gamma12_db=eig.gamma12_db,
        gamma14_db=eig.gamma14_db,
        eigenvalues=eig.eigenvalues,
        column_power_db=columns,
        snapshot_index=cal.snapshot_index,
    )


def route_report(metrics):
    """Location-indexed route table.

    One row per snapshot: pose, total power, delay spread, eigenvalue
    ratios, the argmax V-polarization column and the per-column powers.
    """
    if not metrics:
        raise ValueError("route report needs at least one snapshot")
    rows = []
    for i, m in enumerate(metrics):
        row = {
            "location": i,
            "timestamp": m.timestamp,
            "tx_x": float(m.tx_position[0]),
            "tx_y": float(m.tx_position[1]),
            "tx_z": float(m.tx_position[2]),
            "p_rx": m.p_rx,
            "p_rx_db": 10.0 * math.log10(m.p_rx) if m.p_rx > 0 else -math.inf,
            "sigma_tau_dbs": m.sigma_tau_dbs,
            "gamma12_db": m.gamma12_db,
            "gamma14_db": m.gamma14_db,
            "argmax_v_column": m.argmax_v_column,
        }
        for col in range(m.column_power_db.shape[0]):
            row[f"col{col}_v_db"] = m.column_power_db[col, 0]
            row[f"col{col}_h_db"] = m.column_power_db[col, 1]
        rows.append(row)
    return rows
