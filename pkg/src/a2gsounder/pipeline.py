"""Scenario execution: synthesis, calibration, metrics, reports.

Snapshot simulation and analysis are embarrassingly parallel; the
A2GS_THREADS environment variable caps the worker count (default 1).
Randomness is counter-based, so the thread count never changes results.
"""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .calibration import calibrate
from .capture_sim import build_system_response, simulate_b2b, simulate_snapshot
from .channel_synth import synthesize_paths, tx_position_at, tx_tilt_at
from .processing import route_report, snapshot_metrics
from .waveform import snapshot_timestamps


def thread_count():
    value = os.environ.get("A2GS_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    workers = thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def system_for(config):
    sy = config.system
    return build_system_response(
        config.tone_plan,
        config.geometry.n_ports,
        seed=sy["seed"],
        ripple_db=sy["ripple_db"],
        ripple_components=sy["ripple_components"],
        phase_span_deg=sy["phase_span_deg"],
        port_gain_spread_db=sy["port_gain_spread_db"],
        phase_drift_deg=sy["phase_drift_deg"],
        amplitude_jitter_db=sy["amplitude_jitter_db"],
    )


def paths_for_snapshot(config, time):
    """Path sets for one snapshot: shared for static/hover, per port for
    a route (the TX advances between switch slots)."""
    traj = config.trajectory
    fc = config.tone_plan.center_frequency
    if traj.kind in ("static_point", "hover"):
        tx = tx_position_at(traj, time)
        tilt = tx_tilt_at(traj, time)
        return synthesize_paths(config.scene, tx, fc, tx_tilt=tilt), tx, tilt
    per_port = []
    for k in range(config.geometry.n_ports):
        t_port = time + k * config.timing.t_siso
        tx_k = tx_position_at(traj, t_port)
        per_port.append(synthesize_paths(config.scene, tx_k, fc))
    return per_port, tx_position_at(traj, time), np.zeros(2)


def run_synthesis(config):
    """Simulate every snapshot of the scenario; returns CaptureRecords."""
    system = system_for(config)
    times = snapshot_timestamps(config.timing, config.capture["burst_count"])

    # static and hover TX states repeat across snapshots (hover is frozen
    # per wobble index), so the noise-free response can be shared
    base_cache = {}

    def base_for(time):
        traj = config.trajectory
        if traj.kind == "static_point":
            key = 0
        elif traj.kind == "hover":
            key = int(math.floor(time * traj.wobble.snapshot_rate))
        else:
            key = None
        if key is not None and key in base_cache:
            return base_cache[key]
        paths, tx, tilt = paths_for_snapshot(config, time)
        entry = (paths, tx, tilt, None)
        if key is not None:
            from .capture_sim import port_stack_response
            tf = port_stack_response(paths, config.geometry, config.tone_plan,
                                     config.scene.rx_mounting_rotation)
            entry = (paths, tx, tilt, tf)
            base_cache[key] = entry
        return entry

    def one(args):
        index, time = args
        paths, tx, tilt, base_tf = base_for(time)
        return simulate_snapshot(
            paths,
            config.geometry,
            config.tone_plan,
            system,
            noise_snr_db=config.capture["snr_db"],
            snapshot_index=index,
            timestamp=float(time),
            tx_position=tx,
            tx_tilt=tilt,
            mounting_rotation=config.scene.rx_mounting_rotation,
            seed=config.capture["noise_seed"],
            base_tf=base_tf,
        )

    return _map_ordered(one, list(enumerate(times)))


def run_b2b(config, snapshot_count=None):
    """Simulate a back-to-back reference series for the scenario."""
    system = system_for(config)
    count = snapshot_count or config.capture["b2b_snapshot_count"]
    return simulate_b2b(
        config.tone_plan,
        system,
        config.attenuator,
        snapshot_count=count,
        seed=config.capture["b2b_noise_seed"],
        noise_snr_db=config.capture["b2b_snr_db"],
        snapshot_period=1.0 / config.timing.burst_rate,
    )


def calibrate_records(meas_records, ref_records, attenuator, reference_index=0):
    """Calibrate every measurement against one B2B reference snapshot."""
    ref = ref_records[reference_index]
    ref_median = float(np.median(np.abs(ref.tf)))
    return [calibrate(m, ref, attenuator, ref_median=ref_median) for m in meas_records]


def analyze_records(cal_records, geometry, gate, window="rect"):
    """Per-snapshot metrics for a list of calibrated responses."""
    return _map_ordered(lambda c: snapshot_metrics(c, geometry, gate, window), cal_records)


_METRIC_FIELDS = (
    "snapshot_index", "timestamp", "tx_x", "tx_y", "tx_z",
    "p_rx", "p_rx_db", "sigma_tau_s", "sigma_tau_dbs", "strongest_port",
    "los_bin_power_db", "gamma12_db", "gamma14_db", "eigen_span_db",
    "argmax_v_column",
)


def metrics_rows(metrics):
    rows = []
    for m in metrics:
        row = {
            "snapshot_index": m.snapshot_index,
            "timestamp": m.timestamp,
            "tx_x": float(m.tx_position[0]),
            "tx_y": float(m.tx_position[1]),
            "tx_z": float(m.tx_position[2]),
            "p_rx": m.p_rx,
            "p_rx_db": 10.0 * math.log10(m.p_rx) if m.p_rx > 0 else -math.inf,
            "sigma_tau_s": m.sigma_tau_s,
            "sigma_tau_dbs": m.sigma_tau_dbs,
            "strongest_port": m.strongest_port,
            "los_bin_power_db": m.los_bin_power_db,
            "gamma12_db": m.gamma12_db,
            "gamma14_db": m.gamma14_db,
            "eigen_span_db": m.eigen_span_db,
            "argmax_v_column": m.argmax_v_column,
        }
        for col in range(m.column_power_db.shape[0]):
            row[f"col{col}_v_db"] = m.column_power_db[col, 0]
            row[f"col{col}_h_db"] = m.column_power_db[col, 1]
        rows.append(row)
    return rows


def write_rows_csv(path, rows, config_hash=None):
    """Write rows as CSV; the provenance hash rides in a '#' comment line
    that pandas/gnuplot-style readers skip."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_hash: {config_hash}\n")
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def write_rows_json(path, rows):
    with open(path, "w") as fh:
        json.dump([_jsonable(r) for r in rows], fh, indent=2)
        fh.write("\n")


def _jsonable(row):
    out = {}
    for key, value in row.items():
        if isinstance(value, float) and not math.isfinite(value):
            out[key] = str(value)
        elif isinstance(value, (np.floating, np.integer)):
            out[key] = value.item()
        else:
            out[key] = value
    return out


def _stat(values):
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return {"mean": None, "std": None, "count": 0}
    return {
        "mean": float(np.mean(finite)),
        "std": float(np.std(finite)),
        "count": len(finite),
    }


def summarize(metrics, config_hash=""):
    """Scenario summary: means and stds of the headline metrics."""
    return {
        "snapshots": len(metrics),
        "config_hash": config_hash,
        "gamma12_db": _stat([m.gamma12_db for m in metrics]),
        "gamma14_db": _stat([m.gamma14_db for m in metrics]),
        "sigma_tau_dbs": _stat([m.sigma_tau_dbs for m in metrics]),
        "p_rx_db": _stat([10.0 * math.log10(m.p_rx) if m.p_rx > 0 else -math.inf
                          for m in metrics]),
        "los_bin_power_db": _stat([m.los_bin_power_db for m in metrics]),
        # tone-average caveat: with a large coherence bandwidth the number
        # of independent frequency samples is low, so the correlation
        # matrix summarizes diversity rather than true second-order stats
        "frequency_averaging_note": "tone average over a band with few independent samples",
    }


def stability_rows(report):
    return [
        {"snapshot_index": i,
         "rel_amp_db": float(report.rel_amp_db[i]),
         "rel_phase_deg": float(report.rel_phase_deg[i])}
        for i in range(len(report.rel_amp_db))
    ]


def route_rows(metrics):
    return route_report(metrics)
