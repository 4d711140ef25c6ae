"""Bit-exact binary capture container.

Layout (all little-endian regardless of host):

    bytes 0..3   magic "A2GS"
    bytes 4..7   uint32 format version (currently 1)
    bytes 8..11  uint32 header JSON length L
    bytes 12..   L bytes of UTF-8 JSON header
    then         payload: snapshots in time order, port-major, tones
                 innermost, each complex value two IEEE-754 float32
                 (real, imaginary)

The header carries the record type (MEAS, B2B or CAL for calibrated
responses), config and geometry hashes, counts, the tone plan and the
per-snapshot metadata. Payload length is snapshots*ports*tones*8 bytes.
"""

import json
import struct
import warnings

import numpy as np

from .calibration import CalibratedResponse
from .capture_sim import CaptureRecord
from .waveform import TonePlan

MAGIC = b"A2GS"
FORMAT_VERSION = 1
RECORD_TYPES = ("MEAS", "B2B", "CAL")


class CaptureFileError(ValueError):
    """Malformed capture file (magic, version, truncation)."""


class HashMismatch(CaptureFileError):
    """Embedded provenance hash does not match the expected one."""


def write_capture(path, records, config_hash="", geometry_hash="", record_type=None):
    """Write records (CaptureRecord or CalibratedResponse) to ``path``.

    All records must share dimensions and tone plan. Complex samples are
    quantized to float32 pairs; a second write of the read-back file is
    byte-identical.
    """
    if not records:
        raise ValueError("no records to write")
    first = records[0]
    if record_type is None:
        record_type = getattr(first, "record_type", "CAL")
    if record_type not in RECORD_TYPES:
        raise ValueError(f"record_type must be one of {RECORD_TYPES}")

    tfs = [_tf_of(r) for r in records]
    shape = tfs[0].shape
    for i, tf in enumerate(tfs):
        if tf.shape != shape:
            raise ValueError(f"record {i} shape {tf.shape} differs from {shape}")

    plan = first.tone_plan
    header = {
        "record_type": record_type,
        "config_hash": config_hash,
        "geometry_hash": geometry_hash,
        "snapshot_count": len(records),
        "port_count": int(shape[0]),
        "tone_count": int(shape[1]),
        "tone_plan": plan.to_dict(),
        "timestamps": [float(getattr(r, "timestamp", 0.0)) for r in records],
        "tx_positions": [_vec(getattr(r, "tx_position", None), 3) for r in records],
        "tx_tilts": [_vec(getattr(r, "tx_tilt", None), 2) for r in records],
        "snapshot_indices": [int(getattr(r, "snapshot_index", i)) for i, r in enumerate(records)],
        "snr_db": getattr(first, "snr_db", None),
        "seed": int(getattr(first, "seed", 0)),
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for tf in tfs:
            flat = np.empty(tf.size * 2, dtype="<f4")
            flat[0::2] = tf.real.ravel().astype("<f4")
            flat[1::2] = tf.imag.ravel().astype("<f4")
            fh.write(flat.tobytes())


def _tf_of(record):
    tf = record.h_f if isinstance(record, CalibratedResponse) else record.tf
    return np.asarray(tf)


def _vec(value, length):
    if value is None:
        return [0.0] * length
    return [float(v) for v in np.asarray(value).ravel()[:length]]


def read_capture(path, expected_config_hash=None, strict_hash=False):
    """Read a capture file back into CaptureRecords.

    Returns (records, header). A config-hash mismatch against
    ``expected_config_hash`` warns by default and raises with
    ``strict_hash``. Calibrated (CAL) files are returned as records too;
    the caller decides how to interpret them via header["record_type"].
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise CaptureFileError(f"bad magic {magic!r}, expected {MAGIC!r}")
        raw = fh.read(8)
        if len(raw) < 8:
            raise CaptureFileError("truncated header")
        version, hlen = struct.unpack("<II", raw)
        if version != FORMAT_VERSION:
            raise CaptureFileError(f"unsupported format version {version}")
        blob = fh.read(hlen)
        if len(blob) < hlen:
            raise CaptureFileError("truncated header JSON")
        header = json.loads(blob.decode("utf-8"))

        snapshots = header["snapshot_count"]
        ports = header["port_count"]
        tones = header["tone_count"]
        expected = snapshots * ports * tones * 8
        payload = fh.read(expected + 1)
        if len(payload) < expected:
            raise CaptureFileError(
                f"truncated payload: expected {expected} bytes, got {len(payload)}")
        if len(payload) > expected:
            raise CaptureFileError("trailing bytes after payload")

    if expected_config_hash is not None and header["config_hash"] != expected_config_hash:
        message = (f"config hash mismatch: file has {header['config_hash'][:12]}..., "
                   f"expected {expected_config_hash[:12]}...")
        if strict_hash:
            raise HashMismatch(message)
        warnings.warn(message)

    plan = TonePlan(**header["tone_plan"])
    flat = np.frombuffer(payload, dtype="<f4")
    data = (flat[0::2].astype(np.float64) + 1j * flat[1::2].astype(np.float64))
    data = data.reshape(snapshots, ports, tones)

    records = []
    for s in range(snapshots):
        records.append(CaptureRecord(
            timestamp=header["timestamps"][s],
            tx_position=np.array(header["tx_positions"][s]),
            tx_tilt=np.array(header["tx_tilts"][s]),
            tf=data[s].copy(),
            tone_plan=plan,
            snr_db=header["snr_db"],
            seed=header["seed"],
            snapshot_index=header["snapshot_indices"][s],
            record_type=header["record_type"],
        ))
    return records, header
