"""Cylindrical dual-polarized receive array.

16 columns of 4 active dual-polarized elements on a cylinder give 128
ports with full azimuth coverage. The element pattern is a parametric
cos^q stand-in (the measured pattern is not modeled): co-polarized
amplitude cos^q_az(daz) * cos^q_el(el), clamped below by a back-lobe
floor, with cross-polarized reception attenuated by the XPD.

Column c points at azimuth 2*pi*c/columns in the array frame; mounting
the array in the world frame is a scenario concern (a rotation about z
handled by the capture simulator).
"""

import math
from dataclasses import dataclass, field

import numpy as np

POL_V = "V"
POL_H = "H"
_POL_INDEX = {POL_V: 0, POL_H: 1}


@dataclass(frozen=True)
class PatternParams:
    """Parametric element pattern.

    Defaults: q exponents give a 120 deg half-power elevation beamwidth
    (cos^0.5 amplitude), 12 dB cross-polarization discrimination and a
    -30 dB back-lobe floor.
    """

    q_azimuth: float = 0.5
    q_elevation: float = 0.5
    xpd_db: float = 12.0
    backlobe_floor_db: float = -30.0

    def __post_init__(self):
        if self.q_azimuth < 0 or self.q_elevation < 0:
            raise ValueError("pattern exponents must be non-negative")
        if self.xpd_db < 0:
            raise ValueError("xpd_db must be non-negative (use math.inf for no leakage)")

    @property
    def floor_amplitude(self):
        return 10.0 ** (self.backlobe_floor_db / 20.0)

    @property
    def cross_amplitude(self):
        if math.isinf(self.xpd_db):
            return 0.0
        return 10.0 ** (-self.xpd_db / 20.0)

    def to_dict(self):
        return {
            "q_azimuth": self.q_azimuth,
            "q_elevation": self.q_elevation,
            "xpd_db": self.xpd_db,
            "backlobe_floor_db": self.backlobe_floor_db,
        }


@dataclass(frozen=True)
class PortDescriptor:
    port_id: int
    column: int
    row: int
    polarization: str
    position: np.ndarray
    boresight_azimuth: float


@dataclass(frozen=True)
class ArrayGeometry:
    """Immutable port table plus pattern parameters."""

    radius: float
    vertical_spacing: float
    columns: int
    rows: int
    ports: tuple
    pattern: PatternParams
    # cached dense views for vectorized evaluation
    positions: np.ndarray = field(repr=False, default=None)
    boresights: np.ndarray = field(repr=False, default=None)
    pol_index: np.ndarray = field(repr=False, default=None)

    @property
    def n_ports(self):
        return len(self.ports)

    def port(self, port_id):
        if not 0 <= port_id < self.n_ports:
            raise KeyError(f"unknown port_id {port_id}")
        return self.ports[port_id]

    def port_phase_center(self, port_id):
        """Position of the port's element in the array frame, meters."""
        return self.port(port_id).position

    def port_gain(self, port_id, arrival_direction, incident_jones):
        """Complex voltage gain of one port for a plane wave.

        ``arrival_direction`` is a unit 3-vector in the array frame
        pointing from the array toward the source; ``incident_jones`` is
        the (V, H) complex field at the array. Returns co-polarized
        pattern response times the co-polarized amplitude plus the
        XPD-attenuated cross-polarized leakage.
        """
        self.port(port_id)
        d = np.asarray(arrival_direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("arrival_direction must be unit norm")
        gains = self.port_gains(d[np.newaxis, :], np.asarray(incident_jones, dtype=np.complex128)[np.newaxis, :])
        return complex(gains[port_id, 0])

    def port_gains(self, directions, jones):
        """Vectorized port responses.

        Parameters
        ----------
        directions : (P, 3) unit vectors in the array frame (toward source).
        jones : (P, 2) complex (V, H) incident amplitudes.

        Returns
        -------
        (n_ports, P) complex gains, pattern amplitude included.
        """
        d = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        j = np.atleast_2d(np.asarray(jones, dtype=np.complex128))
        if d.shape[0] != j.shape[0]:
            raise ValueError("directions and jones must agree in path count")

        el = np.arcsin(np.clip(d[:, 2], -1.0, 1.0))
        az = np.arctan2(d[:, 1], d[:, 0])
        daz = az[np.newaxis, :] - self.boresights[:, np.newaxis]

        p = self.pattern
        caz = np.maximum(np.cos(daz), 0.0)
        cel = np.maximum(np.cos(el), 0.0)[np.newaxis, :]
        amp = np.maximum(caz ** p.q_azimuth * cel ** p.q_elevation, p.floor_amplitude)

        co = np.where(self.pol_index[:, np.newaxis] == 0, j[:, 0], j[:, 1])
        cross = np.where(self.pol_index[:, np.newaxis] == 0, j[:, 1], j[:, 0])
        return amp * (co + p.cross_amplitude * cross)

    def content_hash(self):
        import hashlib
        import json

        doc = {
            "radius": self.radius,
            "vertical_spacing": self.vertical_spacing,
            "columns": self.columns,
            "rows": self.rows,
            "pattern": self.pattern.to_dict(),
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_dict(self):
        return {
            "radius": self.radius,
            "vertical_spacing": self.vertical_spacing,
            "columns": self.columns,
            "rows": self.rows,
            "pattern": self.pattern.to_dict(),
        }


def port_id_for(column, row, polarization, rows=4):
    """port_id = column * (2 * rows) + row * 2 + pol index (V=0, H=1)."""
    return column * rows * 2 + row * 2 + _POL_INDEX[polarization]


def build_cylindrical_array(columns=16, rows=4, radius=0.1091, vertical_spacing=0.0429,
                            pattern=None):
    """Place columns*rows dual-polarized elements on a cylinder.

    Column c is centered at azimuth 2*pi*c/columns; rows stack
    symmetrically about z = 0 at ``vertical_spacing``. Both polarization
    ports of an element share its position. Default radius and spacing
    give half-wavelength inter-column arc and inter-row distances at
    3.5 GHz.
    """
    if columns < 1 or rows < 1:
        raise ValueError("columns and rows must be >= 1")
    if radius <= 0 or vertical_spacing <= 0:
        raise ValueError("radius and vertical_spacing must be positive")
    pattern = pattern or PatternParams()

    ports = []
    for column in range(columns):
        azimuth = 2.0 * math.pi * column / columns
        x = radius * math.cos(azimuth)
        y = radius * math.sin(azimuth)
        for row in range(rows):
            z = (row - (rows - 1) / 2.0) * vertical_spacing
            position = np.array([x, y, z], dtype=np.float64)
            for pol in (POL_V, POL_H):
                ports.append(PortDescriptor(
                    port_id=port_id_for(column, row, pol, rows),
                    column=column,
                    row=row,
                    polarization=pol,
                    position=position,
                    boresight_azimuth=azimuth,
                ))
    ports.sort(key=lambda p: p.port_id)

    positions = np.stack([p.position for p in ports])
    boresights = np.array([p.boresight_azimuth for p in ports])
    pol_index = np.array([_POL_INDEX[p.polarization] for p in ports], dtype=np.int64)
    return ArrayGeometry(
        radius=radius,
        vertical_spacing=vertical_spacing,
        columns=columns,
        rows=rows,
        ports=tuple(ports),
        pattern=pattern,
        positions=positions,
        boresights=boresights,
        pol_index=pol_index,
    )
