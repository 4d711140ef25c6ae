"""Scenario configuration: parsing, validation, presets, hashing.

A scenario is a JSON document; unknown keys are rejected and every
error names the offending field path. All randomness is seeded here, so
a resolved scenario describes a run completely. The resolved document
is hashed (sha256 of canonical JSON) and the hash is embedded in every
downstream artifact for provenance.

Presets:
  olin-static  courtyard geometry, TX on a pole 12 m east of the array
  olin-hover   same geometry, drone hovering with wobble
  paper-route  30 m square route at 50 m height around the array, 2 m/s
"""

import copy
import hashlib
import json
import math
from dataclasses import dataclass

from .array_geometry import PatternParams, build_cylindrical_array
from .capture_sim import AttenuatorModel
from .channel_synth import Facet, Scene, Trajectory, WobbleParams
from .processing import GateConfig
from .waveform import TimingPlan, TonePlan


class SchemaError(ValueError):
    """Configuration document violates the scenario schema."""


# Courtyard scene: a ground plane, a glass facade behind the TX (east),
# a larger facade behind the array (west) and two small reflectors.
# Reflection coefficients are tuned stand-ins, not measured values.
_OLIN_SCENE = {
    "rx_position": [0.0, 0.0, 1.5],
    "rx_mounting_rotation_deg": -90.0,
    "facets": [
        {
            "name": "ground",
            "corners": [[-60.0, -60.0, 0.0], [60.0, -60.0, 0.0],
                        [60.0, 60.0, 0.0], [-60.0, 60.0, 0.0]],
            "gamma_v": [-0.15, 0.0],
            "gamma_h": [-0.6, 0.0],
            "cross_pol": 0.02,
        },
        {
            "name": "east-facade",
            "corners": [[25.0, -15.0, 0.0], [25.0, 15.0, 0.0],
                        [25.0, 15.0, 12.0], [25.0, -15.0, 12.0]],
            "gamma_v": [0.3, 0.0],
            "gamma_h": [0.3, 0.0],
            "cross_pol": 0.02,
        },
        {
            "name": "west-facade",
            "corners": [[-20.0, -12.0, 0.0], [-20.0, 12.0, 0.0],
                        [-20.0, 12.0, 12.0], [-20.0, -12.0, 12.0]],
            "gamma_v": [0.65, 0.0],
            "gamma_h": [0.65, 0.0],
            "cross_pol": 0.02,
        },
        {
            "name": "north-wall",
            "corners": [[-10.0, 18.0, 0.0], [10.0, 18.0, 0.0],
                        [10.0, 18.0, 6.0], [-10.0, 18.0, 6.0]],
            "gamma_v": [0.3, 0.0],
            "gamma_h": [0.3, 0.0],
            "cross_pol": 0.02,
        },
        {
            "name": "south-umbrella",
            "corners": [[4.0, -8.0, 0.0], [8.0, -8.0, 0.0],
                        [8.0, -8.0, 3.0], [4.0, -8.0, 3.0]],
            "gamma_v": [0.15, 0.0],
            "gamma_h": [0.15, 0.0],
            "cross_pol": 0.02,
        },
    ],
}

DEFAULTS = {
    "tone_plan": {
        "center_frequency": 3.5e9,
        "tone_spacing": 20e3,
        "tone_count": 1841,
        "nominal_bandwidth": 46e6,
    },
    "timing": {
        "t_siso": 50e-6,
        "ports_per_simo": 128,
        "simos_per_burst": 3,
        "burst_rate": 20.0,
    },
    "array": {
        "columns": 16,
        "rows": 4,
        "radius": 0.1091,
        "vertical_spacing": 0.0429,
        "pattern": {
            "q_azimuth": 0.5,
            "q_elevation": 0.5,
            "xpd_db": 12.0,
            "backlobe_floor_db": -30.0,
        },
    },
    "scene": {
        "rx_position": [0.0, 0.0, 1.5],
        "rx_mounting_rotation_deg": -90.0,
        "facets": [],
    },
    "trajectory": {
        "kind": "static_point",
        "position": [12.0, 0.0, 1.8],
        "wobble": {
            "sigma_pos": 0.08,
            "sigma_angle_deg": 1.0,
            "rho": 0.9,
            "seed": 7,
        },
        "center": [0.0, 0.0],
        "side": 30.0,
        "height": 50.0,
        "speed": 2.0,
        "start_corner": "NW",
    },
    "system": {
        "seed": 11,
        "ripple_db": 1.5,
        "ripple_components": 4,
        "phase_span_deg": 90.0,
        "port_gain_spread_db": 2.0,
        "phase_drift_deg": 0.6,
        "amplitude_jitter_db": 0.0071,
    },
    "attenuator": {
        # the attenuator value is an engineering placeholder, not a
        # measured quantity; override per campaign
        "nominal_loss_db": 30.0,
        "ripple_db": 0.0,
        "ripple_cycles": 1.0,
    },
    "gate": {
        "noise_margin_db": 6.0,
        "peak_margin_db": 20.0,
        "delay_gate": 2e-6,
        "noise_window_fraction": 0.2,
    },
    "capture": {
        "burst_count": 1,
        "snr_db": 30.0,
        "noise_seed": 3,
        "b2b_snapshot_count": 400,
        "b2b_snr_db": 60.0,
        "b2b_noise_seed": 5,
    },
}

PRESETS = {
    "olin-static": {
        "scene": _OLIN_SCENE,
        "trajectory": {"kind": "static_point", "position": [12.0, 0.0, 1.8]},
    },
    "olin-hover": {
        "scene": _OLIN_SCENE,
        "trajectory": {
            "kind": "hover",
            "position": [12.0, 0.0, 1.8],
            "wobble": {"sigma_pos": 0.08, "sigma_angle_deg": 1.0, "rho": 0.9, "seed": 7},
        },
    },
    "paper-route": {
        "scene": _OLIN_SCENE,
        "trajectory": {
            "kind": "square_route",
            "center": [0.0, 0.0],
            "side": 30.0,
            "height": 50.0,
            "speed": 2.0,
            "start_corner": "NW",
        },
    },
}


def _type_name(value):
    return type(value).__name__


def _check_number(value, path, minimum=None, exclusive_minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}: expected a number, got {_type_name(value)}")
    if exclusive_minimum is not None and value <= exclusive_minimum:
        raise SchemaError(f"{path}: must be > {exclusive_minimum}, got {value}")
    if minimum is not None and value < minimum:
        raise SchemaError(f"{path}: must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise SchemaError(f"{path}: must be <= {maximum}, got {value}")
    return float(value)


def _check_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path}: expected an integer, got {_type_name(value)}")
    if minimum is not None and value < minimum:
        raise SchemaError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _check_vector(value, path, length):
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise SchemaError(f"{path}: expected a list of {length} numbers")
    return [_check_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _check_complex(value, path):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    pair = _check_vector(value, path, 2)
    return complex(pair[0], pair[1])


def _merge(base, override, path="scenario"):
    """Deep merge with unknown-key rejection against the base layout."""
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise SchemaError(f"{path}.{key}: unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise SchemaError(f"{path}.{key}: expected an object")
            out[key] = _merge(base[key], value, f"{path}.{key}")
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario: typed objects plus the canonical document."""

    tone_plan: TonePlan
    timing: TimingPlan
    geometry: object
    scene: Scene
    trajectory: Trajectory
    attenuator: AttenuatorModel
    gate: GateConfig
    system: dict
    capture: dict
    resolved: dict

    @property
    def scenario_hash(self):
        return config_hash(self.resolved)

    @property
    def mounting_rotation(self):
        return math.radians(self.resolved["scene"]["rx_mounting_rotation_deg"])


def config_hash(resolved):
    blob = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_scenario(document):
    """Validate a scenario document and build the typed configuration.

    ``document`` is a dict or a JSON string. An optional top-level
    "preset" key applies one of the named presets before overrides.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaError("scenario: expected a JSON object")

    document = dict(document)
    preset_name = document.pop("preset", None)
    base = DEFAULTS
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise SchemaError(
                f"scenario.preset: unknown preset '{preset_name}' "
                f"(available: {sorted(PRESETS)})")
        base = _merge(DEFAULTS, PRESETS[preset_name])

    resolved = _merge(base, document)
    return _build(resolved)


def _build(resolved):
    tp = resolved["tone_plan"]
    try:
        tone_plan = TonePlan(
            center_frequency=_check_number(tp["center_frequency"], "tone_plan.center_frequency",
                                           exclusive_minimum=0.0),
            tone_spacing=_check_number(tp["tone_spacing"], "tone_plan.tone_spacing",
                                       exclusive_minimum=0.0),
            tone_count=_check_int(tp["tone_count"], "tone_plan.tone_count", minimum=2),
            nominal_bandwidth=_check_number(tp["nominal_bandwidth"], "tone_plan.nominal_bandwidth",
                                            exclusive_minimum=0.0),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"tone_plan: {exc}") from exc

    tm = resolved["timing"]
    try:
        timing = TimingPlan(
            t_siso=_check_number(tm["t_siso"], "timing.t_siso", exclusive_minimum=0.0),
            ports_per_simo=_check_int(tm["ports_per_simo"], "timing.ports_per_simo", minimum=1),
            simos_per_burst=_check_int(tm["simos_per_burst"], "timing.simos_per_burst", minimum=1),
            burst_rate=_check_number(tm["burst_rate"], "timing.burst_rate", exclusive_minimum=0.0),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"timing: {exc}") from exc

    ar = resolved["array"]
    pat = ar["pattern"]
    try:
        pattern = PatternParams(
            q_azimuth=_check_number(pat["q_azimuth"], "array.pattern.q_azimuth", minimum=0.0),
            q_elevation=_check_number(pat["q_elevation"], "array.pattern.q_elevation", minimum=0.0),
            xpd_db=_check_number(pat["xpd_db"], "array.pattern.xpd_db", minimum=0.0),
            backlobe_floor_db=_check_number(pat["backlobe_floor_db"],
                                            "array.pattern.backlobe_floor_db"),
        )
        geometry = build_cylindrical_array(
            columns=_check_int(ar["columns"], "array.columns", minimum=1),
            rows=_check_int(ar["rows"], "array.rows", minimum=1),
            radius=_check_number(ar["radius"], "array.radius", exclusive_minimum=0.0),
            vertical_spacing=_check_number(ar["vertical_spacing"], "array.vertical_spacing",
                                           exclusive_minimum=0.0),
            pattern=pattern,
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"array: {exc}") from exc

    if geometry.n_ports != timing.ports_per_simo:
        raise SchemaError(
            f"timing.ports_per_simo: {timing.ports_per_simo} does not match the "
            f"{geometry.n_ports}-port array (columns*rows*2)")

    sc = resolved["scene"]
    facets = []
    if not isinstance(sc["facets"], list):
        raise SchemaError("scene.facets: expected a list")
    for i, fd in enumerate(sc["facets"]):
        path = f"scene.facets[{i}]"
        if not isinstance(fd, dict):
            raise SchemaError(f"{path}: expected an object")
        allowed = {"name", "corners", "gamma_v", "gamma_h", "cross_pol"}
        for key in fd:
            if key not in allowed:
                raise SchemaError(f"{path}.{key}: unknown key")
        if "corners" not in fd:
            raise SchemaError(f"{path}.corners: required")
        corners = fd["corners"]
        if not isinstance(corners, list) or len(corners) < 3:
            raise SchemaError(f"{path}.corners: expected a list of >= 3 points")
        corners = [_check_vector(c, f"{path}.corners[{k}]", 3) for k, c in enumerate(corners)]
        try:
            facets.append(Facet(
                corners=corners,
                gamma_v=_check_complex(fd.get("gamma_v", [-0.5, 0.0]), f"{path}.gamma_v"),
                gamma_h=_check_complex(fd.get("gamma_h", [-0.5, 0.0]), f"{path}.gamma_h"),
                cross_pol=_check_number(fd.get("cross_pol", 0.0), f"{path}.cross_pol",
                                        minimum=0.0, maximum=0.999999),
                name=str(fd.get("name", f"facet{i}")),
            ))
        except ValueError as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"{path}: {exc}") from exc
    scene = Scene(
        facets=tuple(facets),
        rx_position=_check_vector(sc["rx_position"], "scene.rx_position", 3),
        rx_mounting_rotation=math.radians(
            _check_number(sc["rx_mounting_rotation_deg"], "scene.rx_mounting_rotation_deg")),
    )

    tr = resolved["trajectory"]
    kind = tr["kind"]
    if kind not in ("static_point", "hover", "square_route"):
        raise SchemaError(f"trajectory.kind: unknown kind '{kind}'")
    wb = tr["wobble"]
    try:
        wobble = WobbleParams(
            sigma_pos=_check_number(wb["sigma_pos"], "trajectory.wobble.sigma_pos", minimum=0.0),
            sigma_angle=math.radians(_check_number(wb["sigma_angle_deg"],
                                                   "trajectory.wobble.sigma_angle_deg",
                                                   minimum=0.0)),
            rho=_check_number(wb["rho"], "trajectory.wobble.rho", minimum=0.0, maximum=0.999999),
            seed=_check_int(wb["seed"], "trajectory.wobble.seed"),
            snapshot_rate=timing.snapshot_rate,
        )
        trajectory = Trajectory(
            kind=kind,
            position=_check_vector(tr["position"], "trajectory.position", 3),
            wobble=wobble,
            center=_check_vector(tr["center"], "trajectory.center", 2),
            side=_check_number(tr["side"], "trajectory.side", exclusive_minimum=0.0),
            height=_check_number(tr["height"], "trajectory.height"),
            speed=_check_number(tr["speed"], "trajectory.speed", exclusive_minimum=0.0),
            start_corner=tr["start_corner"],
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"trajectory: {exc}") from exc

    sy = resolved["system"]
    system = {
        "seed": _check_int(sy["seed"], "system.seed"),
        "ripple_db": _check_number(sy["ripple_db"], "system.ripple_db", minimum=0.0),
        "ripple_components": _check_int(sy["ripple_components"], "system.ripple_components",
                                        minimum=1),
        "phase_span_deg": _check_number(sy["phase_span_deg"], "system.phase_span_deg",
                                        minimum=0.0),
        "port_gain_spread_db": _check_number(sy["port_gain_spread_db"],
                                             "system.port_gain_spread_db",
                                             minimum=0.0, maximum=3.0),
        "phase_drift_deg": _check_number(sy["phase_drift_deg"], "system.phase_drift_deg",
                                         minimum=0.0),
        "amplitude_jitter_db": _check_number(sy["amplitude_jitter_db"],
                                             "system.amplitude_jitter_db", minimum=0.0),
    }

    at = resolved["attenuator"]
    try:
        attenuator = AttenuatorModel(
            nominal_loss_db=_check_number(at["nominal_loss_db"], "attenuator.nominal_loss_db",
                                          exclusive_minimum=0.0),
            ripple_db=_check_number(at["ripple_db"], "attenuator.ripple_db", minimum=0.0),
            ripple_cycles=_check_number(at["ripple_cycles"], "attenuator.ripple_cycles",
                                        minimum=0.0),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"attenuator: {exc}") from exc

    gt = resolved["gate"]
    try:
        gate = GateConfig(
            noise_margin_db=_check_number(gt["noise_margin_db"], "gate.noise_margin_db",
                                          exclusive_minimum=0.0),
            peak_margin_db=_check_number(gt["peak_margin_db"], "gate.peak_margin_db",
                                         exclusive_minimum=0.0),
            delay_gate=_check_number(gt["delay_gate"], "gate.delay_gate", exclusive_minimum=0.0),
            noise_window_fraction=_check_number(gt["noise_window_fraction"],
                                                "gate.noise_window_fraction",
                                                exclusive_minimum=0.0, maximum=0.999999),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"gate: {exc}") from exc
    if gate.delay_gate >= tone_plan.max_unambiguous_delay:
        raise SchemaError("gate.delay_gate: must be below the maximum unambiguous delay")

    cp = resolved["capture"]
    snr = cp["snr_db"]
    b2b_snr = cp["b2b_snr_db"]
    capture = {
        "burst_count": _check_int(cp["burst_count"], "capture.burst_count", minimum=1),
        "snr_db": None if snr is None else _check_number(snr, "capture.snr_db"),
        "noise_seed": _check_int(cp["noise_seed"], "capture.noise_seed"),
        "b2b_snapshot_count": _check_int(cp["b2b_snapshot_count"],
                                         "capture.b2b_snapshot_count", minimum=1),
        "b2b_snr_db": None if b2b_snr is None else _check_number(b2b_snr, "capture.b2b_snr_db"),
        "b2b_noise_seed": _check_int(cp["b2b_noise_seed"], "capture.b2b_noise_seed"),
    }

    return ScenarioConfig(
        tone_plan=tone_plan,
        timing=timing,
        geometry=geometry,
        scene=scene,
        trajectory=trajectory,
        attenuator=attenuator,
        gate=gate,
        system=system,
        capture=capture,
        resolved=resolved,
    )
