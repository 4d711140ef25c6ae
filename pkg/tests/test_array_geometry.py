import math

import numpy as np
import pytest

from a2gsounder.array_geometry import (PatternParams, build_cylindrical_array,
                                       port_id_for)


def default_array(**pattern_kwargs):
    return build_cylindrical_array(16, 4, 0.1091, 0.0429,
                                   PatternParams(**pattern_kwargs))


class TestConstruction:
    def test_full_array_port_count_and_indexing(self):
        geom = default_array()
        assert geom.n_ports == 128
        assert port_id_for(4, 0, "V") == 32
        port = geom.port(32)
        assert (port.column, port.row, port.polarization) == (4, 0, "V")

    def test_degenerate_single_element(self):
        geom = build_cylindrical_array(1, 1, 0.05, 0.04)
        assert geom.n_ports == 2
        np.testing.assert_array_equal(geom.ports[0].position, geom.ports[1].position)
        assert geom.ports[0].polarization == "V"
        assert geom.ports[1].polarization == "H"

    def test_port0_position_and_row_stacking(self):
        geom = default_array()
        np.testing.assert_allclose(geom.port_phase_center(0),
                                   [0.1091, 0.0, -1.5 * 0.0429], atol=1e-15)
        zs = sorted({geom.port_phase_center(port_id_for(0, r, "V"))[2] for r in range(4)})
        np.testing.assert_allclose(zs, np.array([-1.5, -0.5, 0.5, 1.5]) * 0.0429,
                                   atol=1e-15)

    def test_all_ports_lie_on_cylinder(self):
        geom = default_array()
        xy = np.linalg.norm(geom.positions[:, :2], axis=1)
        assert np.max(np.abs(xy - 0.1091)) < 1e-12

    def test_boresight_per_column(self):
        geom = default_array()
        for port in geom.ports:
            assert port.boresight_azimuth == pytest.approx(
                2 * math.pi * port.column / 16)

    def test_bad_dimensions_rejected(self):
        with pytest.raises(ValueError):
            build_cylindrical_array(0, 4, 0.1, 0.04)
        with pytest.raises(ValueError):
            build_cylindrical_array(16, 4, -0.1, 0.04)


class TestPhaseCenterLookup:
    def test_indexing_examples(self):
        geom = default_array()
        assert geom.port(8).column == 1 and geom.port(8).row == 0
        p127 = geom.port(127)
        assert (p127.column, p127.row, p127.polarization) == (15, 3, "H")
        np.testing.assert_array_equal(geom.port_phase_center(0), geom.ports[0].position)

    def test_unknown_port_rejected(self):
        geom = default_array()
        with pytest.raises(KeyError):
            geom.port_phase_center(128)
        with pytest.raises(KeyError):
            geom.port_gain(-1, [1, 0, 0], [1, 0])


class TestPortGain:
    def test_boresight_copol_peak_normalized(self):
        geom = default_array(xpd_db=math.inf)
        gain = geom.port_gain(0, [1.0, 0.0, 0.0], [1.0, 0.0])
        assert gain == pytest.approx(1.0)

    def test_cross_pol_leakage_at_12db(self):
        geom = default_array(xpd_db=12.0)
        gain = geom.port_gain(1, [1.0, 0.0, 0.0], [1.0, 0.0])  # H port, pure V wave
        assert abs(gain) ** 2 == pytest.approx(10 ** -1.2, rel=1e-12)

    def test_backlobe_floor_clamp(self):
        geom = default_array(backlobe_floor_db=-30.0, xpd_db=math.inf)
        gain = geom.port_gain(0, [-1.0, 0.0, 0.0], [1.0, 0.0])
        assert abs(gain) ** 2 == pytest.approx(1e-3, rel=1e-12)

    def test_elevation_half_power_at_60deg(self):
        geom = default_array(xpd_db=math.inf)
        d = [math.cos(math.radians(60)), 0.0, math.sin(math.radians(60))]
        gain = geom.port_gain(0, d, [1.0, 0.0])
        assert abs(gain) ** 2 == pytest.approx(0.5, rel=1e-12)

    def test_non_unit_direction_rejected(self):
        geom = default_array()
        with pytest.raises(ValueError, match="unit"):
            geom.port_gain(0, [2.0, 0.0, 0.0], [1.0, 0.0])

    def test_column_rotation_symmetry(self):
        # rotating the direction by one column pitch maps column c to c+1
        geom = default_array()
        rng = np.random.default_rng(11)
        step = 2 * math.pi / 16
        for _ in range(25):
            az = rng.uniform(0, 2 * math.pi)
            el = rng.uniform(-math.pi / 3, math.pi / 3)
            d = np.array([math.cos(el) * math.cos(az),
                          math.cos(el) * math.sin(az),
                          math.sin(el)])
            d_rot = np.array([math.cos(el) * math.cos(az + step),
                              math.cos(el) * math.sin(az + step),
                              math.sin(el)])
            jones = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            col_c = geom.port_gain(port_id_for(3, 1, "V"), d, jones)
            col_next = geom.port_gain(port_id_for(4, 1, "V"), d_rot, jones)
            assert col_c == pytest.approx(col_next, rel=1e-12)

    def test_copol_never_below_crosspol(self):
        geom = default_array(xpd_db=12.0)
        rng = np.random.default_rng(3)
        for _ in range(50):
            az = rng.uniform(0, 2 * math.pi)
            el = rng.uniform(-math.pi / 2 + 0.01, math.pi / 2 - 0.01)
            d = np.array([math.cos(el) * math.cos(az),
                          math.cos(el) * math.sin(az),
                          math.sin(el)])
            co = abs(geom.port_gain(0, d, [1.0, 0.0]))    # V port, V wave
            cross = abs(geom.port_gain(1, d, [1.0, 0.0]))  # H port, V wave
            assert co >= cross

    def test_azimuth_coverage_of_column_union(self):
        # at every azimuth some column is within half the column pitch,
        # so the union response never drops below the single-element
        # response at 11.25 degrees off boresight
        geom = default_array(xpd_db=math.inf)
        worst = math.cos(math.pi / 16) ** 0.5
        for az in np.linspace(0, 2 * math.pi, 73):
            d = [math.cos(az), math.sin(az), 0.0]
            best = max(abs(geom.port_gain(port_id_for(c, 0, "V"), d, [1.0, 0.0]))
                       for c in range(16))
            assert best >= worst - 1e-12
