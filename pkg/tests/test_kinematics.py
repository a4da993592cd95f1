import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinbarrier import (
    EnergyOutOfRange,
    PhysicalConfig,
    WavenumberOutOfRange,
    delay_time,
    hartman_delay_length,
    kinematics_from_energy,
    kinematics_from_wavenumber,
)


@pytest.fixture
def config():
    return PhysicalConfig(V0=1.0, a=1.0, L=4.0, b=2.0)


class TestPhysicalConfig:
    def test_defaults(self, config):
        assert config.m == 1.0 and config.hbar == 1.0
        assert config.well == 3.0
        assert config.interfaces == (0.0, 1.0, 4.0, 6.0)
        assert config.k_top == pytest.approx(np.sqrt(2.0))

    @pytest.mark.parametrize(
        "kwargs, field",
        [
            (dict(V0=0.0, a=1, L=2, b=1), "V0"),
            (dict(V0=1, a=-1, L=2, b=1), "a"),
            (dict(V0=1, a=1, L=1, b=1), "L"),
            (dict(V0=1, a=1, L=2, b=0), "b"),
            (dict(V0=1, a=1, L=2, b=1, m=-1), "m"),
            (dict(V0=1, a=1, L=2, b=1, hbar=float("nan")), "hbar"),
        ],
    )
    def test_invalid(self, kwargs, field):
        with pytest.raises(ValueError, match=field):
            PhysicalConfig(**kwargs)


class TestKinematics:
    def test_canonical_point(self, config):
        s = kinematics_from_energy(0.5, config)
        assert s.k == pytest.approx(1.0)
        assert s.chi == pytest.approx(1.0)
        assert s.phi == pytest.approx(np.pi / 4)
        assert s.w2 == pytest.approx(2.0)

    def test_energy_and_wavenumber_agree(self, config):
        E = np.linspace(0.05, 0.95, 19)
        from_E = kinematics_from_energy(E, config)
        from_k = kinematics_from_wavenumber(from_E.k, config)
        np.testing.assert_allclose(from_k.E, E, rtol=1e-14)
        np.testing.assert_allclose(from_k.chi, from_E.chi, rtol=1e-12)

    @pytest.mark.parametrize("E", [0.0, -0.1, 1.0, 1.5])
    def test_energy_out_of_range(self, config, E):
        with pytest.raises(EnergyOutOfRange):
            kinematics_from_energy(E, config)

    @pytest.mark.parametrize("k", [0.0, np.sqrt(2.0), 3.0])
    def test_wavenumber_out_of_range(self, config, k):
        with pytest.raises(WavenumberOutOfRange):
            kinematics_from_wavenumber(k, config)

    def test_near_barrier_top_stays_positive(self, config):
        s = kinematics_from_energy(1.0 - 1e-13, config)
        assert s.chi > 0 and 0 < s.phi < 1e-5

    @settings(max_examples=200, deadline=None)
    @given(
        V0=st.floats(0.1, 50.0),
        frac=st.floats(1e-6, 1 - 1e-6),
        m=st.floats(0.1, 10.0),
        hbar=st.floats(0.1, 10.0),
    )
    def test_pythagorean_identity(self, V0, frac, m, hbar):
        c = PhysicalConfig(V0=V0, a=1.0, L=2.0, b=1.0, m=m, hbar=hbar)
        s = kinematics_from_energy(frac * V0, c)
        assert s.k**2 + s.chi**2 == pytest.approx(2 * m * V0 / hbar**2, rel=1e-12)
        assert 0 < s.phi < np.pi / 2
        assert np.tan(s.phi) == pytest.approx(s.chi / s.k, rel=1e-10)


class TestDelay:
    def test_delay_length_and_time(self, config):
        s = kinematics_from_energy(0.5, config)
        assert hartman_delay_length(s) == pytest.approx(2.0)
        assert delay_time(s, config) == pytest.approx(2.0)

    def test_delay_is_minus_phase_derivative(self, config):
        k = np.linspace(0.1, 1.3, 25)
        h = 1e-6
        dphi = (kinematics_from_wavenumber(k + h, config).phi - kinematics_from_wavenumber(k - h, config).phi) / (2 * h)
        np.testing.assert_allclose(-2 * dphi, hartman_delay_length(kinematics_from_wavenumber(k, config)), rtol=1e-7)
