"""Shared fixtures-by-function for the test modules."""

from pathlib import Path

import numpy as np

from twinbarrier import PhysicalConfig, kinematics_from_energy

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


def random_setup(rng, opacity=(0.1, 12.0), well=(0.1, 20.0)):
    """Random (config, state) with chi*a and chi*b drawn uniformly from ``opacity``."""
    V0 = rng.uniform(0.5, 5.0)
    m = rng.uniform(0.5, 2.0)
    hbar = rng.uniform(0.5, 2.0)
    E = V0 * rng.uniform(0.02, 0.98)
    chi = np.sqrt(2 * m * (V0 - E)) / hbar
    chi_a, chi_b = rng.uniform(*opacity, size=2)
    a, b = chi_a / chi, chi_b / chi
    config = PhysicalConfig(V0=V0, a=a, L=a + rng.uniform(*well), b=b, m=m, hbar=hbar)
    return config, kinematics_from_energy(E, config)


def canonical(opacity_a=3.0, opacity_b=3.0, well=3.0):
    """m = hbar = V0 = 1 with k = chi = 1 at E = 1/2."""
    config = PhysicalConfig(V0=1.0, a=opacity_a, L=opacity_a + well, b=opacity_b)
    return config, kinematics_from_energy(0.5, config)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.abs(b), np.finfo(float).tiny)
