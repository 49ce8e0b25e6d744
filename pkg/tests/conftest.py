import math

import pytest

from oamlink import LinkBudget, Pose, UcaPairConfig

# Stock evaluation setup: 5.8 GHz carrier, centre distance of 20 wavelengths,
# half-metre arrays, unit gain constant, zero reference rotations.
STOCK_F_HZ = 5.8e9
STOCK_WAVELENGTH = 299_792_458.0 / STOCK_F_HZ
STOCK_D = 20.0 * STOCK_WAVELENGTH


@pytest.fixture
def stock_link() -> LinkBudget:
    return LinkBudget(f=STOCK_F_HZ)


@pytest.fixture
def stock_uca() -> UcaPairConfig:
    return UcaPairConfig(K=8, V=8)


@pytest.fixture
def stock_pose() -> Pose:
    return Pose(d=STOCK_D, theta=math.radians(40.0), phi=math.radians(1.0))
