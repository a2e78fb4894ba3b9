import numpy as np
import pytest

from qclab.grid import GridSpec, sample
from qclab.transforms import TransformPlan


def gaussian(spec, center=0.0, sigma=0.7, amp=1.0):
    """Radially smooth test bump; effectively supported well inside |z| <= L/2."""
    return sample(spec, lambda z: amp * np.exp(-np.abs(z - center) ** 2 / sigma ** 2))


def gaussian_dz(spec, center=0.0, sigma=0.7, amp=1.0):
    """Analytic Wirtinger derivatives of the gaussian: (d, dbar)."""
    z = spec.points()
    g = amp * np.exp(-np.abs(z - center) ** 2 / sigma ** 2)
    dz = -np.conj(z - center) / sigma ** 2 * g
    dzbar = -(z - center) / sigma ** 2 * g
    return dz, dzbar


@pytest.fixture(scope="session")
def spec256():
    return GridSpec(256, 4.0)


@pytest.fixture(scope="session")
def spec512():
    return GridSpec(512, 4.0)


@pytest.fixture(scope="session")
def plan256(spec256):
    return TransformPlan(spec256)


@pytest.fixture(scope="session")
def plan512(spec512):
    return TransformPlan(spec512)


@pytest.fixture(scope="session")
def pm_radial_256(spec256, plan256):
    from qclab.beltrami import principal_solution
    from qclab.geometry import radial_stretch

    return principal_solution(radial_stretch(2.0, spec256), tol=1e-10, plan=plan256)


@pytest.fixture(scope="session")
def pm_radial_512(spec512, plan512):
    from qclab.beltrami import principal_solution
    from qclab.geometry import radial_stretch

    return principal_solution(radial_stretch(2.0, spec512), tol=1e-10, plan=plan512)


@pytest.fixture(scope="session")
def pm_const_256(spec256, plan256):
    from qclab.beltrami import principal_solution
    from qclab.geometry import constant_disk

    return principal_solution(constant_disk(0.3, spec256), tol=1e-10, plan=plan256)


@pytest.fixture(scope="session")
def pm_const_512(spec512, plan512):
    from qclab.beltrami import principal_solution
    from qclab.geometry import constant_disk

    return principal_solution(constant_disk(0.3, spec512), tol=1e-10, plan=plan512)
