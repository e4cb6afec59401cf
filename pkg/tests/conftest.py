import math

import pytest

from lrpkit.kernel import KernelSpec


@pytest.fixture
def primary():
    """(d=1, alpha=1/3) critical-line preset"""
    return KernelSpec(d=1, alpha=1.0 / 3.0)


@pytest.fixture
def secondary():
    return KernelSpec(d=2, alpha=2.0 / 3.0)


@pytest.fixture
def tmp_out(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    return out


def close(a, b, rel=1e-12):
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-15)
