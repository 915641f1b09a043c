from __future__ import annotations

import numpy as np
import pytest

from csdlab.calibrate import (
    FROZEN,
    energy_cemp_suite,
    recompute_interaction_c,
    recompute_interaction_interp,
    recompute_sandwich_c,
)


def test_frozen_interaction_constant_reproduces():
    assert recompute_interaction_c() == pytest.approx(FROZEN["interaction_c"], rel=1e-12)


def test_frozen_interpolation_constants_reproduce():
    interp = recompute_interaction_interp(FROZEN["interaction_c"])
    assert set(interp) == set(FROZEN["interaction_interp"])
    for p, cp in FROZEN["interaction_interp"].items():
        assert interp[p] == pytest.approx(cp, rel=1e-12)
    # p = 0 degenerates to the trivial angle bound theta <= pi
    assert FROZEN["interaction_interp"][0.0] == pytest.approx(np.pi)


def test_frozen_sandwich_constant_reproduces():
    assert recompute_sandwich_c() == pytest.approx(FROZEN["sandwich_c"], rel=1e-12)


def test_energy_suite_subset_below_ceiling():
    # the first samples of the frozen suite, on the coarse resolution
    worst = energy_cemp_suite(FROZEN["energy_seed"], samples=5, refine=0)
    assert 0.0 < worst <= FROZEN["energy_cemp_ceiling"]
