"""Cylinder table export rows."""

import numpy as np
import pytest

from solenoidlab.circle_map import coefficient_table, linear_spec
from solenoidlab.symbolic import cylinder_rows


def test_linear_rows_exact():
    rows = cylinder_rows(linear_spec(), 3)
    assert len(rows) == 8
    words = [r[0] for r in rows]
    assert words[0] == "000" and words[-1] == "111"
    for i, (word, lo, hi, anchor, deriv) in enumerate(rows):
        assert lo == pytest.approx(i / 8.0, abs=1e-14)
        assert hi == pytest.approx((i + 1) / 8.0, abs=1e-14)
        assert anchor in (lo, hi)
        assert deriv == pytest.approx(0.125, rel=1e-12)


def test_perturbed_rows_tile_and_contract():
    spec = coefficient_table(5)
    rows = cylinder_rows(spec, 8)
    los = np.array([r[1] for r in rows])
    his = np.array([r[2] for r in rows])
    assert np.allclose(his[:-1], los[1:], atol=1e-14)
    assert abs((his - los).sum() - 1.0) < 1e-12
    derivs = np.array([r[4] for r in rows])
    assert np.all((derivs > (1.0 / 3.0) ** 8) & (derivs < 1.0))
