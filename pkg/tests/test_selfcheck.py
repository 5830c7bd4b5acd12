import math

import pytest

from stokeswaves import PhysicalParams, SpectralGrid
from stokeswaves.selfcheck import five_point, run_selfcheck


@pytest.mark.parametrize(
    "params, j_star, n",
    [
        (PhysicalParams(), 1, 8),
        (PhysicalParams(1.0, math.inf, 0.5, 0.0), -1, 16),
        (PhysicalParams(1.0, 1.2, 0.1, 0.7), 2, 12),
        (PhysicalParams(2.0, 2.0, 0.0, -1.5), -1, 32),
    ],
)
def test_selfcheck_passes_across_regimes(params, j_star, n):
    checks = run_selfcheck(params, SpectralGrid(n), j_star, seed=3)
    failed = [(c.name, c.value) for c in checks if not c.passed]
    assert not failed
    assert len(checks) >= 15


def test_five_point_is_fourth_order():
    errors = [abs(five_point(math.sin, h) - math.cos(0.0)) for h in (0.1, 0.05)]
    assert math.log2(errors[0] / errors[1]) == pytest.approx(4.0, abs=0.1)
