"""Smoke test for the pinchmap_py extension module.

Build and install with `maturin develop` inside crates/py, or copy
target/release/libpinchmap_py.so next to this file as pinchmap_py.so.
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pinchmap_py as pm


def main():
    scenario = pm.Scenario.table1().with_grid_scale(0.25)
    assert scenario.grid == (100, 30)
    assert (scenario.n_waveguides, scenario.n_candidates) == (4, 10)
    assert abs(scenario.rho - 1e11) < 1e-3

    again = pm.Scenario.from_json(scenario.to_json())
    assert again.digest() == scenario.digest()

    ws = scenario.prepare()
    assert 0 < ws.n_valid <= 100 * 30

    distributed = ws.worst_grid_snr([2, 6, 9, 4])
    aligned = ws.worst_grid_snr([5, 5, 5, 5])
    assert distributed > aligned

    cov = ws.coverage(18.0)
    assert cov.method == "coordinate_ascent"
    assert all(a <= b for a, b in zip(cov.trace, cov.trace[1:]))
    exact = ws.coverage(18.0, exact=True)
    assert cov.covered_count <= exact.covered_count

    mm = ws.maxmin()
    assert math.isclose(mm.t_star, ws.worst_grid_snr(mm.activation))

    rows = ws.power_sweep([30.0, 40.0])
    assert abs(rows[1].optimized_db - rows[0].optimized_db - 10.0) < 1e-9

    seq = pm.random_activation(scenario, 3)
    assert seq == pm.random_activation(scenario, 3)
    assert all(1 <= m <= 10 for m in seq)

    try:
        ws.avg_snr([11, 1, 1, 1])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range tap accepted")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "map.csv")
        ws.export_map([2, 6, 9, 4], path)
        with open(path) as f:
            assert f.readline().strip() == "x,y,snr_db,valid"

    print("pinchmap_py smoke test passed:", scenario)


if __name__ == "__main__":
    main()
