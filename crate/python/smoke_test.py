"""Smoke test for the Python bindings: import, a cheap 1D solve, bounds."""

import json
import math
import tempfile

import fnls


def main():
    grid = fnls.Grid(1, 20.0, 64)
    xs = grid.coordinates()
    bump = [math.exp(-x * x) for x in xs]
    assert abs(grid.dot(bump, bump) - math.sqrt(math.pi / 2)) < 1e-10
    assert grid.kinetic(bump) > 0

    params = fnls.ModelParams(1, 1.3, 1.5)
    assert params.occupations() == [1.0, 0.5]
    state = fnls.solve_ground_state(params, seed=3)
    assert state.converged, state
    diag = state.diagnostics()
    assert diag["virial_residual"] < 1e-5
    assert diag["aufbau_verified"]
    h = state.grid.spacing
    assert abs(sum(state.density) * h - 1.5) < 1e-10

    i1, mu1 = fnls.radial_ground_state(1, 1.3)
    exponent = fnls.energy_exponent(1, 1.3)
    assert abs(exponent - (1 + 2 * 0.3 / 1.7)) < 1e-12
    assert fnls.e_lt(1, 1.3) < fnls.e_tf(1, 1.3) < 0
    assert i1 < 0 and mu1 < 0

    with tempfile.TemporaryDirectory() as out:
        record = fnls.run("solve", "mass = 0.5\n", out)
        assert record["schema_version"] == fnls.SCHEMA_VERSION
        with open(f"{out}/record.json") as f:
            assert json.load(f)["converged"]

    try:
        fnls.ModelParams(2, 2.5, 1.0)
    except ValueError as e:
        assert "range" in str(e)
    else:
        raise AssertionError("inadmissible exponent accepted")

    print(f"ok: J(1.5) = {state.energy:.10f}, I(1) = {i1:.10f}, mu = {state.mu}")


if __name__ == "__main__":
    main()
