"""Smoke test for the inls extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import json
import math
import tempfile

import inls


def main():
    k = inls.constants(3, 1)
    assert abs(k["c"] - 8 * math.pi / 3) < 1e-9, k
    assert abs(k["E_W"] - k["c"] / 4) < 1e-12, k
    assert abs(inls.constants(4, "1/2")["alpha"] - 1.5) < 1e-15
    assert inls.critical_alpha(3, 0.25) == "3.5"
    assert inls.critical_alpha(4, "1/3") == "5/3"

    # W(r) = (1 + r/2)^{-1} for (3, 1)
    w = inls.ground_state(3, 1.0, [0.0, 2.0])
    assert abs(w[0] - 1.0) < 1e-12 and abs(w[1] - 0.5) < 1e-12, w

    try:
        inls.constants(6, 1)
    except ValueError as e:
        assert "model" in str(e), e
    else:
        raise AssertionError("N = 6 accepted")

    keys = dict(inls.config_keys())
    assert "data.amplitude" in keys

    with tempfile.TemporaryDirectory() as out:
        config = (
            "N = 3\nb = 1\nmu = focusing\ngrid.points = 16\ngrid.L = 8\n"
            "data.family = gaussian\ndata.amplitude = 0.3\n"
            "evolve.dt = 0.01\nevolve.t_end = 0.2\nevolve.checkpoint_stride = 5\n"
            f"output.dir = {out}\n"
        )
        record = json.loads(inls.run_experiment(config))
        assert record["threshold"]["subthreshold"], record["threshold"]
        assert record["error"] is None
        rows = inls.sweep(config, [0.0, 0.2]).splitlines()
        assert rows[0] == "A,E0,K0,subthreshold,verdict" and len(rows) == 3, rows

    print(f"inls {inls.__version__}: smoke test ok")


if __name__ == "__main__":
    main()
