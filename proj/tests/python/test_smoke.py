import math

import numpy as np
import pytest

import chaosbsde as cb


def test_hermite():
    assert cb.hermite(4, 1.0) == pytest.approx(-1.0 / 12.0)
    assert cb.hermite_all(2, 0.5) == pytest.approx([1.0, 0.5, -0.375])


def test_index_sets():
    assert cb.index_count(3, 60) == 39711
    idx = cb.multi_indices(2, 2)
    assert len(idx) == 6
    assert idx[0] == [0, 0]


def test_config_defaults_and_errors():
    c = cb.config(problem="vanilla_call")
    assert c["m"] == 20 and c["problem"] == "vanilla_call"
    with pytest.raises(cb.ConfigError, match="/P"):
        cb.config(P=-1)
    with pytest.raises(ValueError, match="unknown key"):
        cb.config(banana=1)


def test_vanilla_call():
    row = cb.run(problem="vanilla_call", m=10, M=10, P=3, N=20000, threads=1)
    bs = cb.bs_call_price(1.0, 0.9, 0.01, 0.2, 1.0)
    assert abs(row["y0"] - bs) < 0.05 * bs
    assert len(row["z0"]) == 1


def test_solve_retains_coefficients():
    out = cb.solve(problem="bt_squared", m=4, M=4, P=2, N=5000, retain=True)
    assert len(out["coefficients"]) == 4
    assert out["coefficients"][0][0] == out["y0"]
    assert isinstance(out["terminal"], np.ndarray)
    assert out["steps"][0]["step"] == 4


def test_repeat_and_sweep():
    rows = cb.repeat(problem="example2", m=4, M=4, P=1, N=2000, repetitions=2)
    assert [r["seed"] for r in rows] == [1, 2]
    rows = cb.sweep(problem="example2", m=4, M=4, N=2000, sweep_axis="P", sweep_values=[1, 2])
    assert [r["P"] for r in rows] == [1, 2]


def test_determinism_across_threads():
    a = cb.run(problem="example2", m=5, M=5, P=2, N=9000, threads=1)
    b = cb.run(problem="example2", m=5, M=5, P=2, N=9000, threads=3)
    assert a["y0"] == b["y0"] and a["z0"] == b["z0"]


def test_paths():
    names, table = cb.paths(problem="bt_squared", m=4, M=4, P=2, N=5000, paths=3)
    assert names == ["path", "t", "Y", "Z1"]
    assert table.shape == (15, 4)
    assert np.all(np.isfinite(table))


def test_oracle():
    out = cb.oracle(problem="vanilla_call", oracle_N=20000)
    v, se = out["y0"]
    bs = cb.bs_call_price(1.0, 0.9, 0.01, 0.2, 1.0)
    assert abs(v - bs) < 5 * se
    assert math.isfinite(out["z0"][0][1])
