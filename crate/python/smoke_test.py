"""Smoke test for the densewlan_py extension.

Build and run from the repository root:

    cargo build --release -p densewlan-py --features extension-module
    cp target/release/libdensewlan_py.so python/densewlan_py.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import densewlan_py as dw  # noqa: E402


def main() -> None:
    assignment, objective = dw.solve([[3.0, 1.0], [2.0, 4.0]])
    assert assignment == [0, 1] and objective == 7.0

    kma_assignment, kma_objective = dw.kma([[3.0, 1.0], [2.0, 4.0]])
    assert kma_objective == objective, (kma_assignment, kma_objective)

    padded = dw.pad_and_replicate([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], 2)
    assert len(padded) == len(padded[0]) == 4

    f = dw.link_figures(10.0)
    assert math.isclose(f["rate_bps"], 20e6 * math.log2(11.0))
    assert f["beta"] > 0 and f["utility"] > 0

    net = dw.Network(seed=7)
    assert net.n_ap >= 1
    w = net.weights()
    assert len(w) == net.n_sta and all(len(r) == net.n_ap for r in w)
    gaa = net.associate("gaa")
    ssf = net.associate("ssf")
    assert gaa["objective"] >= ssf["objective"] - 1e-9

    engine = dw.GdaEngine(net.n_ap)
    for i, row in enumerate(w):
        engine.admit(i, row)
    assert math.isclose(engine.objective, gaa["objective"], rel_tol=1e-9, abs_tol=1e-9)

    agg, per_sta = net.simulate("gaa", n_slots=200, seed=1)
    assert agg >= 0 and len(per_sta) == net.n_sta

    rows = dw.run_monte_carlo(["gaa", "ssf"], realizations=2, n_slots=100)
    assert [r["scheme"] for r in rows] == ["gaa", "ssf"]
    for r in rows:
        assert r["ci_lo"] <= r["agg_mbps"] <= r["ci_hi"]

    print(f"ok: {net.n_sta} STAs, {net.n_ap} APs, GAA objective {gaa['objective']:.3f}, {agg:.1f} Mbps")


if __name__ == "__main__":
    main()
