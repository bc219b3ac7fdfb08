import json

import numpy as np
import pytest

import fdrsim

SHIFT = """
module shift
input d v
output q qv
wire a av
dff f0 1 a d
dff f1 1 q a
dff g0 1 av v
dff g1 1 qv av
endmodule
"""

STIM = "cycles 12\nactive 1 8\n@0 d=1 v=1\n@2 d=0\n@5 v=0\n"


@pytest.fixture
def design():
    net = fdrsim.parse_netlist(SHIFT)
    return net, fdrsim.parse_stimulus(STIM, net)


def test_netlist_and_simulation(design):
    net, stim = design
    assert net.flip_flops == ["f0", "f1", "g0", "g1"]
    assert net.outputs == ["q", "qv"]
    assert stim.active_window == (1, 8)
    golden = fdrsim.simulate(net, stim)
    assert golden["trace"].shape == (12, 2)
    assert golden["trace"][:4, 0].tolist() == [0, 0, 1, 1]
    faulty = fdrsim.simulate(net, stim, fault=(0, 4))
    assert faulty["trace"][6, 0] != golden["trace"][6, 0]


def test_errors_carry_codes():
    with pytest.raises(fdrsim.Error) as info:
        fdrsim.parse_netlist("module m\ninput a\noutput b\ncell g AND2 1 b a\nendmodule\n")
    assert info.value.code == "ArityMismatch"
    assert info.value.line == 4
    with pytest.raises(fdrsim.Error) as info:
        fdrsim.fit(np.zeros((3, 1)), np.zeros(3), "knn", k=4)
    assert info.value.code == "KTooLarge"


def test_exhaustive_campaign(design):
    net, stim = design
    rows = fdrsim.run_campaign(net, stim, ["q"], "qv", exhaustive=True)
    assert [r["runs"] for r in rows] == [8] * 4
    for r in rows:
        assert r["application_failures"] <= r["output_failures"]
        assert r["fdr_output"] == r["output_failures"] / 8


def test_features_on_demo():
    demo = fdrsim.generate_demo(seed=2, width=4, stages=3, cycles=60, injections=5)
    net = fdrsim.parse_netlist(demo["netlist"])
    stim = fdrsim.parse_stimulus(demo["stimulus"], net)
    table = fdrsim.extract_features(net, stim)
    assert table["values"].shape == (len(net.flip_flops), len(table["names"]))
    assert table["flip_flops"] == net.flip_flops


def test_models_and_metrics():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(60, 3))
    y = 0.5 + 0.2 * X[:, 0] - 0.1 * X[:, 2]
    assert len(fdrsim.model_ids()) == 11
    ols = fdrsim.fit(X, y)
    assert np.allclose(ols.predict(X), y, atol=1e-9)
    svr = fdrsim.fit(X, y, "svr-rbf", C=10.0, epsilon=0.01, gamma=0.5)
    assert svr.kind == "svr"
    assert svr.hyperparameters["C"] == 10.0
    again = fdrsim.Model.from_json(svr.to_json())
    assert np.array_equal(again.predict(X), svr.predict(X))
    assert json.loads(svr.to_json())["kind"] == "svr"
    m = fdrsim.metrics([0.0, 1.0], [0.5, 0.5])
    assert m == {"mae": 0.5, "max_abs": 0.5, "rmse": 0.5, "ev": 0.0, "r2": 0.0}
    assert fdrsim.metrics([1.0, 1.0], [1.0, 0.0])["r2"] is None
    cv = fdrsim.cv_evaluate(X, y, "knn", folds=4, seed=3, k=3, metric="manhattan")
    assert cv["test_r2"]["count"] == 4
    assert cv["test_r2"]["mean"] > 0.5


def test_cli_in_process(tmp_path):
    code, out, _ = fdrsim.run_cli(["gen-demo", "--out", str(tmp_path), "--seed", "3"])
    assert code == 0
    code, _, err = fdrsim.run_cli(["golden", "--config", str(tmp_path / "demo.toml")])
    assert code == 0, err
    assert (tmp_path / "results" / "golden_trace.csv").exists()
    assert fdrsim.run_cli(["campaign"])[0] == 2
