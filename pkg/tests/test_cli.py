import csv
import json

import pytest

from gridplan.cli import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_PLAN_INFEASIBLE, EXIT_USAGE, run_cli


def plan_args(data_dir, out, *extra):
    return [
        "plan",
        "--system", str(data_dir / "toy_system.json"),
        "--timeseries", str(data_dir / "toy_timeseries.csv"),
        "--config", str(data_dir / "toy_config.json"),
        "--out", str(out),
        "--seed", "42",
        "--eps", "1e-3",
        *extra,
    ]  # fmt: skip


@pytest.fixture(scope="module")
def plan_dir(tmp_path_factory):
    from conftest import ROOT

    out = tmp_path_factory.mktemp("plan")
    assert run_cli(plan_args(ROOT / "data", out)) == EXIT_OK
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate(data_dir, capsys):
    assert run_cli(["validate", "--system", str(data_dir / "toy_system.json")]) == EXIT_OK
    assert capsys.readouterr().out.startswith("ok:")


def test_validate_bad_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"buses": []')
    assert run_cli(["validate", "--system", str(bad)]) == EXIT_ERROR


def test_missing_system_is_usage_error():
    assert run_cli(["plan", "--out", "x"]) == EXIT_USAGE
    assert run_cli(["frobnicate"]) == EXIT_USAGE


def test_cluster(data_dir, tmp_path):
    out = tmp_path / "reps.csv"
    code = run_cli(["cluster", "--timeseries", str(data_dir / "toy_timeseries.csv"), "--days", "3", "--hours", "4",
                    "--out", str(out)])  # fmt: skip
    assert code == EXIT_OK
    rows = read_csv(out)
    assert len(rows) == 4
    assert sum(float(r["weight"]) for r in rows) == pytest.approx(14 * 24)


def test_hurricane(data_dir, tmp_path):
    out = tmp_path / "h.json"
    args = ["hurricane", "--system", str(data_dir / "toy_system.json"), "--samples", "200", "--scenarios", "3",
            "--seed", "1", "--out", str(out)]  # fmt: skip
    assert run_cli(args) == EXIT_OK
    doc = json.loads(out.read_text())
    assert sum(s["probability"] for s in doc["speed_scenarios"]) == pytest.approx(1.0, abs=1e-9)
    assert doc["failure_scenarios"]
    for sc in doc["failure_scenarios"]:
        assert 0.0 < sc["probability"] <= 1.0


def test_plan_outputs(plan_dir):
    for name in ("plan.txt", "plan.csv", "costs.csv", "iterations.csv", "scenarios.json"):
        assert (plan_dir / name).exists()
    header = (plan_dir / "plan.csv").read_text().splitlines()[0]
    assert header == "stage,asset,id,corridor,circuits,power_mw,energy_mwh"


def test_costs_add_up(plan_dir):
    costs = {r["component"]: float(r["value_musd"]) for r in read_csv(plan_dir / "costs.csv")}
    assert costs["TIC"] == pytest.approx(costs["AL"] + costs["DL"] + costs["BE"] + costs["WF"], abs=2e-6)
    assert costs["TOC"] == pytest.approx(costs["GF"] + costs["LWC"], abs=2e-6)
    assert costs["TPC"] == pytest.approx(costs["TIC"] + costs["TOC"], abs=2e-6)


def test_capacities_cumulative(plan_dir):
    rows = read_csv(plan_dir / "plan.csv")
    by_asset = {}
    for r in rows:
        if r["asset"] in ("wind_farm", "bes"):
            by_asset.setdefault((r["asset"], r["id"]), []).append((int(r["stage"]), float(r["power_mw"])))
    for series in by_asset.values():
        values = [v for _, v in sorted(series)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_iterations_and_scenarios(plan_dir):
    its = read_csv(plan_dir / "iterations.csv")
    lbs = [float(r["LB"]) for r in its]
    assert all(b >= a - 1e-9 * max(1.0, abs(a)) for a, b in zip(lbs, lbs[1:]))
    doc = json.loads((plan_dir / "scenarios.json").read_text())
    names = [s["name"] for s in doc["contingencies"]]
    assert names[0] == "intact"


def test_plan_is_deterministic(plan_dir, data_dir, tmp_path):
    assert run_cli(plan_args(data_dir, tmp_path)) == EXIT_OK
    for name in ("plan.csv", "costs.csv", "scenarios.json"):
        assert (tmp_path / name).read_bytes() == (plan_dir / name).read_bytes()


def test_iteration_limit_exit_code(data_dir, tmp_path):
    assert run_cli(plan_args(data_dir, tmp_path, "--max-iter", "1")) == EXIT_NOT_CONVERGED
    assert (tmp_path / "plan.csv").exists()


def test_infeasible_plan_exit_code(data_dir, tmp_path):
    doc = json.loads((data_dir / "toy_system.json").read_text())
    for ln in doc["lines"]:
        ln["flow_max"] = min(ln["flow_max"], 1.0)
    path = tmp_path / "weak.json"
    path.write_text(json.dumps(doc))
    args = plan_args(data_dir, tmp_path / "out", "--no-resilience")
    args[2] = str(path)
    assert run_cli(args) == EXIT_PLAN_INFEASIBLE
