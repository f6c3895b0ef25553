import csv
import io
import json
import math
import os
from pathlib import Path

import pytest

import estimand_lab as el

SCENARIOS = Path(os.environ.get("ESTIMAND_SCENARIOS", Path(__file__).resolve().parents[2] / "scenarios"))

MODEL = {
    "model": {
        "link": "logit",
        "treatments": ["A", "B", "C"],
        "prognostic": [-1],
        "interactions": {"B": [-3], "C": [-1]},
        "treatment_effects": {"B": -4, "C": -3},
    },
    "population": {"intercept": 0, "covariates": [{"type": "uniform", "lo": -1, "hi": 1}]},
}


def expit_mean(a, b):
    # mean of expit(a + b x) for x ~ U(-1, 1)
    return (math.log1p(math.exp(a + b)) - math.log1p(math.exp(a - b))) / (2 * b)


def pair(report, a, b):
    return next(p for p in report["pairs"] if p["a"] == a and p["b"] == b)


def test_report_from_dict_matches_closed_form():
    r = el.run("report", MODEL)
    pb = expit_mean(-4, -4)
    assert r["average_probability"]["B"] == pytest.approx(pb, abs=1e-10)
    assert pair(r, "A", "B")["conditional"] == pytest.approx(-4, abs=1e-10)
    assert pair(r, "A", "B")["marginal"] == pytest.approx(math.log(pb / (1 - pb)), abs=1e-9)
    assert r["conflict"] is True
    assert r["config_hash"].startswith("fnv1a64:")


def test_bundled_contingency_table():
    r = el.run("contingency", SCENARIOS / "stratified_table.csv")
    assert r["policy"]["assignment"] == {"x0": "C", "x1": "D"}
    ors = {row["treatment"]: round(row["marginal_or"], 2) for row in r["comparisons"]}
    assert ors == {"B": 0.27, "C": 0.33, "D": 0.30}


def test_figure_csv():
    text = el.figure("fig1", MODEL)
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    table = list(csv.DictReader(io.StringIO("\n".join(rows))))
    for row in table:
        x = float(row["x"])
        assert float(row["gamma_A_B"]) == pytest.approx(-4 - 3 * x, abs=1e-10)
    assert "# crossing gamma_A_B gamma_A_C x=-0.5" in text


def test_validation_error_maps_to_value_error():
    bad = {**MODEL, "model": {**MODEL["model"], "interactions": {"Z": [1]}}}
    with pytest.raises(ValueError):
        el.run("report", bad)


def test_main_exit_codes(tmp_path):
    code, out, err = el.main(["report", "--config", str(SCENARIOS / "worked_example.json")])
    assert code == 0 and out and not err
    code, out, err = el.main(["report", "--config", str(tmp_path / "missing.json")])
    assert code == 1 and '"validation_error"' in err


def test_links():
    assert el.link_inverse("logit", el.link_forward("logit", 0.3)) == pytest.approx(0.3, abs=1e-15)
    assert el.collapsibility("log") == "collapsible"
    assert el.collapsibility("probit") == "non_collapsible"
    with pytest.raises(ArithmeticError):
        el.link_inverse("identity", 1.2)


def test_bundled_configs_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((SCENARIOS.parent / "schemas" / "config.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    configs = sorted(SCENARIOS.glob("*.json"))
    assert configs
    for path in configs:
        doc = json.loads(path.read_text())
        jsonschema.validate(doc, schema)
        if doc["analysis"] == "figure":
            assert el.figure(doc["figure"]["id"], path)
        elif doc["analysis"] != "oracle":
            assert el.run(doc["analysis"], path)["config_hash"].startswith("fnv1a64:")
