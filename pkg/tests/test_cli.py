import json
from datetime import date, timedelta

import pytest

from clinicap.cli import main


def run(args):
    return main([str(a) for a in args])


class TestSynthCommand:
    def test_same_seed_identical_bundles(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["synth", "--out", a, "--seed", 7, "--lgas", 3, "--days", 20]) == 0
        assert run(["synth", "--out", b, "--seed", 7, "--lgas", 3, "--days", 20]) == 0
        for name in ("tests.csv", "cases.csv", "clinics.csv", "census.csv",
                     "interventions.csv", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_usage_error_exit_2(self):
        with pytest.raises(SystemExit) as err:
            run(["synth"])   # missing --out
        assert err.value.code == 2

    def test_unknown_command_exit_2(self):
        with pytest.raises(SystemExit) as err:
            run(["frobnicate"])
        assert err.value.code == 2


@pytest.fixture(scope="class")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    bundle = root / "bundle"
    snapshot = root / "snap.json"
    model = root / "model.json"
    assert run(["synth", "--out", bundle, "--seed", 9, "--lgas", 4, "--days", 40,
                "--clinics-min", 1, "--clinics-max", 3]) == 0
    assert run(["ingest", "--bundle", bundle, "--out", snapshot]) == 0
    assert run(["train", "--snapshot", snapshot, "--out", model,
                "--kind", "forest", "--trees", 8, "--max-depth", 8, "--seed", 9]) == 0
    return root, bundle, snapshot, model


class TestPipelineCommands:
    def test_compare_csv_contract(self, pipeline, capsys):
        root, bundle, snapshot, model = pipeline
        table = root / "table.csv"
        assert run(["compare", "--snapshot", snapshot, "--out", table, "--seed", 9]) == 0
        lines = table.read_text().splitlines()
        assert lines[0] == "Model,RMSE,MAPE,R2"
        assert len(lines) == 5
        rmses = [float(line.split(",")[1]) for line in lines[1:]]
        assert rmses == sorted(rmses)

    def test_predict_csv_and_json(self, pipeline):
        root, bundle, snapshot, model = pipeline
        with open(bundle / "manifest.json") as fh:
            period = json.load(fh)["accounting"]["period"]
        unit = "L00"
        d1 = date.fromisoformat(period[0]) + timedelta(days=10)
        d2 = d1 + timedelta(days=4)
        out_csv = root / "pred.csv"
        out_json = root / "pred.json"
        assert run(["predict", "--snapshot", snapshot, "--model", model,
                    "--unit", unit, "--from", d1, "--to", d2, "--out", out_csv]) == 0
        assert run(["predict", "--snapshot", snapshot, "--model", model,
                    "--unit", unit, "--from", d1, "--to", d2, "--out", out_json]) == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "clinic_id,date,y_clinic"
        payload = json.loads(out_json.read_text())
        assert len(payload["days"]) == 5

    def test_whatif_noop_identity(self, pipeline):
        root, bundle, snapshot, model = pipeline
        with open(bundle / "manifest.json") as fh:
            period = json.load(fh)["accounting"]["period"]
        d1 = date.fromisoformat(period[0]) + timedelta(days=10)
        scenario = root / "empty.json"
        scenario.write_text(json.dumps({
            "unit_id": "L00",
            "from": d1.isoformat(),
            "to": (d1 + timedelta(days=6)).isoformat(),
            "edits": [],
        }))
        out = root / "whatif.json"
        assert run(["whatif", "--snapshot", snapshot, "--model", model,
                    "--scenario", scenario, "--out", out]) == 0
        payload = json.loads(out.read_text())
        assert payload["initial"] == payload["updated"]
        assert all(e["effect"] == 0.0 for e in payload["effects"])

    def test_data_error_exit_1(self, pipeline, capsys):
        root, bundle, snapshot, model = pipeline
        assert run(["predict", "--snapshot", snapshot, "--model", model,
                    "--unit", "NOPE", "--out", root / "x.json"]) == 1
        err = capsys.readouterr().err
        assert json.loads(err.strip())["error"]

    def test_corrupt_snapshot_exit_1(self, pipeline, capsys):
        root, bundle, snapshot, model = pipeline
        bad = root / "bad.json"
        blob = bytearray(snapshot.read_bytes())
        pos = blob.index(b'"payload"') + len(b'"payload"')
        while not chr(blob[pos]).isdigit():
            pos += 1
        blob[pos] = ord(str((int(chr(blob[pos])) + 1) % 10))
        bad.write_bytes(bytes(blob))
        assert run(["compare", "--snapshot", bad, "--out", root / "t.csv"]) == 1
        assert json.loads(capsys.readouterr().err.strip())["error"] == "ChecksumError"
