"""Command-line interface: subcommands, exit codes, atomic outputs."""

import io
import json
import os

import pytest

from ocmine.cli import main
from ocmine.examples import (
    generate_order_item_route_log,
    order_item_route_model,
    order_item_route_population,
)
from ocmine.io import write_mdl, write_model


@pytest.fixture(scope="module")
def log_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("logs") / "routes.mdl"
    log = generate_order_item_route_log(
        seed=1, n_orders=10, items_per_order=3, n_routes=2, batch_size=15)
    write_mdl(log, str(path))
    return str(path)


class TestStats:
    def test_text_output(self, log_path, capsys):
        assert main(["stats", "--log", log_path]) == 0
        out = capsys.readouterr().out
        assert "events: 54" in out
        assert "1 / 1.00 / 1" in out

    def test_json_output(self, log_path, capsys):
        assert main(["stats", "--log", log_path, "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["events"] == 54
        assert doc["object_types"] == {"items": 30, "orders": 10, "routes": 2}

    def test_type_view(self, log_path, capsys):
        assert main(["stats", "--log", log_path, "--types", "routes", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc["object_types"]) == {"routes"}


class TestFlattenAndDiagnose:
    def test_flatten_csv(self, log_path, tmp_path, capsys):
        out = tmp_path / "flat.csv"
        assert main(["flatten", "--log", log_path, "--type", "orders",
                     "-o", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "case_id,event_id,activity,timestamp"
        assert len(lines) == 1 + 20  # 10 place order + 10 mark as completed

    def test_diagnose(self, log_path, capsys):
        assert main(["diagnose", "--log", log_path, "--type", "orders"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["deficient"] == 34  # pick item and route events
        assert doc["convergent"] == 0

    def test_unknown_type_is_data_error(self, log_path, capsys):
        assert main(["diagnose", "--log", log_path, "--type", "nope"]) == 2


class TestDiscoverAnnotateRender:
    def test_discover_then_render(self, log_path, tmp_path, capsys):
        model = tmp_path / "model.json"
        assert main(["discover", "--log", log_path, "--tau", "0.98",
                     "--noise", "0", "-o", str(model)]) == 0
        doc = json.loads(model.read_text())
        assert doc["schema_version"] == 1
        assert any(a["variable"] for a in doc["arcs"])
        dot = tmp_path / "model.dot"
        assert main(["render", "--model", str(model), "-o", str(dot)]) == 0
        assert dot.read_text().startswith("digraph ocpn {")

    def test_annotate_includes_frequencies(self, log_path, capsys):
        assert main(["annotate", "--log", log_path]) == 0
        doc = json.loads(capsys.readouterr().out)
        freqs = {
            next(t["label"] for t in doc["transitions"] if t["id"] == tid):
                entry["frequency"]
            for tid, entry in doc["annotations"]["transitions"].items()
        }
        assert freqs["place order"] == 10

    def test_invalid_tau_is_usage_error(self, log_path):
        assert main(["discover", "--log", log_path, "--tau", "7"]) == 1

    def test_unknown_subcommand_is_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_missing_file_is_data_error(self, capsys):
        assert main(["stats", "--log", "/nonexistent.mdl"]) == 2

    def test_failed_run_leaves_no_partial_output(self, tmp_path):
        out = tmp_path / "model.json"
        assert main(["discover", "--log", "/nonexistent.mdl", "-o", str(out)]) == 2
        assert not out.exists()
        assert list(tmp_path.iterdir()) == []


class TestSimulateAndConformance:
    def test_simulate_round_trip(self, tmp_path, capsys):
        pop = order_item_route_population(
            n_orders=4, items_per_order=2, n_routes=2, batch_size=4)
        model_path = tmp_path / "model.json"
        write_model(order_item_route_model(pop), str(model_path))
        pop_path = tmp_path / "pop.json"
        pop_path.write_text(json.dumps({
            "counts": {"orders": 4, "items": 8, "routes": 2},
            "ownership": {"items": ["orders", 2]},
            "batches": {"routes": ["items", 4]},
        }))
        out = tmp_path / "sim.mdl"
        assert main(["simulate", "--model", str(model_path),
                     "--population", str(pop_path), "--seed", "5",
                     "-o", str(out)]) == 0
        assert out.read_text().count("place order") == 4

        conf_out = tmp_path / "conf.json"
        assert main(["conformance", "--log", str(out),
                     "--model", str(model_path), "-o", str(conf_out)]) == 0
        doc = json.loads(conf_out.read_text())
        assert doc == {"items": 1.0, "orders": 1.0, "routes": 1.0}


class TestDeterminism:
    def test_identical_flags_identical_bytes(self, log_path, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["discover", "--log", log_path, "-o", str(a)])
        main(["discover", "--log", log_path, "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()
