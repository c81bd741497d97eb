import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pybailout.exceptions import BankTableError, InstanceFormatError
from pybailout.instances import GeneratorSpec, generate
from pybailout.models import RESULT_COLUMNS
from pybailout.network import clear_fixed_point
from pybailout.storage import (
    BankTableSchema,
    emit_results,
    instance_digest,
    instance_from_dict,
    instance_to_dict,
    load_bank_table,
    load_instance,
    save_instance,
)

DOCS = Path(__file__).resolve().parent.parent / "docs"


def _document(**changes):
    data = {
        "format": "pybailout-instance",
        "version": 1,
        "n": 2,
        "budget": 1.0,
        "nodes": [{"id": 0, "c": 1.5, "b": 0.5}, {"id": 1, "c": 0.0, "b": 1.0}],
        "edges": [[0, 1, 1.0]],
    }
    data.update(changes)
    return data


def test_saved_instance_reloads_to_identical_bytes(tmp_path):
    instance = generate(GeneratorSpec("random-er", {"n": 25, "p": 0.2, "property": True}, seed=11))
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    save_instance(instance, first)
    save_instance(load_instance(first), second)
    assert first.read_bytes() == second.read_bytes()
    assert instance_digest(first) == instance_digest(second)
    assert len(instance_digest(first, 8)) == 8


def test_docs_example_is_the_worked_example():
    instance = load_instance(DOCS / "example1.json")
    result = clear_fixed_point(instance.net, instance.shock.x0)
    assert np.allclose(result.pbar, [0.5, 1.0 / 3.0])
    assert instance.budget == 1.0
    assert np.array_equal(instance.L, [1.0, 1.0])
    assert instance.q is None


def test_defaults_for_missing_fields():
    instance = instance_from_dict(_document())
    assert np.allclose(instance.L, instance.net.p)
    assert instance.shock.kind == "zero"
    assert instance.provenance == ""


def test_empty_edge_list():
    data = _document(n=1, nodes=[{"id": 0, "c": 1.0, "b": 2.0, "L": 0.5}], edges=[])
    instance = instance_from_dict(data)
    assert instance.net.n == 1
    assert instance_to_dict(instance)["edges"] == []


def test_parallel_edges_are_summed():
    instance = instance_from_dict(_document(edges=[[0, 1, 1.0], [0, 1, 0.5]]))
    assert instance.net.dense_P()[0, 1] == pytest.approx(1.5)


@pytest.mark.parametrize(
    "changes",
    [
        {"format": "csv"},
        {"version": 2},
        {"n": 3},
        {"nodes": []},
        {"nodes": [{"id": 0, "c": 1.5, "b": 0.5}, {"id": 0, "c": 0.0, "b": 1.0}]},
        {"nodes": [{"id": 0, "c": "a lot", "b": 0.5}, {"id": 1, "c": 0.0, "b": 1.0}]},
        {"nodes": [{"id": 0, "c": 1.5, "b": 0.5, "q": 1.0}, {"id": 1, "c": 0.0, "b": 1.0}]},
        {"edges": [[0, 2, 1.0]]},
        {"edges": [[0, 1]]},
        {"shock": {"kind": "pareto"}},
        {"budget": True},
    ],
)
def test_malformed_documents(changes):
    with pytest.raises(InstanceFormatError):
        instance_from_dict(_document(**changes))


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "format": "pybailout-instance",\n  "budget": 1.0.5\n}\n')
    with pytest.raises(InstanceFormatError) as info:
        load_instance(path)
    assert info.value.line == 3
    assert info.value.column == 16
    assert "line 3" in str(info.value)


def _bank_files(tmp_path, c_liabilities=1.0, extra=False):
    nodes = pd.DataFrame(
        {
            "bank": ["A", "B", "C"],
            "external_assets": [10.0, 4.0, 1.0],
            "external_liabilities": [5.0, 2.0, c_liabilities],
        }
    )
    if extra:
        nodes["country"] = ["IT", "FR", "DE"]
    matrix = pd.DataFrame([[0.0, 3.0, 0.0], [1.0, 0.0, 2.0], [1.0, 0.0, 0.0]], index=list("ABC"), columns=list("ABC"))
    nodes.to_csv(tmp_path / "nodes.csv", index=False)
    matrix.to_csv(tmp_path / "interbank.csv")
    return tmp_path / "nodes.csv", BankTableSchema(tmp_path / "interbank.csv")


def test_bank_table_matrix_layout(tmp_path):
    path, schema = _bank_files(tmp_path)
    net = load_bank_table(path, schema)
    assert np.allclose(net.p, [8.0, 5.0, 2.0])
    assert np.allclose(net.c, [10.0, 4.0, 1.0])
    assert net.dense_P()[1, 2] == 2.0


def test_bank_table_edge_layout(tmp_path):
    path, _ = _bank_files(tmp_path)
    edges = pd.DataFrame({"debtor": ["A", "B", "B", "C"], "creditor": ["B", "A", "C", "A"], "amount": [3.0, 1.0, 2.0, 1.0]})
    edges.to_csv(tmp_path / "edges.csv", index=False)
    net = load_bank_table(path, BankTableSchema(tmp_path / "edges.csv", layout="edges"))
    assert np.allclose(net.p, [8.0, 5.0, 2.0])


def test_bank_table_missing_column(tmp_path):
    path, schema = _bank_files(tmp_path)
    pd.read_csv(path).drop(columns=["external_assets"]).to_csv(path, index=False)
    with pytest.raises(BankTableError, match="external_assets"):
        load_bank_table(path, schema)


def test_bank_table_rejects_fully_interbank_bank(tmp_path):
    path, schema = _bank_files(tmp_path, c_liabilities=0.0)
    with pytest.raises(BankTableError, match="'C'"):
        load_bank_table(path, schema)
    net = load_bank_table(path, schema, min_external=0.5)
    assert net.b[2] == 0.5


def test_bank_table_ignores_extra_columns(tmp_path, caplog):
    path, schema = _bank_files(tmp_path, extra=True)
    with caplog.at_level(logging.WARNING, logger="pybailout.storage"):
        net = load_bank_table(path, schema)
    assert net.n == 3
    assert "country" in caplog.text


def test_bank_table_unknown_layout(tmp_path):
    path, _ = _bank_files(tmp_path)
    with pytest.raises(BankTableError):
        load_bank_table(path, BankTableSchema(tmp_path / "interbank.csv", layout="parquet"))


def test_emit_results_writes_header_once(tmp_path):
    path = tmp_path / "out" / "results.csv"
    row = {"experiment": "sweep-budget", "algorithm": "greedy", "k": 1, "mean": 2.5, "status": "ok"}
    emit_results([row], path)
    emit_results([dict(row, k=2, mean=1.0 / 3.0)], path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == RESULT_COLUMNS
    assert len(lines) == 3
    frame = pd.read_csv(path)
    assert frame["k"].tolist() == [1, 2]
    assert frame["mean"].iloc[1] == 1.0 / 3.0


def test_instance_document_is_plain_json(tmp_path):
    path = tmp_path / "two.json"
    save_instance(instance_from_dict(_document()), path)
    data = json.loads(path.read_text())
    assert data["edges"] == [[0, 1, 1.0]]
    assert [node["id"] for node in data["nodes"]] == [0, 1]
