import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
import pandas as pd
from scipy import sparse

from .bailout import BailoutProblem
from .exceptions import BankTableError, InstanceFormatError, NetworkValidationError
from .models import RESULT_COLUMNS
from .network import FinancialNetwork, build_network
from .objectives import Objective
from .shocks import KINDS as SHOCK_KINDS
from .shocks import ShockDistribution

logger = logging.getLogger(__name__)

FORMAT_NAME = "pybailout-instance"
FORMAT_VERSION = 1
LAYOUTS = ("matrix", "edges", "npz")


@dataclass(frozen=True, eq=False)
class InstanceData:
    """Everything an instance file carries: network, bailout sizes, budget, shock law and property vector."""

    net: FinancialNetwork
    L: np.ndarray
    budget: float
    shock: ShockDistribution
    q: Optional[np.ndarray] = None
    provenance: str = ""

    def problem(self, obj: Objective, budget: Optional[float] = None) -> BailoutProblem:
        return BailoutProblem(self.net, self.L, self.budget if budget is None else budget, self.shock, obj)


@dataclass(frozen=True)
class BankTableSchema:
    """
    Column layout of a bank table.

    The node table has one row per bank. Interbank liabilities come from
    interbank_path, either a square CSV indexed by bank id on both axes
    (layout "matrix", entry [j, i] owed by j to i), a long CSV of
    (debtor, creditor, amount) rows (layout "edges"), or a scipy .npz
    matrix in node-table order (layout "npz").
    """

    interbank_path: Union[str, Path]
    layout: str = "matrix"
    bank_column: str = "bank"
    assets_column: str = "external_assets"
    liabilities_column: str = "external_liabilities"
    debtor_column: str = "debtor"
    creditor_column: str = "creditor"
    amount_column: str = "amount"


def instance_digest(path: Union[str, Path], length: int = 12) -> str:
    """Short sha256 of an instance file; save_instance output is canonical, so equal instances share it."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:length]


def output_path(path: Union[str, Path]) -> Path:
    """The path of an output file, its parent directories created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def instance_to_dict(instance: InstanceData) -> Dict[str, Any]:
    net = instance.net
    nodes = []
    for j in range(net.n):
        node = {"id": j, "c": float(net.c[j]), "b": float(net.b[j]), "L": float(instance.L[j])}
        if instance.q is not None:
            node["q"] = float(instance.q[j])
        nodes.append(node)
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n": net.n,
        "provenance": instance.provenance,
        "budget": float(instance.budget),
        "shock": instance.shock.to_dict(),
        "nodes": nodes,
        "edges": [[j, i, w] for j, i, w in net.edges()],
    }


def save_instance(instance: InstanceData, path: Union[str, Path]):
    """Write the instance as JSON; identical instances give identical bytes."""
    text = json.dumps(instance_to_dict(instance), indent=2, sort_keys=True, allow_nan=False)
    output_path(path).write_text(text + "\n", encoding="utf-8")


def _field(record: Mapping, key: str, where: str):
    if key not in record:
        raise InstanceFormatError(f"missing field {key!r} in {where}")
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"field {key!r} in {where} is not a number: {value!r}")
    return value


def instance_from_dict(data: Mapping[str, Any]) -> InstanceData:
    if not isinstance(data, Mapping) or data.get("format") != FORMAT_NAME:
        raise InstanceFormatError(f"not a {FORMAT_NAME} document")
    version = data.get("version")
    if version != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported format version {version!r}")

    nodes = data.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise InstanceFormatError("node table missing or empty")
    n = int(_field(data, "n", "header"))
    if len(nodes) != n:
        raise InstanceFormatError(f"header declares n = {n} but the node table has {len(nodes)} rows")

    c, b, L = np.zeros(n), np.zeros(n), np.full(n, np.nan)
    q = np.full(n, np.nan)
    seen = set()
    for row, node in enumerate(nodes):
        where = f"node row {row}"
        j = _field(node, "id", where)
        if not isinstance(j, int) or not 0 <= j < n or j in seen:
            raise InstanceFormatError(f"bad or duplicate node id {j!r} in {where}")
        seen.add(j)
        c[j] = _field(node, "c", where)
        b[j] = _field(node, "b", where)
        if "L" in node:
            L[j] = _field(node, "L", where)
        if "q" in node:
            q[j] = _field(node, "q", where)

    P = sparse.dok_matrix((n, n))
    for row, edge in enumerate(data.get("edges", [])):
        if not isinstance(edge, list) or len(edge) != 3:
            raise InstanceFormatError(f"edge row {row} is not [from, to, liability]")
        j, i, w = edge
        if not all(isinstance(k, int) and 0 <= k < n for k in (j, i)):
            raise InstanceFormatError(f"edge row {row} references unknown node")
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise InstanceFormatError(f"edge row {row} has a non-numeric liability {w!r}")
        P[j, i] += w

    net = build_network(P.tocsr(), b, c, sparse_format=n > 2000)
    # missing bailout sizes default to total liabilities
    L = np.where(np.isnan(L), net.p, L)
    if np.isnan(q).all():
        q = None
    elif np.isnan(q).any():
        raise InstanceFormatError("property q must be given for every node or for none")

    shock_spec = data.get("shock", {"kind": "zero"})
    if not isinstance(shock_spec, Mapping) or shock_spec.get("kind") not in SHOCK_KINDS:
        raise InstanceFormatError(f"bad shock specification {shock_spec!r}")
    return InstanceData(
        net=net,
        L=L,
        budget=float(_field(data, "budget", "header")),
        shock=ShockDistribution.from_dict(shock_spec, net.c),
        q=q,
        provenance=str(data.get("provenance", "")),
    )


def load_instance(path: Union[str, Path]) -> InstanceData:
    """Parse and validate an instance file; parse errors carry line and column."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(e.msg, e.lineno, e.colno) from e
    instance = instance_from_dict(data)
    logger.debug("Loaded %s: n = %d, %d edges", path, instance.net.n, len(data.get("edges", [])))
    return instance


def _interbank_matrix(schema: BankTableSchema, banks: List[str]) -> np.ndarray:
    n = len(banks)
    index = {bank: j for j, bank in enumerate(banks)}
    if schema.layout == "npz":
        P = sparse.load_npz(schema.interbank_path).toarray()
        if P.shape != (n, n):
            raise BankTableError(f"interbank matrix is {P.shape}, node table has {n} banks")
        return P

    if schema.layout == "matrix":
        frame = pd.read_csv(schema.interbank_path, index_col=0)
        frame.index = frame.index.astype(str)
        frame.columns = frame.columns.astype(str)
        missing = sorted(set(banks) - set(frame.index) | set(banks) - set(frame.columns))
        if missing:
            raise BankTableError(f"banks missing from the interbank matrix: {missing}")
        return frame.loc[banks, banks].to_numpy(dtype=float)

    frame = pd.read_csv(schema.interbank_path)
    columns = [schema.debtor_column, schema.creditor_column, schema.amount_column]
    missing = [col for col in columns if col not in frame.columns]
    if missing:
        raise BankTableError(f"missing columns in the interbank edge list: {missing}")
    P = np.zeros((n, n))
    for debtor, creditor, amount in frame[columns].itertuples(index=False):
        debtor, creditor = str(debtor), str(creditor)
        if debtor not in index or creditor not in index:
            raise BankTableError(f"edge {debtor} -> {creditor} references an unknown bank")
        P[index[debtor], index[creditor]] += float(amount)
    return P


def load_bank_table(path: Union[str, Path], schema: BankTableSchema, min_external: Optional[float] = None) -> FinancialNetwork:
    """
    Build a network from a bank balance-sheet table.

    Parameters:
        path (str): CSV node table.
        schema (BankTableSchema): Column names and the interbank matrix source.
        min_external (float, Optional): Floor applied to every external liability.

    Returns:
        FinancialNetwork: Nodes in node-table order.
    """
    if schema.layout not in LAYOUTS:
        raise BankTableError(f"unknown interbank layout {schema.layout!r}, expected one of {LAYOUTS}")
    frame = pd.read_csv(path)
    required = [schema.bank_column, schema.assets_column, schema.liabilities_column]
    missing = [col for col in required if col not in frame.columns]
    if missing:
        raise BankTableError(f"missing columns in {path}: {missing}")
    extra = [col for col in frame.columns if col not in required]
    if extra:
        logger.warning("Ignoring columns %s in %s", extra, path)

    banks = frame[schema.bank_column].astype(str).tolist()
    if len(set(banks)) != len(banks):
        raise BankTableError("duplicate bank ids in the node table")
    c = frame[schema.assets_column].to_numpy(dtype=float)
    b = frame[schema.liabilities_column].to_numpy(dtype=float)
    if min_external is not None:
        b = np.maximum(b, min_external)

    P = _interbank_matrix(schema, banks)
    try:
        return build_network(P, b, c)
    except NetworkValidationError as e:
        rows = [banks[j] for j in e.nodes]
        raise BankTableError(f"{e} (banks: {rows})") from e


def results_frame(rows: Iterable[Mapping[str, Any]]) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows))
    return frame.reindex(columns=RESULT_COLUMNS)


def emit_results(table, path: Union[str, Path]):
    """
    Append result rows to a CSV file with a fixed column order.

    table is a ResultsTable, a DataFrame or an iterable of row dicts; the
    header is written only when the file is new or empty.
    """
    rows = table.rows if hasattr(table, "rows") else table
    frame = rows.reindex(columns=RESULT_COLUMNS) if isinstance(rows, pd.DataFrame) else results_frame(rows)
    path = output_path(path)
    new_file = not path.exists() or path.stat().st_size == 0
    frame.to_csv(path, mode="a", header=new_file, index=False, float_format="%.17g")
