"""Readers and writers for cluster / workload JSON, STG task graphs, and a
seeded generator of synthetic layered instances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParseError, SchemaError
from .model import Node, Task, Workflow, validate_workflow

DEFAULT_DTR = 100.0
DEFAULT_SPEED = 1.0
DEFAULT_STG_COST = 0.01


@dataclass
class ClusterFile:
    nodes: list
    rates: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# JSON helpers


def _strip_elisions(text: str) -> str:
    """Drop ``...`` placeholders outside strings and the trailing commas
    they leave behind, so abbreviated documentation snippets still load."""
    out = []
    i, n = 0, len(text)
    in_str = False
    while i < n:
        ch = text[i]
        if in_str:
            out.append(ch)
            if ch == "\\" and i + 1 < n:
                out.append(text[i + 1])
                i += 2
                continue
            if ch == '"':
                in_str = False
            i += 1
            continue
        if ch == '"':
            in_str = True
        elif text.startswith("...", i):
            i += 3
            continue
        out.append(ch)
        i += 1
    cleaned = "".join(out)
    # trailing commas before a closing bracket, again ignoring strings
    res = []
    in_str = False
    i, n = 0, len(cleaned)
    while i < n:
        ch = cleaned[i]
        if in_str:
            res.append(ch)
            if ch == "\\" and i + 1 < n:
                res.append(cleaned[i + 1])
                i += 2
                continue
            if ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
            res.append(ch)
        elif ch == ",":
            k = i + 1
            while k < n and cleaned[k].isspace():
                k += 1
            if k < n and cleaned[k] in "}]":
                # keep newlines so reported line numbers stay put
                res.append("".join(c for c in cleaned[i + 1:k] if c == "\n"))
                i = k
                continue
            res.append(ch)
        else:
            res.append(ch)
        i += 1
    return "".join(res)


def _load_json(text: str):
    try:
        return json.loads(_strip_elisions(text))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None


def _number(value, path, integer=False, positive=False, allow_list=True):
    if allow_list and isinstance(value, list):
        if len(value) != 1:
            raise SchemaError(path, f"expected a number or a one-element list, got {len(value)} items")
        value = value[0]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise SchemaError(path, "must be finite")
    if value < 0:
        raise SchemaError(path, f"must be non-negative, got {value}")
    if positive and value == 0:
        raise SchemaError(path, "must be positive")
    if integer:
        if value != int(value):
            raise SchemaError(path, f"expected an integer, got {value}")
        return int(value)
    return float(value)


def _features(value, path):
    if value is None:
        return frozenset()
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not all(isinstance(f, str) for f in value):
        raise SchemaError(path, "features must be a list of strings")
    return frozenset(value)


def _obj(value, path):
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


# ---------------------------------------------------------------------------
# cluster


def load_cluster(text: str) -> ClusterFile:
    doc = _obj(_load_json(text), "<root>")
    if "nodes" not in doc:
        raise SchemaError("nodes", "missing top-level 'nodes' object")
    nodes = []
    for name, spec in _obj(doc["nodes"], "nodes").items():
        base = f"nodes.{name}"
        spec = _obj(spec, base)
        if "cores" not in spec:
            raise SchemaError(f"{base}.cores", "required")
        kw = {
            "cores": _number(spec["cores"], f"{base}.cores", integer=True),
            "features": _features(spec.get("features"), f"{base}.features"),
            "processing_speed": _number(spec.get("processing_speed", DEFAULT_SPEED),
                                        f"{base}.processing_speed", positive=True),
            "data_transfer_rate": _number(spec.get("data_transfer_rate", DEFAULT_DTR),
                                          f"{base}.data_transfer_rate", positive=True),
        }
        for key in ("memory", "storage"):
            if spec.get(key) is not None:
                kw[key] = _number(spec[key], f"{base}.{key}")
        nodes.append(Node(id=name, **kw))
    rates = {}
    known = {n.id for n in nodes}
    for a, row in _obj(doc.get("rates", {}), "rates").items():
        for b, r in _obj(row, f"rates.{a}").items():
            path = f"rates.{a}.{b}"
            if a not in known or b not in known:
                raise SchemaError(path, "unknown node")
            rates[(a, b)] = _number(r, path, positive=True, allow_list=False)
    return ClusterFile(nodes, rates)


def parse_cluster(text: str) -> list:
    return load_cluster(text).nodes


def serialize_cluster(nodes, rates: Optional[dict] = None) -> str:
    out = {}
    for n in nodes:
        spec = {"cores": n.cores}
        if math.isfinite(n.memory):
            spec["memory"] = n.memory
        if math.isfinite(n.storage):
            spec["storage"] = n.storage
        spec["features"] = sorted(n.features)
        spec["processing_speed"] = n.processing_speed
        spec["data_transfer_rate"] = n.data_transfer_rate
        out[n.id] = spec
    doc = {"nodes": out}
    if rates:
        rt = {}
        for (a, b), r in rates.items():
            rt.setdefault(a, {})[b] = r
        doc["rates"] = rt
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# workload


def _parse_task(name, spec, base):
    spec = _obj(spec, base)
    durations = None
    if spec.get("duration") is not None:
        raw = spec["duration"]
        raw = raw if isinstance(raw, list) else [raw]
        if not raw:
            raise SchemaError(f"{base}.duration", "empty duration list")
        durations = tuple(_number(d, f"{base}.duration[{i}]", allow_list=False) for i, d in enumerate(raw))
    work = None
    if spec.get("work") is not None:
        work = _number(spec["work"], f"{base}.work")
    if durations is None and work is None:
        raise SchemaError(base, "needs 'duration' or 'work'")
    deps = spec.get("dependencies", [])
    if not isinstance(deps, list) or not all(isinstance(d, str) for d in deps):
        raise SchemaError(f"{base}.dependencies", "must be a list of task names")
    costs = {}
    for pred, c in _obj(spec.get("transfer_costs", {}), f"{base}.transfer_costs").items():
        costs[pred] = _number(c, f"{base}.transfer_costs.{pred}", allow_list=False)
    return Task(
        id=name,
        cores=_number(spec.get("cores", 0), f"{base}.cores", integer=True),
        memory=_number(spec.get("memory_required", 0), f"{base}.memory_required"),
        data_out=_number(spec.get("data", 0), f"{base}.data"),
        features=_features(spec.get("features"), f"{base}.features"),
        durations=durations,
        work=work,
        dependencies=tuple(deps),
        transfer_costs=costs,
    )


def parse_workload(text: str) -> list:
    doc = _obj(_load_json(text), "<root>")
    workflows = []
    for wname, wspec in doc.items():
        wspec = _obj(wspec, wname)
        tasks_spec = _obj(wspec.get("tasks", {}), f"{wname}.tasks")
        tasks = [_parse_task(tn, ts, f"{wname}.tasks.{tn}") for tn, ts in tasks_spec.items()]
        for t in tasks:
            for pred in t.transfer_costs:
                if pred not in t.dependencies:
                    raise SchemaError(f"{wname}.tasks.{t.id}.transfer_costs.{pred}", "not a dependency")
        sub = _number(wspec.get("submission_time", 0), f"{wname}.submission_time", allow_list=False)
        wf = Workflow(wname, tuple(tasks), sub)
        validate_workflow(wf)
        workflows.append(wf)
    return workflows


def serialize_workload(workflows) -> str:
    doc = {}
    for wf in workflows:
        tasks = {}
        for t in wf.tasks:
            spec = {"cores": t.cores, "memory_required": t.memory, "features": sorted(t.features),
                    "data": t.data_out}
            if t.durations is not None:
                spec["duration"] = list(t.durations)
            if t.work is not None:
                spec["work"] = t.work
            spec["dependencies"] = list(t.dependencies)
            if t.transfer_costs:
                spec["transfer_costs"] = dict(t.transfer_costs)
            tasks[t.id] = spec
        entry = {"tasks": tasks}
        if wf.submission_time:
            entry["submission_time"] = wf.submission_time
        doc[wf.id] = entry
    return json.dumps(doc, indent=2)


def check_compatible(nodes, workflows):
    """Per-node duration lists must match the cluster size."""
    m = len(nodes)
    for wf in workflows:
        for t in wf.tasks:
            if t.durations is not None and len(t.durations) not in (1, m):
                raise SchemaError(f"{wf.id}.tasks.{t.id}.duration",
                                  f"{len(t.durations)} values for {m} nodes")


# ---------------------------------------------------------------------------
# Standard Task Graph Set


def parse_stg(text: str, comm_cost_mode: str = "none", default_cost: float = DEFAULT_STG_COST,
              speed_map: Optional[dict] = None, cores: int = 1, workflow_id: str = "stg") -> Workflow:
    """Read an STG task graph.

    Layout: a task-count header (real tasks, excluding the two dummies),
    then one record per task: ``index time npred pred...``. With
    ``comm_cost_mode="explicit"`` each predecessor is followed by its edge
    cost. ``"default"`` charges ``default_cost`` seconds on every cross-node
    edge and ``"none"`` makes all transfers free. Lines starting with ``#``
    are comments.
    """
    if comm_cost_mode not in ("none", "explicit", "default"):
        raise ValueError(f"unknown comm_cost_mode {comm_cost_mode!r}")
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if s:
            rows.append((lineno, s.split()))
    if not rows:
        raise ParseError("empty STG text")
    hline, header = rows[0]
    if len(header) != 1:
        raise ParseError("header must be a single task count", line=hline)
    count = _stg_int(header[0], hline)
    records = rows[1:]
    if count == 0 and not records:
        return Workflow(workflow_id, ())
    if len(records) != count + 2:
        raise ParseError(f"expected {count + 2} task records (including dummies), got {len(records)}",
                         line=records[-1][0] if records else hline)
    tasks = []
    seen = set()
    for lineno, tok in records:
        if len(tok) < 3:
            raise ParseError("record needs index, processing time and predecessor count", line=lineno)
        idx = _stg_int(tok[0], lineno)
        ptime = _stg_num(tok[1], lineno)
        npred = _stg_int(tok[2], lineno)
        width = 2 if comm_cost_mode == "explicit" else 1
        rest = tok[3:]
        if len(rest) != npred * width:
            raise ParseError(f"task {idx}: expected {npred * width} predecessor fields, got {len(rest)}", line=lineno)
        if idx in seen:
            raise ParseError(f"duplicate task index {idx}", line=lineno)
        seen.add(idx)
        preds = []
        costs = {}
        for q in range(npred):
            pid = str(_stg_int(rest[q * width], lineno))
            preds.append(pid)
            if comm_cost_mode == "explicit":
                costs[pid] = _stg_num(rest[q * width + 1], lineno)
            elif comm_cost_mode == "default":
                costs[pid] = float(default_cost)
        durations = None
        work = float(ptime)
        if speed_map:
            durations = tuple(work / float(sp) for sp in speed_map.values())
        tasks.append(Task(id=str(idx), cores=cores if ptime > 0 else 0, durations=durations, work=work,
                          dependencies=tuple(preds), transfer_costs=costs))
    wf = Workflow(workflow_id, tuple(tasks))
    validate_workflow(wf)
    return wf


def _stg_int(tok, lineno):
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(f"expected an integer, got {tok!r}", line=lineno) from None
    if v < 0:
        raise ParseError(f"negative value {v}", line=lineno)
    return v


def _stg_num(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", line=lineno) from None
    if not math.isfinite(v) or v < 0:
        raise ParseError(f"invalid value {tok!r}", line=lineno)
    return v


# ---------------------------------------------------------------------------
# synthetic instances


@dataclass(frozen=True)
class SyntheticSpec:
    node_count: int
    task_count: int
    edge_density: float = 0.2
    feature_pool_size: int = 4
    duration_range: tuple = (1.0, 10.0)
    data_range: tuple = (0.1, 5.0)
    seed: int = 0

    def __post_init__(self):
        if self.node_count < 1 or self.task_count < 1:
            raise ValueError("node_count and task_count must be >= 1")
        if not 0.0 <= self.edge_density <= 1.0:
            raise ValueError("edge_density must lie in [0, 1]")
        for lo, hi in (self.duration_range, self.data_range):
            if not 0 < lo <= hi:
                raise ValueError("ranges must be positive and ordered")


def generate_synthetic(spec: SyntheticSpec):
    """Layered random DAG plus a matching heterogeneous cluster.

    Each task draws its features and resource requests from one randomly
    picked host node, so at least one node can always run it.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    pool = [f"F{i + 1}" for i in range(spec.feature_pool_size)]
    nodes = []
    for k in range(spec.node_count):
        cores = int(rng.integers(8, 129))
        feats = frozenset(f for f in pool if rng.random() < 0.5)
        nodes.append(Node(
            id=f"N{k + 1}",
            cores=cores,
            memory=float(4 * cores),
            storage=1000.0,
            features=feats,
            processing_speed=float(rng.choice([0.5, 1.0, 1.5, 2.0])),
            data_transfer_rate=float(rng.choice([10.0, 25.0, 50.0, 100.0])),
        ))
    n = spec.task_count
    width = max(1, int(round(math.sqrt(n))))
    layer_of = [i // width for i in range(n)]
    tasks = []
    for i in range(n):
        host = nodes[int(rng.integers(spec.node_count))]
        hf = sorted(host.features)
        feats = frozenset(f for f in hf if rng.random() < 0.5)
        cores = int(rng.integers(1, min(host.cores, 16) + 1))
        mem = float(rng.integers(1, 2 * cores + 1))
        work = round(float(rng.uniform(*spec.duration_range)), 3)
        data = round(float(rng.uniform(*spec.data_range)), 3)
        preds = []
        layer = layer_of[i]
        if layer > 0:
            lo, hi = (layer - 1) * width, layer * width
            picks = rng.random(hi - lo) < spec.edge_density
            preds = [f"T{q + 1}" for q in range(lo, hi) if picks[q - lo]]
            if not preds:
                preds = [f"T{int(rng.integers(lo, hi)) + 1}"]
        tasks.append(Task(id=f"T{i + 1}", cores=cores, memory=mem, data_out=data, features=feats,
                          work=work, dependencies=tuple(preds)))
    wf = Workflow(f"SYN_{spec.node_count}x{spec.task_count}_s{spec.seed}", tuple(tasks))
    return nodes, wf
