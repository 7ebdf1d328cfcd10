"""Run reports and the schedule JSON format.

Schedule file layout::

    {"format": "csched-schedule/1",
     "instance_digest": "<sha256 of the input texts>",
     "nodes": ["N1", ...],
     "results": [{"workflow": "W1", "technique": "milp", "status": "optimal",
                  "makespan": 10.0, "total_usage": 32.0, "objective": 42.0,
                  "explored_nodes": 7, "wall_time": 0.001,
                  "tasks": [{"task": "T1", "node": "N2", "start": 0.0,
                             "end": 3.0, "usage": 8.0}, ...]}, ...]}

Infeasible results carry ``null`` makespan/objective and no tasks.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import SchemaError
from .model import SolveResult

FORMAT = "csched-schedule/1"


def digest(*texts: str) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


def _num(x):
    return None if x is None or not math.isfinite(x) else float(x)


@dataclass
class RunReport:
    nodes: list
    instance_digest: str = ""
    records: list = field(default_factory=list)  # (workflow_id, SolveResult)

    def add(self, workflow_id: str, result: SolveResult):
        self.records.append((workflow_id, result))

    def to_dict(self) -> dict:
        results = []
        for wid, r in self.records:
            s = r.schedule
            results.append({
                "workflow": wid,
                "technique": r.technique,
                "status": r.status.value,
                "makespan": _num(s.makespan) if s else None,
                "total_usage": _num(s.total_usage) if s else None,
                "objective": _num(r.objective) if s else None,
                "explored_nodes": r.explored_nodes,
                "wall_time": r.wall_time,
                "tasks": [
                    {"task": e.task_id, "node": e.node_id, "start": e.start, "end": e.finish, "usage": e.usage}
                    for e in s.entries
                ] if s else [],
            })
        return {"format": FORMAT, "instance_digest": self.instance_digest,
                "nodes": list(self.nodes), "results": results}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_schedule(text: str) -> dict:
    """Parse and check a schedule file; returns the decoded dict."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected an object")
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise SchemaError("nodes", "expected a list of node ids")
    results = doc.get("results")
    if not isinstance(results, list):
        raise SchemaError("results", "expected a list")
    for i, r in enumerate(results):
        base = f"results[{i}]"
        if not isinstance(r, dict) or not isinstance(r.get("workflow"), str):
            raise SchemaError(base, "expected an object with a workflow id")
        tasks = r.get("tasks", [])
        if not isinstance(tasks, list):
            raise SchemaError(f"{base}.tasks", "expected a list")
        for k, t in enumerate(tasks):
            path = f"{base}.tasks[{k}]"
            if not isinstance(t, dict):
                raise SchemaError(path, "expected an object")
            for key in ("task", "node"):
                if not isinstance(t.get(key), str):
                    raise SchemaError(f"{path}.{key}", "expected a string")
            for key in ("start", "end"):
                v = t.get(key)
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                    raise SchemaError(f"{path}.{key}", "expected a finite number")
            if t["end"] < t["start"]:
                raise SchemaError(f"{path}.end", "ends before it starts")
            if t["node"] not in nodes:
                raise SchemaError(f"{path}.node", f"unknown node {t['node']!r}")
    return doc
