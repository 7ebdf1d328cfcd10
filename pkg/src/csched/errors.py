"""Exception hierarchy shared by every module."""


class SchedError(Exception):
    """Base class for all csched errors."""


class CycleDetected(SchedError):
    def __init__(self, workflow_id, cycle):
        self.workflow_id = workflow_id
        self.cycle = list(cycle)
        path = " -> ".join(self.cycle + self.cycle[:1])
        super().__init__(f"workflow {workflow_id!r} has a dependency cycle: {path}")


class UnknownDependency(SchedError):
    def __init__(self, workflow_id, task_id, missing):
        self.workflow_id = workflow_id
        self.task_id = task_id
        self.missing = missing
        super().__init__(
            f"task {task_id!r} in workflow {workflow_id!r} depends on unknown task {missing!r}"
        )


class ZeroCapacity(SchedError):
    pass


class ZeroTotalCapacity(SchedError):
    pass


class MissingDuration(SchedError):
    pass


class InfeasibleAssignment(SchedError):
    def __init__(self, report):
        self.report = report
        lines = [f"{v.task_id}: {v.kind} ({v.detail})" for v in report.violations]
        super().__init__("infeasible assignment: " + "; ".join(lines))


class Infeasible(SchedError):
    """Some task has no node that can host it."""

    def __init__(self, task_id, reason="no feature-feasible node"):
        self.task_id = task_id
        super().__init__(f"task {task_id!r}: {reason}")


class NoFeasibleCandidate(SchedError):
    pass


class TooLarge(SchedError):
    pass


class ParseError(SchedError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(path)
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class SchemaError(SchedError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
