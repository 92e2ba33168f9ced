"""Builds a stage-enumerated join whose columns chase a universal table.

The produced relation is a uniform join: index <j, n> codes element n of
column j.  Coding requirements respond to growth in their trigger
column by copying the current universal approximation into a private
join column (choosing a column whose codes clear every live restraint),
while restraint requirements freeze the oracle use of halted functional
stubs.  Acting reinitializes all lower-priority strategies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import isqrt
from typing import Any, Mapping

from .ceers import CeerTable, FunctionalStub, StageSet
from .engine import ConstructionRun, PriorityEngine, Requirement, RunLog
from .pairing import pair

__all__ = ["Sigma3Result", "run_sigma3_ceer"]


@dataclass
class Sigma3Result(ConstructionRun):
    table: CeerTable = None
    universal: CeerTable = None
    columns: dict[int, int] = field(default_factory=dict)
    restraints: dict[int, int | None] = field(default_factory=dict)

    def column_pairs(self, j: int, stage: int) -> set[tuple[int, int]]:
        """Related pairs (a, b), a < b, inside join column j at a stage."""
        bound = self.universal.bound
        out = set()
        for a in range(bound):
            for b in range(a + 1, bound):
                if self.table.related(pair(j, a), pair(j, b), stage):
                    out.add((a, b))
        return out


class _State:
    def __init__(self, table: CeerTable, universal: CeerTable):
        self.table = table
        self.universal = universal
        self.used_columns: set[int] = set()
        self.coding: dict[int, "_CodingReq"] = {}
        self.restraining: dict[int, "_RestraintReq"] = {}

    def restraint_ceiling(self, below_rank: int) -> int:
        """Largest live restrained use among strictly higher priority."""
        best = -1
        for req in self.restraining.values():
            if req.rank < below_rank and req.restraint is not None:
                best = max(best, req.restraint)
        return best


class _CodingReq(Requirement):
    kind = "C"

    def __init__(self, k: int, column: StageSet | None, state: _State,
                 result: Sigma3Result):
        super().__init__(f"C{k}")
        self.k = k
        self.column = column
        self.state = state
        self.result = result
        self.consumed = 0
        self.join_column: int | None = None
        state.coding[k] = self

    def ready(self, stage: int) -> bool:
        return self.column is not None and self.column.count_at(stage) > self.consumed

    def _fresh_column(self) -> int:
        ceiling = self.state.restraint_ceiling(self.rank)
        j = 0
        while j in self.state.used_columns or pair(j, 0) <= ceiling:
            j += 1
        self.state.used_columns.add(j)
        return j

    def act(self, stage: int) -> dict[str, Any]:
        self.consumed += 1
        details: dict[str, Any] = {"action": "copy-column"}
        if self.join_column is None:
            self.join_column = self._fresh_column()
            details["action"] = "choose-column"
        self.result.columns[self.k] = self.join_column
        j = self.join_column
        uni = self.state.universal
        copied = 0
        for a in range(uni.bound):
            for b in range(a + 1, uni.bound):
                if not uni.related(a, b, stage):
                    continue
                ca, cb = pair(j, a), pair(j, b)
                if not self.state.table.related(ca, cb, stage):
                    self.state.table.assert_pair(ca, cb, stage)
                    copied += 1
        details["column"] = j
        details["pairs_copied"] = copied
        return details

    def reinitialize(self, stage: int, by: str) -> None:
        self.join_column = None


class _RestraintReq(Requirement):
    kind = "L"

    def __init__(self, m: int, stub: FunctionalStub | None, state: _State,
                 result: Sigma3Result):
        super().__init__(f"L{m}")
        self.m = m
        self.stub = stub
        self.state = state
        self.result = result
        self.restraint: int | None = None
        state.restraining[m] = self

    def _evaluate(self, stage: int) -> int | None:
        table = self.state.table
        return self.stub.evaluate(
            lambda a, b: a < table.bound and b < table.bound
            and table.related(a, b, stage),
            stage,
        )

    def ready(self, stage: int) -> bool:
        if self.stub is None:
            return False
        use = self._evaluate(stage)
        return use is not None and use != self.restraint

    def act(self, stage: int) -> dict[str, Any]:
        use = self._evaluate(stage)
        self.restraint = use
        self.result.restraints[self.m] = use
        return {"action": "place-restraint", "use": use}

    def reinitialize(self, stage: int, by: str) -> None:
        self.restraint = None
        self.result.restraints[self.m] = None


def run_sigma3_ceer(
    trigger_columns: Mapping[int, StageSet],
    universal: CeerTable,
    functionals: Mapping[int, FunctionalStub],
    stages: int = 200,
) -> Sigma3Result:
    """Run the column-coding construction for a bounded number of stages.

    trigger_columns feed the coding requirements; `universal` is the
    stage table the active column keeps catching up with; functional
    stubs drive the restraint requirements.
    """
    max_use = max((f.use for f in functionals.values()), default=0)
    col_cap = stages + isqrt(2 * max_use + 4) + 2
    bound = pair(col_cap, max(universal.bound, 1)) + 1
    table = CeerTable(bound=bound)
    params = {
        "stages": stages,
        "universal_bound": universal.bound,
        "join_bound": bound,
    }
    log = RunLog({"construction": "sigma3", "params": params})
    result = Sigma3Result("sigma3", params, stages, log,
                          table=table, universal=universal)
    state = _State(table, universal)

    top = max(list(trigger_columns) + list(functionals), default=-1)
    reqs: list[Requirement] = []
    for idx in range(top + 1):
        reqs.append(_CodingReq(idx, trigger_columns.get(idx), state, result))
        reqs.append(_RestraintReq(idx, functionals.get(idx), state, result))
    engine = PriorityEngine(reqs, log)
    engine.run(stages)
    return result
