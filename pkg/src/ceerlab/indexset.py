"""Priority construction populating group and table slots for an index set.

Three requirement families interleave as C_0, L_0, D_0, C_1, ...:

 * C_k advances a private embedded copy of the star construction, one
   inner stage per trigger; the copy lives in a fresh group slot g<l>.
 * D_d, d = <k, k'>, watches two columns and, each time both grow,
   copies the next listed pair of a fixed coded universal table into a
   fresh table slot h<l>.
 * L_m freezes the slot set of a halted summing functional stub.

Acting reinitializes every lower-priority requirement; reinitialized
C/D strategies abandon their slot and later restart in a fresh one that
clears all live higher-priority restraints.  All slots are declared
abelian-ambient at stage 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from .ceers import CeerTable, StageSet
from .engine import ConstructionRun, PriorityEngine, Requirement, RunLog
from .pairing import unpair
from .star import PhiEntry, StarConstruction

__all__ = ["SumFunctionalStub", "SugResult", "run_sug_indexset"]


@dataclass(frozen=True)
class SumFunctionalStub:
    """Total-on-its-slots functional model: halts once, with fixed use.

    `slots` names the group/table slots whose join the functional reads;
    evaluate() reports the use when the stub has converged.
    """

    ident: int
    converge_stage: int
    use: int
    slots: tuple[str, ...]

    def evaluate(self, stage: int) -> int | None:
        return self.use if stage >= self.converge_stage else None


@dataclass
class SugResult(ConstructionRun):
    group_slots: dict[str, StarConstruction] = field(default_factory=dict)
    table_slots: dict[str, CeerTable] = field(default_factory=dict)
    assignments: dict[str, str] = field(default_factory=dict)
    restraints: dict[int, tuple[str, ...] | None] = field(default_factory=dict)
    coded_universal: CeerTable = None


class _SlotState:
    def __init__(self, result: SugResult):
        self.result = result
        self.used_g: set[int] = set()
        self.used_h: set[int] = set()
        self.restraining: dict[int, "_SumRestraintReq"] = {}

    def _restrained(self, below_rank: int) -> set[str]:
        out: set[str] = set()
        for req in self.restraining.values():
            if req.rank < below_rank and req.restraint is not None:
                out.update(req.restraint)
        return out

    def fresh_slot(self, family: str, below_rank: int) -> str:
        used = self.used_g if family == "g" else self.used_h
        blocked = self._restrained(below_rank)
        ell = 0
        while ell in used or f"{family}{ell}" in blocked:
            ell += 1
        used.add(ell)
        return f"{family}{ell}"


class _GroupBuilderReq(Requirement):
    kind = "C"

    def __init__(self, k: int, column: StageSet | None, slots: _SlotState,
                 template: dict[str, Any]):
        super().__init__(f"C{k}")
        self.k = k
        self.column = column
        self.slots = slots
        self.template = template
        self.consumed = 0
        self.slot: str | None = None

    def ready(self, stage: int) -> bool:
        return self.column is not None and self.column.count_at(stage) > self.consumed

    def act(self, stage: int) -> dict[str, Any]:
        self.consumed += 1
        if self.slot is None:
            self.slot = self.slots.fresh_slot("g", self.rank)
            instance = StarConstruction(
                universal=self.template["universal"].copy(),
                phis=self.template["phis"],
                base=self.template["base"],
                levels=self.template["levels"],
                stages=self.template["stages"],
                name=f"star@{self.slot}",
            )
            self.slots.result.group_slots[self.slot] = instance
            self.slots.result.assignments[self.name] = self.slot
            records = instance.initialize()
            return {"action": "open-slot", "slot": self.slot,
                    "inner": [r.to_obj() for r in records]}
        instance = self.slots.result.group_slots[self.slot]
        record = instance.step()
        inner = [record.to_obj()] if record is not None else []
        return {"action": "advance-slot", "slot": self.slot,
                "inner_stage": instance.stage, "inner": inner}

    def reinitialize(self, stage: int, by: str) -> None:
        self.slot = None


class _PairCodingReq(Requirement):
    kind = "D"

    def __init__(self, d: int, left: StageSet | None, right: StageSet | None,
                 slots: _SlotState, coded: CeerTable):
        super().__init__(f"D{d}")
        self.d = d
        self.watches = unpair(d)
        self.left = left
        self.right = right
        self.slots = slots
        self.coded_pairs = coded.pairs
        self.coded_bound = coded.bound
        self.consumed_left = 0
        self.consumed_right = 0
        self.slot: str | None = None
        self.progress: dict[str, int] = {}

    def ready(self, stage: int) -> bool:
        if self.left is None or self.right is None:
            return False
        if (self.slot is not None
                and self.progress[self.slot] >= len(self.coded_pairs)):
            return False
        return (self.left.count_at(stage) > self.consumed_left
                and self.right.count_at(stage) > self.consumed_right)

    def act(self, stage: int) -> dict[str, Any]:
        self.consumed_left += 1
        self.consumed_right += 1
        details: dict[str, Any] = {"action": "code-pair",
                                   "watches": list(self.watches)}
        if self.slot is None:
            self.slot = self.slots.fresh_slot("h", self.rank)
            self.slots.result.table_slots[self.slot] = CeerTable(
                bound=self.coded_bound)
            self.slots.result.assignments[self.name] = self.slot
            self.progress[self.slot] = 0
            details["action"] = "open-slot"
        details["slot"] = self.slot
        done = self.progress[self.slot]
        if done < len(self.coded_pairs):
            a, b, _ = self.coded_pairs[done]
            self.slots.result.table_slots[self.slot].assert_pair(a, b, stage)
            self.progress[self.slot] = done + 1
            details["pair"] = [a, b]
        else:
            details["pair"] = None
        return details

    def reinitialize(self, stage: int, by: str) -> None:
        self.slot = None


class _SumRestraintReq(Requirement):
    kind = "L"

    def __init__(self, m: int, stub: SumFunctionalStub | None,
                 slots: _SlotState):
        super().__init__(f"L{m}")
        self.m = m
        self.stub = stub
        self.slots = slots
        self.restraint: tuple[str, ...] | None = None
        slots.restraining[m] = self

    def ready(self, stage: int) -> bool:
        if self.stub is None or self.stub.evaluate(stage) is None:
            return False
        return self.restraint != self.stub.slots

    def act(self, stage: int) -> dict[str, Any]:
        self.restraint = self.stub.slots
        self.slots.result.restraints[self.m] = self.restraint
        return {"action": "place-restraint", "use": self.stub.use,
                "slots": list(self.restraint)}

    def reinitialize(self, stage: int, by: str) -> None:
        self.restraint = None
        self.slots.result.restraints[self.m] = None


def run_sug_indexset(
    v_columns: Mapping[int, StageSet],
    u_columns: Mapping[int, StageSet],
    coded_universal: CeerTable,
    sum_functionals: Mapping[int, SumFunctionalStub],
    star_universal: CeerTable,
    star_phis: Mapping[int, Mapping[int, PhiEntry]],
    star_base: int = 6,
    star_levels: int = 1,
    stages: int = 120,
) -> SugResult:
    """Run the slot-filling construction for a bounded number of stages."""
    params = {
        "stages": stages,
        "star_base": star_base,
        "star_levels": star_levels,
        "coded_bound": coded_universal.bound,
    }
    log = RunLog({"construction": "sug-indexset", "params": params})
    result = SugResult("sug-indexset", params, stages, log,
                       coded_universal=coded_universal)
    slots = _SlotState(result)
    template = {
        "universal": star_universal,
        "phis": star_phis,
        "base": star_base,
        "levels": star_levels,
        "stages": stages,
    }
    top = max(
        list(v_columns) + list(u_columns) + list(sum_functionals),
        default=-1,
    )
    reqs: list[Requirement] = []
    for idx in range(top + 1):
        reqs.append(_GroupBuilderReq(idx, v_columns.get(idx), slots, template))
        reqs.append(_SumRestraintReq(idx, sum_functionals.get(idx), slots))
        left, right = unpair(idx)
        reqs.append(_PairCodingReq(idx, v_columns.get(left),
                                   u_columns.get(right), slots,
                                   coded_universal))
    log.add(0, "init", "init", "declare-abelian",
            note="all group and table slots carry abelian word problems")
    engine = PriorityEngine(reqs, log)
    engine.run(stages)
    return result
