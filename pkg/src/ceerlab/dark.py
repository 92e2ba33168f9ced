"""Stage constructions that keep a quotient algebra infinite but dark.

Two interleaved requirement families drive a growing homogeneous ideal:
the light strategies respond to enumerations in their trigger columns by
banking a fresh monomial (or the corresponding unit-group word) whose
degree they then protect, while the collapse strategies wait for two
listed words to become equal in the current bounded quotient and then
enumerate the difference's high-degree components as new relators.  The
relation budget is audited in exact rationals after every stage; a
violation aborts the run with the offending degree, since it means the
construction left the regime where fresh monomials are guaranteed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .algebra import (
    GSBudget,
    HomogeneousIdeal,
    HorizonError,
    Monomial,
    Poly,
    gs_audit,
    monomial_to_unit_word,
)
from .ceers import StageSet
from .engine import ConstructionRun, PriorityEngine, Requirement, RunLog

__all__ = ["DarkRunResult", "run_dark_ring", "run_dark_group"]


@dataclass
class DarkRunResult(ConstructionRun):
    ideal: HomogeneousIdeal = None
    transversals: dict[int, list[dict[str, Any]]] = field(default_factory=dict)
    protected: dict[int, list[int]] = field(default_factory=dict)
    witnesses: dict[int, dict[str, Any]] = field(default_factory=dict)
    gs_failure: dict[str, Any] | None = None

    def unit_words(self, n: int) -> list[tuple[str, ...]]:
        return [tuple(entry["word"].split()) for entry in self.transversals.get(n, [])]


class _DarkState:
    """Shared mutable state the requirements act on."""

    def __init__(self, mode: str, ideal: HomogeneousIdeal):
        self.mode = mode
        self.ideal = ideal
        self.max_used_degree = 0
        self.light: dict[int, "_LightReq"] = {}

    def protected_upto(self, n: int) -> int:
        """Largest degree protected by the light strategies with index <= n."""
        best = 0
        for i, req in self.light.items():
            if i <= n and req.protected:
                best = max(best, max(req.protected))
        return best

    def fresh_degree(self) -> int:
        k = self.max_used_degree
        for req in self.light.values():
            if req.protected:
                k = max(k, max(req.protected))
        for d in self.ideal.counts():
            k = max(k, d)
        k += 1
        if k > self.ideal.maxdeg:
            raise HorizonError(
                f"fresh degree {k} exceeds the configured horizon {self.ideal.maxdeg}"
            )
        return k

    def first_nonmember_monomial(self, k: int) -> Monomial:
        for code in range(1 << k):
            m = Monomial(k, code)
            if not self.ideal.reduce_component(Poly.monomial(m, self.ideal.p), k).is_zero():
                return m
        raise RuntimeError(
            f"no monomial of degree {k} survives the ideal; relation budget was broken"
        )


class _LightReq(Requirement):
    """Bank one fresh surviving monomial per trigger entry; protect its degree."""

    kind = "L"
    injures_lower = False

    def __init__(self, n: int, column: StageSet | None, state: _DarkState,
                 result: DarkRunResult):
        super().__init__(f"L{n}")
        self.n = n
        self.column = column
        self.state = state
        self.result = result
        self.consumed = 0
        self.protected: list[int] = []
        state.light[n] = self

    def ready(self, stage: int) -> bool:
        return self.column is not None and self.column.count_at(stage) > self.consumed

    def act(self, stage: int) -> dict[str, Any]:
        self.consumed += 1
        k = self.state.fresh_degree()
        m = self.state.first_nonmember_monomial(k)
        self.protected.append(k)
        self.state.max_used_degree = max(self.state.max_used_degree, k)
        if self.state.mode == "group":
            word = " ".join(monomial_to_unit_word(m))
        else:
            word = str(Poly.monomial(m, self.state.ideal.p))
        entry = {"degree": k, "monomial": m.word, "word": word, "stage": stage}
        self.result.transversals.setdefault(self.n, []).append(entry)
        self.result.protected[self.n] = list(self.protected)
        return {
            "action": "enumerate-witness",
            "degree": k,
            "monomial": m.word,
            "word": word,
            "protected": list(self.protected),
        }

    def reinitialize(self, stage: int, by: str) -> None:
        # the banked set is discarded wholesale; trigger entries stay consumed
        self.protected.clear()
        self.result.transversals[self.n] = []
        self.result.protected[self.n] = []


class _CollapseReq(Requirement):
    """Merge the first two listed words that agree in the bounded quotient."""

    kind = "D"
    injures_lower = True

    def __init__(self, m: int, column: StageSet | None, state: _DarkState,
                 result: DarkRunResult):
        super().__init__(f"D{m}")
        self.m = m
        self.column = column
        self.state = state
        self.result = result
        self.acted = False
        self._cache_key: tuple[int, int] | None = None
        self._canon_seen: dict[Poly, int] = {}
        self._scanned = 0
        self._found: tuple[int, int, int] | None = None

    def _degree_floor(self) -> int:
        return max(self.m + 10, self.state.protected_upto(self.m))

    def ready(self, stage: int) -> bool:
        if self.acted or self.column is None:
            return False
        k_s = self._degree_floor()
        key = (k_s, self.state.ideal.version)
        if key != self._cache_key:
            self._cache_key = key
            self._canon_seen = {}
            self._scanned = 0
            self._found = None
        if self._found is not None:
            return True
        entries = self.column.entries()
        avail = self.column.count_at(stage)
        while self._scanned < avail:
            idx = self._scanned
            poly = entries[idx][0]
            self._scanned += 1
            canon = self.state.ideal.quotient_reduce(poly, k_s)
            prev = self._canon_seen.get(canon)
            if prev is None:
                self._canon_seen[canon] = idx
            else:
                self._found = (prev, idx, k_s)
                return True
        return False

    def act(self, stage: int) -> dict[str, Any]:
        i, j, k_s = self._found
        entries = self.column.entries()
        f = entries[i][0]
        g = entries[j][0]
        diff = f - g
        added: list[Poly] = []
        for d, comp in diff.homogeneous_components().items():
            if d > k_s:
                self.state.ideal.add_generator(comp)
                self.state.max_used_degree = max(self.state.max_used_degree, d)
                added.append(comp)
        self.acted = True
        self.result.witnesses[self.m] = {
            "f": f,
            "g": g,
            "stage": stage,
            "degree_floor": k_s,
            "added": added,
        }
        return {
            "action": "collapse-pair",
            "f": str(f),
            "g": str(g),
            "pair_indices": [i, j],
            "degree_floor": k_s,
            "relators": [str(c) for c in added],
            "relator_degrees": [c.degree() for c in added],
        }

    def reinitialize(self, stage: int, by: str) -> None:
        # collapse strategies act once and are never undone
        pass


def _audit(ideal: HomogeneousIdeal, epsilon: Fraction):
    budget = GSBudget.from_ideal(ideal, epsilon)
    top = max([ideal.maxdeg, 2] + list(budget.counts))
    return gs_audit(budget, top)


def _run_dark(
    mode: str,
    u_columns: Mapping[int, StageSet],
    w_columns: Mapping[int, StageSet],
    stages: int,
    maxdeg: int,
    p: int,
    epsilon: Fraction,
    unit_exponent: int,
) -> DarkRunResult:
    epsilon = Fraction(epsilon)
    params = {
        "mode": mode,
        "stages": stages,
        "maxdeg": maxdeg,
        "modulus": p,
        "epsilon": str(epsilon),
    }
    if mode == "group":
        params["unit_exponent"] = unit_exponent
    log = RunLog({"construction": f"dark-{mode}", "params": params})
    ideal = HomogeneousIdeal(p=p, maxdeg=maxdeg)
    result = DarkRunResult(f"dark-{mode}", params, stages, log, ideal=ideal)
    state = _DarkState(mode, ideal)

    if mode == "group":
        if unit_exponent < 2:
            raise ValueError("unit exponent must be at least 2")
        seeds = [
            Poly.monomial(Monomial(unit_exponent, 0), p),
            Poly.monomial(Monomial(unit_exponent, (1 << unit_exponent) - 1), p),
        ]
        for s in seeds:
            ideal.add_generator(s)
            state.max_used_degree = max(state.max_used_degree, unit_exponent)
        log.add(0, "init", "init", "seed-ideal", relators=[str(s) for s in seeds])

    def audit_or_abort(stage: int) -> bool:
        verdict = _audit(ideal, epsilon)
        if verdict.ok:
            return True
        detail = {
            "degree": verdict.failed_degree,
            "count": verdict.count,
        }
        if verdict.bound is not None:
            detail["bound"] = str(verdict.bound)
        if verdict.reason:
            detail["reason"] = verdict.reason
        log.add(stage, "audit", "audit", "gs-failure", **detail)
        result.gs_failure = {"stage": stage, **detail}
        return False

    if not audit_or_abort(0):
        return result

    top = max(list(u_columns) + list(w_columns), default=-1)
    reqs: list[Requirement] = []
    for idx in range(top + 1):
        reqs.append(_LightReq(idx, u_columns.get(idx), state, result))
        reqs.append(_CollapseReq(idx, w_columns.get(idx), state, result))
    engine = PriorityEngine(reqs, log)

    for s in range(1, stages + 1):
        engine.run_stage(s)
        if not audit_or_abort(s):
            break
    return result


def run_dark_ring(
    u_columns: Mapping[int, StageSet],
    w_columns: Mapping[int, StageSet],
    stages: int = 300,
    maxdeg: int = 16,
    p: int = 2,
    epsilon: Fraction = Fraction(1, 4),
) -> DarkRunResult:
    """Grow a quotient of the free algebra whose word problem resists listing.

    Trigger columns feed the monomial-banking strategies; the word
    columns feed the collapse strategies.  Returns the finished ideal,
    the banked transversal candidates, the collapse witnesses, and the
    full action log.
    """
    return _run_dark("ring", u_columns, w_columns, stages, maxdeg, p, epsilon, 0)


def run_dark_group(
    u_columns: Mapping[int, StageSet],
    w_columns: Mapping[int, StageSet],
    stages: int = 300,
    maxdeg: int = 16,
    p: int = 2,
    epsilon: Fraction = Fraction(1, 4),
    unit_exponent: int = 13,
) -> DarkRunResult:
    """Variant building the unit-group presentation: the ideal is seeded with
    x^N and y^N so that 1+x and 1+y are invertible, and banked witnesses are
    recorded as words over the unit generators instead of bare monomials.
    """
    return _run_dark(
        "group", u_columns, w_columns, stages, maxdeg, p, epsilon, unit_exponent
    )
