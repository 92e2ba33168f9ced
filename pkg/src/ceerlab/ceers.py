"""Stage-enumerated equivalence relations over a finite index bound.

A CeerTable holds a growing list of asserted pairs, each tagged with the
stage at which it was enumerated, and answers queries against the
equivalence closure of the pairs visible at any given stage.  Tables are
the common currency of the package: joins, products and pullbacks all
produce fresh tables, and the construction runners enumerate into them.

Equality of two indices is a positive, stage-monotone fact.  Inequality
never is: a pair that is unrelated at stage s may become related later,
so nothing in this module ever reports a negative fact as conclusive.
Mutation is single-threaded; every snapshot handed out is an immutable
tuple.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Sequence

from .pairing import pair

__all__ = [
    "StageRegressionError",
    "PartialityError",
    "StageSet",
    "CeerTable",
    "ReductionFn",
    "FunctionalStub",
    "ReductionReport",
    "InseparabilityWitness",
    "uniform_join",
    "product",
    "pullback",
    "verify_reduction",
    "darkness_probe",
    "lightness_witness_check",
]


class StageRegressionError(ValueError):
    """A pair was asserted at a stage earlier than one already recorded."""


class PartialityError(ValueError):
    """A reduction function was consulted outside its table."""


class StageSet:
    """A set of values enumerated over stages.

    Entries are (value, stage) in enumeration order with nondecreasing
    stages; at_stage(s) returns the values visible by stage s, still in
    enumeration order and deduplicated.
    """

    def __init__(self, entries: Iterable[tuple[Any, int]] = ()):
        self._entries: list[tuple[Any, int]] = []
        for value, stage in entries:
            self.add(value, stage)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[Any, int]]) -> "StageSet":
        """Build from possibly unordered rows; sorts by stage, stable."""
        ordered = sorted(enumerate(rows), key=lambda t: (t[1][1], t[0]))
        return cls((value, stage) for _, (value, stage) in ordered)

    def add(self, value: Any, stage: int) -> None:
        if self._entries and stage < self._entries[-1][1]:
            raise StageRegressionError(
                f"entry at stage {stage} after stage {self._entries[-1][1]}"
            )
        self._entries.append((value, stage))

    def entries(self) -> tuple[tuple[Any, int], ...]:
        return tuple(self._entries)

    def at_stage(self, stage: int) -> list[Any]:
        seen = set()
        out = []
        for value, s in self._entries:
            if s > stage:
                break
            if value not in seen:
                seen.add(value)
                out.append(value)
        return out

    def count_at(self, stage: int) -> int:
        """Number of raw entries (including repeats) visible by stage."""
        n = 0
        for _, s in self._entries:
            if s > stage:
                break
            n += 1
        return n

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"StageSet({self._entries!r})"


class CeerTable:
    """Equivalence relation on [0, bound) enumerated stage by stage."""

    def __init__(self, bound: int = 4096):
        if bound < 0:
            raise ValueError("bound must be nonnegative")
        self.bound = bound
        self._pairs: list[tuple[int, int, int]] = []
        self._stages: list[int] = []  # distinct stages carrying pairs, ascending
        self._roots_cache: dict[int, tuple[int, ...]] = {}

    # -- construction ------------------------------------------------

    @classmethod
    def identity(cls, bound: int) -> "CeerTable":
        return cls(bound)

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[int, int, int]], bound: int
    ) -> "CeerTable":
        table = cls(bound)
        for a, b, s in pairs:
            table.assert_pair(a, b, s)
        return table

    def copy(self) -> "CeerTable":
        other = CeerTable(self.bound)
        other._pairs = list(self._pairs)
        other._stages = list(self._stages)
        return other

    def _check_index(self, n: int) -> None:
        if not (0 <= n < self.bound):
            raise IndexError(f"index {n} out of bound {self.bound}")

    def assert_pair(self, a: int, b: int, stage: int) -> "CeerTable":
        """Record that a and b are related from `stage` onward."""
        self._check_index(a)
        self._check_index(b)
        if self._pairs and stage < self._pairs[-1][2]:
            raise StageRegressionError(
                f"pair at stage {stage} after stage {self._pairs[-1][2]}"
            )
        self._pairs.append((a, b, stage))
        if not self._stages or self._stages[-1] != stage:
            self._stages.append(stage)
        stale = [k for k in self._roots_cache if k >= stage]
        for k in stale:
            del self._roots_cache[k]
        return self

    # -- queries -----------------------------------------------------

    @property
    def pairs(self) -> tuple[tuple[int, int, int], ...]:
        return tuple(self._pairs)

    @property
    def last_stage(self) -> int:
        return self._pairs[-1][2] if self._pairs else 0

    def stages(self) -> tuple[int, ...]:
        return tuple(self._stages)

    def roots_at(self, stage: int) -> tuple[int, ...]:
        """Canonical partition snapshot: roots_at(s)[i] = min of i's class."""
        i = bisect_right(self._stages, stage)
        key = self._stages[i - 1] if i else -1
        cached = self._roots_cache.get(key)
        if cached is not None:
            return cached
        parent = list(range(self.bound))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b, s in self._pairs:
            if s > key:
                break
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
        least: dict[int, int] = {}
        roots = [0] * self.bound
        for n in range(self.bound):
            r = find(n)
            if r not in least:
                least[r] = n
            roots[n] = least[r]
        snapshot = tuple(roots)
        self._roots_cache[key] = snapshot
        return snapshot

    def related(self, a: int, b: int, stage: int) -> bool:
        self._check_index(a)
        self._check_index(b)
        if a == b:
            return True
        roots = self.roots_at(stage)
        return roots[a] == roots[b]

    def first_related_stage(self, a: int, b: int) -> int | None:
        """Least recorded stage at which a and b are related, None if never."""
        self._check_index(a)
        self._check_index(b)
        if a == b:
            return 0
        if not self._stages or not self.related(a, b, self._stages[-1]):
            return None
        lo, hi = 0, len(self._stages) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.related(a, b, self._stages[mid]):
                hi = mid
            else:
                lo = mid + 1
        return self._stages[lo]

    def classes_at(self, stage: int) -> list[list[int]]:
        """Partition at a stage as sorted class lists, sorted by least member."""
        roots = self.roots_at(stage)
        buckets: dict[int, list[int]] = {}
        for n in range(self.bound):
            buckets.setdefault(roots[n], []).append(n)
        return [buckets[r] for r in sorted(buckets)]

    # -- serialization -----------------------------------------------

    def dump(self, fp) -> None:
        """Write one JSON record per asserted pair, in enumeration order."""
        for a, b, s in self._pairs:
            fp.write(json.dumps({"a": a, "b": b, "s": s}, sort_keys=True))
            fp.write("\n")

    def dumps(self) -> str:
        import io

        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, fp, bound: int | None = None) -> "CeerTable":
        rows = []
        for line in fp:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            rows.append((rec["a"], rec["b"], rec["s"]))
        if bound is None:
            bound = max((max(a, b) for a, b, _ in rows), default=0) + 1
        rows.sort(key=lambda t: t[2])  # stable; tolerates hand-made files
        return cls.from_pairs(rows, bound)

    @classmethod
    def loads(cls, text: str, bound: int | None = None) -> "CeerTable":
        import io

        return cls.load(io.StringIO(text), bound=bound)

    def __repr__(self) -> str:
        return f"CeerTable(bound={self.bound}, pairs={len(self._pairs)})"


@dataclass
class ReductionFn:
    """A total-below-bound computable map given as a finite table.

    table maps argument -> (value, convergence stage).  Entries never
    change once recorded; consulting a missing argument is a
    PartialityError naming the argument.
    """

    table: dict[int, tuple[int, int]]
    totality_bound: int

    @classmethod
    def from_callable(
        cls, fn: Callable[[int], int], bound: int, stage: int = 0
    ) -> "ReductionFn":
        return cls({n: (fn(n), stage) for n in range(bound)}, bound)

    @classmethod
    def identity(cls, bound: int) -> "ReductionFn":
        return cls.from_callable(lambda n: n, bound)

    @classmethod
    def constant(cls, c: int, bound: int) -> "ReductionFn":
        return cls.from_callable(lambda n: c, bound)

    def __call__(self, n: int) -> int:
        entry = self.table.get(n)
        if entry is None:
            raise PartialityError(f"reduction function diverges on argument {n}")
        return entry[0]

    def defined_below(self, bound: int) -> bool:
        return all(n in self.table for n in range(bound))


@dataclass(frozen=True)
class FunctionalStub:
    """Monotone stand-in for an oracle computation on its own index.

    The stub halts at every stage >= converge_stage once all
    required_pairs are present in the oracle; the result is `use`, which
    bounds the indices of every oracle pair consulted.  Adding pairs or
    stages never turns a halt back into divergence.
    """

    ident: int
    converge_stage: int
    use: int
    required_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for a, b in self.required_pairs:
            if max(a, b) > self.use:
                raise ValueError(
                    f"required pair ({a},{b}) exceeds declared use {self.use}"
                )

    def evaluate(
        self, related: Callable[[int, int], bool], stage: int
    ) -> int | None:
        """Return the use on halt, None while diverging."""
        if stage < self.converge_stage:
            return None
        for a, b in self.required_pairs:
            if not related(a, b):
                return None
        return self.use


@dataclass(frozen=True)
class InseparabilityWitness:
    """Data contract for a uniform inseparability certificate.

    witness(a, b, i, j) names an index whose halting behaviour separates
    the (a,b)-class pair from the (i,j)-th candidate separating set.  The
    package records the shape only; nothing here certifies the property.
    """

    witness: Callable[[int, int, int, int], int]
    description: str = ""


@dataclass
class ReductionReport:
    """Outcome of checking f: E -> R below a bound.

    positive_violations are conclusive: i E j held but the images never
    became R-related.  unaligned_so_far pairs have R-related images while
    i, j are not yet E-related; since inequivalence is not a decidable
    fact, these are reported as inconclusive, never as violations.
    """

    bound: int
    stage: int
    positive_violations: list[tuple[int, int]] = field(default_factory=list)
    unaligned_so_far: list[tuple[int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.positive_violations

    def summary(self) -> str:
        if self.ok and not self.unaligned_so_far:
            return "no violations"
        lines = []
        if self.positive_violations:
            lines.append(
                f"{len(self.positive_violations)} positive violation(s): "
                + ", ".join(f"({a},{b})" for a, b in self.positive_violations)
            )
        if self.unaligned_so_far:
            lines.append(
                f"{len(self.unaligned_so_far)} pair(s) unaligned so far "
                "(inconclusive): "
                + ", ".join(f"({a},{b})" for a, b in self.unaligned_so_far)
            )
        return "; ".join(lines)


# -- operations -------------------------------------------------------


def uniform_join(
    columns: Sequence[CeerTable], bound: int | None = None
) -> CeerTable:
    """Join the columns along the fixed pairing: <j,n> ~ <j,m> iff n ~ m in column j.

    Indices not of the form <j, n> with n below column j's bound stay
    singletons.
    """
    if bound is None:
        bound = 0
        for j, col in enumerate(columns):
            if col.bound > 0:
                bound = max(bound, pair(j, col.bound - 1) + 1)
    joined = CeerTable(bound)
    merged: list[tuple[int, int, int, int]] = []
    for j, col in enumerate(columns):
        for a, b, s in col.pairs:
            merged.append((s, j, a, b))
    merged.sort(key=lambda t: (t[0], t[1]))
    for s, j, a, b in merged:
        ca, cb = pair(j, a), pair(j, b)
        if ca < bound and cb < bound:
            joined.assert_pair(ca, cb, s)
    return joined


def column_of(joined_index: int) -> tuple[int, int]:
    """Decode a join index back to (column, element)."""
    from .pairing import unpair

    return unpair(joined_index)


def product(
    left: CeerTable,
    right: CeerTable,
    bound_left: int | None = None,
    bound_right: int | None = None,
) -> CeerTable:
    """Product relation: <a1,b1> ~ <a2,b2> iff a1 ~ a2 on the left and b1 ~ b2 on the right."""
    bl = left.bound if bound_left is None else min(bound_left, left.bound)
    br = right.bound if bound_right is None else min(bound_right, right.bound)
    if bl == 0 or br == 0:
        return CeerTable(0)
    bound = pair(bl - 1, br - 1) + 1
    out = CeerTable(bound)
    stages = sorted(set(left.stages()) | set(right.stages()) | {0})
    emitted: set[tuple[int, int]] = set()
    codes = [(a, b, pair(a, b)) for a in range(bl) for b in range(br)]
    for s in stages:
        rl = left.roots_at(s)
        rr = right.roots_at(s)
        for i, (a1, b1, c1) in enumerate(codes):
            for a2, b2, c2 in codes[i + 1 :]:
                if (c1, c2) in emitted:
                    continue
                if rl[a1] == rl[a2] and rr[b1] == rr[b2]:
                    out.assert_pair(c1, c2, s)
                    emitted.add((c1, c2))
    return out


def pullback(f: ReductionFn, target: CeerTable, bound: int | None = None) -> CeerTable:
    """Relation induced on [0, bound) by i ~ j iff f(i) ~ f(j) in target."""
    if bound is None:
        bound = f.totality_bound
    for n in range(bound):
        if n not in f.table:
            raise PartialityError(f"reduction function diverges on argument {n}")
    out = CeerTable(bound)
    stages = sorted(set(target.stages()) | {0})
    emitted: set[tuple[int, int]] = set()
    for s in stages:
        roots = target.roots_at(s)
        for i in range(bound):
            fi = f(i)
            target._check_index(fi)
            for j in range(i + 1, bound):
                if (i, j) in emitted:
                    continue
                if roots[fi] == roots[f(j)]:
                    out.assert_pair(i, j, s)
                    emitted.add((i, j))
    return out


def verify_reduction(
    f: ReductionFn, source: CeerTable, target: CeerTable, bound: int, stage: int
) -> ReductionReport:
    """Check f as a reduction from source to target on indices below bound."""
    for n in range(bound):
        if n not in f.table:
            raise PartialityError(f"reduction function diverges on argument {n}")
    report = ReductionReport(bound=bound, stage=stage)
    final_t = target.last_stage
    final_s = source.last_stage
    for i in range(bound):
        for j in range(i + 1, bound):
            images_related = target.related(f(i), f(j), final_t)
            if source.related(i, j, stage) and not images_related:
                report.positive_violations.append((i, j))
            elif images_related and not source.related(i, j, max(final_s, stage)):
                report.unaligned_so_far.append((i, j))
    return report


def darkness_probe(
    table: CeerTable, witness_set: StageSet, stage: int
) -> tuple[int, int] | None:
    """First pair of distinct witness-set members related by `stage`, if any.

    A None answer is not evidence of a transversal: it only says the
    enumerated part has not collided yet.
    """
    values = [v for v in witness_set.at_stage(stage) if 0 <= v < table.bound]
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            a, b = values[i], values[j]
            if a != b and table.related(a, b, stage):
                return (a, b)
    return None


def lightness_witness_check(
    table: CeerTable, transversal: Sequence[int], stage: int
) -> bool:
    """True iff the listed indices are pairwise unrelated at the stage."""
    items = list(transversal)
    if len(set(items)) != len(items):
        raise ValueError("transversal entries must be distinct")
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if table.related(items[i], items[j], stage):
                return False
    return True
