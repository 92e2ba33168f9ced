"""Arithmetic in the free noncommutative algebra F = (Z/pZ)<x, y>.

Monomials are words in x and y packed into (degree, code) with the first
letter in the most significant bit, so that numeric code order is
lexicographic order with x < y and the degree-k monomials enumerate as
codes 0 .. 2^k - 1.  A two-sided ideal generated by homogeneous elements
is represented degree by degree through row-reduced spanning sets of the
shifted generators u*h*v; bases are cached per degree and extended
incrementally when generators arrive, so adding a degree-d generator
only touches degrees >= d.

Everything here works below an explicit degree horizon (maxdeg); asking
past the horizon raises rather than silently answering on a truncation.
The Golod-Shafarevich audit is carried out in exact rational arithmetic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "HorizonError",
    "EncodingError",
    "Monomial",
    "MONOMIAL_ONE",
    "Poly",
    "poly_mul",
    "homogeneous_components",
    "HomogeneousIdeal",
    "ideal_degree_basis",
    "member",
    "quotient_dim",
    "quotient_reduce",
    "GSBudget",
    "GSAuditResult",
    "gs_audit",
    "UNIT_LETTERS",
    "unit_word_to_poly",
    "unit_inverse_poly",
    "PaddedRelator",
    "pad_presentation",
    "decode_padded",
]

SUPPORTED_MODULI = (2, 3, 5, 7)


class HorizonError(ValueError):
    """A degree beyond the configured horizon was consulted."""


class EncodingError(ValueError):
    """A word or text form failed to decode."""


@dataclass(frozen=True)
class Monomial:
    """A word over {x, y}: deg letters, code bits MSB-first, y = 1."""

    deg: int
    code: int

    def __post_init__(self):
        if self.deg < 0 or not (0 <= self.code < (1 << self.deg)):
            raise ValueError(f"bad monomial ({self.deg}, {self.code})")

    @classmethod
    def from_word(cls, word: str) -> "Monomial":
        code = 0
        for ch in word:
            if ch == "x":
                code = code << 1
            elif ch == "y":
                code = (code << 1) | 1
            else:
                raise EncodingError(f"bad letter {ch!r} in monomial word")
        return cls(len(word), code)

    @property
    def word(self) -> str:
        return "".join(
            "y" if (self.code >> (self.deg - 1 - i)) & 1 else "x"
            for i in range(self.deg)
        )

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.deg + other.deg, (self.code << other.deg) | other.code)

    def key(self) -> tuple[int, int]:
        return (self.deg, self.code)


MONOMIAL_ONE = Monomial(0, 0)


class Poly:
    """Element of (Z/pZ)<x,y>: a finite coefficient map on monomials."""

    __slots__ = ("p", "coeffs")

    def __init__(self, p: int, coeffs: Mapping[Monomial, int] | None = None):
        if p not in SUPPORTED_MODULI:
            raise ValueError(f"modulus must be one of {SUPPORTED_MODULI}, got {p}")
        self.p = p
        clean: dict[Monomial, int] = {}
        if coeffs:
            for m, c in coeffs.items():
                c %= p
                if c:
                    clean[m] = c
        self.coeffs = clean

    # -- constructors --------------------------------------------------

    @classmethod
    def zero(cls, p: int) -> "Poly":
        return cls(p)

    @classmethod
    def one(cls, p: int) -> "Poly":
        return cls(p, {MONOMIAL_ONE: 1})

    @classmethod
    def constant(cls, c: int, p: int) -> "Poly":
        return cls(p, {MONOMIAL_ONE: c})

    @classmethod
    def x(cls, p: int) -> "Poly":
        return cls(p, {Monomial(1, 0): 1})

    @classmethod
    def y(cls, p: int) -> "Poly":
        return cls(p, {Monomial(1, 1): 1})

    @classmethod
    def monomial(cls, m: Monomial, p: int, c: int = 1) -> "Poly":
        return cls(p, {m: c})

    # -- ring structure -------------------------------------------------

    def _check(self, other: "Poly") -> None:
        if self.p != other.p:
            raise ValueError(f"modulus mismatch: {self.p} vs {other.p}")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return Poly(self.p, out)

    def __sub__(self, other: "Poly") -> "Poly":
        self._check(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) - c
        return Poly(self.p, out)

    def __neg__(self) -> "Poly":
        return Poly(self.p, {m: -c for m, c in self.coeffs.items()})

    def scale(self, c: int) -> "Poly":
        return Poly(self.p, {m: c * v for m, v in self.coeffs.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        self._check(other)
        out: dict[Monomial, int] = {}
        for mu, cu in self.coeffs.items():
            for mv, cv in other.coeffs.items():
                m = mu * mv
                out[m] = out.get(m, 0) + cu * cv
        return Poly(self.p, out)

    def mul_truncated(self, other: "Poly", horizon: int) -> "Poly":
        """Product with every term of degree > horizon dropped."""
        self._check(other)
        out: dict[Monomial, int] = {}
        for mu, cu in self.coeffs.items():
            if mu.deg > horizon:
                continue
            for mv, cv in other.coeffs.items():
                if mu.deg + mv.deg > horizon:
                    continue
                m = mu * mv
                out[m] = out.get(m, 0) + cu * cv
        return Poly(self.p, out)

    def truncate(self, horizon: int) -> "Poly":
        return Poly(self.p, {m: c for m, c in self.coeffs.items() if m.deg <= horizon})

    # -- shape ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int | None:
        """Largest degree with a nonzero term, None for the zero element."""
        if not self.coeffs:
            return None
        return max(m.deg for m in self.coeffs)

    def is_homogeneous(self) -> bool:
        degs = {m.deg for m in self.coeffs}
        return len(degs) <= 1

    def homogeneous_components(self) -> dict[int, "Poly"]:
        """Split into degree -> component, keys ascending."""
        split: dict[int, dict[Monomial, int]] = {}
        for m, c in self.coeffs.items():
            split.setdefault(m.deg, {})[m] = c
        return {d: Poly(self.p, split[d]) for d in sorted(split)}

    def component(self, d: int) -> "Poly":
        return Poly(self.p, {m: c for m, c in self.coeffs.items() if m.deg == d})

    def terms(self) -> Iterator[tuple[Monomial, int]]:
        for m in sorted(self.coeffs, key=Monomial.key):
            yield m, self.coeffs[m]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Poly)
            and self.p == other.p
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((self.p, frozenset(self.coeffs.items())))

    def __len__(self) -> int:
        return len(self.coeffs)

    # -- text form --------------------------------------------------------

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for m, c in self.terms():
            if m.deg == 0:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(m.word))
            else:
                parts.append(f"{c}*" + "*".join(m.word))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Poly(p={self.p}, {str(self)!r})"

    @classmethod
    def parse(cls, text: str, p: int) -> "Poly":
        """Parse the canonical text form; also accepts '-' between terms."""
        text = text.strip()
        if not text:
            raise EncodingError("empty polynomial text")
        out: dict[Monomial, int] = {}
        # normalize to a leading-sign term list
        body = text.replace("-", "+-")
        if body.startswith("+-"):
            body = body[1:]
        for chunk in body.split("+"):
            chunk = chunk.strip()
            if not chunk:
                raise EncodingError(f"dangling sign in {text!r}")
            sign = 1
            if chunk.startswith("-"):
                sign = -1
                chunk = chunk[1:].strip()
            coeff = 1
            letters = []
            for factor in chunk.split("*"):
                factor = factor.strip()
                if not factor:
                    raise EncodingError(f"empty factor in {text!r}")
                if factor.isdigit():
                    coeff *= int(factor)
                elif all(ch in "xy" for ch in factor):
                    letters.append(factor)
                else:
                    raise EncodingError(f"bad factor {factor!r} in {text!r}")
            m = Monomial.from_word("".join(letters))
            out[m] = out.get(m, 0) + sign * coeff
        return cls(p, out)


def poly_mul(u: Poly, v: Poly) -> Poly:
    return u * v


def homogeneous_components(f: Poly) -> dict[int, Poly]:
    return f.homogeneous_components()


# -- ideal machinery ----------------------------------------------------


class _DegreeBasis:
    """Row-reduced span of one homogeneous slice, rows as sparse dicts.

    The pivot of a row is its least code; stored rows never contain an
    older pivot, so reducing a vector by repeatedly cancelling its least
    pivot code terminates and yields the unique normal form supported on
    non-pivot codes.
    """

    __slots__ = ("p", "rows")

    def __init__(self, p: int):
        self.p = p
        self.rows: dict[int, dict[int, int]] = {}

    def reduce(self, vec: dict[int, int]) -> dict[int, int]:
        vec = {c: v % self.p for c, v in vec.items() if v % self.p}
        while True:
            hits = vec.keys() & self.rows.keys()
            if not hits:
                return vec
            c = min(hits)
            coef = vec[c]
            for code, rc in self.rows[c].items():
                nv = (vec.get(code, 0) - coef * rc) % self.p
                if nv:
                    vec[code] = nv
                else:
                    vec.pop(code, None)
        # unreachable

    def insert(self, vec: dict[int, int]) -> bool:
        r = self.reduce(vec)
        if not r:
            return False
        piv = min(r)
        inv = pow(r[piv], -1, self.p)
        self.rows[piv] = {c: (v * inv) % self.p for c, v in r.items()}
        return True

    @property
    def rank(self) -> int:
        return len(self.rows)


class HomogeneousIdeal:
    """Two-sided ideal of F generated by homogeneous elements.

    Generators may have any degree; queries are served only up to maxdeg
    (the degree horizon) and raise HorizonError beyond it.
    """

    def __init__(self, p: int = 2, maxdeg: int = 16, generators: Iterable[Poly] = ()):
        if p not in SUPPORTED_MODULI:
            raise ValueError(f"modulus must be one of {SUPPORTED_MODULI}, got {p}")
        if maxdeg < 0:
            raise ValueError("maxdeg must be nonnegative")
        self.p = p
        self.maxdeg = maxdeg
        self._gens: list[Poly] = []
        self._bases: dict[int, _DegreeBasis] = {}
        self._folded: dict[int, int] = {}
        for g in generators:
            self.add_generator(g)

    @property
    def generators(self) -> tuple[Poly, ...]:
        return tuple(self._gens)

    @property
    def version(self) -> int:
        return len(self._gens)

    def counts(self) -> dict[int, int]:
        """Number of listed generators per degree (the audit's n_k)."""
        out: dict[int, int] = {}
        for g in self._gens:
            d = g.degree()
            out[d] = out.get(d, 0) + 1
        return dict(sorted(out.items()))

    def add_generator(self, g: Poly) -> None:
        if g.p != self.p:
            raise ValueError(f"modulus mismatch: {g.p} vs {self.p}")
        if g.is_zero():
            raise ValueError("cannot add the zero element as a generator")
        if not g.is_homogeneous():
            raise ValueError("generators must be homogeneous")
        self._gens.append(g)

    def has_monomial_generator(self, m: Monomial) -> bool:
        target = Poly.monomial(m, self.p)
        return any(g == target for g in self._gens)

    def _basis(self, k: int) -> _DegreeBasis:
        if k > self.maxdeg:
            raise HorizonError(f"degree {k} beyond horizon {self.maxdeg}")
        if k < 0:
            raise ValueError("degree must be nonnegative")
        basis = self._bases.get(k)
        if basis is None:
            basis = self._bases[k] = _DegreeBasis(self.p)
        start = self._folded.get(k, 0)
        if start < len(self._gens):
            for g in self._gens[start:]:
                d = g.degree()
                if d > k:
                    continue
                for a in range(k - d + 1):
                    b = k - d - a
                    for ucode in range(1 << a):
                        u = Monomial(a, ucode)
                        shifted = {
                            (u * m): c for m, c in g.coeffs.items()
                        }
                        for vcode in range(1 << b):
                            v = Monomial(b, vcode)
                            vec = {
                                ((m * v).code): c for m, c in shifted.items()
                            }
                            basis.insert(vec)
            self._folded[k] = len(self._gens)
        return basis

    def degree_basis(self, k: int) -> list[Poly]:
        """Echelon basis of the degree-k slice, rows sorted by pivot."""
        basis = self._basis(k)
        out = []
        for piv in sorted(basis.rows):
            row = basis.rows[piv]
            out.append(Poly(self.p, {Monomial(k, c): v for c, v in row.items()}))
        return out

    def reduce_component(self, f: Poly, k: int) -> Poly:
        vec = {m.code: c for m, c in f.coeffs.items()}
        red = self._basis(k).reduce(vec)
        return Poly(self.p, {Monomial(k, c): v for c, v in red.items()})

    def member(self, f: Poly) -> bool:
        if f.p != self.p:
            raise ValueError(f"modulus mismatch: {f.p} vs {self.p}")
        d = f.degree()
        if d is None:
            return True
        if d > self.maxdeg:
            raise HorizonError(f"degree {d} beyond horizon {self.maxdeg}")
        for k, comp in f.homogeneous_components().items():
            if not self.reduce_component(comp, k).is_zero():
                return False
        return True

    def quotient_dim(self, k: int) -> int:
        return (1 << k) - self._basis(k).rank

    def quotient_reduce(self, f: Poly, horizon: int | None = None) -> Poly:
        """Canonical representative of f in F/(I + F_{>horizon})."""
        if horizon is None:
            horizon = self.maxdeg
        if horizon > self.maxdeg:
            raise HorizonError(f"degree {horizon} beyond horizon {self.maxdeg}")
        out = Poly.zero(self.p)
        for k, comp in f.homogeneous_components().items():
            if k > horizon:
                continue
            out = out + self.reduce_component(comp, k)
        return out


def ideal_degree_basis(ideal: HomogeneousIdeal, k: int) -> list[Poly]:
    return ideal.degree_basis(k)


def member(ideal: HomogeneousIdeal, f: Poly) -> bool:
    return ideal.member(f)


def quotient_dim(ideal: HomogeneousIdeal, k: int) -> int:
    return ideal.quotient_dim(k)


def quotient_reduce(
    ideal: HomogeneousIdeal, f: Poly, horizon: int | None = None
) -> Poly:
    return ideal.quotient_reduce(f, horizon)


# -- Golod-Shafarevich audit ---------------------------------------------


@dataclass(frozen=True)
class GSBudget:
    """Relation-count budget: epsilon and the per-degree generator counts."""

    epsilon: Fraction
    counts: Mapping[int, int]

    @classmethod
    def from_ideal(cls, ideal: HomogeneousIdeal, epsilon: Fraction) -> "GSBudget":
        return cls(Fraction(epsilon), ideal.counts())


@dataclass(frozen=True)
class GSAuditResult:
    ok: bool
    failed_degree: int | None = None
    count: int | None = None
    bound: Fraction | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def gs_audit(budget: GSBudget, max_degree: int) -> GSAuditResult:
    """Check n_k <= eps^2 (2 - 2 eps)^(k-2) for 2 <= k <= max_degree, exactly.

    Degrees 0 and 1 must carry no generators at all; a violation there is
    a precondition failure, not a budget failure.
    """
    eps = Fraction(budget.epsilon)
    if not (0 < eps <= 1):
        return GSAuditResult(
            ok=False, reason=f"epsilon must lie in (0, 1], got {eps}"
        )
    for d in (0, 1):
        if budget.counts.get(d, 0):
            return GSAuditResult(
                ok=False,
                failed_degree=d,
                count=budget.counts.get(d, 0),
                reason=f"generators of degree {d} are not budgeted",
            )
    base = 2 - 2 * eps
    for k in range(2, max_degree + 1):
        n_k = budget.counts.get(k, 0)
        if not n_k:
            continue
        bound = eps * eps * base ** (k - 2)
        if n_k > bound:
            return GSAuditResult(ok=False, failed_degree=k, count=n_k, bound=bound)
    return GSAuditResult(ok=True)


# -- unit-group encoding ----------------------------------------------------


UNIT_LETTERS = ("X", "Y", "X^-1", "Y^-1")


def _letter_poly(base: str, p: int) -> Poly:
    return Poly.x(p) if base == "X" else Poly.y(p)


def unit_inverse_poly(base: str, exponent_bound: int, p: int) -> Poly:
    """The inverse of 1 + x as a polynomial, valid once x^N = 0: sum (-x)^i, i < N."""
    var = _letter_poly(base, p)
    acc = Poly.zero(p)
    power = Poly.one(p)
    for i in range(exponent_bound):
        acc = acc + (power if i % 2 == 0 else -power)
        power = power * var
    return acc


def unit_word_to_poly(
    word: Sequence[str],
    exponent_bound: int,
    ideal: HomogeneousIdeal,
    horizon: int | None = None,
) -> Poly:
    """Image of a group word over X, Y and inverses inside F/I, reduced at the horizon.

    X maps to 1 + x; the inverse letters expand to the finite alternating
    sums that invert them once x^N and y^N vanish, so the ideal must list
    both of those monomials among its generators.
    """
    if horizon is None:
        horizon = ideal.maxdeg
    if horizon > ideal.maxdeg:
        raise HorizonError(f"degree {horizon} beyond horizon {ideal.maxdeg}")
    N = exponent_bound
    if N < 1:
        raise ValueError("exponent bound must be positive")
    for m in (Monomial(N, 0), Monomial(N, (1 << N) - 1)):
        if not ideal.has_monomial_generator(m):
            raise EncodingError(
                f"ideal lacks the generator {m.word}; unit inverses are undefined"
            )
    p = ideal.p
    acc = Poly.one(p)
    for tok in word:
        if tok in ("X", "Y"):
            factor = Poly.one(p) + _letter_poly(tok, p)
        elif tok in ("X^-1", "Y^-1"):
            factor = unit_inverse_poly(tok[0], N, p)
        else:
            raise EncodingError(f"bad unit-word letter {tok!r}")
        acc = acc.mul_truncated(factor, horizon)
    return ideal.quotient_reduce(acc, horizon)


def monomial_to_unit_word(m: Monomial) -> tuple[str, ...]:
    """The positive unit word whose top homogeneous component is m."""
    return tuple("Y" if ch == "y" else "X" for ch in m.word)


# -- presentation padding ----------------------------------------------------


@dataclass(frozen=True)
class PaddedRelator:
    """One position of a padded relator stream: payload plus the +s-s blind."""

    position: int
    relator: Poly | None

    def text(self) -> str:
        body = "0" if self.relator is None else str(self.relator)
        s = self.position
        return f"{body} + {s}*1 - {s}*1"


def pad_presentation(
    relators: Sequence[tuple[Poly, int]], length: int | None = None
) -> list[PaddedRelator]:
    """Spread stage-tagged relators over a decidable-by-position stream.

    The relator enumerated at stage s lands at position s (bumped past
    any position already taken); every other position carries the
    trivial padding 0 + s*1 - s*1.
    """
    placed: list[tuple[int, Poly]] = []
    next_free = 0
    for r, stage in relators:
        if placed and stage < placed[-1][0]:
            raise ValueError("relator stages must be nondecreasing")
        pos = max(stage, next_free)
        placed.append((pos, r))
        next_free = pos + 1
    total = next_free if length is None else length
    if length is not None and placed and placed[-1][0] >= length:
        raise ValueError("length too small for the placed relators")
    by_pos = dict(placed)
    return [PaddedRelator(s, by_pos.get(s)) for s in range(total)]


_PADDED_RE = re.compile(r"^(?P<body>.*\S)\s+\+\s+(?P<s>\d+)\*1\s+-\s+(?P=s)\*1$")


def decode_padded(lines: Iterable[str], p: int) -> list[tuple[Poly, int]]:
    """Recover (relator, position) pairs from rendered padded text."""
    out = []
    for i, line in enumerate(lines):
        m = _PADDED_RE.match(line.strip())
        if not m:
            raise EncodingError(f"line {i} is not a padded relator: {line!r}")
        pos = int(m.group("s"))
        body = m.group("body").strip()
        if body != "0":
            out.append((Poly.parse(body, p), pos))
    return out
