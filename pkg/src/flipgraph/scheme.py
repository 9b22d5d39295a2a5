"""Matrix multiplication schemes and their Brent-equation verification.

A scheme for format (n, m, p) is a multiset of rank-one triples A (x) B (x) G
with A an n x m matrix, B an m x p matrix and G a p x n matrix; the third
factor is stored transposed relative to the product entry it computes, which
is what makes the defining tensor symmetric under cyclic rotation of the
roles.  Over GF(2) a scheme is valid when the xor of the elements' outer
products equals the multiplication tensor; over the rationals the same
statement holds with exact arithmetic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterable, Iterator, Optional, Sequence, Union

from .gf2 import BitMatrix

__all__ = [
    "Format",
    "Triple",
    "Scheme",
    "RationalScheme",
    "ParseError",
    "standard_scheme",
    "fixture",
    "verify",
    "parse_scheme",
    "parse_rational_scheme",
    "load_scheme_text",
    "brent_equations",
]

Raw = tuple[int, int, int]


class ParseError(ValueError):
    """Raised for malformed scheme text."""


@dataclass(frozen=True, slots=True)
class Format:
    """The shape (n, m, p) of an n x m by m x p product."""

    n: int
    m: int
    p: int

    def __post_init__(self) -> None:
        if min(self.n, self.m, self.p) < 1:
            raise ValueError(f"format entries must be positive: {self}")

    @classmethod
    def parse(cls, text: str) -> "Format":
        parts = text.replace(" ", "").split(",")
        if len(parts) != 3:
            raise ValueError(f"expected n,m,p: {text!r}")
        return cls(*(int(x) for x in parts))

    @property
    def dims(self) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        """(rows, cols) of the three factor roles."""
        return ((self.n, self.m), (self.m, self.p), (self.p, self.n))

    @property
    def role_bits(self) -> tuple[int, int, int]:
        return (self.n * self.m, self.m * self.p, self.p * self.n)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n, self.m, self.p)

    def __str__(self) -> str:
        return f"{self.n},{self.m},{self.p}"


@dataclass(frozen=True, slots=True)
class Triple:
    """One rank-one summand A (x) B (x) G with nonzero factors."""

    a: BitMatrix
    b: BitMatrix
    g: BitMatrix

    def __post_init__(self) -> None:
        if self.a.cols != self.b.rows or self.b.cols != self.g.rows \
                or self.g.cols != self.a.rows:
            raise ValueError("factor shapes do not chain")
        if self.a.is_zero or self.b.is_zero or self.g.is_zero:
            raise ValueError("zero factor in triple")

    @property
    def format(self) -> Format:
        return Format(self.a.rows, self.a.cols, self.b.cols)

    @property
    def raw(self) -> Raw:
        return (self.a.bits, self.b.bits, self.g.bits)

    def factor(self, role: int) -> BitMatrix:
        return (self.a, self.b, self.g)[role]

    def to_text(self) -> str:
        return f"{self.a.to_text()}|{self.b.to_text()}|{self.g.to_text()}"


def triple_from_raw(fmt: Format, raw: Raw) -> Triple:
    (an, am), (bn, bm), (gn, gm) = fmt.dims
    return Triple(
        BitMatrix(an, am, raw[0]),
        BitMatrix(bn, bm, raw[1]),
        BitMatrix(gn, gm, raw[2]),
    )


@dataclass(frozen=True)
class Scheme:
    """A GF(2) scheme: a canonically sorted multiset of triples."""

    format: Format
    elements: tuple[Triple, ...]

    @classmethod
    def from_triples(cls, fmt: Format, triples: Iterable[Triple]) -> "Scheme":
        elems = tuple(sorted(triples, key=lambda t: t.raw))
        for t in elems:
            if t.format != fmt:
                raise ValueError(f"triple of format {t.format} in {fmt} scheme")
        return cls(fmt, elems)

    @classmethod
    def from_raw(cls, fmt: Format, raws: Iterable[Raw]) -> "Scheme":
        return cls(fmt, tuple(triple_from_raw(fmt, r) for r in sorted(raws)))

    @property
    def rank(self) -> int:
        return len(self.elements)

    def raw(self) -> tuple[Raw, ...]:
        return tuple(t.raw for t in self.elements)

    def verify(self) -> bool:
        return verify(self)

    def serialize(self) -> str:
        fmt = self.format
        lines = [f"{fmt.n} {fmt.m} {fmt.p} {self.rank}"]
        lines.extend(t.to_text() for t in self.elements)
        return "\n".join(lines) + "\n"

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.elements)


# ---------------------------------------------------------------------------
# Tensors and verification.


def triple_tensor(fmt: Format, raw: Raw) -> int:
    """Packed coefficient tensor of a rank-one triple.

    Bit layout: position ai * (mp * pn) + bj * pn + gk, where ai, bj, gk are
    the packed row-major entry indices within the three factors.
    """
    ab, bb, gb = fmt.role_bits
    a, b, g = raw
    bg = 0
    j = 0
    bv = b
    while bv:
        if bv & 1:
            bg |= g << (j * gb)
        bv >>= 1
        j += 1
    out = 0
    i = 0
    step = bb * gb
    while a:
        if a & 1:
            out |= bg << (i * step)
        a >>= 1
        i += 1
    return out


@lru_cache(maxsize=None)
def target_tensor(fmt: Format) -> int:
    """The multiplication tensor built directly from its Kronecker deltas.

    Coefficient of (a_(i1,i2), b_(j1,j2), g_(k1,k2)) is
    delta(i2, j1) * delta(j2, k1) * delta(k2, i1).
    """
    n, m, p = fmt.n, fmt.m, fmt.p
    _, bb, gb = fmt.role_bits
    out = 0
    for i1 in range(n):
        for i2 in range(m):
            for j1 in range(m):
                for j2 in range(p):
                    for k1 in range(p):
                        for k2 in range(n):
                            if i2 == j1 and j2 == k1 and k2 == i1:
                                ai = i1 * m + i2
                                bj = j1 * p + j2
                                gk = k1 * n + k2
                                out |= 1 << (ai * bb * gb + bj * gb + gk)
    return out


def scheme_tensor(fmt: Format, raws: Iterable[Raw]) -> int:
    acc = 0
    for r in raws:
        acc ^= triple_tensor(fmt, r)
    return acc


def verify_raw(fmt: Format, raws: Iterable[Raw]) -> bool:
    """GF(2) Brent verification of a raw triple list (zero factors allowed)."""
    return scheme_tensor(fmt, raws) == target_tensor(fmt)


def brent_equations(fmt: Format) -> Iterator[tuple[int, int, int, int]]:
    """Yield (ai, bj, gk, delta) for every Brent equation of the format.

    This is the equation-level route: one entry per choice of the six
    indices, with the right-hand side delta(i2,j1) delta(j2,k1) delta(k2,i1).
    """
    n, m, p = fmt.n, fmt.m, fmt.p
    for i1 in range(n):
        for i2 in range(m):
            for j1 in range(m):
                for j2 in range(p):
                    for k1 in range(p):
                        for k2 in range(n):
                            delta = int(i2 == j1 and j2 == k1 and k2 == i1)
                            yield (i1 * m + i2, j1 * p + j2, k1 * n + k2, delta)


def verify(s: "Scheme | RationalScheme") -> bool:
    """True iff every Brent equation holds over the scheme's domain."""
    if isinstance(s, Scheme):
        return verify_raw(s.format, s.raw())
    if isinstance(s, RationalScheme):
        return s.verify()
    raise TypeError(f"cannot verify {type(s).__name__}")


# ---------------------------------------------------------------------------
# Rational schemes.

Entry = Union[int, Fraction]
Mat = tuple[tuple[Entry, ...], ...]


def _as_entry(v: Entry) -> Entry:
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def _mat_shape_ok(mat: Mat, rows: int, cols: int) -> bool:
    return len(mat) == rows and all(len(r) == cols for r in mat)


@dataclass(frozen=True)
class RationalScheme:
    """A scheme with exact integer or rational coefficients."""

    format: Format
    elements: tuple[tuple[Mat, Mat, Mat], ...]

    @classmethod
    def from_elements(
        cls, fmt: Format, elements: Iterable[Sequence[Sequence[Sequence[Entry]]]]
    ) -> "RationalScheme":
        norm = []
        for a, b, g in elements:
            mats = []
            for mat, (rows, cols) in zip((a, b, g), fmt.dims):
                tup = tuple(
                    tuple(_as_entry(Fraction(v)) for v in row) for row in mat
                )
                if not _mat_shape_ok(tup, rows, cols):
                    raise ValueError("factor shape mismatch")
                mats.append(tup)
            if any(all(v == 0 for row in mt for v in row) for mt in mats):
                raise ValueError("zero factor in rational triple")
            norm.append(tuple(mats))
        return cls(fmt, tuple(norm))

    @property
    def rank(self) -> int:
        return len(self.elements)

    def verify(self) -> bool:
        """Exact Brent verification over the rationals."""
        fmt = self.format
        flat = [
            (
                tuple(v for row in a for v in row),
                tuple(v for row in b for v in row),
                tuple(v for row in g for v in row),
            )
            for a, b, g in self.elements
        ]
        for ai, bj, gk, delta in brent_equations(fmt):
            acc = 0
            for fa, fb, fg in flat:
                acc += fa[ai] * fb[bj] * fg[gk]
            if acc != delta:
                return False
        return True

    def reduce_mod2(self) -> Scheme:
        """Entrywise reduction mod 2; denominators must be odd."""
        raws = []
        for a, b, g in self.elements:
            packed = []
            for mat in (a, b, g):
                bits = 0
                pos = 0
                for row in mat:
                    for v in row:
                        f = Fraction(v)
                        if f.denominator % 2 == 0:
                            raise ValueError(
                                "even denominator has no mod-2 reduction"
                            )
                        bits |= (f.numerator & 1) << pos
                        pos += 1
                packed.append(bits)
            raws.append(tuple(packed))
        return Scheme.from_raw(self.format, raws)

    def serialize(self) -> str:
        fmt = self.format
        lines = [f"{fmt.n} {fmt.m} {fmt.p} {self.rank}"]
        for a, b, g in self.elements:
            mats = []
            for mat in (a, b, g):
                mats.append(
                    ",".join(" ".join(str(v) for v in row) for row in mat)
                )
            lines.append("|".join(mats))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Parsing.


def _split_body(text: str) -> tuple[Format, int, list[str]]:
    lines = [ln.rstrip() for ln in text.strip("\n").split("\n")]
    if not lines or not lines[0].strip():
        raise ParseError("empty scheme text")
    head = lines[0].split()
    if len(head) != 4:
        raise ParseError(f"header must be 'n m p r', got {lines[0]!r}")
    try:
        n, m, p, r = (int(x) for x in head)
    except ValueError as exc:
        raise ParseError(f"non-integer header field in {lines[0]!r}") from exc
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != r:
        raise ParseError(f"expected {r} element lines, found {len(body)}")
    return Format(n, m, p), r, body


def parse_scheme(text: str) -> Scheme:
    """Parse the GF(2) text format (header line, then 'A|B|G' per element)."""
    fmt, _, body = _split_body(text)
    triples = []
    for ln in body:
        parts = ln.split("|")
        if len(parts) != 3:
            raise ParseError(f"element line needs three factors: {ln!r}")
        mats = []
        for part, (rows, cols) in zip(parts, fmt.dims):
            try:
                mat = BitMatrix.from_text(part)
            except ValueError as exc:
                raise ParseError(f"bad factor {part!r}: {exc}") from exc
            if (mat.rows, mat.cols) != (rows, cols):
                raise ParseError(
                    f"factor {part!r} has shape {mat.rows}x{mat.cols}, "
                    f"expected {rows}x{cols}"
                )
            mats.append(mat)
        try:
            triples.append(Triple(*mats))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return Scheme.from_triples(fmt, triples)


_ENTRY_RE = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational_scheme(text: str) -> RationalScheme:
    """Parse the rational text format (entries in decimal, '/' for fractions)."""
    fmt, _, body = _split_body(text)
    elements = []
    for ln in body:
        parts = ln.split("|")
        if len(parts) != 3:
            raise ParseError(f"element line needs three factors: {ln!r}")
        mats = []
        for part, (rows, cols) in zip(parts, fmt.dims):
            rows_txt = part.split(",")
            if len(rows_txt) != rows:
                raise ParseError(f"factor {part!r}: expected {rows} rows")
            mat = []
            for row_txt in rows_txt:
                entries = row_txt.split()
                if len(entries) != cols:
                    raise ParseError(f"row {row_txt!r}: expected {cols} entries")
                row = []
                for e in entries:
                    if not _ENTRY_RE.match(e):
                        raise ParseError(f"bad rational entry {e!r}")
                    row.append(Fraction(e))
                mat.append(row)
            mats.append(mat)
        elements.append(mats)
    try:
        return RationalScheme.from_elements(fmt, elements)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_scheme_text(text: str) -> "Scheme | RationalScheme":
    """Parse either format, sniffing by the first element line's alphabet."""
    stripped = text.strip("\n")
    lines = [ln for ln in stripped.split("\n")[1:] if ln.strip()]
    if lines and set(lines[0]) <= set("01,|"):
        return parse_scheme(text)
    return parse_rational_scheme(text)


# ---------------------------------------------------------------------------
# Built-in schemes.


def standard_scheme(fmt: Format) -> Scheme:
    """The rank n*m*p scheme of single-entry factors."""
    n, m, p = fmt.n, fmt.m, fmt.p
    triples = []
    for i in range(n):
        for j in range(m):
            for k in range(p):
                triples.append(
                    Triple(
                        BitMatrix.single(n, m, i, j),
                        BitMatrix.single(m, p, j, k),
                        BitMatrix.single(p, n, k, i),
                    )
                )
    return Scheme.from_triples(fmt, triples)


def _mat2(entries: str) -> BitMatrix:
    return BitMatrix.from_text(entries)


_STRASSEN_222 = [
    # (A, B, G) with G indexed (k, i): row = output column, column = output row.
    ("10,01", "10,01", "10,01"),  # (a11+a22)(b11+b22) -> c11+c22
    ("00,11", "10,00", "01,01"),  # (a21+a22)(b11)     -> c12+c22
    ("10,00", "01,01", "00,11"),  # (a11)(b12+b22)     -> c21+c22
    ("00,01", "10,10", "11,00"),  # (a22)(b21+b11)     -> c11+c12
    ("11,00", "00,01", "10,10"),  # (a11+a12)(b22)     -> c21+c11
    ("10,10", "11,00", "00,01"),  # (a21+a11)(b11+b12) -> c22
    ("01,01", "00,11", "10,00"),  # (a12+a22)(b21+b22) -> c11
]

_ISOLATED_222_RANK8 = [
    ("10,01", "10,01", "00,10"),
    ("00,01", "10,10", "01,11"),
    ("00,11", "10,00", "01,01"),
    ("10,00", "01,01", "10,00"),
    ("01,00", "11,11", "10,11"),
    ("01,10", "11,00", "00,01"),
    ("01,01", "00,11", "00,11"),
    ("11,00", "11,01", "10,10"),
]

_STRASSEN_222_RATIONAL = [
    # Original signed coefficients; same layout as the GF(2) fixture.
    (((1, 0), (0, 1)), ((1, 0), (0, 1)), ((1, 0), (0, 1))),
    (((0, 0), (1, 1)), ((1, 0), (0, 0)), ((0, 1), (0, -1))),
    (((1, 0), (0, 0)), ((0, 1), (0, -1)), ((0, 0), (1, 1))),
    (((0, 0), (0, 1)), ((-1, 0), (1, 0)), ((1, 1), (0, 0))),
    (((1, 1), (0, 0)), ((0, 0), (0, 1)), ((-1, 0), (1, 0))),
    (((-1, 0), (1, 0)), ((1, 1), (0, 0)), ((0, 0), (0, 1))),
    (((0, 1), (0, -1)), ((0, 0), (1, 1)), ((1, 0), (0, 0))),
]


def _fixed(rows: list[tuple[str, str, str]]) -> Scheme:
    fmt = Format(2, 2, 2)
    return Scheme.from_triples(
        fmt, (Triple(_mat2(a), _mat2(b), _mat2(g)) for a, b, g in rows)
    )


def fixture(name: str) -> "Scheme | RationalScheme":
    """Built-in schemes by name.

    ``strassen_222`` and ``isolated_222_rank8`` are GF(2) schemes;
    ``strassen_222_rational`` keeps the signed coefficients.  ``standard:n,m,p``
    gives the standard scheme of any format.  Any other name is looked up
    among the packaged scheme files, so discovered schemes such as
    ``rank23_333`` ship with the library.
    """
    if name == "strassen_222":
        return _fixed(_STRASSEN_222)
    if name == "isolated_222_rank8":
        return _fixed(_ISOLATED_222_RANK8)
    if name == "strassen_222_rational":
        return RationalScheme.from_elements(Format(2, 2, 2), _STRASSEN_222_RATIONAL)
    if name.startswith("standard:"):
        return standard_scheme(Format.parse(name.split(":", 1)[1]))
    if re.fullmatch(r"\w+", name):
        packed = resources.files(__package__) / "data" / f"{name}.txt"
        if packed.is_file():
            return load_scheme_text(packed.read_text())
    raise ValueError(f"unknown fixture {name!r}")
