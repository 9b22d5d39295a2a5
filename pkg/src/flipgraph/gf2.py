"""Linear algebra over GF(2) on bit-packed matrices and vectors.

Matrices are stored row-major in a single Python integer, so xor, equality
and hashing are single word-ish operations regardless of shape.  The free
functions (:func:`rank`, :func:`dependence`, :func:`solve`) accept either
:class:`BitMatrix` instances or plain packed integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

__all__ = [
    "BitMatrix",
    "DependenceCertificate",
    "rank",
    "dependence",
    "solve",
]


@dataclass(frozen=True, slots=True)
class BitMatrix:
    """An immutable rows x cols matrix over GF(2).

    ``bits`` packs the entries row-major: entry (r, c) is bit ``r * cols + c``.
    All bits above ``rows * cols - 1`` must be zero.
    """

    rows: int
    cols: int
    bits: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"bad shape {self.rows}x{self.cols}")
        if not 0 <= self.bits < (1 << (self.rows * self.cols)):
            raise ValueError("packed bits exceed matrix shape")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, 0)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        bits = 0
        for i in range(n):
            bits |= 1 << (i * n + i)
        return cls(n, n, bits)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BitMatrix":
        """Build from an iterable of 0/1 entry rows."""
        nrows = len(rows)
        ncols = len(rows[0])
        bits = 0
        for r, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged rows")
            for c, v in enumerate(row):
                if v not in (0, 1):
                    raise ValueError(f"entry {v!r} is not a GF(2) value")
                bits |= v << (r * ncols + c)
        return cls(nrows, ncols, bits)

    @classmethod
    def single(cls, rows: int, cols: int, r: int, c: int) -> "BitMatrix":
        """The matrix with a single 1 at (r, c), zero-indexed."""
        if not (0 <= r < rows and 0 <= c < cols):
            raise ValueError("unit position out of range")
        return cls(rows, cols, 1 << (r * cols + c))

    @classmethod
    def from_text(cls, text: str) -> "BitMatrix":
        """Parse the serialized form, rows of 0/1 joined by commas ("10,01")."""
        parts = text.split(",")
        ncols = len(parts[0])
        bits = 0
        for r, row in enumerate(parts):
            if len(row) != ncols:
                raise ValueError(f"ragged matrix text {text!r}")
            for c, ch in enumerate(row):
                if ch == "1":
                    bits |= 1 << (r * ncols + c)
                elif ch != "0":
                    raise ValueError(f"bad character {ch!r} in matrix text")
        return cls(len(parts), ncols, bits)

    def to_text(self) -> str:
        rows = []
        for r in range(self.rows):
            rows.append(
                "".join("1" if self.bit(r, c) else "0" for c in range(self.cols))
            )
        return ",".join(rows)

    def bit(self, r: int, c: int) -> int:
        return (self.bits >> (r * self.cols + c)) & 1

    def row_mask(self, r: int) -> int:
        return (self.bits >> (r * self.cols)) & ((1 << self.cols) - 1)

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("xor of mismatched shapes")
        return BitMatrix(self.rows, self.cols, self.bits ^ other.bits)

    def transpose(self) -> "BitMatrix":
        bits = 0
        for r in range(self.rows):
            for c in range(self.cols):
                if self.bit(r, c):
                    bits |= 1 << (c * self.rows + r)
        return BitMatrix(self.cols, self.rows, bits)

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        """GF(2) matrix product."""
        if self.cols != other.rows:
            raise ValueError("product of mismatched shapes")
        out = 0
        for r in range(self.rows):
            acc = 0
            row = self.row_mask(r)
            j = 0
            while row:
                if row & 1:
                    acc ^= other.row_mask(j)
                row >>= 1
                j += 1
            out |= acc << (r * other.cols)
        return BitMatrix(self.rows, other.cols, out)

    def rank(self) -> int:
        return rank(self.row_mask(r) for r in range(self.rows))

    def inverse(self) -> "BitMatrix":
        """Inverse of a square invertible matrix; raises if singular."""
        if self.rows != self.cols:
            raise ValueError("inverse of a non-square matrix")
        n = self.rows
        # Gauss-Jordan on [self | I] packed as 2n-bit rows.
        rows = [self.row_mask(r) | (1 << (n + r)) for r in range(n)]
        for col in range(n):
            pivot = next(
                (k for k in range(col, n) if (rows[k] >> col) & 1), None
            )
            if pivot is None:
                raise ValueError("matrix is singular")
            rows[col], rows[pivot] = rows[pivot], rows[col]
            for k in range(n):
                if k != col and (rows[k] >> col) & 1:
                    rows[k] ^= rows[col]
        bits = 0
        for r in range(n):
            bits |= (rows[r] >> n) << (r * n)
        return BitMatrix(n, n, bits)


def _bits_of(v: "BitMatrix | int") -> int:
    return v.bits if isinstance(v, BitMatrix) else v


@dataclass(frozen=True, slots=True)
class DependenceCertificate:
    """Witness that ``ms[t]`` equals the xor of ``ms[i]`` for i in ``others``."""

    t: int
    others: frozenset[int]


def rank(ms: Iterable["BitMatrix | int"]) -> int:
    """GF(2) rank of a collection of matrices viewed as flat vectors."""
    basis: dict[int, int] = {}
    for m in ms:
        v = _bits_of(m)
        while v:
            head = v.bit_length() - 1
            if head in basis:
                v ^= basis[head]
            else:
                basis[head] = v
                break
    return len(basis)


def dependence(ms: Sequence["BitMatrix | int"]) -> Optional[DependenceCertificate]:
    """Find a linear dependence among ``ms`` over GF(2), if one exists.

    Runs one forward elimination pass, tracking each basis vector as a
    combination of inputs.  Of all indices whose vector reduces to zero
    against the earlier ones, the largest index is returned as ``t``; the
    certificate expands bit-exactly to ``ms[t]``.
    """
    basis: dict[int, tuple[int, int]] = {}  # leading bit -> (vector, combo mask)
    best: Optional[tuple[int, int]] = None
    for k, m in enumerate(ms):
        v = _bits_of(m)
        combo = 1 << k
        while v:
            head = v.bit_length() - 1
            if head in basis:
                bv, bc = basis[head]
                v ^= bv
                combo ^= bc
            else:
                basis[head] = (v, combo)
                break
        if v == 0:
            best = (k, combo ^ (1 << k))
    if best is None:
        return None
    t, combo = best
    others = frozenset(i for i in range(len(ms)) if (combo >> i) & 1)
    return DependenceCertificate(t=t, others=others)


def solve(
    rows: Sequence[int], rhs: Sequence[int], unknowns: int
) -> Optional[tuple[int, ...]]:
    """Solve a GF(2) linear system given as packed rows.

    ``rows[k]`` holds the coefficients of equation k (bit i = unknown i) and
    ``rhs[k]`` its right-hand side bit.  Returns one solution as a 0/1 tuple
    with every free variable set to 0, or ``None`` if inconsistent.  An empty
    system yields the all-zero solution.
    """
    mask = solve_mask(rows, rhs, unknowns)
    if mask is None:
        return None
    return tuple((mask >> i) & 1 for i in range(unknowns))


def solve_mask(
    rows: Sequence[int], rhs: Sequence[int], unknowns: int
) -> Optional[int]:
    """Like :func:`solve` but returns the solution as a packed integer."""
    res = solve_affine(rows, rhs, unknowns)
    return None if res is None else res[0]


def solve_affine(
    rows: Sequence[int], rhs: Sequence[int], unknowns: int
) -> Optional[tuple[int, list[int]]]:
    """Full solution set of a GF(2) system: (particular, kernel basis).

    The particular solution has all free variables 0; the kernel basis has
    one packed vector per free variable, in increasing variable order.
    """
    full = (1 << unknowns) - 1
    pivots: dict[int, tuple[int, int]] = {}  # pivot column -> (row, rhs bit)
    for row, b in zip(rows, rhs):
        v = row & full
        vb = b & 1
        while v:
            col = _lowest_bit(v)
            if col in pivots:
                pv, pb = pivots[col]
                v ^= pv
                vb ^= pb
            else:
                pivots[col] = (v, vb)
                break
        if v == 0 and vb:
            return None
    # Each stored row has its pivot as lowest set bit, so substitute from the
    # highest pivot column down.
    solution = 0
    for col in sorted(pivots, reverse=True):
        pv, pb = pivots[col]
        acc = pb ^ _parity(solution & pv & ~(1 << col))
        solution |= acc << col
    free_cols = [c for c in range(unknowns) if c not in pivots]
    basis: list[int] = []
    for fc in free_cols:
        vec = 1 << fc
        for col in sorted(pivots, reverse=True):
            pv, _ = pivots[col]
            if _parity(vec & pv & ~(1 << col)):
                vec |= 1 << col
        basis.append(vec)
    return solution, basis


def _lowest_bit(v: int) -> int:
    return (v & -v).bit_length() - 1


def _parity(v: int) -> int:
    return v.bit_count() & 1
