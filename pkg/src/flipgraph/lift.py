"""2-adic refinement of GF(2) schemes into integer or rational schemes.

A scheme over GF(2) is a solution of the Brent equations mod 2.  Treating it
as an approximation of a 2-adic solution, each refinement order solves one
GF(2) linear system for the next binary digit of every coefficient.  A state
refined far enough either reconstructs to an exact rational scheme or gives
evidence that the scheme only exists in characteristic two.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Callable, Iterator, Optional, Sequence

from .scheme import Format, RationalScheme, Scheme, brent_equations

DEFAULT_TARGET_ORDER = 100

FactorCoeffs = tuple[int, ...]
ElementCoeffs = tuple[FactorCoeffs, FactorCoeffs, FactorCoeffs]


@dataclass(frozen=True)
class LiftState:
    """Scheme coefficients refined to satisfy the Brent equations mod 2**order.

    Coefficients are stored row-major per factor, one integer in
    [0, 2**order) per matrix entry; their parities never change, so reducing
    any state mod 2 recovers the starting GF(2) scheme.
    """

    format: Format
    order: int
    coeffs: tuple[ElementCoeffs, ...]

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError("order must be at least 1")
        bound = self.modulus
        for elem in self.coeffs:
            for mat, bits in zip(elem, self.format.role_bits):
                if len(mat) != bits:
                    raise ValueError("coefficient shape mismatch")
                if any(not 0 <= v < bound for v in mat):
                    raise ValueError("coefficient out of range for the order")

    @property
    def rank(self) -> int:
        return len(self.coeffs)

    @property
    def modulus(self) -> int:
        return 1 << self.order

    def is_valid(self) -> bool:
        """Whether every Brent residual vanishes mod 2**order."""
        return all(res % self.modulus == 0 for res in brent_residuals(self))

    def reduce_mod2(self) -> Scheme:
        """The underlying GF(2) scheme, from coefficient parities."""
        raws = []
        for elem in self.coeffs:
            raws.append(
                tuple(
                    sum((v & 1) << i for i, v in enumerate(mat))
                    for mat in elem
                )
            )
        return Scheme.from_raw(self.format, raws)


def brent_residuals(st: LiftState) -> Iterator[int]:
    """Integer Brent residuals of a state, one per equation."""
    for ai, bj, gk, delta in brent_equations(st.format):
        yield sum(a[ai] * b[bj] * g[gk] for a, b, g in st.coeffs) - delta


def lift_init(s: Scheme) -> LiftState:
    """Order-1 state with the scheme's 0/1 coefficients."""
    if not s.verify():
        raise ValueError("scheme fails verification")
    coeffs = []
    for raw in s.raw():
        coeffs.append(
            tuple(
                tuple((bits >> i) & 1 for i in range(width))
                for bits, width in zip(raw, s.format.role_bits)
            )
        )
    return LiftState(s.format, 1, tuple(coeffs))


class _EchelonSystem:
    """A GF(2) system reduced once, reusable for every right-hand side.

    The coefficient matrix of the refinement system depends only on the
    parities of the state, which never change, so one elimination with a
    recorded row transform serves every order and every backtracking branch.
    """

    def __init__(self, rows: Sequence[int], unknowns: int) -> None:
        self.unknowns = unknowns
        pivots: dict[int, tuple[int, int]] = {}
        zero_transforms: list[int] = []
        for k, row in enumerate(rows):
            v, t = row, 1 << k
            while v:
                col = (v & -v).bit_length() - 1
                if col in pivots:
                    pv, pt = pivots[col]
                    v ^= pv
                    t ^= pt
                else:
                    pivots[col] = (v, t)
                    break
            else:
                zero_transforms.append(t)
        # clear every pivot column from the other rows, highest column first
        for col in sorted(pivots, reverse=True):
            pv, pt = pivots[col]
            for col2, (v2, t2) in list(pivots.items()):
                if col2 < col and (v2 >> col) & 1:
                    pivots[col2] = (v2 ^ pv, t2 ^ pt)
        self._pivots = sorted(pivots.items())
        self._zero_transforms = zero_transforms
        taken = set(pivots)
        self.free_columns = [c for c in range(unknowns) if c not in taken]
        self.kernel = []
        for fc in self.free_columns:
            vec = 1 << fc
            for col, (pv, _) in self._pivots:
                if (pv >> fc) & 1:
                    vec |= 1 << col
            self.kernel.append(vec)

    def solve(self, rhs: int) -> Optional[int]:
        """Particular solution with free variables 0, or None."""
        for t in self._zero_transforms:
            if (t & rhs).bit_count() & 1:
                return None
        x = 0
        for col, (_, t) in self._pivots:
            if (t & rhs).bit_count() & 1:
                x |= 1 << col
        return x


def _ansatz_rows(st: LiftState) -> list[int]:
    """Coefficient rows of the refinement system, one per Brent equation.

    Unknown l*(nm+mp+pn) + offset is the next binary digit of element l's
    coefficient at that offset; its coefficient in an equation is the mod-2
    product of the other two factors' entries.
    """
    fmt = st.format
    nm, mp, pn = fmt.role_bits
    width = nm + mp + pn
    parities = [
        tuple(tuple(v & 1 for v in mat) for mat in elem) for elem in st.coeffs
    ]
    rows = []
    for ai, bj, gk, _ in brent_equations(fmt):
        row = 0
        for idx, (pa, pb, pg) in enumerate(parities):
            base = idx * width
            if pb[bj] and pg[gk]:
                row |= 1 << (base + ai)
            if pa[ai] and pg[gk]:
                row |= 1 << (base + nm + bj)
            if pa[ai] and pb[bj]:
                row |= 1 << (base + nm + mp + gk)
        rows.append(row)
    return rows


def _rhs_bits(st: LiftState) -> int:
    """Residuals divided by the modulus, packed one bit per equation."""
    order = st.order
    modulus = st.modulus
    rhs = 0
    for k, res in enumerate(brent_residuals(st)):
        if res % modulus:
            raise ValueError("state is not valid at its order")
        if (res >> order) & 1:
            rhs |= 1 << k
    return rhs


def _refined(st: LiftState, solution: int) -> LiftState:
    """The state one order up, with the solved digits added in."""
    nm, mp, pn = st.format.role_bits
    width = nm + mp + pn
    add = st.modulus
    out = []
    for idx, elem in enumerate(st.coeffs):
        base = idx * width
        offsets = (base, base + nm, base + nm + mp)
        out.append(
            tuple(
                tuple(
                    v + (add if (solution >> (off + i)) & 1 else 0)
                    for i, v in enumerate(mat)
                )
                for mat, off in zip(elem, offsets)
            )
        )
    return LiftState(st.format, st.order + 1, tuple(out))


def lift_step(st: LiftState) -> Optional[LiftState]:
    """Refine a state one order, or None if no refinement exists.

    Inconsistency of the linear system proves that this state admits no
    extension to the next order; it does not rule out other states at the
    same order reached through different earlier digit choices.
    """
    system = _EchelonSystem(_ansatz_rows(st), st.rank * sum(st.format.role_bits))
    solution = system.solve(_rhs_bits(st))
    if solution is None:
        return None
    out = _refined(st, solution)
    if not out.is_valid():
        raise RuntimeError("refined state fails its modulus")
    return out


def lift(
    s: Scheme,
    target_order: int = DEFAULT_TARGET_ORDER,
    *,
    retry_budget: int = 0,
    accept: Callable[[LiftState], bool] | None = None,
    progress: Callable[[LiftState], None] | None = None,
) -> Optional[LiftState]:
    """Refine a GF(2) scheme to satisfy the Brent equations mod 2**target_order.

    Each order takes the first solution of its refinement system (free
    variables zero).  When a branch dead-ends, or ``accept`` rejects a state
    at the target order, the search backtracks and tries solutions offset by
    kernel vectors, consuming ``retry_budget`` one alternative at a time; the
    default budget of zero makes the lift a single greedy pass.  ``progress``
    observes every state the search builds, in visit order.
    """
    if target_order < 1:
        raise ValueError("target_order must be at least 1")
    state = lift_init(s)
    system = _EchelonSystem(
        _ansatz_rows(state), state.rank * sum(state.format.role_bits)
    )
    if progress is not None:
        progress(state)
    retries_left = retry_budget

    def candidates(st: LiftState) -> Iterator[int]:
        base = system.solve(_rhs_bits(st))
        if base is None:
            return
        yield base
        for combo in range(1, 1 << len(system.kernel)):
            offset = 0
            picked = combo
            while picked:
                low = (picked & -picked).bit_length() - 1
                offset ^= system.kernel[low]
                picked &= picked - 1
            yield base ^ offset

    stack: list[tuple[LiftState, Iterator[int], bool]] = [
        (state, candidates(state), True)
    ]
    while stack:
        st, options, fresh = stack[-1]
        if st.order >= target_order:
            if not st.is_valid():
                raise RuntimeError("refined state fails its modulus")
            if accept is None or accept(st):
                return st
            stack.pop()
            continue
        if not fresh and retries_left == 0:
            stack.pop()
            continue
        solution = next(options, None)
        if solution is None:
            stack.pop()
            continue
        if not fresh:
            retries_left -= 1
        stack[-1] = (st, options, False)
        child = _refined(st, solution)
        if progress is not None:
            progress(child)
        stack.append((child, candidates(child), True))
    return None


def _reconstruct_entry(u: int, modulus: int, bound: int) -> Optional[Fraction]:
    """The unique small fraction congruent to ``u``, if one exists.

    Runs the extended Euclidean algorithm on (modulus, u) until the remainder
    drops to the bound; the remainder/cofactor pair is the candidate
    numerator and denominator.  Rejects even or oversized denominators and
    non-coprime pairs.
    """
    r0, t0 = modulus, 0
    r1, t1 = u % modulus, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        t0, t1 = t1, t0 - q * t1
    num, den = r1, t1
    if den == 0:
        return None
    if den < 0:
        num, den = -num, -den
    if den > bound or den % 2 == 0 or gcd(num, den) != 1:
        return None
    return Fraction(num, den)


def reconstruction_bound(order: int) -> int:
    """Largest numerator and denominator reconstruction accepts at an order."""
    return isqrt((1 << order) // 2)


def reconstruct_coefficient(value: int, order: int) -> Optional[Fraction]:
    """Rational reconstruction of one coefficient mod 2**order."""
    if order < 1:
        raise ValueError("order must be at least 1")
    return _reconstruct_entry(value, 1 << order, reconstruction_bound(order))


def rational_reconstruct(st: LiftState) -> Optional[RationalScheme]:
    """Entrywise rational reconstruction of a state, or None.

    Every coefficient must round-trip to a fraction with numerator and
    denominator at most floor(sqrt(2**order / 2)) and an odd denominator;
    one failing entry rejects the whole state.
    """
    modulus = st.modulus
    bound = reconstruction_bound(st.order)
    elements = []
    for elem in st.coeffs:
        mats = []
        for mat, (rows, cols) in zip(elem, st.format.dims):
            entries = []
            for v in mat:
                f = _reconstruct_entry(v, modulus, bound)
                if f is None:
                    return None
                entries.append(f)
            mats.append(
                tuple(
                    tuple(entries[r * cols + c] for c in range(cols))
                    for r in range(rows)
                )
            )
        elements.append(tuple(mats))
    return RationalScheme.from_elements(st.format, elements)


def verify_rational(rs: RationalScheme) -> bool:
    """Exact Brent check of a rational scheme."""
    return rs.verify()
