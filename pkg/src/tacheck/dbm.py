"""Difference bound matrices over real-valued clocks with integer constants.

Entry ``(i, j)`` bounds ``x_i - x_j``; index 0 is the constant-zero clock.
Every :class:`Dbm` handed out by this module is canonical (shortest-path
closed) or marked empty.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    INF,
    LE_ZERO,
    LT_ZERO,
    Bound,
    ClockConstraint,
    ModelError,
    raw_add,
    raw_bound,
    raw_negate,
)


class DimensionError(ModelError):
    pass


class Dbm:
    __slots__ = ("dim", "m", "empty", "_hash")

    def __init__(self, dim: int, m: Sequence[int], empty: bool = False) -> None:
        self.dim = dim
        self.m = tuple(m)
        self.empty = empty
        self._hash: int | None = None

    # -- construction -----------------------------------------------------

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence[int | Bound]]) -> Dbm:
        """Canonicalize an arbitrary square matrix of raw ints or Bounds."""
        dim = len(rows)
        flat = []
        for row in rows:
            if len(row) != dim:
                raise DimensionError("matrix must be square")
            flat.extend(b.raw if isinstance(b, Bound) else b for b in row)
        return canonicalize(cls(dim, flat))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dbm):
            return NotImplemented
        if self.empty or other.empty:
            return self.empty == other.empty and self.dim == other.dim
        return self.dim == other.dim and self.m == other.m

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.dim, True) if self.empty else (self.dim, self.m))
        return self._hash

    def __repr__(self) -> str:
        return f"Dbm({render(self)})"

    def bound(self, i: int, j: int) -> Bound:
        return Bound.from_raw(self.m[i * self.dim + j])

    def raw(self, i: int, j: int) -> int:
        return self.m[i * self.dim + j]

    @property
    def clocks(self) -> int:
        return self.dim - 1


def _empty(dim: int) -> Dbm:
    return Dbm(dim, [LT_ZERO] * (dim * dim), empty=True)


def _close(m: list[int], dim: int) -> bool:
    """Floyd-Warshall in place; False when a negative cycle exists."""
    for k in range(dim):
        rk = k * dim
        for i in range(dim):
            ik = m[i * dim + k]
            if ik == INF:
                continue
            ri = i * dim
            for j in range(dim):
                kj = m[rk + j]
                if kj == INF:
                    continue
                s = raw_add(ik, kj)
                if s < m[ri + j]:
                    m[ri + j] = s
        if m[k * dim + k] < LE_ZERO:
            return False
    return all(m[i * dim + i] >= LE_ZERO for i in range(dim))


def canonicalize(z: Dbm) -> Dbm:
    if z.empty:
        return z
    m = list(z.m)
    for i in range(z.dim):
        if m[i * z.dim + i] > LE_ZERO:
            m[i * z.dim + i] = LE_ZERO
    if not _close(m, z.dim):
        return _empty(z.dim)
    return Dbm(z.dim, m)


def init_zero(n: int) -> Dbm:
    """All ``n`` clocks equal to zero."""
    if n < 0:
        raise DimensionError("clock count must be non-negative")
    return Dbm(n + 1, [LE_ZERO] * ((n + 1) * (n + 1)))


def universe(n: int) -> Dbm:
    """Every non-negative valuation of ``n`` clocks."""
    dim = n + 1
    m = [INF] * (dim * dim)
    for j in range(dim):
        m[j] = LE_ZERO
        m[j * dim + j] = LE_ZERO
    return Dbm(dim, m)


def up(z: Dbm) -> Dbm:
    if z.empty:
        return z
    m = list(z.m)
    for i in range(1, z.dim):
        m[i * z.dim] = INF
    return Dbm(z.dim, m)


def down(z: Dbm) -> Dbm:
    """Valuations that reach ``z`` by letting time pass."""
    if z.empty:
        return z
    m = list(z.m)
    for j in range(1, z.dim):
        m[j] = LE_ZERO
    _close(m, z.dim)
    return Dbm(z.dim, m)


def constrain(z: Dbm, i: int, j: int, raw: int) -> Dbm:
    """Intersect with ``x_i - x_j`` bounded by the packed bound ``raw``."""
    dim = z.dim
    if i >= dim or j >= dim:
        raise DimensionError(f"clock index out of range for dimension {dim}")
    if z.empty or raw == INF:
        return z
    if raw_add(raw, z.m[j * dim + i]) < LE_ZERO:
        return _empty(dim)
    if raw >= z.m[i * dim + j]:
        return z
    m = list(z.m)
    m[i * dim + j] = raw
    for k in range(dim):
        ki = m[k * dim + i]
        if ki == INF:
            continue
        via = raw_add(ki, raw)
        for l in range(dim):
            s = raw_add(via, m[j * dim + l])
            if s < m[k * dim + l]:
                m[k * dim + l] = s
    for k in range(dim):
        if m[k * dim + k] < LE_ZERO:
            return _empty(dim)
    return Dbm(dim, m)


def and_constraint(z: Dbm, c: ClockConstraint) -> Dbm:
    return constrain(z, c.left, c.right, c.bound.raw)


def and_all(z: Dbm, cs: Iterable[ClockConstraint]) -> Dbm:
    for c in cs:
        z = constrain(z, c.left, c.right, c.bound.raw)
        if z.empty:
            break
    return z


def intersect(a: Dbm, b: Dbm) -> Dbm:
    if a.dim != b.dim:
        raise DimensionError("dimension mismatch")
    if a.empty:
        return a
    if b.empty:
        return b
    m = [min(x, y) for x, y in zip(a.m, b.m)]
    if not _close(m, a.dim):
        return _empty(a.dim)
    return Dbm(a.dim, m)


def assign(z: Dbm, x: int, v: int) -> Dbm:
    """Set clock ``x`` to the constant ``v``."""
    if v < 0:
        raise ModelError("clock value must be non-negative")
    dim = z.dim
    if not 0 < x < dim:
        raise DimensionError(f"clock {x} out of range for dimension {dim}")
    if z.empty:
        return z
    m = list(z.m)
    pos, neg = raw_bound(v, True), raw_bound(-v, True)
    for j in range(dim):
        m[x * dim + j] = raw_add(pos, z.m[j])
        m[j * dim + x] = raw_add(z.m[j * dim], neg)
    m[x * dim + x] = LE_ZERO
    return Dbm(dim, m)


def free(z: Dbm, x: int) -> Dbm:
    """Forget every constraint on clock ``x`` (keeping ``x >= 0``)."""
    dim = z.dim
    if z.empty:
        return z
    m = list(z.m)
    for j in range(dim):
        if j != x:
            m[x * dim + j] = INF
            m[j * dim + x] = z.m[j * dim]
    return Dbm(dim, m)


def subset(a: Dbm, b: Dbm) -> bool:
    if a.dim != b.dim:
        raise DimensionError("dimension mismatch")
    if a.empty:
        return True
    if b.empty:
        return False
    return all(x <= y for x, y in zip(a.m, b.m))


def extrapolate(z: Dbm, maxconst: Sequence[int]) -> Dbm:
    """Classic max-constant widening; ``maxconst[0]`` is ignored (zero clock)."""
    if z.empty:
        return z
    dim = z.dim
    if len(maxconst) != dim:
        raise DimensionError("one max constant per clock (index 0 included)")
    bounds = [0] + [int(c) for c in maxconst[1:]]
    m = list(z.m)
    changed = False
    for i in range(dim):
        for j in range(dim):
            if i == j:
                continue
            r = m[i * dim + j]
            if r == INF:
                continue
            if i != 0 and r > raw_bound(bounds[i], True):
                m[i * dim + j] = INF
                changed = True
            elif r < raw_bound(-bounds[j], False):
                m[i * dim + j] = raw_bound(-bounds[j], False)
                changed = True
    if not changed:
        return z
    _close(m, dim)
    return Dbm(dim, m)


# -- set algebra used for deadlock and formula evaluation --------------------


def subtract(a: Dbm, b: Dbm) -> list[Dbm]:
    """Disjoint zones whose union is ``a`` minus ``b``."""
    if a.dim != b.dim:
        raise DimensionError("dimension mismatch")
    if a.empty:
        return []
    if b.empty or intersect(a, b).empty:
        return [a]
    out = []
    rest = a
    dim = a.dim
    for i in range(dim):
        for j in range(dim):
            if i == j:
                continue
            r = b.m[i * dim + j]
            if r == INF or r >= rest.m[i * dim + j]:
                continue
            piece = constrain(rest, j, i, raw_negate(r))
            if not piece.empty:
                out.append(piece)
            rest = constrain(rest, i, j, r)
            if rest.empty:
                return out
    return out


def subtract_all(zones: list[Dbm], b: Dbm) -> list[Dbm]:
    out: list[Dbm] = []
    for z in zones:
        out.extend(subtract(z, b))
    return out


# -- concrete valuations ------------------------------------------------------


def _sat(diff: Fraction, raw: int) -> bool:
    if raw == INF:
        return True
    c = raw >> 1
    return diff <= c if raw & 1 else diff < c


def contains(z: Dbm, v: Sequence[Fraction | int]) -> bool:
    """Membership of valuation ``v`` (``v[0]`` must be 0)."""
    if z.empty:
        return False
    dim = z.dim
    if len(v) != dim:
        raise DimensionError("valuation length must equal dimension")
    return all(
        _sat(Fraction(v[i]) - Fraction(v[j]), z.m[i * dim + j])
        for i in range(dim)
        for j in range(dim)
        if i != j
    )


def delay_interval(
    z: Dbm, v: Sequence[Fraction]
) -> tuple[Fraction, bool, Fraction | None, bool] | None:
    """Delays ``d >= 0`` with ``v + d`` in ``z`` as ``(lo, lo_strict, hi, hi_strict)``.

    ``hi`` is None when unbounded.  Returns None when no delay works.
    """
    if z.empty:
        return None
    dim = z.dim
    for i in range(1, dim):
        for j in range(1, dim):
            if i != j and not _sat(Fraction(v[i]) - Fraction(v[j]), z.m[i * dim + j]):
                return None
    lo, lo_strict = Fraction(0), False
    hi: Fraction | None = None
    hi_strict = False
    for i in range(1, dim):
        r = z.m[i * dim]  # v_i + d (<|<=) c
        if r != INF:
            cand = Fraction(r >> 1) - v[i]
            strict = not (r & 1)
            if hi is None or cand < hi or (cand == hi and strict):
                hi, hi_strict = cand, strict
        r = z.m[i]  # -(v_i + d) (<|<=) c  ->  d (>|>=) -c - v_i
        cand = Fraction(-(r >> 1)) - v[i]
        strict = not (r & 1)
        if cand > lo or (cand == lo and strict):
            lo, lo_strict = cand, strict
    if hi is not None:
        if hi < lo or (hi == lo and (lo_strict or hi_strict)):
            return None
    return lo, lo_strict, hi, hi_strict


# -- rendering ----------------------------------------------------------------


def _fmt_lower(r: int) -> tuple[int, str]:
    # entry (0, i) bounds -x_i, i.e. a lower bound on x_i
    return -(r >> 1), "<=" if r & 1 else "<"


def render(z: Dbm, names: Sequence[str] | None = None) -> str:
    """Conjunction string, e.g. ``0<=x<=5 && x-y<=2`` (ordered by clock index)."""
    if z.empty:
        return "false"
    dim = z.dim
    names = list(names) if names is not None else [f"x{i}" for i in range(1, dim)]
    parts = []
    for i in range(1, dim):
        n = names[i - 1]
        lo_v, lo_op = _fmt_lower(z.m[i])
        hi = z.m[i * dim]
        if hi == INF:
            parts.append(f"{n}>={lo_v}" if lo_op == "<=" else f"{n}>{lo_v}")
        elif hi & 1 and lo_op == "<=" and (hi >> 1) == lo_v:
            parts.append(f"{n}=={lo_v}")
        else:
            hi_op = "<=" if hi & 1 else "<"
            parts.append(f"{lo_v}{lo_op}{n}{hi_op}{hi >> 1}")
    for i in range(1, dim):
        for j in range(1, dim):
            if i == j:
                continue
            r = z.m[i * dim + j]
            if r == INF or r >= raw_add(z.m[i * dim], z.m[j]):
                continue
            parts.append(f"{names[i - 1]}-{names[j - 1]}{'<=' if r & 1 else '<'}{r >> 1}")
    return " && ".join(parts) if parts else "true"


# dbm_-prefixed names for the same operations.
dbm_init_zero = init_zero
dbm_canonicalize = canonicalize
dbm_up = up
dbm_and = and_constraint
dbm_assign = assign
dbm_subset = subset
dbm_extrapolate = extrapolate
