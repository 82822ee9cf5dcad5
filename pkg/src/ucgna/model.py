"""Continuous conic programs with named variable blocks and tagged rows.

A :class:`ConicProgram` is a minimization problem

    min  c'x + c0
    s.t. a_i'x  (>= or =)  r_i        for every tagged row i
         x_B in K_B                   for every block B
         lo <= x <= hi                (optional per-column bounds)

Rows keep the tag they were created with, so the multiplier of a specific
physical constraint (for instance a gas balance row) can be looked up by
name after a solve.  Integer blocks are binaries; the continuous solvers
ignore integrality and the branch-and-bound driver enforces it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

NONNEG = "nonnegative"
FREE = "free"
SOC = "second-order"
CONE_KINDS = (NONNEG, FREE, SOC)

GE = ">="
EQ = "="


class ModelError(ValueError):
    """Raised for malformed programs (duplicate names, unknown variables...)."""


@dataclass(frozen=True, slots=True)
class VarRef:
    block: str
    index: int

    def __add__(self, other):
        return LinearExpr.of(self) + other

    __radd__ = __add__

    def __sub__(self, other):
        return LinearExpr.of(self) - other

    def __rsub__(self, other):
        return other - LinearExpr.of(self)

    def __mul__(self, k):
        return LinearExpr({self: float(k)})

    __rmul__ = __mul__

    def __neg__(self):
        return LinearExpr({self: -1.0})

    def __repr__(self):
        return f"{self.block}[{self.index}]"


class LinearExpr:
    """Affine expression ``sum(coef * var) + constant``."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[VarRef, float] | None = None, constant: float = 0.0):
        self.terms: dict[VarRef, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    @classmethod
    def of(cls, value) -> "LinearExpr":
        if isinstance(value, LinearExpr):
            return value
        if isinstance(value, VarRef):
            return cls({value: 1.0})
        return cls(constant=float(value))

    @classmethod
    def sum(cls, items: Iterable) -> "LinearExpr":
        out = cls()
        for item in items:
            out.add(item)
        return out

    def copy(self) -> "LinearExpr":
        return LinearExpr(self.terms, self.constant)

    def add(self, other, scale: float = 1.0) -> "LinearExpr":
        """In-place ``self += scale * other``."""
        if isinstance(other, VarRef):
            self.terms[other] = self.terms.get(other, 0.0) + scale
        elif isinstance(other, LinearExpr):
            for ref, coef in other.terms.items():
                self.terms[ref] = self.terms.get(ref, 0.0) + scale * coef
            self.constant += scale * other.constant
        else:
            self.constant += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy().add(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().add(other, -1.0)

    def __rsub__(self, other):
        return LinearExpr.of(other).copy().add(self, -1.0)

    def __mul__(self, k):
        k = float(k)
        return LinearExpr({r: k * c for r, c in self.terms.items()}, k * self.constant)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def canonical(self) -> "LinearExpr":
        """Drop zero coefficients; order terms by (block, index)."""
        terms = {r: c for r, c in sorted(self.terms.items(), key=lambda rc: (rc[0].block, rc[0].index)) if c != 0.0}
        return LinearExpr(terms, self.constant)

    def evaluate(self, values: Mapping[VarRef, float]) -> float:
        return self.constant + sum(c * values[r] for r, c in self.terms.items())

    def __repr__(self):
        parts = [f"{c:+g}*{r!r}" for r, c in self.terms.items()]
        return " ".join(parts) + (f" {self.constant:+g}" if self.constant else "")


@dataclass(frozen=True)
class ConeSpec:
    kind: str
    dimension: int = 1

    def __post_init__(self):
        if self.kind not in CONE_KINDS:
            raise ModelError(f"unknown cone kind {self.kind!r}")
        if self.dimension < 1:
            raise ModelError("cone dimension must be positive")
        if self.kind == SOC and self.dimension < 2:
            raise ModelError("second-order cones need dimension >= 2")


NONNEG_CONE = ConeSpec(NONNEG)
FREE_CONE = ConeSpec(FREE)


def soc(dim: int) -> ConeSpec:
    return ConeSpec(SOC, dim)


@dataclass
class Block:
    name: str
    size: int
    cone: ConeSpec
    offset: int
    integer: bool = False
    role: str | None = None

    def __getitem__(self, i: int) -> VarRef:
        if not 0 <= i < self.size:
            raise ModelError(f"index {i} out of range for block {self.name!r} of size {self.size}")
        return VarRef(self.name, i)

    def __iter__(self) -> Iterator[VarRef]:
        return (VarRef(self.name, i) for i in range(self.size))

    def __len__(self):
        return self.size


@dataclass
class Row:
    tag: str
    coeffs: dict[VarRef, float]
    sense: str
    rhs: float


class ConicProgram:
    """Mutable builder for a conic program; frozen by :meth:`to_standard_form`."""

    def __init__(self, name: str = "program"):
        self.name = name
        self.blocks: dict[str, Block] = {}
        self.rows: list[Row] = []
        self._row_index: dict[str, int] = {}
        self.objective = LinearExpr()
        self.bounds: dict[VarRef, tuple[float, float]] = {}
        self.meta: dict = {}
        self._ncols = 0
        self._frozen: StandardForm | None = None

    # -- construction -------------------------------------------------
    def _check_mutable(self):
        if self._frozen is not None:
            raise ModelError("program is frozen; use copy() to derive a new one")

    def add_block(self, name: str, size: int, cone: ConeSpec = NONNEG_CONE, *,
                  integer: bool = False, role: str | None = None) -> Block:
        self._check_mutable()
        if name in self.blocks:
            raise ModelError(f"duplicate block name {name!r}")
        if size < 1:
            raise ModelError(f"block {name!r} must have size >= 1")
        if cone.kind == SOC and size % cone.dimension:
            raise ModelError(f"block {name!r}: size {size} is not a multiple of cone dimension {cone.dimension}")
        if integer and cone.kind != NONNEG:
            raise ModelError("integer blocks must use the nonnegative cone")
        block = Block(name, size, cone, self._ncols, integer, role)
        self.blocks[name] = block
        self._ncols += size
        return block

    def resolve(self, ref: VarRef) -> int:
        block = self.blocks.get(ref.block)
        if block is None or not 0 <= ref.index < block.size:
            raise ModelError(f"unresolved variable {ref!r}")
        return block.offset + ref.index

    def add_row(self, tag: str, expr, sense: str, rhs: float = 0.0) -> int:
        """Append ``expr (sense) rhs``; a constant inside ``expr`` moves to the right side."""
        self._check_mutable()
        if tag in self._row_index:
            raise ModelError(f"duplicate row tag {tag!r}")
        if sense not in (GE, EQ):
            raise ModelError(f"row sense must be '>=' or '=', got {sense!r}")
        expr = LinearExpr.of(expr)
        coeffs = {}
        for ref, coef in expr.terms.items():
            self.resolve(ref)
            if not math.isfinite(coef):
                raise ModelError(f"row {tag!r}: non-finite coefficient on {ref!r}")
            if coef != 0.0:
                coeffs[ref] = float(coef)
        rhs = float(rhs) - expr.constant
        if not math.isfinite(rhs):
            raise ModelError(f"row {tag!r}: non-finite right-hand side")
        self._row_index[tag] = len(self.rows)
        self.rows.append(Row(tag, coeffs, sense, rhs))
        return len(self.rows) - 1

    def add_ge(self, tag, expr, rhs=0.0):
        return self.add_row(tag, expr, GE, rhs)

    def add_le(self, tag, expr, rhs=0.0):
        return self.add_row(tag, -LinearExpr.of(expr), GE, -float(rhs))

    def add_eq(self, tag, expr, rhs=0.0):
        return self.add_row(tag, expr, EQ, rhs)

    def row(self, tag: str) -> Row:
        try:
            return self.rows[self._row_index[tag]]
        except KeyError:
            raise ModelError(f"unknown row tag {tag!r}") from None

    def has_row(self, tag: str) -> bool:
        return tag in self._row_index

    def row_tags(self) -> list[str]:
        return [r.tag for r in self.rows]

    def set_objective(self, expr) -> None:
        self._check_mutable()
        expr = LinearExpr.of(expr)
        for ref in expr.terms:
            self.resolve(ref)
        self.objective = expr.copy()

    def add_objective(self, expr, scale: float = 1.0) -> None:
        self._check_mutable()
        expr = LinearExpr.of(expr)
        for ref in expr.terms:
            self.resolve(ref)
        self.objective.add(expr, scale)

    def set_bounds(self, ref: VarRef, lower: float = -math.inf, upper: float = math.inf) -> None:
        self._check_mutable()
        self.resolve(ref)
        if lower > upper:
            raise ModelError(f"empty bounds on {ref!r}: [{lower}, {upper}]")
        if math.isnan(lower) or math.isnan(upper):
            raise ModelError("NaN bound")
        self.bounds[ref] = (float(lower), float(upper))

    def fix(self, ref: VarRef, value: float) -> None:
        self.set_bounds(ref, value, value)

    @property
    def num_columns(self) -> int:
        return self._ncols

    def columns(self) -> list[VarRef]:
        return [VarRef(b.name, i) for b in self.blocks.values() for i in range(b.size)]

    def copy(self, name: str | None = None) -> "ConicProgram":
        out = ConicProgram(name or self.name)
        for b in self.blocks.values():
            out.add_block(b.name, b.size, b.cone, integer=b.integer, role=b.role)
        for r in self.rows:
            out._row_index[r.tag] = len(out.rows)
            out.rows.append(Row(r.tag, dict(r.coeffs), r.sense, r.rhs))
        out.objective = self.objective.copy()
        out.bounds = dict(self.bounds)
        out.meta = dict(self.meta)
        return out

    # -- export -----------------------------------------------------------
    def to_standard_form(self) -> "StandardForm":
        """Matrix form with columns in block registration order.  Freezes the program."""
        if self._frozen is not None:
            return self._frozen
        n = self._ncols
        rows, cols, vals = [], [], []
        rhs = np.empty(len(self.rows))
        is_eq = np.zeros(len(self.rows), dtype=bool)
        for i, r in enumerate(self.rows):
            for ref, coef in r.coeffs.items():
                rows.append(i)
                cols.append(self.resolve(ref))
                vals.append(coef)
            rhs[i] = r.rhs
            is_eq[i] = r.sense == EQ
        A = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.rows), n))
        A.sum_duplicates()
        A.sort_indices()
        c = np.zeros(n)
        for ref, coef in self.objective.terms.items():
            c[self.resolve(ref)] += coef
        lower = np.full(n, -np.inf)
        upper = np.full(n, np.inf)
        integer = np.zeros(n, dtype=bool)
        cones: list[tuple[str, int, int]] = []
        for b in self.blocks.values():
            sl = slice(b.offset, b.offset + b.size)
            if b.cone.kind == NONNEG:
                lower[sl] = 0.0
                cones.append((NONNEG, b.offset, b.size))
            elif b.cone.kind == SOC:
                for k in range(b.offset, b.offset + b.size, b.cone.dimension):
                    cones.append((SOC, k, b.cone.dimension))
            if b.integer:
                integer[sl] = True
                upper[sl] = 1.0
        for ref, (lo, hi) in self.bounds.items():
            j = self.resolve(ref)
            lower[j] = max(lower[j], lo) if np.isfinite(lower[j]) else lo
            upper[j] = min(upper[j], hi)
            if lower[j] > upper[j]:
                raise ModelError(f"empty bounds on {ref!r}")
        sf = StandardForm(
            A=A, b=rhs, is_eq=is_eq, c=c, c0=self.objective.constant,
            lower=lower, upper=upper, integer=integer, cones=cones,
            columns=self.columns(), row_tags=self.row_tags(),
            blocks={name: (b.offset, b.size) for name, b in self.blocks.items()},
        )
        self._frozen = sf
        return sf

    def to_json(self) -> str:
        return self.to_standard_form().to_json(self)


def _num(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


@dataclass
class StandardForm:
    """``min c'x + c0`` s.t. ``A x (>=|=) b`` row-wise, column cones and bounds.

    ``cones`` lists ``(kind, first_column, dimension)`` for every nonnegative
    run and every second-order cone; free columns are absent.
    """

    A: sp.csr_matrix
    b: np.ndarray
    is_eq: np.ndarray
    c: np.ndarray
    c0: float
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    cones: list
    columns: list
    row_tags: list
    blocks: dict
    _col_index: dict = field(default=None, repr=False)
    _row_index: dict = field(default=None, repr=False)

    @property
    def shape(self):
        return self.A.shape

    def col(self, ref: VarRef) -> int:
        if self._col_index is None:
            self._col_index = {r: j for j, r in enumerate(self.columns)}
        try:
            return self._col_index[ref]
        except KeyError:
            raise ModelError(f"unresolved variable {ref!r}") from None

    def block_slice(self, name: str) -> slice:
        off, size = self.blocks[name]
        return slice(off, off + size)

    def row(self, tag: str) -> int:
        if self._row_index is None:
            self._row_index = {t: i for i, t in enumerate(self.row_tags)}
        try:
            return self._row_index[tag]
        except KeyError:
            raise ModelError(f"unknown row tag {tag!r}") from None

    def soc_layout(self) -> list[tuple[int, int]]:
        return [(start, dim) for kind, start, dim in self.cones if kind == SOC]

    def evaluate_rows(self, x: np.ndarray) -> np.ndarray:
        """Row activities ``A x`` (compare with ``b`` per sense)."""
        return self.A @ x

    def to_json(self, program: ConicProgram | None = None) -> str:
        A = self.A.tocoo()
        order = np.lexsort((A.col, A.row))
        doc = {
            "blocks": [],
            "rows": [{"tag": t, "sense": "=" if e else ">=", "rhs": float(r)}
                     for t, e, r in zip(self.row_tags, self.is_eq, self.b)],
            "objective": {"constant": float(self.c0), "c": [float(v) for v in self.c]},
            "A": {"row": [int(v) for v in A.row[order]], "col": [int(v) for v in A.col[order]],
                  "val": [float(v) for v in A.data[order]]},
            "bounds": [[j, _num(lo), _num(hi)] for j, (lo, hi) in enumerate(zip(self.lower, self.upper))
                       if np.isfinite(lo) or np.isfinite(hi)],
            "cones": [{"kind": k, "start": s, "dim": d} for k, s, d in self.cones],
        }
        for name, (off, size) in self.blocks.items():
            entry = {"name": name, "offset": off, "size": size}
            if program is not None:
                blk = program.blocks[name]
                entry.update(cone=blk.cone.kind, dim=blk.cone.dimension, integer=blk.integer, role=blk.role)
            doc["blocks"].append(entry)
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"


class SolutionError(RuntimeError):
    pass


@dataclass
class Solution:
    """Result of a continuous or mixed-integer solve.

    ``x`` is indexed like the program columns, ``y`` like its rows.  Row
    multipliers follow the minimization convention: for ``a'x >= r`` the
    multiplier is nonnegative, and for any row it equals the derivative of
    the optimal value with respect to ``r``.
    """

    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    objective: float = math.nan
    gap: float = math.nan
    columns: list | None = None
    row_tags: list | None = None
    iterations: int = 0
    info: dict = field(default_factory=dict)
    certificate: np.ndarray | None = None
    _col_index: dict = field(default=None, repr=False)
    _row_index: dict = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def primal(self) -> dict[VarRef, float]:
        return dict(zip(self.columns, map(float, self.x))) if self.x is not None else {}

    @property
    def duals(self) -> dict[str, float]:
        return dict(zip(self.row_tags, map(float, self.y))) if self.y is not None else {}

    def value(self, ref: VarRef) -> float:
        if self._col_index is None:
            self._col_index = {r: j for j, r in enumerate(self.columns)}
        return float(self.x[self._col_index[ref]])

    def values(self, block: Block | str) -> np.ndarray:
        name = block if isinstance(block, str) else block.name
        if self._col_index is None:
            self._col_index = {r: j for j, r in enumerate(self.columns)}
        first = self._col_index[VarRef(name, 0)]
        size = block.size if isinstance(block, Block) else sum(1 for r in self.columns if r.block == name)
        return self.x[first:first + size]

    def dual_of(self, tag: str) -> float:
        return dual_of(self, tag)


def dual_of(solution: Solution, tag: str) -> float:
    """Multiplier of the row tagged ``tag`` (see :class:`Solution` for the sign)."""
    if solution.status != OPTIMAL:
        raise SolutionError(f"duals requested from a {solution.status} solution")
    if solution.y is None:
        raise SolutionError("solution carries no duals")
    if solution._row_index is None:
        solution._row_index = {t: i for i, t in enumerate(solution.row_tags)}
    try:
        return float(solution.y[solution._row_index[tag]])
    except KeyError:
        raise SolutionError(f"unknown row tag {tag!r}") from None


class MatrixBuilder:
    """Assemble a :class:`StandardForm` from column groups and sparse row blocks.

    Used where a program is naturally written in matrix form (dual and
    single-level programs built from the blocks of another program).
    """

    def __init__(self):
        self._groups: dict[str, dict] = {}
        self._n = 0
        self._rows: list[tuple[list, dict, np.ndarray, np.ndarray]] = []

    def add_columns(self, name: str, size: int, *, nonneg=True, soc_runs=(), lower=None, upper=None,
                    cost=None, integer=False) -> slice:
        if name in self._groups:
            raise ModelError(f"duplicate column group {name!r}")
        nn = np.broadcast_to(np.asarray(nonneg, dtype=bool), (size,)).copy()
        lo = np.where(nn, 0.0, -np.inf) if lower is None else np.asarray(lower, dtype=float).copy()
        hi = np.full(size, np.inf) if upper is None else np.asarray(upper, dtype=float).copy()
        lo = np.where(nn, np.maximum(lo, 0.0), lo)
        self._groups[name] = dict(offset=self._n, size=size, nonneg=nn, soc=list(soc_runs), lower=lo, upper=hi,
                                  cost=np.zeros(size) if cost is None else np.asarray(cost, dtype=float),
                                  integer=np.broadcast_to(np.asarray(integer, dtype=bool), (size,)).copy())
        self._n += size
        return slice(self._n - size, self._n)

    def group(self, name: str) -> slice:
        g = self._groups[name]
        return slice(g["offset"], g["offset"] + g["size"])

    def add_rows(self, tags, blocks: dict, rhs, is_eq) -> None:
        """Rows ``sum_g blocks[g] @ x_g (>= or =) rhs``; ``is_eq`` scalar or per row."""
        m = len(tags)
        if m == 0:
            return
        for g, mat in blocks.items():
            if mat.shape != (m, self._groups[g]["size"]):
                raise ModelError(f"row block for {g!r} has shape {mat.shape}, expected "
                                 f"{(m, self._groups[g]['size'])}")
        eq = np.broadcast_to(np.asarray(is_eq, dtype=bool), (m,)).copy()
        self._rows.append((list(tags), blocks, np.asarray(rhs, dtype=float).reshape(m), eq))

    def build(self, c0: float = 0.0) -> StandardForm:
        n = self._n
        mats, rhs, eqs, tags = [], [], [], []
        for t, blocks, r, e in self._rows:
            m = len(t)
            parts = []
            for name, g in self._groups.items():
                mat = blocks.get(name)
                parts.append(sp.csr_matrix((m, g["size"])) if mat is None else sp.csr_matrix(mat))
            mats.append(sp.hstack(parts, format="csr") if parts else sp.csr_matrix((m, 0)))
            rhs.append(r)
            eqs.append(e)
            tags.extend(t)
        A = sp.vstack(mats, format="csr") if mats else sp.csr_matrix((0, n))
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        c = np.concatenate([g["cost"] for g in self._groups.values()]) if n else np.zeros(0)
        lower = np.concatenate([g["lower"] for g in self._groups.values()]) if n else np.zeros(0)
        upper = np.concatenate([g["upper"] for g in self._groups.values()]) if n else np.zeros(0)
        integer = np.concatenate([g["integer"] for g in self._groups.values()]) if n else np.zeros(0, bool)
        upper = np.where(integer, np.minimum(upper, 1.0), upper)
        cones = []
        columns = []
        for name, g in self._groups.items():
            off = g["offset"]
            nn = g["nonneg"]
            k = 0
            while k < g["size"]:
                if nn[k]:
                    e = k
                    while e < g["size"] and nn[e]:
                        e += 1
                    cones.append((NONNEG, off + k, e - k))
                    k = e
                else:
                    k += 1
            for s, d in g["soc"]:
                cones.append((SOC, off + s, d))
            columns.extend(VarRef(name, i) for i in range(g["size"]))
        cones.sort(key=lambda c_: c_[1])
        return StandardForm(A=A, b=np.concatenate(rhs) if rhs else np.zeros(0),
                            is_eq=np.concatenate(eqs) if eqs else np.zeros(0, bool), c=c, c0=float(c0),
                            lower=lower, upper=upper, integer=integer, cones=cones, columns=columns,
                            row_tags=tags,
                            blocks={name: (g["offset"], g["size"]) for name, g in self._groups.items()})
