"""Graph-matrix shapes, realization, trace-moment Monte Carlo, and the
block-value bound calculus.

A shape is a small template graph: square vertices range over point indices
[m], circles over coordinates [d], and each edge carries a Hermite index.
The realization sums products of scaled Hermite values over injective
per-type vertex labelings. The block-value function B_q bounds the expected
2q-trace by enumerating step-labelings {F,R,S,H} of the edges and charging
vertex, pur, and edge factors per the localized deduction rules.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iter_product

import numpy as np

from . import sampling
from .hermite import EdgeFactorTable, edge_factor_table, hermite_scaled_eval
from .sampling import SampleSet


class UnknownShapeError(ValueError):
    """Shape name not in the catalog."""


class DimensionTooSmallError(ValueError):
    """Requested dimensions cannot index the realized matrix at all."""


SQUARE = "square"
CIRCLE = "circle"


@dataclass(frozen=True)
class Shape:
    """Template graph: vertices with types, boundary tuples, directed edges.

    Edges are listed in traversal order from the U boundary toward the V
    boundary; each is (src, dst, hermite_index).
    """

    name: str
    vertices: tuple[tuple[str, str], ...]
    u_boundary: tuple[str, ...]
    v_boundary: tuple[str, ...]
    edges: tuple[tuple[str, str, int], ...]

    def __post_init__(self):
        ids = {vid for vid, _ in self.vertices}
        if len(ids) != len(self.vertices):
            raise ValueError(f"duplicate vertex ids in shape {self.name}")
        for kind in (kind for _, kind in self.vertices):
            if kind not in (SQUARE, CIRCLE):
                raise ValueError(f"vertex type must be square or circle, got {kind}")
        if not self.u_boundary or not self.v_boundary:
            raise ValueError(f"shape {self.name} must have nonempty boundaries")
        for vid in self.u_boundary + self.v_boundary:
            if vid not in ids:
                raise ValueError(f"boundary vertex {vid} not in vertex list")
        for src, dst, t in self.edges:
            if src not in ids or dst not in ids:
                raise ValueError(f"edge ({src},{dst}) references unknown vertex")
            if not (0 <= t <= 4):
                raise ValueError(f"Hermite index must be in 0..4, got {t}")

    @property
    def kind_of(self) -> dict[str, str]:
        return dict(self.vertices)

    @property
    def is_diagonal(self) -> bool:
        return self.u_boundary == self.v_boundary

    @property
    def has_squares(self) -> bool:
        return any(kind == SQUARE for _, kind in self.vertices)


def _build_catalog() -> tuple[Shape, ...]:
    return (
        Shape(
            name="goe",
            vertices=(("a", CIRCLE), ("b", CIRCLE)),
            u_boundary=("a",),
            v_boundary=("b",),
            edges=(("a", "b", 1),),
        ),
        Shape(
            name="malpha",
            vertices=(("i", SQUARE), ("j", SQUARE), ("a", CIRCLE), ("b", CIRCLE)),
            u_boundary=("i",),
            v_boundary=("j",),
            edges=(("i", "a", 1), ("a", "j", 1), ("i", "b", 1), ("b", "j", 1)),
        ),
        Shape(
            name="mbeta",
            vertices=(("i", SQUARE), ("a", CIRCLE), ("j", SQUARE)),
            u_boundary=("i",),
            v_boundary=("j",),
            edges=(("i", "a", 2), ("a", "j", 2)),
        ),
        Shape(
            name="md1",
            vertices=(("i", SQUARE), ("a", CIRCLE), ("b", CIRCLE)),
            u_boundary=("i",),
            v_boundary=("i",),
            edges=(("i", "a", 2), ("i", "b", 2)),
        ),
        Shape(
            name="md2",
            vertices=(("i", SQUARE), ("a", CIRCLE)),
            u_boundary=("i",),
            v_boundary=("i",),
            edges=(("i", "a", 4),),
        ),
        Shape(
            name="md3",
            vertices=(("i", SQUARE), ("a", CIRCLE)),
            u_boundary=("i",),
            v_boundary=("i",),
            edges=(("i", "a", 2),),
        ),
        Shape(
            name="sumvv",
            vertices=(("a", CIRCLE), ("i", SQUARE), ("b", CIRCLE)),
            u_boundary=("a",),
            v_boundary=("b",),
            edges=(("a", "i", 1), ("i", "b", 1)),
        ),
    )


_CATALOG = _build_catalog()
_BY_NAME = {shape.name: shape for shape in _CATALOG}


def catalog() -> tuple[Shape, ...]:
    """The fixed shape catalog."""
    return _CATALOG


def get_shape(name: str) -> Shape:
    try:
        return _BY_NAME[name]
    except KeyError:
        known = ", ".join(sorted(_BY_NAME))
        raise UnknownShapeError(f"unknown shape {name!r}; catalog: {known}") from None


def default_block_cap() -> int:
    """Default D_V: twice the largest vertex count in the catalog."""
    return 2 * max(len(shape.vertices) for shape in _CATALOG)


def _as_shape(shape: Shape | str) -> Shape:
    if isinstance(shape, str):
        return get_shape(shape)
    if shape.name not in _BY_NAME or _BY_NAME[shape.name] != shape:
        raise UnknownShapeError(f"shape {shape.name!r} is not the catalog shape")
    return shape


def realize(shape: Shape | str, sample: SampleSet) -> np.ndarray:
    """Materialize the graph matrix for a shape from sampled data.

    Sums over injective per-type labelings. All catalog shapes admit a fast
    algebraic path; degenerate dimensions where no injective labeling exists
    come out as exact zero matrices (empty sums), never errors.
    """
    shape = _as_shape(shape)
    v = sample.vectors
    m, d = v.shape
    if d < 1 or (shape.has_squares and m < 1):
        raise DimensionTooSmallError(
            f"shape {shape.name} needs d >= 1 and m >= 1, got (d={d}, m={m})"
        )
    if shape.name == "goe":
        # two-circle shape: realized over a symmetric Gaussian matrix with
        # entry variance 1/d, keyed by the sample's seed
        return sampling.sample_goe(sample.seed, d, 1.0 / d).entries
    if shape.name == "malpha":
        p = v @ v.T
        w = (v * v) @ (v * v).T
        out = p * p - w
        np.fill_diagonal(out, 0.0)
        return out
    if shape.name == "mbeta":
        h2 = hermite_scaled_eval(2, v, d)
        out = h2 @ h2.T
        np.fill_diagonal(out, 0.0)
        return out
    if shape.name == "md1":
        h2 = hermite_scaled_eval(2, v, d)
        row = h2.sum(axis=1)
        return np.diag(row * row - np.einsum("ij,ij->i", h2, h2))
    if shape.name == "md2":
        return np.diag(hermite_scaled_eval(4, v, d).sum(axis=1))
    if shape.name == "md3":
        return np.diag(hermite_scaled_eval(2, v, d).sum(axis=1))
    if shape.name == "sumvv":
        out = v.T @ v
        np.fill_diagonal(out, 0.0)
        return out
    raise UnknownShapeError(f"no realization for shape {shape.name!r}")


@dataclass(frozen=True)
class LabelingRow:
    """One admissible step-labeling and its charged factors."""

    labels: str  # one of F/R/S/H per edge, traversal order
    vertex_factor: float
    pur_factor: float
    edge_factor: float
    product: float


@dataclass(frozen=True)
class BlockValueBreakdown:
    shape_name: str
    d: int
    m: int
    q: int
    dv: int
    rows: tuple[LabelingRow, ...]
    total: float
    candidates: int  # 4^edges, before admissibility filtering

    def row_for(self, labels: str) -> LabelingRow:
        for row in self.rows:
            if row.labels == labels:
                return row
        raise KeyError(f"no admissible labeling {labels!r}")


def _admissible(shape: Shape, labels: tuple[str, ...]) -> bool:
    # A fresh step opens a brand-new vertex; within the block that vertex
    # cannot also be entered by a return/surprise or touched by a
    # high-multiplicity step under another identity (the F-then-R exclusion,
    # generalized). Multiple F arrivals at one vertex stay admissible.
    for vid, _ in shape.vertices:
        f_target = False
        rh_incident = False
        s_target = False
        for (src, dst, _t), lab in zip(shape.edges, labels):
            if dst == vid and lab == "F":
                f_target = True
            if lab in ("R", "H") and vid in (src, dst):
                rh_incident = True
            if dst == vid and lab == "S":
                s_target = True
        if f_target and (rh_incident or s_target):
            return False
    return True


def _vertex_factor(shape: Shape, labels: tuple[str, ...], d: int, m: int) -> float:
    factor = 1.0
    for vid, kind in shape.vertices:
        weight = float(m if kind == SQUARE else d)
        can_first = vid not in shape.u_boundary and not any(
            dst == vid and lab in ("S", "R", "H")
            for (_s, dst, _t), lab in zip(shape.edges, labels)
        )
        can_last = vid not in shape.v_boundary and not any(
            vid in (src, dst) and lab in ("F", "S", "H")
            for (src, dst, _t), lab in zip(shape.edges, labels)
        )
        factor *= weight ** (0.5 * (can_first + can_last))
    return factor


def _pur_factor(
    shape: Shape, labels: tuple[str, ...], q: int, dv: int
) -> float:
    kind_of = shape.kind_of
    exponent = 0
    r_count = 0
    r_touches_square = False
    for (src, dst, _t), lab in zip(shape.edges, labels):
        if lab == "S":
            exponent += 2
        elif lab == "H":
            exponent += 2 if kind_of[dst] == SQUARE else 1
        elif lab == "R":
            r_count += 1
            if SQUARE in (kind_of[src], kind_of[dst]):
                r_touches_square = True
    base = float(2 * q * dv) ** exponent
    # unforced-return surcharge: only labelings with several returns where a
    # square is involved pay the factor 2 (a lone return is forced)
    if r_count >= 2 and r_touches_square:
        base *= 2.0
    return base


def block_value(
    shape: Shape | str,
    d: int,
    m: int,
    q: int,
    dv: int | None = None,
) -> BlockValueBreakdown:
    """Enumerate step-labelings and total the block-value bound B_q.

    Walks all 4^edges label assignments in traversal order, drops the
    inadmissible ones, and charges vertexFactor * purFactor * edgeFactor
    per survivor. Deterministic row order (lexicographic in F,R,S,H).
    """
    shape = _as_shape(shape)
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if shape.has_squares and m < 1:
        raise ValueError(f"shape {shape.name} needs m >= 1, got {m}")
    if dv is None:
        dv = default_block_cap()
    table = edge_factor_table(d, q, dv)
    rows = []
    total = 0.0
    for labels in iter_product("FRSH", repeat=len(shape.edges)):
        if not _admissible(shape, labels):
            continue
        vf = _vertex_factor(shape, labels, d, m)
        pf = _pur_factor(shape, labels, q, dv)
        ef = 1.0
        for (_s, _d2, t), lab in zip(shape.edges, labels):
            ef *= table.factor(t, lab)
        prod = vf * pf * ef
        rows.append(LabelingRow("".join(labels), vf, pf, ef, prod))
        total += prod
    return BlockValueBreakdown(
        shape_name=shape.name,
        d=d,
        m=m,
        q=q,
        dv=dv,
        rows=tuple(rows),
        total=total,
        candidates=4 ** len(shape.edges),
    )


def _matrix_dimension(shape: Shape, d: int, m: int) -> int:
    kind = shape.kind_of[shape.u_boundary[0]]
    return m if kind == SQUARE else d


def _trace_and_norm(shape: Shape, sample: SampleSet, q: int) -> tuple[float, float]:
    """tr((M M^T)^q) and spectral norm of one realized matrix."""
    mat = realize(shape, sample)
    if shape.is_diagonal:
        diag = np.diagonal(mat)
        return float(np.sum(diag ** (2 * q))), float(np.max(np.abs(diag)))
    eigs = np.linalg.eigvalsh(mat)
    return float(np.sum(eigs ** (2 * q))), float(np.max(np.abs(eigs)))


def trace_moment_mc(
    shape: Shape | str, d: int, m: int, q: int, trials: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimate of E tr((M_tau M_tau^T)^q) over fresh samples.

    Returns (mean, standard error). Guarded to matrix dimension <= 2000.
    """
    shape = _as_shape(shape)
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    dim = _matrix_dimension(shape, d, m)
    if dim > 2000:
        raise ValueError(f"matrix dimension {dim} exceeds the dense guard (2000)")
    values = np.empty(trials)
    for t in range(trials):
        s = sampling.sample_vectors(sampling.trial_seed(seed, t), d, max(m, 1))
        values[t], _ = _trace_and_norm(shape, s, q)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / trials**0.5) if trials > 1 else 0.0
    return mean, stderr


@dataclass(frozen=True)
class BlockBoundReport:
    """verify_block_bound outcome: one row per check."""

    shape_name: str
    d: int
    m: int
    q: int
    dv: int
    trials: int
    dimension: int
    block_total: float
    mc_mean: float
    mc_stderr: float
    trace_bound: float  # dimension * B^{2q}
    trace_pass: bool
    max_norm: float
    norm_bound: float  # 1.2 * B
    norm_pass: bool

    @property
    def passed(self) -> bool:
        return self.trace_pass and self.norm_pass

    def rows(self) -> list[tuple[str, bool, float, float]]:
        return [
            ("trace", self.trace_pass, self.mc_mean, self.trace_bound),
            ("norm", self.norm_pass, self.max_norm, self.norm_bound),
        ]


def verify_block_bound(
    shape: Shape | str,
    d: int,
    m: int,
    q: int,
    trials: int,
    seed: int,
    dv: int | None = None,
) -> BlockBoundReport:
    """Check the block-value bound against Monte Carlo evidence.

    (a) mean tr((MM^T)^q) <= dimension * B^{2q} within 3 standard errors;
    (b) every realized spectral norm <= 1.2 * B.
    """
    shape = _as_shape(shape)
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    dim = _matrix_dimension(shape, d, m)
    if dim > 2000:
        raise ValueError(f"matrix dimension {dim} exceeds the dense guard (2000)")
    breakdown = block_value(shape, d, m, q, dv)
    traces = np.empty(trials)
    max_norm = 0.0
    for t in range(trials):
        s = sampling.sample_vectors(sampling.trial_seed(seed, t), d, max(m, 1))
        traces[t], norm = _trace_and_norm(shape, s, q)
        max_norm = max(max_norm, norm)
    mean = float(traces.mean())
    stderr = float(traces.std(ddof=1) / trials**0.5) if trials > 1 else 0.0
    trace_bound = dim * breakdown.total ** (2 * q)
    norm_bound = 1.2 * breakdown.total
    return BlockBoundReport(
        shape_name=shape.name,
        d=d,
        m=m,
        q=q,
        dv=breakdown.dv,
        trials=trials,
        dimension=dim,
        block_total=breakdown.total,
        mc_mean=mean,
        mc_stderr=stderr,
        trace_bound=trace_bound,
        trace_pass=mean <= trace_bound + 3 * stderr,
        max_norm=max_norm,
        norm_bound=norm_bound,
        norm_pass=max_norm <= norm_bound,
    )
