"""Scalar coefficient fields on a chart, with exact derivatives to order 2.

Fields form an immutable expression DAG.  Evaluation happens through an
:class:`EvalContext`, which memoizes every node per (node, order), so shared
subexpressions (inverse vielbein entries, section components, ...) are
computed once per point batch.  The context has a persistent layer that
survives across evaluations of different forms on the same batch; nodes
opt in with ``persist=True``.
"""

from __future__ import annotations

import numpy as np

from .ad import DomainError, Jet, OrderError, jet_const, jet_coord
from .charts import Chart, ChartMismatch, PointBatch

__all__ = [
    "ScalarField", "ConstField", "CoordField", "EvalContext",
    "const", "coord_fields", "matrix_field_inverse", "matrix_field_det",
    "SingularMatrixError",
]


class SingularMatrixError(ArithmeticError):
    def __init__(self, msg, point=None):
        super().__init__(msg)
        self.point = point


class EvalContext:
    """Evaluation state for one point batch.

    ``persistent`` may be shared between contexts on the same batch to keep
    chart-level fields (coordinates, inverse vielbeins) alive across many
    residual evaluations; ``transient`` is local and dropped with the context.
    """

    def __init__(self, batch: PointBatch, persistent=None):
        self.batch = batch
        self.persistent = persistent if persistent is not None else {}
        self.transient = {}

    def fresh(self):
        """New context on the same batch sharing the persistent layer."""
        return EvalContext(self.batch, self.persistent)

    def lookup(self, field, order):
        key = (id(field), order)
        hit = self.transient.get(key)
        if hit is None:
            hit = self.persistent.get(key)
        return hit

    def store(self, field, order, jet):
        key = (id(field), order)
        if getattr(field, "persist", False):
            self.persistent[key] = jet
        else:
            self.transient[key] = jet


class ScalarField:
    """Base class; subclasses implement ``_eval(ctx, order) -> Jet``."""

    chart: Chart
    persist = False

    def eval(self, ctx: EvalContext, order: int) -> Jet:
        if ctx.batch.chart is not self.chart:
            raise ChartMismatch(
                f"field on chart {self.chart.name!r} evaluated at points of "
                f"{ctx.batch.chart.name!r}"
            )
        hit = ctx.lookup(self, order)
        if hit is not None:
            return hit
        try:
            jet = self._eval(ctx, order)
        except DomainError as err:
            raise DomainError(
                f"{err} (chart {self.chart.name!r}, first offending point: "
                f"{_offender(ctx.batch, err.mask)})", err.mask
            ) from None
        ctx.store(self, order, jet)
        return jet

    def at(self, batch: PointBatch, order=0):
        """Convenience one-shot evaluation."""
        return self.eval(EvalContext(batch), order)

    # arithmetic builds DAG nodes with light constant folding -------------

    def __add__(self, other):
        return fadd(self, _as_field(other, self.chart))

    __radd__ = __add__

    def __sub__(self, other):
        return fadd(self, fneg(_as_field(other, self.chart)))

    def __rsub__(self, other):
        return fadd(_as_field(other, self.chart), fneg(self))

    def __mul__(self, other):
        return fmul(self, _as_field(other, self.chart))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return fdiv(self, _as_field(other, self.chart))

    def __rtruediv__(self, other):
        return fdiv(_as_field(other, self.chart), self)

    def __neg__(self):
        return fneg(self)

    def __pow__(self, p):
        return fpow(self, p)

    def deriv(self, mu):
        """Partial derivative along coordinate index ``mu`` (exact)."""
        return DerivField(self, mu)

    def is_zero(self):
        return isinstance(self, ConstField) and self.value == 0.0


def _offender(batch, mask):
    if mask is None:
        return "unknown"
    idx = int(np.argmax(mask))
    names = batch.chart.coord_names
    vals = batch.values[idx]
    inside = ", ".join(f"{n}={v:.6g}" for n, v in list(zip(names, vals))[:8])
    return "(" + inside + (", ..." if len(names) > 8 else "") + ")"


class ConstField(ScalarField):
    def __init__(self, chart, value):
        self.chart = chart
        self.value = float(value)

    def _eval(self, ctx, order):
        npts = ctx.batch.n
        return jet_const(self.chart.dim, order, np.full(npts, self.value))


class CoordField(ScalarField):
    persist = True

    def __init__(self, chart, index):
        self.chart = chart
        self.index = index

    def _eval(self, ctx, order):
        return jet_coord(self.chart.dim, order, ctx.batch.values, self.index)


class AddField(ScalarField):
    def __init__(self, chart, terms):
        self.chart = chart
        self.terms = tuple(terms)

    def _eval(self, ctx, order):
        out = self.terms[0].eval(ctx, order)
        for t in self.terms[1:]:
            out = out + t.eval(ctx, order)
        return out


class MulField(ScalarField):
    def __init__(self, a, b):
        self.chart = a.chart
        self.a, self.b = a, b

    def _eval(self, ctx, order):
        return self.a.eval(ctx, order) * self.b.eval(ctx, order)


class DivField(ScalarField):
    def __init__(self, a, b):
        self.chart = a.chart
        self.a, self.b = a, b

    def _eval(self, ctx, order):
        return self.a.eval(ctx, order) / self.b.eval(ctx, order)


class NegField(ScalarField):
    def __init__(self, a):
        self.chart = a.chart
        self.a = a

    def _eval(self, ctx, order):
        return -self.a.eval(ctx, order)


class PowField(ScalarField):
    def __init__(self, a, p):
        self.chart = a.chart
        self.a, self.p = a, p

    def _eval(self, ctx, order):
        return self.a.eval(ctx, order) ** self.p


class FuncField(ScalarField):
    """sqrt/sin/cos/tan/exp/ln applied to a field."""

    FUNCS = {"sqrt", "sin", "cos", "tan", "exp", "ln"}

    def __init__(self, name, a):
        if name not in self.FUNCS:
            raise ValueError(f"unknown function {name!r}")
        self.chart = a.chart
        self.name, self.a = name, a

    def _eval(self, ctx, order):
        j = self.a.eval(ctx, order)
        return getattr(j, "log" if self.name == "ln" else self.name)()


class PowFieldField(ScalarField):
    """General power a^b through exp(b ln a)."""

    def __init__(self, a, b):
        self.chart = a.chart
        self.a, self.b = a, b

    def _eval(self, ctx, order):
        return self.a.eval(ctx, order) ** self.b.eval(ctx, order)


class DerivField(ScalarField):
    """Exact partial derivative of a parent field along one coordinate."""

    def __init__(self, parent, mu):
        self.chart = parent.chart
        self.parent = parent
        self.mu = mu

    def _eval(self, ctx, order):
        if order > 1:
            raise OrderError(
                "third-order derivative requested; fields carry exact "
                "derivatives up to total order 2 only"
            )
        return self.parent.eval(ctx, order + 1).partial(self.mu)


class ComposeField(ScalarField):
    """Pullback of a scalar field along a chart map: target field of map."""

    def __init__(self, target_field, chart_map):
        self.chart = chart_map.source
        self.target_field = target_field
        self.map = chart_map

    def _eval(self, ctx, order):
        return self.map.compose(self.target_field, ctx, order)


# -- constructors with constant folding ------------------------------------

def _as_field(x, chart):
    if isinstance(x, ScalarField):
        return x
    return ConstField(chart, x)


def const(chart, value):
    return ConstField(chart, value)


def fneg(a):
    if isinstance(a, ConstField):
        return ConstField(a.chart, -a.value)
    if isinstance(a, NegField):
        return a.a
    return NegField(a)


def fadd(*terms):
    flat = []
    csum = 0.0
    chart = None
    for t in terms:
        chart = chart or t.chart
        if isinstance(t, ConstField):
            csum += t.value
        elif isinstance(t, AddField):
            flat.extend(t.terms)
        else:
            flat.append(t)
    if csum != 0.0:
        flat.append(ConstField(chart, csum))
    if not flat:
        return ConstField(chart, 0.0)
    if len(flat) == 1:
        return flat[0]
    return AddField(chart, flat)


def fmul(a, b):
    if isinstance(a, ConstField):
        if a.value == 0.0:
            return a
        if a.value == 1.0:
            return b
        if a.value == -1.0:
            return fneg(b)
        if isinstance(b, ConstField):
            return ConstField(a.chart, a.value * b.value)
    if isinstance(b, ConstField):
        return fmul(b, a)
    return MulField(a, b)


def fdiv(a, b):
    if isinstance(b, ConstField):
        if b.value == 0.0:
            raise ZeroDivisionError("division by constant zero field")
        return fmul(ConstField(b.chart, 1.0 / b.value), a)
    if isinstance(a, ConstField) and a.value == 0.0:
        return a
    return DivField(a, b)


def fpow(a, p):
    if isinstance(p, ScalarField):
        if isinstance(p, ConstField):
            return fpow(a, p.value)
        return PowFieldField(a, p)
    if isinstance(a, ConstField):
        return ConstField(a.chart, a.value ** p)
    if p == 1:
        return a
    if p == 0:
        return ConstField(a.chart, 1.0)
    return PowField(a, p)


def ffunc(name, a):
    return FuncField(name, a)


def coord_fields(chart):
    """All coordinate functions of a chart, as persistent fields."""
    return [CoordField(chart, i) for i in range(chart.dim)]


# -- matrix fields ----------------------------------------------------------

def _minor(mat, i, j):
    return [row[:j] + row[j + 1 :] for k, row in enumerate(mat) if k != i]


def _det(mat):
    m = len(mat)
    if m == 1:
        return mat[0][0]
    if m == 2:
        return fadd(fmul(mat[0][0], mat[1][1]), fneg(fmul(mat[0][1], mat[1][0])))
    terms = []
    for j in range(m):
        if mat[0][j].is_zero():
            continue
        t = fmul(mat[0][j], _det(_minor(mat, 0, j)))
        terms.append(t if j % 2 == 0 else fneg(t))
    if not terms:
        return ConstField(mat[0][0].chart, 0.0)
    return fadd(*terms)


def matrix_field_det(mat):
    """Determinant of a square matrix of ScalarFields (Laplace expansion)."""
    mat = [list(row) for row in mat]
    return _det(mat)


class _GuardedDet(ScalarField):
    """Determinant that raises SingularMatrixError when it vanishes."""

    persist = True

    def __init__(self, det):
        self.chart = det.chart
        self.det = det

    def _eval(self, ctx, order):
        j = self.det.eval(ctx, order)
        if np.any(j.val == 0.0):
            raise SingularMatrixError(
                "singular matrix field",
                point=_offender(ctx.batch, j.val == 0.0),
            )
        return j


def matrix_field_inverse(mat):
    """Inverse of an m x m matrix of ScalarFields via the adjugate.

    Entries stay differentiable to order 2 wherever the determinant does not
    vanish; a zero determinant at any evaluated point raises
    SingularMatrixError naming the point.
    """
    mat = [list(row) for row in mat]
    m = len(mat)
    for row in mat:
        if len(row) != m:
            raise ValueError("matrix must be square")
    det = _GuardedDet(matrix_field_det(mat))
    inv = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            cof = _det(_minor(mat, j, i))
            if (i + j) % 2 == 1:
                cof = fneg(cof)
            entry = fdiv(cof, det)
            entry.persist = True
            inv[i][j] = entry
    return inv
