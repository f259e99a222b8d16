"""Exterior algebra of differential forms and vector fields over a chart.

Forms are stored sparsely: a degree-k form is a map from strictly increasing
k-tuples of coordinate indices to ScalarField coefficients.  Missing keys are
zero.  Equality of forms is only ever checked numerically (max coefficient
residual over a point batch); coefficient fields have no canonical shape.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from . import fields as F
from .charts import Chart, ChartMismatch, PointBatch
from .fields import ComposeField, DerivField, EvalContext, ScalarField

__all__ = [
    "DiffForm", "VectorField", "ChartMap", "SectionMap",
    "wedge", "exterior_derivative", "interior_product", "lie_bracket",
    "pullback", "zero_form", "form_residual", "coordinate_one_form",
]


def _merge_sign(k1, k2):
    """Sign of sorting the concatenation of two increasing index tuples.

    Returns (sign, merged) or (0, None) when an index repeats.
    """
    merged = []
    sign = 1
    i = j = 0
    n1, n2 = len(k1), len(k2)
    while i < n1 and j < n2:
        a, b = k1[i], k2[j]
        if a == b:
            return 0, None
        if a < b:
            merged.append(a)
            i += 1
        else:
            # b jumps over the remaining n1-i entries of k1
            if (n1 - i) % 2 == 1:
                sign = -sign
            merged.append(b)
            j += 1
    merged.extend(k1[i:])
    merged.extend(k2[j:])
    return sign, tuple(merged)


class DiffForm:
    """A degree-k exterior form with sparse ScalarField coefficients."""

    def __init__(self, chart: Chart, degree: int, coeffs=None):
        if degree < 0:
            raise ValueError("negative degree")
        self.chart = chart
        self.degree = degree
        self.coeffs = {}
        if coeffs:
            for key, f in coeffs.items():
                key = tuple(key)
                if len(key) != degree or list(key) != sorted(set(key)):
                    raise ValueError(f"bad multi-index {key} for degree {degree}")
                if not f.is_zero():
                    self.coeffs[key] = f

    # -- linear structure ---------------------------------------------------

    def __add__(self, other):
        self._compat(other)
        out = dict(self.coeffs)
        for key, f in other.coeffs.items():
            out[key] = F.fadd(out[key], f) if key in out else f
        return DiffForm(self.chart, self.degree, out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, factor):
        """Multiply by a number or a ScalarField (0-form)."""
        if isinstance(factor, ScalarField):
            out = {k: F.fmul(factor, f) for k, f in self.coeffs.items()}
        else:
            if factor == 0.0:
                return zero_form(self.chart, self.degree)
            c = F.const(self.chart, factor)
            out = {k: F.fmul(c, f) for k, f in self.coeffs.items()}
        return DiffForm(self.chart, self.degree, out)

    def _compat(self, other):
        if self.chart is not other.chart:
            raise ChartMismatch("forms on different charts")
        if self.degree != other.degree:
            raise ValueError("forms of different degree")

    # -- evaluation -----------------------------------------------------------

    def max_coeff(self, batch: PointBatch, ctx: EvalContext | None = None):
        """Max absolute coefficient value over all keys and sample points."""
        if ctx is None:
            ctx = EvalContext(batch)
        worst = 0.0
        for f in self.coeffs.values():
            local = ctx.fresh()
            jet = f.eval(local, 0)
            worst = max(worst, float(np.max(np.abs(jet.val))) if jet.val.size else 0.0)
        return worst

    def coeff(self, key):
        key = tuple(key)
        return self.coeffs.get(key, F.const(self.chart, 0.0))

    def apply(self, vector_fields):
        """Multilinear evaluation on k vector fields, as a ScalarField.

        Independent of the wedge/contraction fast paths: expands the
        determinant of components directly.
        """
        k = self.degree
        if len(vector_fields) != k:
            raise ValueError("wrong number of arguments")
        if k == 0:
            (key,) = [()]
            return self.coeffs.get(key, F.const(self.chart, 0.0))
        terms = []
        for key, f in self.coeffs.items():
            for perm in permutations(range(k)):
                sign = _perm_sign(perm)
                prod = f
                skip = False
                for slot, which in enumerate(perm):
                    comp = vector_fields[which].components[key[slot]]
                    if comp.is_zero():
                        skip = True
                        break
                    prod = F.fmul(prod, comp)
                if skip:
                    continue
                terms.append(prod if sign > 0 else F.fneg(prod))
        if not terms:
            return F.const(self.chart, 0.0)
        return F.fadd(*terms)

    def __repr__(self):
        return (f"DiffForm(chart={self.chart.name!r}, degree={self.degree}, "
                f"terms={len(self.coeffs)})")


def _perm_sign(perm):
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            if seen[i] > seen[j]:
                sign = -sign
    return sign


def zero_form(chart, degree):
    return DiffForm(chart, degree, {})


def coordinate_one_form(chart, index):
    """dx^index."""
    return DiffForm(chart, 1, {(index,): F.const(chart, 1.0)})


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    """Exterior product; degree overflow yields the zero form."""
    if a.chart is not b.chart:
        raise ChartMismatch("wedge of forms on different charts")
    deg = a.degree + b.degree
    if deg > a.chart.dim:
        return zero_form(a.chart, deg)
    out = {}
    for k1, f1 in a.coeffs.items():
        for k2, f2 in b.coeffs.items():
            sign, key = _merge_sign(k1, k2)
            if sign == 0:
                continue
            term = F.fmul(f1, f2)
            if sign < 0:
                term = F.fneg(term)
            out[key] = F.fadd(out[key], term) if key in out else term
    return DiffForm(a.chart, deg, out)


def exterior_derivative(a: DiffForm) -> DiffForm:
    """d, as an antiderivation of degree +1 (exact coefficient derivatives)."""
    chart = a.chart
    deg = a.degree + 1
    if deg > chart.dim:
        return zero_form(chart, deg)
    out = {}
    for key, f in a.coeffs.items():
        for mu in range(chart.dim):
            if mu in key:
                continue
            pos = sum(1 for k in key if k < mu)
            new = key[:pos] + (mu,) + key[pos:]
            term = DerivField(f, mu)
            if pos % 2 == 1:
                term = F.fneg(term)
            out[new] = F.fadd(out[new], term) if new in out else term
    return DiffForm(chart, deg, out)


def interior_product(x: "VectorField", a: DiffForm) -> DiffForm:
    """x ⌟ a.  Contraction of a 0-form is the zero form."""
    if x.chart is not a.chart:
        raise ChartMismatch("interior product across charts")
    if a.degree == 0:
        return zero_form(a.chart, 0)
    out = {}
    for key, f in a.coeffs.items():
        for pos, mu in enumerate(key):
            comp = x.components[mu]
            if comp.is_zero():
                continue
            term = F.fmul(comp, f)
            if pos % 2 == 1:
                term = F.fneg(term)
            new = key[:pos] + key[pos + 1 :]
            out[new] = F.fadd(out[new], term) if new in out else term
    return DiffForm(a.chart, a.degree - 1, out)


class VectorField:
    """A vector field: one ScalarField component per chart coordinate."""

    def __init__(self, chart: Chart, components):
        components = list(components)
        if len(components) != chart.dim:
            raise ValueError("component count must equal chart dimension")
        self.chart = chart
        self.components = components

    @classmethod
    def sparse(cls, chart, entries):
        """Build from {coordinate index: field}; other components are zero."""
        comps = [F.const(chart, 0.0)] * chart.dim
        for idx, f in entries.items():
            comps[idx] = F.fadd(comps[idx], f) if not comps[idx].is_zero() else f
        return cls(chart, comps)

    def __add__(self, other):
        if self.chart is not other.chart:
            raise ChartMismatch("vector fields on different charts")
        return VectorField(
            self.chart,
            [F.fadd(a, b) for a, b in zip(self.components, other.components)],
        )

    def scale(self, factor):
        if not isinstance(factor, ScalarField):
            factor = F.const(self.chart, factor)
        return VectorField(self.chart, [F.fmul(factor, c) for c in self.components])

    def __neg__(self):
        return VectorField(self.chart, [F.fneg(c) for c in self.components])

    def apply(self, f: ScalarField) -> ScalarField:
        """Directional derivative X · f."""
        terms = []
        for mu, comp in enumerate(self.components):
            if comp.is_zero():
                continue
            terms.append(F.fmul(comp, DerivField(f, mu)))
        if not terms:
            return F.const(self.chart, 0.0)
        return F.fadd(*terms)


def lie_bracket(x: VectorField, y: VectorField) -> VectorField:
    """[X, Y], with components X·Y^mu − Y·X^mu."""
    if x.chart is not y.chart:
        raise ChartMismatch("bracket of fields on different charts")
    comps = []
    for mu in range(x.chart.dim):
        comps.append(F.fadd(x.apply(y.components[mu]),
                            F.fneg(y.apply(x.components[mu]))))
    return VectorField(x.chart, comps)


# -- chart maps and pullback ---------------------------------------------------


class ChartMap:
    """A smooth map between charts, one component field per target coordinate.

    Components must be differentiable to the order demanded by use: pullback
    of a form needs order 1 of the components appearing in its keys, exterior
    derivatives after pullback need one more.
    """

    def __init__(self, source: Chart, target: Chart, components):
        components = list(components)
        if len(components) != target.dim:
            raise ValueError("need one component per target coordinate")
        for f in components:
            if f.chart is not source:
                raise ChartMismatch("component not on the source chart")
        self.source = source
        self.target = target
        self.components = components
        self._jac = {}

    def component(self, name_or_index):
        idx = name_or_index if isinstance(name_or_index, int) \
            else self.target.index(name_or_index)
        return self.components[idx]

    def jacobian_entry(self, a, mu):
        """Field d(component a)/dx^mu on the source chart, built lazily."""
        key = (a, mu)
        if key not in self._jac:
            self._jac[key] = DerivField(self.components[a], mu)
        return self._jac[key]

    # -- composed evaluation (used by ComposeField) -------------------------

    def _target_ctx(self, ctx: EvalContext, order: int):
        key = (id(self), "tctx", order)
        hit = ctx.persistent.get(key)
        if hit is not None:
            return hit
        vals = np.stack(
            [c.eval(ctx, 0).val for c in self.components], axis=1
        )
        tctx = EvalContext(PointBatch(self.target, vals))
        ctx.persistent[key] = tctx
        return tctx

    def _component_jets(self, ctx, order):
        key = (id(self), "cjets", order)
        hit = ctx.persistent.get(key)
        if hit is not None:
            return hit
        jets = [c.eval(ctx, order) for c in self.components]
        grads = hesses = None
        if order >= 1:
            grads = np.stack([j.grad for j in jets], axis=1)  # (N, nt, ns)
            if order >= 2:
                hesses = np.stack([j.hess for j in jets], axis=1)  # (N, nt, ns, ns)
        out = (jets, grads, hesses)
        ctx.persistent[key] = out
        return out

    def compose(self, target_field: ScalarField, ctx: EvalContext, order: int):
        """Jet of target_field ∘ self over the source batch (chain rule)."""
        tctx = self._target_ctx(ctx, order)
        tj = target_field.eval(tctx, order)
        ns = self.source.dim
        if order == 0:
            from .ad import Jet
            return Jet(ns, 0, tj.val.copy(), None, None)
        jets, G, H = self._component_jets(ctx, order)
        from .ad import Jet
        grad = np.einsum("na,nas->ns", tj.grad, G)
        hess = None
        if order >= 2:
            hess = np.einsum("nab,nas,nbt->nst", tj.hess, G, G)
            hess += np.einsum("na,nast->nst", tj.grad, H)
        return Jet(ns, order, tj.val.copy(), grad, hess)


class SectionMap(ChartMap):
    """A chart map that fixes every source coordinate shared with the target.

    Shared coordinates are matched by name; their components are forced to be
    the corresponding coordinate functions.
    """

    @classmethod
    def build(cls, source: Chart, target: Chart, fiber_components: dict):
        comps = []
        for name in target.coord_names:
            if name in source.coord_names:
                comps.append(F.CoordField(source, source.index(name)))
            else:
                comps.append(fiber_components[name])
        return cls(source, target, comps)


def pullback(phi: ChartMap, a: DiffForm) -> DiffForm:
    """phi^* a, computed from exact partials of phi's components."""
    if a.chart is not phi.target:
        raise ChartMismatch("form does not live on the map's target chart")
    src = phi.source
    k = a.degree
    if k == 0:
        out = {(): ComposeField(a.coeff(()), phi)} if a.coeffs else {}
        return DiffForm(src, 0, out)
    if k > src.dim:
        return zero_form(src, k)
    from itertools import combinations
    out = {}
    src_keys = list(combinations(range(src.dim), k))
    for key, f in a.coeffs.items():
        fc = ComposeField(f, phi)
        for skey in src_keys:
            det = _jacobian_minor(phi, key, skey)
            if det.is_zero():
                continue
            term = F.fmul(fc, det)
            out[skey] = F.fadd(out[skey], term) if skey in out else term
    return DiffForm(src, k, out)


def _jacobian_minor(phi, tkey, skey):
    """det[ d phi^{tkey_i} / dx^{skey_j} ] as a field on the source chart."""
    k = len(tkey)
    mat = [[phi.jacobian_entry(tkey[i], skey[j]) for j in range(k)] for i in range(k)]
    terms = []
    for perm in permutations(range(k)):
        sign = _perm_sign(perm)
        prod = mat[0][perm[0]]
        for i in range(1, k):
            prod = F.fmul(prod, mat[i][perm[i]])
        terms.append(prod if sign > 0 else F.fneg(prod))
    return F.fadd(*terms)


def form_residual(a: DiffForm, b: DiffForm, batch: PointBatch,
                  ctx: EvalContext | None = None) -> float:
    """Max coefficient deviation between two forms over a batch."""
    return (a - b).max_coeff(batch, ctx)
