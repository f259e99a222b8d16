"""gl(m)-, R^m- and symmetric-matrix-valued forms, and the eta-split of gl(m).

The involution A -> -eta A^T eta splits gl(m) into the eta-antisymmetric part
(projector ``cartan_project(..., "k")``) and the eta-symmetric part
(projector ``cartan_project(..., "p")``).  Componentwise, for a matrix of
forms gamma,

    (gamma_k)^i_j = 1/2 (gamma^i_j - eta_jp gamma^p_q eta^qi)
    (gamma_p)^i_j = 1/2 (gamma^i_j + eta_jp gamma^p_q eta^qi)

eta is restricted to diagonal +-1 matrices, which is all the signature
independence statements need.
"""

from __future__ import annotations

import numpy as np

from .charts import ChartMismatch
from .forms import DiffForm, wedge, zero_form

__all__ = [
    "Eta", "MatrixForm", "VectorValuedForm", "SymValuedForm",
    "cartan_project", "matrix_wedge", "trace",
]


class Eta:
    """Diagonal metric on R^m with entries +-1; its own inverse."""

    def __init__(self, signature):
        sig = [int(s) for s in signature]
        if any(s not in (1, -1) for s in sig):
            raise ValueError("signature entries must be +1 or -1")
        self.m = len(sig)
        self.diag = np.array(sig, dtype=float)

    @classmethod
    def euclidean(cls, m):
        return cls([1] * m)

    @classmethod
    def lorentzian(cls, m):
        """diag(1, ..., 1, -1): timelike leg last."""
        return cls([1] * (m - 1) + [-1])

    def __getitem__(self, ij):
        i, j = ij
        return self.diag[i] if i == j else 0.0

    def matrix(self):
        return np.diag(self.diag)

    def __repr__(self):
        return f"Eta({[int(s) for s in self.diag]})"


class _ArrayOfForms:
    """Shared plumbing: a numpy object array of DiffForms of uniform degree."""

    def __init__(self, entries):
        entries = np.asarray(entries, dtype=object)
        first = entries.flat[0]
        for f in entries.flat:
            if f.chart is not first.chart:
                raise ChartMismatch("entries on different charts")
            if f.degree != first.degree:
                raise ValueError("entries of non-uniform degree")
        self.entries = entries
        self.chart = first.chart
        self.degree = first.degree

    def __getitem__(self, idx):
        return self.entries[idx]

    def __add__(self, other):
        self._compat(other)
        out = np.empty_like(self.entries)
        for idx in np.ndindex(self.entries.shape):
            out[idx] = self.entries[idx] + other.entries[idx]
        return type(self)(out)

    def __sub__(self, other):
        self._compat(other)
        out = np.empty_like(self.entries)
        for idx in np.ndindex(self.entries.shape):
            out[idx] = self.entries[idx] - other.entries[idx]
        return type(self)(out)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, factor):
        out = np.empty_like(self.entries)
        for idx in np.ndindex(self.entries.shape):
            out[idx] = self.entries[idx].scale(factor)
        return type(self)(out)

    def _compat(self, other):
        if type(other) is not type(self) or other.entries.shape != self.entries.shape:
            raise ValueError("shape mismatch")

    def max_coeff(self, batch, ctx=None):
        return max(f.max_coeff(batch, ctx) for f in self.entries.flat)


class MatrixForm(_ArrayOfForms):
    """An m x m matrix of forms of one degree; houses omega, Omega, R, Q."""

    def __init__(self, entries):
        super().__init__(entries)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("matrix of forms must be square")
        self.m = self.entries.shape[0]

    @classmethod
    def zero(cls, chart, m, degree):
        z = np.empty((m, m), dtype=object)
        for i in range(m):
            for j in range(m):
                z[i, j] = zero_form(chart, degree)
        return cls(z)


class VectorValuedForm(_ArrayOfForms):
    """A length-m vector of forms of one degree; houses theta and T."""

    def __init__(self, entries):
        super().__init__(entries)
        if self.entries.ndim != 1:
            raise ValueError("expected a 1-d array of forms")
        self.m = self.entries.shape[0]


class SymValuedForm(_ArrayOfForms):
    """An m x m symmetric array of forms; symmetry enforced at construction."""

    def __init__(self, entries):
        super().__init__(entries)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("expected a square array of forms")
        self.m = self.entries.shape[0]
        for i in range(self.m):
            for j in range(i):
                if self.entries[i, j] is not self.entries[j, i]:
                    raise ValueError(
                        "symmetric-valued form must share entries (i,j) and (j,i)"
                    )

    @classmethod
    def from_upper(cls, upper):
        """Build from a dict {(i,j) with i<=j: DiffForm}."""
        pairs = sorted(upper)
        m = max(j for _, j in pairs) + 1
        z = np.empty((m, m), dtype=object)
        for (i, j), f in upper.items():
            z[i, j] = f
            z[j, i] = f
        return cls(z)


def cartan_project(gamma: MatrixForm, part: str, eta: Eta) -> MatrixForm:
    """Project a gl(m)-valued form onto the k or p part of the eta-split."""
    if part not in ("k", "p"):
        raise ValueError("part must be 'k' or 'p'")
    m = gamma.m
    if m != eta.m:
        raise ValueError(f"dimension mismatch: form is {m}x{m}, eta is {eta.m}")
    sgn = -1.0 if part == "k" else 1.0
    out = np.empty((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            # eta diagonal: eta_jp gamma^p_q eta^qi = eta_jj eta_ii gamma^j_i
            mirror = gamma[j, i].scale(eta.diag[j] * eta.diag[i] * sgn)
            out[i, j] = (gamma[i, j] + mirror).scale(0.5)
    return MatrixForm(out)


def matrix_wedge(a: MatrixForm, b: MatrixForm) -> MatrixForm:
    """(a ∧ b)^i_j = a^i_p ∧ b^p_j."""
    if a.chart is not b.chart:
        raise ChartMismatch("matrix wedge across charts")
    if a.m != b.m:
        raise ValueError("dimension mismatch")
    m = a.m
    deg = a.degree + b.degree
    out = np.empty((m, m), dtype=object)
    for i in range(m):
        for j in range(m):
            acc = zero_form(a.chart, deg)
            for p in range(m):
                acc = acc + wedge(a[i, p], b[p, j])
            out[i, j] = acc
    return MatrixForm(out)


def trace(gamma: MatrixForm) -> DiffForm:
    out = gamma[0, 0]
    for s in range(1, gamma.m):
        out = out + gamma[s, s]
    return out
