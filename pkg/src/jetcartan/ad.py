"""Batched truncated Taylor (jet) arithmetic up to second order.

A :class:`Jet` holds the value, gradient and Hessian of a function evaluated
at a batch of points, with derivatives taken with respect to the ``n``
coordinates of one chart.  Arithmetic on jets implements the exact chain
rule, so first and second partials of any composite expression are exact to
machine rounding; no finite differences are involved anywhere.

Order is explicit: a jet of order 0 carries only values, order 1 adds the
gradient, order 2 the (symmetric) Hessian.  Requesting a derivative that was
not propagated raises ``OrderError``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Jet", "DomainError", "OrderError", "jet_const", "jet_coord"]


class DomainError(ValueError):
    """A field was evaluated outside its domain (pole, branch cut, ...)."""

    def __init__(self, msg, mask=None):
        super().__init__(msg)
        self.mask = mask


class OrderError(RuntimeError):
    """More derivatives were requested than the jet carries."""


def _outer(a, b):
    # (N,n),(N,n) -> (N,n,n)
    return np.einsum("ni,nj->nij", a, b)


class Jet:
    __slots__ = ("n", "order", "val", "grad", "hess")

    def __init__(self, n, order, val, grad=None, hess=None):
        self.n = n
        self.order = order
        self.val = val
        self.grad = grad
        self.hess = hess

    # -- helpers ----------------------------------------------------------

    @property
    def npoints(self):
        return self.val.shape[0]

    def _like(self, val, grad, hess):
        return Jet(self.n, self.order, val, grad, hess)

    def _unary(self, f0, f1=None, f2=None):
        """Apply a scalar function with derivatives f1, f2 via the chain rule."""
        val = f0
        grad = hess = None
        if self.order >= 1:
            grad = f1[:, None] * self.grad
            if self.order >= 2:
                hess = f2[:, None, None] * _outer(self.grad, self.grad) \
                    + f1[:, None, None] * self.hess
        return self._like(val, grad, hess)

    # -- ring operations --------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            g = h = None
            if self.order >= 1:
                g = self.grad + other.grad
                if self.order >= 2:
                    h = self.hess + other.hess
            return self._like(self.val + other.val, g, h)
        return self._like(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        g = -self.grad if self.order >= 1 else None
        h = -self.hess if self.order >= 2 else None
        return self._like(-self.val, g, h)

    def __sub__(self, other):
        if isinstance(other, Jet):
            g = h = None
            if self.order >= 1:
                g = self.grad - other.grad
                if self.order >= 2:
                    h = self.hess - other.hess
            return self._like(self.val - other.val, g, h)
        return self._like(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            g = h = None
            if self.order >= 1:
                g = self.grad * other.val[:, None] + other.grad * self.val[:, None]
                if self.order >= 2:
                    h = (self.hess * other.val[:, None, None]
                         + other.hess * self.val[:, None, None]
                         + _outer(self.grad, other.grad)
                         + _outer(other.grad, self.grad))
            return self._like(self.val * other.val, g, h)
        g = self.grad * other if self.order >= 1 else None
        h = self.hess * other if self.order >= 2 else None
        return self._like(self.val * other, g, h)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        if np.any(v == 0.0):
            raise DomainError("division by zero", mask=(v == 0.0))
        inv = 1.0 / v
        return self._unary(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            # a^b = exp(b ln a); requires a > 0
            return (p * self.log()).exp()
        if p == 0:
            return jet_const(self.n, self.order, np.ones_like(self.val))
        if p == 1:
            return self
        if p == 2:
            return self * self
        v = self.val
        if float(p) != int(p) and np.any(v < 0.0):
            raise DomainError("fractional power of negative value", mask=(v < 0.0))
        if p < 0 and np.any(v == 0.0):
            raise DomainError("negative power of zero", mask=(v == 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            f0 = v ** p
            f1 = p * v ** (p - 1)
            f2 = p * (p - 1) * v ** (p - 2)
        if self.order >= 1 and not np.all(np.isfinite(f1)):
            raise DomainError("power not differentiable here", mask=~np.isfinite(f1))
        return self._unary(f0, f1, f2)

    # -- transcendental functions -----------------------------------------

    def sqrt(self):
        v = self.val
        if np.any(v < 0.0):
            raise DomainError("sqrt of negative value", mask=(v < 0.0))
        if self.order >= 1 and np.any(v == 0.0):
            raise DomainError("sqrt not differentiable at zero", mask=(v == 0.0))
        r = np.sqrt(v)
        with np.errstate(divide="ignore"):
            f1 = 0.5 / r
            f2 = -0.25 / (r * v)
        return self._unary(r, f1, f2)

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._unary(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._unary(c, -s, -c)

    def tan(self):
        c = np.cos(self.val)
        if np.any(c == 0.0):
            raise DomainError("tan at pole", mask=(c == 0.0))
        t = np.tan(self.val)
        sec2 = 1.0 / (c * c)
        return self._unary(t, sec2, 2.0 * t * sec2)

    def exp(self):
        e = np.exp(self.val)
        return self._unary(e, e, e)

    def log(self):
        v = self.val
        if np.any(v <= 0.0):
            raise DomainError("ln of non-positive value", mask=(v <= 0.0))
        return self._unary(np.log(v), 1.0 / v, -1.0 / (v * v))

    # -- extraction --------------------------------------------------------

    def partial(self, mu):
        """Jet of the partial derivative along coordinate ``mu`` (one order lower)."""
        if self.order < 1:
            raise OrderError("jet carries no gradient")
        g = None
        if self.order >= 2:
            g = self.hess[:, mu, :]
        return Jet(self.n, self.order - 1, self.grad[:, mu].copy(), g, None)


def jet_const(n, order, val):
    """Constant jet: zero gradient and Hessian."""
    npts = val.shape[0]
    g = np.zeros((npts, n)) if order >= 1 else None
    h = np.zeros((npts, n, n)) if order >= 2 else None
    return Jet(n, order, val, g, h)


def jet_coord(n, order, values, mu):
    """Jet of the coordinate function x^mu over a (N, n) batch of points."""
    npts = values.shape[0]
    g = h = None
    if order >= 1:
        g = np.zeros((npts, n))
        g[:, mu] = 1.0
        if order >= 2:
            h = np.zeros((npts, n, n))
    return Jet(n, order, values[:, mu].copy(), g, h)
