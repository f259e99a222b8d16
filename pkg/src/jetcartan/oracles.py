"""Classical index-gymnastics pipeline: metric -> Christoffel -> Riemann -> Ricci.

Deliberately independent of the exterior-calculus machinery: plain nested
loops over coordinate indices, no differential forms anywhere.  Used as the
cross-validation oracle for the curvature content of the form-based checks.
"""

from __future__ import annotations

import numpy as np

from . import fields as F
from .charts import Chart, PointBatch
from .fields import EvalContext

__all__ = [
    "metric_from_vielbein", "christoffel_fields", "riemann_values",
    "ricci_values", "frame_ricci_values",
]


def metric_from_vielbein(chart: Chart, e_fields, eta):
    """g_mu,nu = eta_ij e^i_mu e^j_nu from the frame matrix e^mu_k."""
    m = len(e_fields)
    einv = F.matrix_field_inverse(e_fields)  # einv[k][mu] = e^k_mu
    g = [[None] * m for _ in range(m)]
    for mu in range(m):
        for nu in range(m):
            terms = [F.fmul(F.const(chart, eta.diag[i]),
                            F.fmul(einv[i][mu], einv[i][nu]))
                     for i in range(m)]
            f = F.fadd(*terms)
            f.persist = True
            g[mu][nu] = f
    return g


def christoffel_fields(chart: Chart, g_fields):
    """Levi-Civita Christoffel symbols Gamma^mu_sigma,nu of a metric field.

    Gamma^mu_sigma,nu = 1/2 g^mu,rho (d_sigma g_rho,nu + d_nu g_rho,sigma
                                      - d_rho g_sigma,nu); symmetric in
    (sigma, nu) by construction.
    """
    m = len(g_fields)
    ginv = F.matrix_field_inverse(g_fields)
    dg = [[[F.DerivField(g_fields[a][b], c) for c in range(m)]
           for b in range(m)] for a in range(m)]
    gamma = [[[None] * m for _ in range(m)] for _ in range(m)]
    for mu in range(m):
        for sigma in range(m):
            for nu in range(sigma, m):
                terms = []
                for rho in range(m):
                    inner = F.fadd(dg[rho][nu][sigma], dg[rho][sigma][nu],
                                   F.fneg(dg[sigma][nu][rho]))
                    terms.append(F.fmul(ginv[mu][rho], inner))
                f = F.fmul(F.const(chart, 0.5), F.fadd(*terms))
                f.persist = True
                gamma[mu][sigma][nu] = f
                gamma[mu][nu][sigma] = f
    return gamma


def riemann_values(gamma, batch: PointBatch, ctx: "EvalContext | None" = None):
    """R^rho_sigma,mu,nu over a batch, from exact first partials of Gamma.

    R^rho_sigma,mu,nu = d_mu Gamma^rho_nu,sigma - d_nu Gamma^rho_mu,sigma
                        + Gamma^rho_mu,lam Gamma^lam_nu,sigma
                        - Gamma^rho_nu,lam Gamma^lam_mu,sigma
    """
    m = len(gamma)
    if ctx is None:
        ctx = EvalContext(batch)
    n = batch.n
    gval = np.zeros((m, m, m, n))
    dgval = np.zeros((m, m, m, m, n))
    for a in range(m):
        for b in range(m):
            for c in range(b, m):
                jet = gamma[a][b][c].eval(ctx, 1)
                gval[a, b, c] = jet.val
                gval[a, c, b] = jet.val
                dgval[a, b, c] = jet.grad.T
                dgval[a, c, b] = jet.grad.T
    riem = np.zeros((m, m, m, m, n))
    for rho in range(m):
        for sigma in range(m):
            for mu in range(m):
                for nu in range(m):
                    val = dgval[rho, nu, sigma, mu] - dgval[rho, mu, sigma, nu]
                    for lam in range(m):
                        val = val + gval[rho, mu, lam] * gval[lam, nu, sigma]
                        val = val - gval[rho, nu, lam] * gval[lam, mu, sigma]
                    riem[rho, sigma, mu, nu] = val
    return riem


def ricci_values(gamma, batch: PointBatch, ctx=None):
    """Ricci tensor values R_sigma,nu = R^rho_sigma,rho,nu over a batch."""
    riem = riemann_values(gamma, batch, ctx)
    return np.einsum("rsrnp->snp", riem)


def frame_ricci_values(gamma, e_fields, batch: PointBatch, ctx=None):
    """Ricci in frame components, R_ij = e^sigma_i e^nu_j R_sigma,nu."""
    if ctx is None:
        ctx = EvalContext(batch)
    ric = ricci_values(gamma, batch, ctx)
    m = len(e_fields)
    ev = np.zeros((m, m, batch.n))
    for mu in range(m):
        for k in range(m):
            ev[mu, k] = e_fields[mu][k].eval(ctx, 0).val
    return np.einsum("sip,njp,snp->ijp", ev, ev, ric)
