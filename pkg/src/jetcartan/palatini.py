"""The gravity Lagrangian, the velocity-multimomentum chart, equations of
motion on candidate solutions, and the volume-preserving (unimodular) variant.

The multimomentum chart extends the jet chart by coordinates p^a_(i,j) with
i <= j; they encode the symmetric family of (m-1)-forms

    Theta_ij = p^a_ij theta_a.

The canonical m-form and its differential are

    lambda = eta^kl theta_kp ∧ Omega^p_l + eta^ql Theta_pq ∧ omega^p_l,

checked against the closed expression for d lambda below.  Solution
candidates are sections x -> (vielbein, connection jet, momenta); their
equation-of-motion residuals are pullbacks of the metricity part of omega,
the torsion, the momenta and the frame Einstein tensor extracted from the
pulled-back curvature.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from . import fields as F
from .charts import Chart, PointBatch
from .fields import EvalContext
from .forms import (DiffForm, SectionMap, exterior_derivative,
                    interior_product, pullback, wedge, zero_form)
from .frame_geometry import (CanonicalForms, JetChart, build_canonical,
                             random_jet_points)
from .lie_forms import (Eta, MatrixForm, SymValuedForm, cartan_project,
                        matrix_wedge, trace)
from .oracles import christoffel_fields, frame_ricci_values, metric_from_vielbein

__all__ = [
    "WChart", "build_w_canonical", "canonical_momentum", "palatini_lagrangian",
    "dlagrangian_residual", "canonical_lambda", "dlambda_residual",
    "SolutionSection", "levi_civita_section", "random_vielbein_fields",
    "eom_residuals", "coframe_curvature", "nu_lemma_rank", "nu_proof_identity",
    "congruence_residual", "congruence_generic_residual",
    "unimodular_residuals", "w_group_action_map", "random_w_points",
    "lagrangian_density_residual",
]


class WChart(JetChart):
    """Jet chart extended by momentum coordinates p^a_(i,j), i <= j."""

    def __init__(self, m, base_names=None, name="wchart"):
        self.pairs = [(i, j) for i in range(m) for j in range(i, m)]
        self._pair_pos = {p: n for n, p in enumerate(self.pairs)}
        extra = [f"p_{a}_{i}_{j}" for a in range(m) for (i, j) in self.pairs]
        super().__init__(m, base_names, name, extra_names=extra)
        self.p = [[F.CoordField(self.chart, self.p_index(a, i, j))
                   for (i, j) in self.pairs] for a in range(m)]

    def p_index(self, a, i, j):
        if i > j:
            i, j = j, i
        return self.m + self.m ** 2 + self.m ** 3 \
            + a * len(self.pairs) + self._pair_pos[(i, j)]

    def p_field(self, a, i, j):
        if i > j:
            i, j = j, i
        return self.p[a][self._pair_pos[(i, j)]]

    def pack_w(self, x, e, ej, p):
        """p shaped (npts, m, npairs)."""
        m = self.m
        x = np.asarray(x, float)
        n = x.shape[0]
        vals = np.concatenate(
            [x.reshape(n, m),
             np.asarray(e, float).reshape(n, m * m),
             np.asarray(ej, float).reshape(n, m ** 3),
             np.asarray(p, float).reshape(n, m * len(self.pairs))], axis=1)
        return PointBatch(self.chart, vals)


def random_w_points(wc: WChart, n, rng, zero_momenta=False):
    from .frame_geometry import sample_jet_arrays
    x, e, ej = sample_jet_arrays(wc.m, n, rng)
    if zero_momenta:
        p = np.zeros((n, wc.m, len(wc.pairs)))
    else:
        p = rng.uniform(-0.5, 0.5, size=(n, wc.m, len(wc.pairs)))
    return wc.pack_w(x, e, ej, p)


def build_w_canonical(wc: WChart) -> CanonicalForms:
    """Canonical forms lifted to the momentum chart (same coordinate formulas)."""
    return build_canonical(wc)


def canonical_momentum(wc: WChart, forms: CanonicalForms) -> SymValuedForm:
    """Theta_ij = p^a_ij theta_a, the tautological momentum (m-1)-forms."""
    m = wc.m
    upper = {}
    for i in range(m):
        for j in range(i, m):
            acc = zero_form(wc.chart, m - 1)
            for a in range(m):
                acc = acc + forms.theta_multi((a,)).scale(wc.p_field(a, i, j))
            upper[(i, j)] = acc
    return SymValuedForm.from_upper(upper)


def palatini_lagrangian(forms: CanonicalForms, eta: Eta) -> DiffForm:
    """L = eta^kl theta_kp ∧ Omega^p_l (an m-form on the jet chart)."""
    m = forms.jc.m
    out = zero_form(forms.chart, m)
    for k in range(m):
        for p in range(m):
            out = out + wedge(forms.theta_multi((k, p)),
                              forms.Omega[p, k]).scale(eta.diag[k])
    return out


def dlagrangian_residual(forms: CanonicalForms, eta: Eta, batch: PointBatch,
                         lagr: DiffForm | None = None) -> float:
    """d of the Lagrangian against its closed form

        dL = [(eta^kl omega^q_k + eta^qk omega^l_k) ∧ theta_qp
              - eta^kl omega^s_s ∧ theta_kp
              + eta^kl T^q ∧ theta_kpq] ∧ Omega^p_l
    """
    m = forms.jc.m
    if lagr is None:
        lagr = palatini_lagrangian(forms, eta)
    lhs = exterior_derivative(lagr)
    tr = trace(forms.omega)
    rhs = zero_form(forms.chart, m + 1)
    for l in range(m):
        for p in range(m):
            bracket = zero_form(forms.chart, m - 1)
            for q in range(m):
                # eta^kl omega^q_k with k = l (diagonal eta)
                bracket = bracket + wedge(
                    forms.omega[q, l].scale(eta.diag[l]),
                    forms.theta_multi((q, p)))
                # eta^qk omega^l_k summed over k
                bracket = bracket + wedge(
                    forms.omega[l, q].scale(eta.diag[q]),
                    forms.theta_multi((q, p)))
                bracket = bracket + wedge(
                    forms.T[q], forms.theta_multi((l, p, q))).scale(eta.diag[l])
            bracket = bracket - wedge(tr, forms.theta_multi((l, p))).scale(eta.diag[l])
            rhs = rhs + wedge(bracket, forms.Omega[p, l])
    return (lhs - rhs).max_coeff(batch)


def canonical_lambda(wc: WChart, forms: CanonicalForms, eta: Eta,
                     theta_mom: SymValuedForm | None = None) -> DiffForm:
    """lambda = eta^kl theta_kp ∧ Omega^p_l + eta^ql Theta_pq ∧ omega^p_l."""
    m = wc.m
    if theta_mom is None:
        theta_mom = canonical_momentum(wc, forms)
    out = palatini_lagrangian(forms, eta)
    for l in range(m):
        for p in range(m):
            out = out + wedge(theta_mom[p, l], forms.omega[p, l]).scale(eta.diag[l])
    return out


def dlambda_residual(wc: WChart, forms: CanonicalForms, eta: Eta,
                     batch: PointBatch, drop_momentum_bracket=False,
                     lam: DiffForm | None = None) -> float:
    """d lambda against its closed expression

        [2 eta^kp (omega_p)^i_k ∧ theta_il - (omega_p)^s_s ∧ eta^kp theta_kl
         + eta^kp T^i ∧ theta_kli + eta^ip Theta_il] ∧ Omega^l_p
        + eta^ik [dTheta_ij + eta^rq eta_li Theta_rj ∧ (omega_k)^l_q
                  - Theta_ip ∧ (omega_k)^p_j] ∧ (omega_p)^j_k

    ``drop_momentum_bracket`` omits the whole second line (negative control).
    """
    m = wc.m
    theta_mom = canonical_momentum(wc, forms)
    if lam is None:
        lam = canonical_lambda(wc, forms, eta, theta_mom)
    lhs = exterior_derivative(lam)

    om_p = cartan_project(forms.omega, "p", eta)
    om_k = cartan_project(forms.omega, "k", eta)
    tr_p = trace(om_p)

    rhs = zero_form(wc.chart, m + 1)
    for l in range(m):
        for p in range(m):
            bracket = zero_form(wc.chart, m - 1)
            for i in range(m):
                bracket = bracket + wedge(
                    om_p[i, p], forms.theta_multi((i, l))).scale(2.0 * eta.diag[p])
                bracket = bracket + wedge(
                    forms.T[i], forms.theta_multi((p, l, i))).scale(eta.diag[p])
            bracket = bracket - wedge(tr_p, forms.theta_multi((p, l))).scale(eta.diag[p])
            bracket = bracket + theta_mom[p, l].scale(eta.diag[p])
            rhs = rhs + wedge(bracket, forms.Omega[l, p])

    if not drop_momentum_bracket:
        dmom = [[exterior_derivative(theta_mom[i, j]) for j in range(m)]
                for i in range(m)]
        for j in range(m):
            for k in range(m):
                # eta^ik [...] with i = k for diagonal eta
                i = k
                inner = dmom[i][j]
                for r in range(m):
                    inner = inner + wedge(theta_mom[r, j], om_k[i, r]).scale(
                        eta.diag[r] * eta.diag[i])
                for p in range(m):
                    inner = inner - wedge(theta_mom[i, p], om_k[p, j])
                rhs = rhs + wedge(inner, om_p[j, k]).scale(eta.diag[k])
    return (lhs - rhs).max_coeff(batch)


# -- sections -------------------------------------------------------------------


class SolutionSection:
    """A candidate field configuration x -> (vielbein, connection jet, momenta)."""

    def __init__(self, base: Chart, wc: WChart, eta: Eta, e_fields,
                 gamma_fields, p_values=None):
        self.base = base
        self.wc = wc
        self.eta = eta
        self.e = e_fields
        self.gamma = gamma_fields
        m = wc.m
        fiber = {}
        for mu in range(m):
            for k in range(m):
                fiber[f"e_{mu}_{k}"] = e_fields[mu][k]
        for mu in range(m):
            for k in range(m):
                for nu in range(m):
                    terms = [F.fneg(F.fmul(e_fields[sigma][k],
                                           gamma_fields[mu][sigma][nu]))
                             for sigma in range(m)]
                    fiber[f"de_{mu}_{k}_{nu}"] = F.fadd(*terms)
        for a in range(m):
            for (i, j) in wc.pairs:
                if p_values is None:
                    fiber[f"p_{a}_{i}_{j}"] = F.const(base, 0.0)
                else:
                    fiber[f"p_{a}_{i}_{j}"] = p_values[a][(i, j)]
        self.map = SectionMap.build(base, wc.chart, fiber)

    def gamma_symmetry_residual(self, batch):
        ctx = EvalContext(batch)
        m = self.wc.m
        worst = 0.0
        for mu in range(m):
            for s in range(m):
                for nu in range(s + 1, m):
                    d = F.fadd(self.gamma[mu][s][nu],
                               F.fneg(self.gamma[mu][nu][s]))
                    worst = max(worst, float(np.max(np.abs(
                        d.eval(ctx, 0).val))))
        return worst


def levi_civita_section(base: Chart, e_fields, eta: Eta, wc: WChart,
                        p_values=None) -> SolutionSection:
    """Section whose connection is the Levi-Civita connection of the metric
    determined by the vielbein (Christoffel symbols from the classical
    oracle), with jet entries e^mu_k,nu = -e^sigma_k Gamma^mu_sigma,nu."""
    g = metric_from_vielbein(base, e_fields, eta)
    gamma = christoffel_fields(base, g)
    return SolutionSection(base, wc, eta, e_fields, gamma, p_values)


def random_vielbein_fields(base: Chart, rng, scale=0.3, m=None):
    """Analytic vielbein field I + scale * (affine + quadratic) on the base."""
    m = m or base.dim
    x = F.coord_fields(base)
    c0 = scale * rng.uniform(-1.0, 1.0, size=(m, m))
    c1 = scale * rng.uniform(-1.0, 1.0, size=(m, m, m))
    c2 = 0.5 * scale * rng.uniform(-1.0, 1.0, size=(m, m, m))
    e = [[None] * m for _ in range(m)]
    for mu in range(m):
        for k in range(m):
            terms = [F.const(base, (1.0 if mu == k else 0.0) + c0[mu, k])]
            for a in range(m):
                terms.append(F.fmul(F.const(base, c1[mu, k, a]), x[a]))
                terms.append(F.fmul(F.const(base, c2[mu, k, a]),
                                    F.fmul(x[a], x[a])))
            e[mu][k] = F.fadd(*terms)
            e[mu][k].persist = True
    return e


def coframe_curvature(section: SolutionSection, forms: CanonicalForms,
                      batch: PointBatch, ctx=None):
    """Frame components R^l_p,ab of the pulled-back curvature.

    Normalised so that sigma^* Omega^l_p = 1/2 R^l_p,ab theta^a ∧ theta^b,
    which makes R the classical frame Riemann tensor and R^l_(ilj) the frame
    Ricci tensor.
    """
    m = section.wc.m
    if ctx is None:
        ctx = EvalContext(batch)
    n = batch.n
    # coframe matrix E^a_mu from sigma^* theta^a
    E = np.zeros((n, m, m))
    for a in range(m):
        pb = pullback(section.map, forms.theta[a])
        for mu in range(m):
            E[:, a, mu] = pb.coeff((mu,)).eval(ctx, 0).val
    Einv = np.linalg.inv(E)  # Einv[:, mu, a] = e^mu_a along the section
    R = np.zeros((n, m, m, m, m))
    for l in range(m):
        for p in range(m):
            pb = pullback(section.map, forms.Omega[l, p])
            W = np.zeros((n, m, m))
            for (mu, nu), f in pb.coeffs.items():
                v = f.eval(ctx, 0).val
                W[:, mu, nu] += v
                W[:, nu, mu] -= v
            R[:, l, p] = np.einsum("nuv,nua,nvb->nab", W, Einv, Einv)
    return R


def eom_residuals(section: SolutionSection, forms: CanonicalForms,
                  theta_mom: SymValuedForm, batch: PointBatch) -> dict:
    """Pullback residuals of the four equation-of-motion families, plus the
    raw m-form equation and the determinant of the frame."""
    wc, eta = section.wc, section.eta
    m = wc.m
    ctx = EvalContext(batch)
    res = {}

    om_p = cartan_project(forms.omega, "p", eta)
    worst = 0.0
    for i in range(m):
        for j in range(m):
            worst = max(worst, pullback(section.map, om_p[i, j]).max_coeff(batch, ctx))
    res["metricity"] = worst

    worst = 0.0
    for i in range(m):
        worst = max(worst, pullback(section.map, forms.T[i]).max_coeff(batch, ctx))
    res["torsion"] = worst

    worst = 0.0
    for i in range(m):
        for j in range(i, m):
            worst = max(worst, pullback(section.map, theta_mom[i, j]).max_coeff(batch, ctx))
    res["momenta"] = worst

    R = coframe_curvature(section, forms, batch, ctx)
    ric = np.einsum("nlalb->nab", R)
    scal = np.einsum("a,naa->n", eta.diag, ric)
    G = ric - 0.5 * np.einsum("n,ab->nab", scal, np.diag(eta.diag))
    res["einstein"] = float(np.max(np.abs(G)))
    res["ricci_frame"] = ric

    # raw m-form equation
    # theta_il ∧ Omega^l_k + theta_kl ∧ Omega^l_i - eta_ik eta^pq theta_ql ∧ Omega^l_p
    worst = 0.0
    traceq = zero_form(wc.chart, m)
    for q in range(m):
        for l in range(m):
            traceq = traceq + wedge(forms.theta_multi((q, l)),
                                    forms.Omega[l, q]).scale(eta.diag[q])
    for i in range(m):
        for k in range(i, m):
            eq = zero_form(wc.chart, m)
            for l in range(m):
                eq = eq + wedge(forms.theta_multi((i, l)), forms.Omega[l, k])
                eq = eq + wedge(forms.theta_multi((k, l)), forms.Omega[l, i])
            if i == k:
                eq = eq - traceq.scale(eta.diag[i])
            worst = max(worst, pullback(section.map, eq).max_coeff(batch, ctx))
    res["einstein_raw_form"] = worst
    return res


def lagrangian_density_residual(section: SolutionSection, forms: CanonicalForms,
                                batch: PointBatch) -> tuple:
    """sigma^*(L) on the coordinate m-tuple against the classical scalar
    curvature density -R sqrt|g| (oracle pipeline); returns (residual, scale)."""
    eta = section.eta
    ctx = EvalContext(batch)
    lagr = palatini_lagrangian(forms, eta)
    pb = pullback(section.map, lagr)
    density = pb.coeff(tuple(range(section.wc.m))).eval(ctx, 0).val

    ric = frame_ricci_values(section.gamma, section.e, batch, ctx)
    scal = np.einsum("a,aan->n", eta.diag, ric)
    einv = F.matrix_field_inverse(section.e)
    det = F.matrix_field_det(einv)
    detv = det.eval(ctx, 0).val
    oracle = -scal * detv
    return float(np.max(np.abs(density - oracle))), float(np.max(np.abs(oracle)))


# -- nu lemma ---------------------------------------------------------------------


def nu_lemma_rank(m, rng=None):
    """Kernel dimension of nu^i_jk -> coefficients of nu^i ∧ theta_ijk.

    Built at a generic jet point; coefficients of the resulting (m-1)-forms
    are extracted in the theta_p coframe by wedging with theta^p.
    """
    rng = rng or np.random.default_rng(12345)
    jc = JetChart(m, name=f"nu_rank_{m}")
    forms = build_canonical(jc)
    batch = random_jet_points(jc, 1, rng)
    ctx = EvalContext(batch)
    s0 = forms.sigma0.coeff(tuple(range(m))).eval(ctx, 0).val[0]

    pairs = list(combinations(range(m), 2))
    unknowns = [(i, j, k) for i in range(m) for (j, k) in pairs]
    rows = []
    for (kk, ll) in pairs:
        for p in range(m):
            row = []
            for (i, j, k) in unknowns:
                nu_i = wedge(forms.theta[j], forms.theta[k])
                cand = wedge(forms.theta[p],
                             wedge(nu_i, forms.theta_multi((i, kk, ll))))
                row.append(cand.coeff(tuple(range(m))).eval(ctx, 0).val[0] / s0)
            rows.append(row)
    mat = np.array(rows)
    rank = np.linalg.matrix_rank(mat, tol=1e-8)
    return len(unknowns) - rank


def nu_proof_identity(m, rng=None) -> float:
    """Residual of theta^k ∧ nu^i ∧ theta_ikl = 2 (m-2) nu^i_li sigma0."""
    rng = rng or np.random.default_rng(999)
    jc = JetChart(m, name=f"nu_proof_{m}")
    forms = build_canonical(jc)
    batch = random_jet_points(jc, 3, rng)
    ctx = EvalContext(batch)
    nu = rng.uniform(-1.0, 1.0, size=(m, m, m))
    nu = nu - np.swapaxes(nu, 1, 2)
    nu_forms = []
    for i in range(m):
        acc = zero_form(jc.chart, 2)
        for j in range(m):
            for k in range(m):
                if nu[i, j, k] == 0.0:
                    continue
                acc = acc + wedge(forms.theta[j], forms.theta[k]).scale(nu[i, j, k])
        nu_forms.append(acc)
    worst = 0.0
    for l in range(m):
        lhs = zero_form(jc.chart, m)
        for k in range(m):
            for i in range(m):
                lhs = lhs + wedge(forms.theta[k],
                                  wedge(nu_forms[i], forms.theta_multi((i, k, l))))
        coeff = 2.0 * (m - 2) * sum(nu[i, l, i] for i in range(m))
        rhs = forms.sigma0.scale(coeff)
        worst = max(worst, (lhs - rhs).max_coeff(batch, ctx))
    return worst


# -- congruence -----------------------------------------------------------------


def _congruence_forms(forms: CanonicalForms, eta: Eta):
    """LHS_ik and RHS_ik of the Lagrangian/Hamiltonian congruence.

    On torsion-free, eta-antisymmetric-curvature configurations the relation
    is LHS = -2 RHS (the published statement carries a factor 1/2 with the
    wrong sign; the -2 is forced by the theta-coframe expansion).
    """
    m = forms.jc.m
    traceq = zero_form(forms.chart, m)
    for q in range(m):
        for l in range(m):
            traceq = traceq + wedge(forms.theta_multi((q, l)),
                                    forms.Omega[l, q]).scale(eta.diag[q])
    out = []
    for i in range(m):
        for k in range(i, m):
            lhs = zero_form(forms.chart, m)
            for l in range(m):
                lhs = lhs + wedge(forms.theta_multi((i, l)), forms.Omega[l, k])
                lhs = lhs + wedge(forms.theta_multi((k, l)), forms.Omega[l, i])
            if i == k:
                lhs = lhs - traceq.scale(eta.diag[i])
            rhs = zero_form(forms.chart, m)
            for q in range(m):
                for r in range(m):
                    rhs = rhs + wedge(
                        forms.theta[i],
                        wedge(forms.theta_multi((k, q, r)),
                              forms.Omega[r, q])).scale(0.5 * eta.diag[i] * eta.diag[q])
            out.append((i, k, lhs, rhs))
    return out


CONGRUENCE_FACTOR = -2.0


def congruence_residual(section: SolutionSection, forms: CanonicalForms,
                        batch: PointBatch) -> float:
    """max |sigma^*(LHS - (-2) RHS)| along a metric-compatible torsion-free
    section (where Omega is eta-antisymmetric and the relation is exact)."""
    ctx = EvalContext(batch)
    worst = 0.0
    for i, k, lhs, rhs in _congruence_forms(forms, section.eta):
        resid = lhs - rhs.scale(CONGRUENCE_FACTOR)
        worst = max(worst, pullback(section.map, resid).max_coeff(batch, ctx))
    return worst


def congruence_generic_residual(forms: CanonicalForms, eta: Eta,
                                batch: PointBatch) -> float:
    """The same combination evaluated raw at generic jet points (nonzero)."""
    ctx = EvalContext(batch)
    worst = 0.0
    for i, k, lhs, rhs in _congruence_forms(forms, eta):
        resid = lhs - rhs.scale(CONGRUENCE_FACTOR)
        worst = max(worst, resid.max_coeff(batch, ctx))
    return worst


# -- unimodular variant ------------------------------------------------------------


def unimodular_residuals(section: SolutionSection, forms: CanonicalForms,
                         theta_mom: SymValuedForm, batch: PointBatch) -> dict:
    """Equiaffinity, torsion, momentum trace split and traceless Einstein."""
    wc, eta = section.wc, section.eta
    m = wc.m
    ctx = EvalContext(batch)
    res = {}

    res["equiaffinity"] = pullback(
        section.map, trace(forms.omega)).max_coeff(batch, ctx)

    worst = 0.0
    for i in range(m):
        worst = max(worst, pullback(section.map, forms.T[i]).max_coeff(batch, ctx))
    res["torsion"] = worst

    # Theta_kl - eta_kl mu with mu = (1/m) eta^ab Theta_ab
    mu_form = zero_form(wc.chart, m - 1)
    for a in range(m):
        mu_form = mu_form + theta_mom[a, a].scale(eta.diag[a] / m)
    worst = 0.0
    for k in range(m):
        for l in range(k, m):
            split = theta_mom[k, l] - mu_form.scale(eta[k, l])
            worst = max(worst, pullback(section.map, split).max_coeff(batch, ctx))
    res["momentum_trace_split"] = worst

    R = coframe_curvature(section, forms, batch, ctx)
    ric = np.einsum("nlalb->nab", R)
    scal = np.einsum("a,naa->n", eta.diag, ric)
    Gfull = ric - 0.5 * np.einsum("n,ab->nab", scal, np.diag(eta.diag))
    Gtrless = ric - (1.0 / m) * np.einsum("n,ab->nab", scal, np.diag(eta.diag))
    res["traceless_einstein"] = float(np.max(np.abs(Gtrless)))
    res["einstein"] = float(np.max(np.abs(Gfull)))

    einv = F.matrix_field_inverse(section.e)
    det = F.matrix_field_det(section.e)
    detv = np.abs(det.eval(ctx, 0).val)
    res["frame_det_spread"] = float(np.max(detv) - np.min(detv))
    return res


# -- lifted group action on the momentum chart ---------------------------------------


def w_group_action_map(wc: WChart, g):
    """The action on (x, e, e', p): frames rotate by g, momenta by

        p'^a_ij = det(g) (g^-1)^a_b (g^-1)^k_i (g^-1)^l_j p^b_kl

    which is the transformation making Theta tautological; the canonical
    m-form is invariant under it.
    """
    from .forms import ChartMap
    m = wc.m
    g = np.asarray(g, float)
    ginv = np.linalg.inv(g)
    detg = float(np.linalg.det(g))
    ch = wc.chart
    comps = [None] * ch.dim
    for mu in range(m):
        comps[wc.x_index(mu)] = wc.x[mu]
    for mu in range(m):
        for k in range(m):
            comps[wc.e_index(mu, k)] = F.fadd(*[
                F.fmul(F.const(ch, g[l, k]), wc.e[mu][l]) for l in range(m)])
            for nu in range(m):
                comps[wc.j_index(mu, k, nu)] = F.fadd(*[
                    F.fmul(F.const(ch, g[l, k]), wc.ej[mu][l][nu])
                    for l in range(m)])
    for a in range(m):
        for (i, j) in wc.pairs:
            terms = []
            for b in range(m):
                for k in range(m):
                    for l in range(m):
                        coeff = detg * ginv[a, b] * ginv[k, i] * ginv[l, j]
                        if coeff == 0.0:
                            continue
                        terms.append(F.fmul(F.const(ch, coeff),
                                            wc.p_field(b, k, l)))
            comps[wc.p_index(a, i, j)] = F.fadd(*terms) if terms \
                else F.const(ch, 0.0)
    return ChartMap(ch, ch, comps)
