"""Charts of the frame bundle and its first jet, and their canonical forms.

Coordinates on the jet chart are ordered x^mu (m of them), then the frame
matrix entries e^mu_k (m^2, row index mu = spacetime, column k = frame leg),
then the jet entries e^mu_k,nu (m^3, nu the derivative direction).  The
inverse frame entries e^k_mu are derived fields (adjugate over the entry
fields), so every canonical coefficient stays differentiable to order 2 away
from the locus det e = 0.

Conventions fixed here and used consistently everywhere:

    theta^k   = e^k_mu dx^mu
    omega^k_l = e^k_mu (de^mu_l - e^mu_l,sigma dx^sigma)
    T         = d theta + omega ∧ theta        (universal torsion)
    Omega     = d omega + omega ∧ omega        (canonical curvature)
    A^sigma_mu,nu = - e^k_mu e^sigma_k,nu      (connection coordinates)

T and Omega are stored in closed coordinate form (their coefficients are
rational in the chart coordinates); agreement with the defining structure
equations is a suite check, not an assumption.
"""

from __future__ import annotations

from itertools import combinations, permutations

import numpy as np

from . import fields as F
from .charts import Chart, PointBatch
from .fields import EvalContext
from .forms import (DiffForm, VectorField, ChartMap, exterior_derivative,
                    interior_product, pullback, wedge, zero_form)
from .lie_forms import Eta, MatrixForm, SymValuedForm, VectorValuedForm, trace

__all__ = [
    "JetChart", "CanonicalForms", "build_canonical", "theta_multi",
    "metricity_form", "structure_identities", "group_action_map",
    "group_action_points", "random_jet_points", "jet_projection_fields",
    "mat_vec_wedge", "mat_wedge_vec", "transition_jet_map",
    "polar_cartesian_fixture", "matrix_exp",
]


class JetChart:
    """Coordinate chart of J^1 of the frame bundle over an m-dim base."""

    def __init__(self, m, base_names=None, name="jet", extra_names=()):
        if m < 2:
            raise ValueError("need m >= 2")
        self.m = m
        if base_names is None:
            base_names = [f"x{mu}" for mu in range(m)]
        if len(base_names) != m:
            raise ValueError("need m base coordinate names")
        self.base_names = list(base_names)
        names = list(base_names)
        names += [f"e_{mu}_{k}" for mu in range(m) for k in range(m)]
        names += [f"de_{mu}_{k}_{nu}"
                  for mu in range(m) for k in range(m) for nu in range(m)]
        names += list(extra_names)
        self.chart = Chart(name, names)
        self._build_fields()

    # index layout ---------------------------------------------------------

    def x_index(self, mu):
        return mu

    def e_index(self, mu, k):
        return self.m + mu * self.m + k

    def j_index(self, mu, k, nu):
        m = self.m
        return m + m * m + (mu * m + k) * m + nu

    def _build_fields(self):
        m, ch = self.m, self.chart
        self.x = [F.CoordField(ch, self.x_index(mu)) for mu in range(m)]
        self.e = [[F.CoordField(ch, self.e_index(mu, k)) for k in range(m)]
                  for mu in range(m)]
        self.ej = [[[F.CoordField(ch, self.j_index(mu, k, nu)) for nu in range(m)]
                    for k in range(m)] for mu in range(m)]
        # inverse frame e^k_mu, differentiable wherever det e != 0
        self.einv = F.matrix_field_inverse(self.e)
        self.det_e = F.matrix_field_det(self.e)
        self.det_e.persist = True
        # connection coordinates A^sigma_mu,nu = -e^k_mu e^sigma_k,nu
        self.A = [[[None] * m for _ in range(m)] for _ in range(m)]
        for sigma in range(m):
            for mu in range(m):
                for nu in range(m):
                    f = F.fneg(F.fadd(*[
                        F.fmul(self.einv[k][mu], self.ej[sigma][k][nu])
                        for k in range(m)]))
                    f.persist = True
                    self.A[sigma][mu][nu] = f

    # point utilities --------------------------------------------------------

    def pack(self, x, e, ej):
        """Assemble flat coordinate vectors from arrays (npts, ...)-shaped."""
        x = np.asarray(x, float)
        e = np.asarray(e, float)
        ej = np.asarray(ej, float)
        n = x.shape[0]
        m = self.m
        vals = np.concatenate(
            [x.reshape(n, m), e.reshape(n, m * m), ej.reshape(n, m * m * m)],
            axis=1)
        return PointBatch(self.chart, vals)

    def unpack(self, batch):
        m, v = self.m, batch.values
        n = v.shape[0]
        j0 = m + m * m
        return (v[:, :m],
                v[:, m:j0].reshape(n, m, m),
                v[:, j0:j0 + m ** 3].reshape(n, m, m, m))


def sample_jet_arrays(m, n, rng, symmetric_A=False):
    """Sample well-conditioned raw jet coordinates (x, e, e').

    x uniform in [-1,1]^m; e = I + 0.3 U with |det e| >= 0.2 (rejection);
    jet entries uniform in [-0.5, 0.5].  With ``symmetric_A`` the jet part is
    rebuilt from a mu-nu symmetric connection array, which makes the
    universal torsion vanish at the sampled points.
    """
    x = rng.uniform(-1.0, 1.0, size=(n, m))
    e = np.empty((n, m, m))
    for i in range(n):
        while True:
            cand = np.eye(m) + 0.3 * rng.uniform(-1.0, 1.0, size=(m, m))
            if abs(np.linalg.det(cand)) >= 0.2:
                e[i] = cand
                break
    ej = rng.uniform(-0.5, 0.5, size=(n, m, m, m))
    if symmetric_A:
        # A^s_mu,nu = -e^k_mu e^s_k,nu ; symmetrize in (mu, nu), map back
        einv = np.linalg.inv(e)  # einv[i, k, mu] = e^k_mu
        A = -np.einsum("nkm,nsku->nsmu", einv, ej)
        A = 0.5 * (A + np.swapaxes(A, 2, 3))
        ej = -np.einsum("nmk,nsmu->nsku", e, A)
    return x, e, ej


def random_jet_points(jc: JetChart, n, rng, symmetric_A=False):
    """Sample well-conditioned jet points (see :func:`sample_jet_arrays`)."""
    return jc.pack(*sample_jet_arrays(jc.m, n, rng, symmetric_A))


class CanonicalForms:
    """theta, omega, T, Omega and the theta multi-index family on a jet chart."""

    def __init__(self, jc: JetChart):
        self.jc = jc
        m, ch = jc.m, jc.chart
        dx = [DiffForm(ch, 1, {(jc.x_index(mu),): F.const(ch, 1.0)})
              for mu in range(m)]
        self.dx = dx

        theta = []
        for k in range(m):
            theta.append(DiffForm(ch, 1, {
                (jc.x_index(mu),): jc.einv[k][mu] for mu in range(m)}))
        self.theta = VectorValuedForm(np.array(theta, dtype=object))

        omega = np.empty((m, m), dtype=object)
        for k in range(m):
            for l in range(m):
                coeffs = {}
                for mu in range(m):
                    coeffs[(jc.e_index(mu, l),)] = jc.einv[k][mu]
                for sigma in range(m):
                    c = F.fneg(F.fadd(*[
                        F.fmul(jc.einv[k][mu], jc.ej[mu][l][sigma])
                        for mu in range(m)]))
                    coeffs[(jc.x_index(sigma),)] = c
                omega[k, l] = DiffForm(ch, 1, coeffs)
        self.omega = MatrixForm(omega)

        # universal torsion, closed form:
        # T^i = e^i_nu (A^nu_nu',mu' antisymmetrised) dx ∧ dx
        tfs = []
        for i in range(m):
            coeffs = {}
            for mu in range(m):
                for sg in range(mu + 1, m):
                    terms = []
                    for nu in range(m):
                        anti = F.fadd(jc.A[nu][sg][mu], F.fneg(jc.A[nu][mu][sg]))
                        terms.append(F.fmul(jc.einv[i][nu], anti))
                    c = F.fadd(*terms)
                    coeffs[(jc.x_index(mu), jc.x_index(sg))] = c
            tfs.append(DiffForm(ch, 2, coeffs))
        self.T = VectorValuedForm(np.array(tfs, dtype=object))

        # canonical curvature, closed form (no derivative nodes):
        # Omega^k_l = -e^k_mu de^mu_l,sigma ∧ dx^sigma
        #           + (e^k_gamma e^gamma_p,sigma e^p_mu) de^mu_l ∧ dx^sigma
        #           + (e^k_gamma e^gamma_p,sigma e^p_mu e^mu_l,rho) dx^sigma ∧ dx^rho
        om = np.empty((m, m), dtype=object)
        for k in range(m):
            # B^k_mu,sigma := e^k_gamma e^gamma_p,sigma e^p_mu, shared over l
            B = [[F.fadd(*[F.fmul(F.fmul(jc.einv[k][g], jc.ej[g][p][s]),
                                  jc.einv[p][mu])
                           for g in range(m) for p in range(m)])
                  for s in range(m)] for mu in range(m)]
            for row in B:
                for f in row:
                    f.persist = True
            for l in range(m):
                coeffs = {}
                for mu in range(m):
                    for s in range(m):
                        ji = jc.j_index(mu, l, s)
                        xi = jc.x_index(s)
                        c = F.fneg(jc.einv[k][mu])
                        key = (xi, ji) if xi < ji else (ji, xi)
                        sgn = -1.0 if xi < ji else 1.0
                        add = c if sgn > 0 else F.fneg(c)
                        coeffs[key] = F.fadd(coeffs[key], add) if key in coeffs else add
                for mu in range(m):
                    for s in range(m):
                        ei = jc.e_index(mu, l)
                        xi = jc.x_index(s)
                        c = B[mu][s]
                        key = (xi, ei) if xi < ei else (ei, xi)
                        sgn = -1.0 if xi < ei else 1.0
                        add = c if sgn > 0 else F.fneg(c)
                        coeffs[key] = F.fadd(coeffs[key], add) if key in coeffs else add
                for s in range(m):
                    for rho in range(s + 1, m):
                        terms = []
                        for mu in range(m):
                            terms.append(F.fmul(B[mu][s], jc.ej[mu][l][rho]))
                            terms.append(F.fneg(F.fmul(B[mu][rho], jc.ej[mu][l][s])))
                        key = (jc.x_index(s), jc.x_index(rho))
                        c = F.fadd(*terms)
                        coeffs[key] = F.fadd(coeffs[key], c) if key in coeffs else c
                om[k, l] = DiffForm(ch, 2, coeffs)
        self.Omega = MatrixForm(om)

        s0 = self.theta[0]
        for k in range(1, m):
            s0 = wedge(s0, self.theta[k])
        self.sigma0 = s0

        self._theta_multi = {}

    @property
    def chart(self):
        return self.jc.chart

    def theta_multi(self, indices):
        """The (m-p)-form theta_{i1..ip} by epsilon contraction.

        Equal to X_{ip} ⌟ ... ⌟ X_{i1} ⌟ sigma0 for the frame X_i dual to
        theta; totally antisymmetric, zero on repeated indices.
        """
        indices = tuple(indices)
        hit = self._theta_multi.get(indices)
        if hit is not None:
            return hit
        m = self.jc.m
        p = len(indices)
        if p > m or any(i < 0 or i >= m for i in indices):
            raise ValueError(f"bad index tuple {indices}")
        if len(set(indices)) != p:
            out = zero_form(self.chart, m - p)
        else:
            comp = [j for j in range(m) if j not in indices]
            sign = _perm_sign_list(list(indices) + comp)
            if p == m:
                out = DiffForm(self.chart, 0, {(): F.const(self.chart, float(sign))})
            else:
                acc = self.theta[comp[0]]
                for j in comp[1:]:
                    acc = wedge(acc, self.theta[j])
                out = acc.scale(float(sign))
        self._theta_multi[indices] = out
        return out

    def frame_vector(self, i):
        """X_i = e^mu_i d/dx^mu, the frame dual to theta on the jet chart."""
        jc = self.jc
        return VectorField.sparse(
            self.chart,
            {jc.x_index(mu): jc.e[mu][i] for mu in range(jc.m)})


def _perm_sign_list(seq):
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def build_canonical(jc: JetChart) -> CanonicalForms:
    return CanonicalForms(jc)


def theta_multi(forms: CanonicalForms, indices):
    return forms.theta_multi(indices)


def metricity_form(forms: CanonicalForms, eta: Eta) -> SymValuedForm:
    """Q^{ij} = eta^{ip} omega^j_p + eta^{jp} omega^i_p (metricity generators)."""
    m = forms.jc.m
    upper = {}
    for i in range(m):
        for j in range(i, m):
            f = forms.omega[j, i].scale(eta.diag[i]) + \
                forms.omega[i, j].scale(eta.diag[j])
            upper[(i, j)] = f
    return SymValuedForm.from_upper(upper)


def mat_vec_wedge(M: MatrixForm, V: VectorValuedForm) -> VectorValuedForm:
    """(M ∧ V)^k = M^k_l ∧ V^l."""
    m = M.m
    out = []
    for k in range(m):
        acc = zero_form(M.chart, M.degree + V.degree)
        for l in range(m):
            acc = acc + wedge(M[k, l], V[l])
        out.append(acc)
    return VectorValuedForm(np.array(out, dtype=object))


def mat_wedge_vec(M1: MatrixForm, M2: MatrixForm):
    from .lie_forms import matrix_wedge
    return matrix_wedge(M1, M2)


def structure_identities(forms: CanonicalForms, batch: PointBatch) -> dict:
    """Residuals of the structure equations, Bianchi identities, the three
    d(theta multi-index) identities and the contracted torsion identity."""
    from .lie_forms import matrix_wedge
    jc = forms.jc
    m = jc.m
    ctx = EvalContext(batch)
    res = {}

    dtheta = VectorValuedForm(np.array(
        [exterior_derivative(f) for f in forms.theta.entries], dtype=object))
    domega = MatrixForm(np.array(
        [[exterior_derivative(forms.omega[i, j]) for j in range(m)]
         for i in range(m)], dtype=object))

    torsion_def = dtheta + mat_vec_wedge(forms.omega, forms.theta) - forms.T
    res["structure_torsion"] = torsion_def.max_coeff(batch, ctx)

    curv_def = domega + matrix_wedge(forms.omega, forms.omega) - forms.Omega
    res["structure_curvature"] = curv_def.max_coeff(batch, ctx)

    dOmega = MatrixForm(np.array(
        [[exterior_derivative(forms.Omega[i, j]) for j in range(m)]
         for i in range(m)], dtype=object))
    b1 = dOmega - matrix_wedge(forms.Omega, forms.omega) \
        + matrix_wedge(forms.omega, forms.Omega)
    res["bianchi_curvature"] = b1.max_coeff(batch, ctx)

    dT = VectorValuedForm(np.array(
        [exterior_derivative(f) for f in forms.T.entries], dtype=object))
    b2 = dT - mat_vec_wedge(forms.Omega, forms.theta) \
        + mat_vec_wedge(forms.omega, forms.T)
    res["bianchi_torsion"] = b2.max_coeff(batch, ctx)

    tr_omega = trace(forms.omega)

    # d theta_i = omega^l_i ∧ theta_l - omega^s_s ∧ theta_i + T^l ∧ theta_{il}
    # (the torsion term carries theta_{il}, not theta_{li})
    worst = 0.0
    for i in range(m):
        th_i = forms.theta_multi((i,))
        rhs = zero_form(jc.chart, m)
        for l in range(m):
            rhs = rhs + wedge(forms.omega[l, i], forms.theta_multi((l,)))
            rhs = rhs + wedge(forms.T[l], forms.theta_multi((i, l)))
        rhs = rhs - wedge(tr_omega, th_i)
        worst = max(worst, (exterior_derivative(th_i) - rhs).max_coeff(batch, ctx))
    res["dtheta_i"] = worst

    worst = 0.0
    for k in range(m):
        for p in range(m):
            if k == p:
                continue
            th_kp = forms.theta_multi((k, p))
            rhs = zero_form(jc.chart, m - 1)
            for q in range(m):
                rhs = rhs + wedge(forms.omega[q, k], forms.theta_multi((q, p)))
                rhs = rhs - wedge(forms.omega[q, p], forms.theta_multi((q, k)))
                if m >= 3:
                    rhs = rhs + wedge(forms.T[q], forms.theta_multi((k, p, q)))
            rhs = rhs - wedge(tr_omega, th_kp)
            worst = max(worst,
                        (exterior_derivative(th_kp) - rhs).max_coeff(batch, ctx))
    res["dtheta_ij"] = worst

    if m >= 3:
        worst = 0.0
        for (i, p, q) in combinations(range(m), 3):
            th_ipq = forms.theta_multi((i, p, q))
            rhs = zero_form(jc.chart, m - 2)
            for k in range(m):
                rhs = rhs + wedge(forms.omega[k, i], forms.theta_multi((k, p, q)))
                rhs = rhs + wedge(forms.omega[k, p], forms.theta_multi((k, q, i)))
                rhs = rhs + wedge(forms.omega[k, q], forms.theta_multi((k, i, p)))
                if m >= 4:
                    rhs = rhs + wedge(forms.T[k], forms.theta_multi((i, p, q, k)))
            rhs = rhs - wedge(tr_omega, th_ipq)
            worst = max(worst,
                        (exterior_derivative(th_ipq) - rhs).max_coeff(batch, ctx))
        res["dtheta_ijk"] = worst

    # (dT^k + omega^k_l ∧ T^l) ∧ theta_{ikp}
    #   = Omega^k_p ∧ theta_{ik} - Omega^k_i ∧ theta_{pk} - Omega^l_l ∧ theta_{ip}
    if m >= 3:
        covT = dT + mat_vec_wedge(forms.omega, forms.T)
        trOmega = trace(forms.Omega)
        worst = 0.0
        for i in range(m):
            for p in range(m):
                if i == p:
                    continue
                lhs = zero_form(jc.chart, m)
                rhs = zero_form(jc.chart, m)
                for k in range(m):
                    lhs = lhs + wedge(covT[k], forms.theta_multi((i, k, p)))
                    rhs = rhs + wedge(forms.Omega[k, p], forms.theta_multi((i, k)))
                    rhs = rhs - wedge(forms.Omega[k, i], forms.theta_multi((p, k)))
                rhs = rhs - wedge(trOmega, forms.theta_multi((i, p)))
                worst = max(worst, (lhs - rhs).max_coeff(batch, ctx))
        res["torsion_lemma"] = worst

    return res


# -- group action -------------------------------------------------------------


def group_action_points(jc: JetChart, batch: PointBatch, g) -> PointBatch:
    """Right action (x, e, e') . g = (x, e g, e' g) on raw points."""
    x, e, ej = jc.unpack(batch)
    g = np.asarray(g, float)
    e2 = np.einsum("nml,lk->nmk", e, g)
    ej2 = np.einsum("nmlu,lk->nmku", ej, g)
    return jc.pack(x, e2, ej2)


def group_action_map(jc: JetChart, g) -> ChartMap:
    """The action by g as a chart map (for pullback equivariance checks)."""
    m, ch = jc.m, jc.chart
    g = np.asarray(g, float)
    comps = [None] * ch.dim
    for mu in range(m):
        comps[jc.x_index(mu)] = jc.x[mu]
    for mu in range(m):
        for k in range(m):
            comps[jc.e_index(mu, k)] = F.fadd(*[
                F.fmul(F.const(ch, g[l, k]), jc.e[mu][l]) for l in range(m)])
    for mu in range(m):
        for k in range(m):
            for nu in range(m):
                comps[jc.j_index(mu, k, nu)] = F.fadd(*[
                    F.fmul(F.const(ch, g[l, k]), jc.ej[mu][l][nu])
                    for l in range(m)])
    return ChartMap(ch, ch, comps)


def matrix_exp(a, terms=40):
    """exp of a small matrix by scaled Taylor series (numpy only)."""
    a = np.asarray(a, float)
    norm = np.max(np.abs(a))
    s = 0
    while norm > 0.5:
        a = a / 2.0
        norm /= 2.0
        s += 1
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def jet_projection_fields(jc: JetChart):
    """The GL-invariant connection coordinates A^sigma_mu,nu as fields."""
    return jc.A


# -- chart transitions ---------------------------------------------------------


def transition_jet_map(src: JetChart, dst: JetChart, base_map: ChartMap,
                       drop_second_order=False) -> ChartMap:
    """Lift a base-chart transition to the jet charts.

        ebar^mu_k    = J^mu_nu e^nu_k
        ebar^mu_k,nu = (J^mu_sigma e^sigma_k,rho + H^mu_rho,sigma e^sigma_k)
                       (J^-1)^rho_nu

    J is the base Jacobian, H its derivative.  ``drop_second_order`` omits the
    inhomogeneous H term (a deliberately wrong map, for negative controls).
    """
    m = src.m
    ch = src.chart
    if base_map.source.dim != m or base_map.target.dim != m:
        raise ValueError("base map dimension mismatch")

    # promote base-map components to fields on the source jet chart
    bsrc = base_map.source
    lift = ChartMap(ch, bsrc, [src.x[mu] for mu in range(m)])

    def on_jet(f):
        return F.ComposeField(f, lift)

    J = [[on_jet(base_map.jacobian_entry(a, muu)) for muu in range(m)]
         for a in range(m)]
    Jinv = F.matrix_field_inverse(J)
    H = [[[on_jet(F.DerivField(base_map.jacobian_entry(a, muu), rho))
           for rho in range(m)] for muu in range(m)] for a in range(m)]

    comps = [None] * dst.chart.dim
    for mu in range(m):
        comps[dst.x_index(mu)] = on_jet(base_map.components[mu])
    for mu in range(m):
        for k in range(m):
            comps[dst.e_index(mu, k)] = F.fadd(*[
                F.fmul(J[mu][nu], src.e[nu][k]) for nu in range(m)])
    for mu in range(m):
        for k in range(m):
            for nu in range(m):
                terms = []
                for rho in range(m):
                    inner = [F.fmul(J[mu][sg], src.ej[sg][k][rho])
                             for sg in range(m)]
                    if not drop_second_order:
                        inner += [F.fmul(H[mu][rho][sg], src.e[sg][k])
                                  for sg in range(m)]
                    terms.append(F.fmul(F.fadd(*inner), Jinv[rho][nu]))
                comps[dst.j_index(mu, k, nu)] = F.fadd(*terms)
    return ChartMap(ch, dst.chart, comps)


def polar_cartesian_fixture():
    """2d polar -> cartesian transition on an annulus patch."""
    pol = Chart("polar", ["r", "phi"])
    cart = Chart("cartesian", ["u", "v"])
    r, phi = F.coord_fields(pol)
    base = ChartMap(pol, cart, [r * F.ffunc("cos", phi), r * F.ffunc("sin", phi)])
    src = JetChart(2, base_names=["r", "phi"], name="jet_polar")
    dst = JetChart(2, base_names=["u", "v"], name="jet_cartesian")
    return src, dst, base
