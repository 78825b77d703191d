"""Frame matrices, their reductive split, the spectral (lambda) and Calapso (t)
families of one-forms, integration of extended frames and verification of the
transformation laws of the deformed invariants.

Frames F = (f, F1, F2, N1, N2) satisfy F_z = F A, F_zbar = F B with B = conj A,
where f_z = (e^u / sqrt 2)(F1 - i F2).  The integrability condition is
A_zbar - B_z = [A, B].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .chart import FrameData, JetGrid, apply_boost_gauge, build_positively_oriented_normal_frame, \
    jets_from_frames, parallelize_normal_frame, sample_analytic_surface
from .errors import IntegrabilityError, IntegrationError, NormalizationError, ParameterError, StateError
from .fields import GridLattice
from .invariants import InvariantField, ResidualReport, invariant_field
from .minkowski import ETA, eta_polar
from .null_gauss import adapted_frame, conformal_fields, conformal_residual_fields, conformal_invariants

SQRT2 = np.sqrt(2.0)
LIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# coefficient matrices


def _layout(E, uz, a1, a2, b1, b2, sigma):
    """Matrix A as a linear function of its entries; E stands for e^u."""
    E, uz, a1, a2, b1, b2, sigma = np.broadcast_arrays(*(np.asarray(v, complex) for v in
                                                         (E, uz, a1, a2, b1, b2, sigma)))
    A = np.zeros(E.shape + (5, 5), complex)
    r = E / SQRT2
    A[..., 0, 1], A[..., 0, 2] = -r, 1j * r
    A[..., 1, 0], A[..., 2, 0] = r, -1j * r
    A[..., 1, 2], A[..., 2, 1] = 1j * uz, -1j * uz
    A[..., 1, 3], A[..., 1, 4] = -a1, a2
    A[..., 2, 3], A[..., 2, 4] = -1j * b1, 1j * b2
    A[..., 3, 1], A[..., 3, 2] = a1, 1j * b1
    A[..., 4, 1], A[..., 4, 2] = a2, 1j * b2
    A[..., 3, 4] = A[..., 4, 3] = sigma
    return A


def coefficients(u, xi1, xi2, h):
    """(a1, a2, b1, b2) with a_i = (e^u h + e^-u xi_i)/sqrt2, b_i = (-e^u h + e^-u xi_i)/sqrt2."""
    E, Ei = np.exp(u), np.exp(-np.asarray(u))
    a1 = (E * h + Ei * xi1) / SQRT2
    a2 = (E * h + Ei * xi2) / SQRT2
    b1 = (-E * h + Ei * xi1) / SQRT2
    b2 = (-E * h + Ei * xi2) / SQRT2
    return a1, a2, b1, b2


def frame_matrix(u, u_z, xi1, xi2, h, sigma):
    """A for the data (u, u_z, xi1, xi2, h, sigma) of a marginally trapped chart."""
    a1, a2, b1, b2 = coefficients(u, xi1, xi2, h)
    return _layout(np.exp(u), u_z, a1, a2, b1, b2, sigma)


def frame_matrix_dzb(u, u_z, u_zzb, xi1, xi1_zb, xi2, xi2_zb, h, h_z, sigma, sigma_zb):
    """d/dzbar of frame_matrix by the chain rule (A is linear in its entries)."""
    E, Ei = np.exp(u), np.exp(-np.asarray(u))
    u_zb = np.conj(u_z)
    h_zb = np.conj(h_z)
    dE = E * u_zb
    dEi = -Ei * u_zb
    d = lambda x, xzb, sign: (sign * (dE * h + E * h_zb) + dEi * x + Ei * xzb) / SQRT2
    return _layout(dE, u_zzb, d(xi1, xi1_zb, 1), d(xi2, xi2_zb, 1),
                   d(xi1, xi1_zb, -1), d(xi2, xi2_zb, -1), sigma_zb)


def lie_algebra_residual(A) -> float:
    """max |A^T eta + eta A|."""
    A = np.asarray(A)
    return float(np.max(np.abs(np.swapaxes(A, -1, -2) @ ETA + ETA @ A)))


@dataclass
class FrameCoefficients:
    grid: object
    A: np.ndarray
    B: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    family: str = "base"
    param: complex = 1.0
    A_zb: np.ndarray | None = None
    B_z: np.ndarray | None = None
    data: dict = field(default_factory=dict, repr=False)
    rotation_angle: float = 0.0


@dataclass
class ReductiveSplit:
    A_m: np.ndarray
    A_h: np.ndarray
    B_m: np.ndarray
    B_h: np.ndarray
    coeff: FrameCoefficients


def assemble_frame_matrix(field: InvariantField) -> FrameCoefficients:
    if not field.is_marginally_trapped:
        raise StateError("frame matrix needs a marginally trapped field (h1 != h2)")
    h = field.h
    a1, a2, b1, b2 = coefficients(field.u, field.xi1, field.xi2, h)
    A = frame_matrix(field.u, field.u_z, field.xi1, field.xi2, h, field.sigma)
    A_zb = None
    if field.backend == "analytic":
        A_zb = frame_matrix_dzb(field.u, field.u_z, field.u_zzb, field.xi1, field.xi1_zb,
                                field.xi2, field.xi2_zb, h, field.h_z, field.sigma, field.sigma_zb)
    data = {k: getattr(field, k) for k in ("u", "u_z", "xi1", "xi2", "sigma")}
    data["h"] = h
    return FrameCoefficients(field.grid, A, np.conj(A), a1, a2, b1, b2, A_zb=A_zb,
                             B_z=None if A_zb is None else np.conj(A_zb), data=data)


def maurer_cartan_residual(coeff: FrameCoefficients, threshold=None) -> ResidualReport:
    """max/mean of |A_zbar - B_z - [A, B]| over the report region."""
    A, B = coeff.A, coeff.B
    if coeff.A_zb is not None:
        A_zb, B_z = coeff.A_zb, coeff.B_z
    else:
        lat = GridLattice(coeff.grid)
        A_zb = lat.dzb(lat.table(A)).value
        B_z = lat.dz(lat.table(B)).value
    R = A_zb - B_z - (A @ B - B @ A)
    mask = coeff.grid.interior_mask(2)
    rep = ResidualReport(spacing=coeff.grid.spacing)
    rep.add("maurer_cartan", np.max(np.abs(R), axis=(-1, -2))[mask], threshold)
    return rep


def reductive_split(coeff: FrameCoefficients) -> ReductiveSplit:
    """A_h keeps the tangent rotation entries (1, 2), (2, 1); A_m the rest."""
    def split(M):
        H = np.zeros_like(M)
        H[..., 1, 2] = M[..., 1, 2]
        H[..., 2, 1] = M[..., 2, 1]
        return M - H, H
    A_m, A_h = split(coeff.A)
    B_m, B_h = split(coeff.B)
    return ReductiveSplit(A_m, A_h, B_m, B_h, coeff)


def _calapso_c(coeff: FrameCoefficients, tol: float = 1e-7):
    d = coeff.data
    sigma = np.asarray(d["sigma"])
    if np.max(np.abs(sigma)) > tol:
        raise NormalizationError(f"Calapso family needs sigma = 0 (max |sigma| = {np.max(np.abs(sigma)):.3e})")
    q = np.asarray(d["xi1"] - d["xi2"])
    c = q.ravel()[0]
    spread = float(np.max(np.abs(q - c)))
    if spread > tol * max(1.0, abs(c)):
        raise NormalizationError(f"Hopf differential is not constant (spread {spread:.3e})")
    if abs(c) == 0 or abs(np.imag(c)) > tol * abs(c):
        raise NormalizationError(f"Hopf differential {c} is not a nonzero real constant")
    return float(np.real(c))


def alpha_family(split, param, family: str = "lambda") -> FrameCoefficients:
    """Coefficients of the deformed one-form.

    lambda: (lambda^-1 A_m + A_h, lambda B_m + B_h), |lambda| = 1.
    extended: the same formula for any lambda != 0 (not a real form).
    calapso: A rebuilt with h replaced by h + t / (2c); requires sigma = 0 and
    q = c a real constant.
    """
    if isinstance(split, FrameCoefficients):
        split = reductive_split(split)
    base = split.coeff
    if family in ("lambda", "extended"):
        lam = complex(param)
        if lam == 0:
            raise ParameterError("spectral parameter must be nonzero")
        if family == "lambda" and abs(abs(lam) - 1) > 1e-12:
            raise ParameterError(f"|lambda| = {abs(lam)} != 1; use the extended family")
        A = split.A_m / lam + split.A_h
        B = split.B_m * lam + split.B_h
        A_zb = B_z = None
        if base.A_zb is not None:
            s2 = reductive_split(replace(base, A=base.A_zb, B=base.B_z))
            A_zb = s2.A_m / lam + s2.A_h
            B_z = s2.B_m * lam + s2.B_h
        return replace(base, A=A, B=B, a1=base.a1 / lam, a2=base.a2 / lam, b1=base.b1 / lam,
                       b2=base.b2 / lam, family=family, param=lam, A_zb=A_zb, B_z=B_z)
    if family == "calapso":
        t = float(np.real(param))
        if t == 0:
            return replace(base, family="calapso", param=0.0)
        c = _calapso_c(base)
        d = base.data
        ht = d["h"] + t / (2 * c)
        a1, a2, b1, b2 = coefficients(d["u"], d["xi1"], d["xi2"], ht)
        A = frame_matrix(d["u"], d["u_z"], d["xi1"], d["xi2"], ht, d["sigma"])
        A_zb = B_z = None
        if base.A_zb is not None:
            # h^t - h is constant, so only the e^u h terms pick up a derivative
            A_zb = base.A_zb + _dzb_of_h_shift(d, t / (2 * c))
            B_z = np.conj(A_zb)
        data = dict(d, h=ht)
        return replace(base, A=A, B=np.conj(A), a1=a1, a2=a2, b1=b1, b2=b2, family="calapso",
                       param=t, A_zb=A_zb, B_z=B_z, data=data)
    raise ParameterError(f"unknown family {family!r}")


def _dzb_of_h_shift(d, dh):
    """d/dzbar of the change in A when h -> h + dh with dh constant."""
    u = np.asarray(d["u"])
    E = np.exp(u)
    dE = E * np.conj(d["u_z"])
    z = np.zeros_like(dE)
    shift = dE * dh / SQRT2
    return _layout(z, z, shift, shift, -shift, -shift, z)


# ---------------------------------------------------------------------------
# frame integration


@dataclass
class FrameField:
    grid: object
    F: np.ndarray
    coeff: FrameCoefficients
    base_index: tuple = (0, 0)
    orthogonality_residual: float = 0.0
    drift: float = 0.0
    path_discrepancy: float | None = None
    worst_index: tuple | None = None
    substeps: int = 1

    @property
    def param(self):
        return self.coeff.param


def _lagrange_weights(n, k, tau):
    """Window start and weights for cubic interpolation at node k + tau."""
    if n < 4:
        s = min(k, n - 2)
        x = k + tau - s
        return s, np.array([1 - x, x])
    s = min(max(k - 1, 0), n - 4)
    x = k + tau - s
    nodes = np.arange(4)
    w = np.ones(4)
    for a in range(4):
        for b in range(4):
            if a != b:
                w[a] *= (x - nodes[b]) / (nodes[a] - nodes[b])
    return s, w


def _sweep(F0, M, h, substeps, reorth):
    """Integrate dF/ds = F M(s) along axis 0 of M (shape (n, m, 5, 5)).

    Each cell is crossed by propagating the transition G (F_next = F G) from the
    identity with classical Runge-Kutta substeps; G is then projected onto the
    Lorentz group.  Working with the near-identity transition keeps the
    projection well conditioned even where F itself is large.  Returns the
    frames (n, m, 5, 5) and the largest orthogonality defect of a transition
    before projection.
    """
    n = M.shape[0]
    out = np.empty((n,) + F0.shape, dtype=float)
    out[0] = F0
    F = np.array(F0, dtype=float)
    dt = h / substeps
    drift = 0.0
    eye = np.broadcast_to(np.eye(5, dtype=complex), F0.shape)

    def at(k, tau):
        s, w = _lagrange_weights(n, k, tau)
        return np.tensordot(w, M[s:s + len(w)], axes=1)

    for k in range(n - 1):
        G = eye
        for j in range(substeps):
            t0 = j / substeps
            M0, M1, M2 = at(k, t0), at(k, t0 + 0.5 / substeps), at(k, t0 + 1.0 / substeps)
            k1 = G @ M0
            k2 = (G + 0.5 * dt * k1) @ M1
            k3 = (G + 0.5 * dt * k2) @ M1
            k4 = (G + dt * k3) @ M2
            G = G + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        Gr = np.real(G)
        drift = max(drift, float(np.max(np.abs(np.swapaxes(Gr, -1, -2) @ ETA @ Gr - ETA))))
        if reorth:
            Gr = eta_polar(Gr)
        F = F @ Gr
        out[k + 1] = F
    return out, drift


def _auto_substeps(Mx, My, hx, hy, target=0.02):
    norm = max(np.max(np.linalg.norm(Mx, 2, axis=(-2, -1))) * hx,
               np.max(np.linalg.norm(My, 2, axis=(-2, -1))) * hy)
    return max(1, int(math.ceil(norm / target)))


def _integrate(F0, Mx, My, grid, substeps, reorth, rows_first):
    hx, hy = grid.spacing
    if not rows_first:
        col, d1 = _sweep(F0[None], My[0][:, None], hy, substeps, reorth)      # along y at x index 0
        F, d2 = _sweep(col[:, 0], Mx, hx, substeps, reorth)                     # along x on every row
        return F, max(d1, d2)
    row, d1 = _sweep(F0[None], Mx[:, 0][:, None], hx, substeps, reorth)       # along x at y index 0
    Ft, d2 = _sweep(row[:, 0], np.swapaxes(My, 0, 1), hy, substeps, reorth)
    return np.swapaxes(Ft, 0, 1), max(d1, d2)


def integrate_extended_frame(coeff: FrameCoefficients, grid=None, F0=None, *, substeps: int | None = None,
                             reorthogonalize: bool = True, check_paths: bool = True,
                             mc_tol: float = 1e-6, path_budget: float = 1e-4) -> FrameField:
    """Integrate dF = F (A dz + B dzbar) from the grid origin.

    Default path: along y at x index 0, then along x on every row; each grid cell
    is crossed with ``substeps`` classical Runge-Kutta steps (coefficients
    interpolated cubically between nodes) and the result is projected back to
    the Lorentz group.  With ``check_paths`` the rows-first path is integrated too
    and the largest relative frame discrepancy is recorded.
    """
    grid = grid or coeff.grid
    mc = maurer_cartan_residual(coeff)["maurer_cartan"]
    if mc > mc_tol:
        raise IntegrabilityError(f"Maurer-Cartan residual {mc:.3e} exceeds {mc_tol:.1e}")
    F0 = np.eye(5) if F0 is None else np.asarray(F0, float)
    A, B = coeff.A, coeff.B
    Mx = A + B                 # d/dx
    My = 1j * (A - B)          # d/dy
    if substeps is None:
        substeps = _auto_substeps(Mx, My, *grid.spacing)
    F, drift = _integrate(F0, Mx, My, grid, substeps, reorthogonalize, False)
    out = FrameField(grid, F, coeff, orthogonality_residual=relative_orthogonality(F),
                     drift=drift, substeps=substeps)
    if check_paths:
        F2, _ = _integrate(F0, Mx, My, grid, substeps, reorthogonalize, True)
        scale = 1.0 + np.max(np.abs(F), axis=(-1, -2))
        gap = np.max(np.abs(F - F2), axis=(-1, -2)) / scale
        worst = tuple(int(i) for i in np.unravel_index(np.argmax(gap), gap.shape))
        out.path_discrepancy = float(gap[worst])
        out.worst_index = worst
        if out.path_discrepancy > path_budget:
            raise IntegrationError(f"path discrepancy {out.path_discrepancy:.3e} exceeds "
                                   f"{path_budget:.1e} at grid index {worst}")
    return out


def relative_orthogonality(F) -> float:
    """max |F^T eta F - eta| / max(1, |F|^2): roundoff in F^T eta F scales with |F|^2."""
    F = np.asarray(F)
    R = np.max(np.abs(np.swapaxes(F, -1, -2) @ ETA @ F - ETA), axis=(-1, -2))
    return float(np.max(R / np.maximum(1.0, np.max(np.abs(F), axis=(-1, -2)) ** 2)))


def closed_form_frame(coeff: FrameCoefficients, grid=None, F0=None):
    """exp(A z + B zbar) for constant coefficients, relative to the grid origin."""
    from .catalog import expm

    grid = grid or coeff.grid
    A = coeff.A.reshape(-1, 5, 5)[0]
    B = coeff.B.reshape(-1, 5, 5)[0]
    X, Y = grid.nodes()
    x0, y0 = X[0, 0], Y[0, 0]
    Mx, My = (A + B).real, (1j * (A - B)).real
    G = expm((X - x0)[..., None, None] * Mx + (Y - y0)[..., None, None] * My)
    return G if F0 is None else np.asarray(F0) @ G


def extract_deformed_surface(frames: FrameField):
    """(JetGrid, InvariantField) of f = F e0 with N1, N2 the last two columns."""
    jet = jets_from_frames(FrameData(frames.F, frames.coeff.A), frames.grid)
    return jet, invariant_field(jet)


# ---------------------------------------------------------------------------
# family preparation and law verification


@dataclass
class FamilyBase:
    jet: JetGrid
    field: InvariantField
    coeff: FrameCoefficients
    F0: np.ndarray
    c: float | None = None
    rotation_angle: float = 0.0


def prepare_base(jet: JetGrid, family: str = "lambda", tol: float = 1e-7) -> FamilyBase:
    """Validate the family's preconditions and assemble the base coefficients.

    Raises StateError naming the violated flag.
    """
    if not jet.has_frame:
        jet = build_positively_oriented_normal_frame(jet)
    fld = invariant_field(jet)
    if not fld.is_marginally_trapped:
        raise StateError("marginally_trapped flag is false")
    if not fld.is_non_isotropic:
        raise StateError("non_isotropic flag is false")
    angle = 0.0
    if family in ("lambda", "extended"):
        if not fld.has_parallel_mean_curvature:
            raise StateError("parallel_mean_curvature flag is false")
    elif family == "calapso":
        if not fld.has_flat_normal_bundle:
            raise StateError("flat_normal_bundle flag is false")
        if np.max(np.abs(fld.masked(fld.sigma))) > tol:
            jet = parallelize_normal_frame(fld, jet)
            fld = invariant_field(jet)
        q = fld.q
        c0 = q.ravel()[0]
        theta0 = float(np.angle(c0))
        if abs(theta0) > tol:
            if jet.backend != "analytic":
                raise NormalizationError(f"Hopf differential has phase {theta0:.3e} at the origin; "
                                         "coordinate rotation needs an analytic source")
            from .catalog import ConformalMap, Reparametrized

            angle = -theta0 / 2
            g = ConformalMap("affine", a=np.exp(1j * angle))
            src = Reparametrized(jet.source, g)
            rot = build_positively_oriented_normal_frame(
                sample_analytic_surface(src, jet.grid, step=jet.step))
            if jet.gauge is not None:
                rot = apply_boost_gauge(rot, *[np.asarray(v) for v in jet.gauge])
            jet, fld = rot, invariant_field(rot)
            if np.max(np.abs(fld.masked(fld.sigma))) > tol:
                jet = parallelize_normal_frame(fld, jet)
                fld = invariant_field(jet)
    else:
        raise ParameterError(f"unknown family {family!r}")
    coeff = assemble_frame_matrix(fld)
    coeff.rotation_angle = angle
    c = None
    if family == "calapso":
        c = _calapso_c(coeff, tol)
    return FamilyBase(jet, fld, coeff, adapted_frame(jet), c, angle)


@dataclass
class Deformation:
    base: FamilyBase
    coeff: FrameCoefficients
    frames: FrameField
    jet: JetGrid
    field: InvariantField
    laws: ResidualReport


def deform(base: FamilyBase, param, family: str = "lambda", **integrate_opts) -> Deformation:
    coeff = alpha_family(base.coeff, param, family)
    frames = integrate_extended_frame(coeff, base.jet.grid, base.F0, **integrate_opts)
    jet, fld = extract_deformed_surface(frames)
    laws = verify_transformation_laws(base, (jet, fld), param, family)
    return Deformation(base, coeff, frames, jet, fld, laws)


def _conformal_pair(jet):
    inv = conformal_invariants(jet)
    return inv.kappa, inv.s_data, inv.delta


def verify_transformation_laws(base: FamilyBase, deformed, param, family: str = "lambda",
                               threshold: float | None = None) -> ResidualReport:
    """Per-law max residuals of the deformed invariants against the base ones.

    ``deformed`` is a (JetGrid, InvariantField) pair.  s is compared through the
    surface-data route on both sides.
    """
    jet_d, fd = deformed
    fb = base.field
    m = fd.mask & fb.mask
    rep = ResidualReport(spacing=fb.grid.spacing)
    kb, sb, db = _conformal_pair(base.jet)
    kd, sd, dd = _conformal_pair(jet_d)
    rep.add("u", (fd.u - fb.u)[m], threshold)
    rep.add("isotropy", fd.isotropy[m], threshold)
    if family in ("lambda", "extended"):
        lam = complex(param)
        l2 = lam ** -2
        rep.add("xi1", (fd.xi1 - l2 * fb.xi1)[m], threshold)
        rep.add("xi2", (fd.xi2 - l2 * fb.xi2)[m], threshold)
        rep.add("h", (fd.h - fb.h)[m], threshold)
        rep.add("kappa", (kd - l2 * kb)[m], threshold)
        rep.add("s", (sd - (sb + 2 * (l2 - 1) * db))[m], threshold)
        rep.add("delta", (dd - l2 * db)[m], threshold)
    elif family == "calapso":
        t = float(np.real(param))
        c = base.c if base.c is not None else 1.0
        rep.add("kappa", (kd - kb)[m], threshold)
        rep.add("s", (sd - (sb + t))[m], threshold)
        rep.add("h", (fd.h - (fb.h + t / (2 * c)))[m], threshold)
        rep.add("xi1", (fd.xi1 - fb.xi1)[m], threshold)
        rep.add("xi2", (fd.xi2 - fb.xi2)[m], threshold)
    else:
        raise ParameterError(f"unknown family {family!r}")
    rep.entries["flags"] = {
        "marginally_trapped": fd.is_marginally_trapped,
        "flat_normal_bundle": fd.has_flat_normal_bundle,
        "non_isotropic": fd.is_non_isotropic,
        "min_abs_Q": float(np.min(np.abs(fd.masked(fd.Q)))),
    }
    return rep


def extended_symmetry_residuals(jet: JetGrid, lam, threshold: float | None = None) -> ResidualReport:
    """Fundamental and conformal Gauss-Codazzi residuals of the synthesized
    (kappa_l, s_l, delta_l) = (|l|^2 l^-2 kappa, s + 2 (l^-2 - 1) delta, l^-2 delta),
    together with the consistency delta_l = h_l q_l for h_l = h / |l|^2."""
    lam = complex(lam)
    if lam == 0:
        raise ParameterError("spectral parameter must be nonzero")
    l2 = lam ** -2
    r2 = abs(lam) ** 2

    def run(lj):
        from .invariants import LocalInvariants

        ns = conformal_fields(lj)
        I = LocalInvariants.of(lj)
        L = lj.lattice
        kap = ns.kappa * (r2 * l2)
        s = L.map(lambda s0, d: s0 + 2 * (l2 - 1) * d, ns.s_lift, ns.delta)
        dl = ns.delta * l2
        out = conformal_residual_fields(L, kap, s, dl)
        hl = I.h.value / r2
        ql = r2 * l2 * I.q.value
        out["delta_consistency"] = dl.value - hl * ql
        return out
    arr = jet.evaluate(run)
    mask = jet.report_mask(4)
    rep = ResidualReport(spacing=jet.grid.spacing)
    for k in ("fundamental", "fundamental_im", "conformal_gauss", "conformal_codazzi", "delta_consistency"):
        rep.add(k, arr[k][mask], threshold)
    return rep


def gauss_transform_harmonicity_residual(jet: JetGrid, field: InvariantField | None = None,
                                         threshold: float | None = None) -> ResidualReport:
    """Normal part of d/dzbar of mu = xi1 N1 + xi2 N2 and its expected pattern.

    The normal part has frame components (a, b) = (<v, N1>, -<v, N2>); both equal
    e^{2u}(h_z + sigma h) for a marginally trapped surface, so the residual
    vanishes exactly when the mean curvature vector is parallel.
    """
    field = field or invariant_field(jet)
    m = field.mask
    e2u = np.exp(2 * field.u)
    ea = e2u * (field.h1_z + field.sigma * field.h2)
    eb = e2u * (field.h2_z + field.sigma * field.h1)
    rep = ResidualReport(spacing=field.grid.spacing)
    rep.add("harmonicity", np.hypot(np.abs(field.harm_a), np.abs(field.harm_b))[m], threshold)
    rep.add("pattern_gap", np.maximum(np.abs(field.harm_a - ea), np.abs(field.harm_b - eb))[m], threshold)
    rep.entries["expected_norm"] = {"max": float(np.max(np.hypot(np.abs(ea), np.abs(eb))[m]))}
    return rep
