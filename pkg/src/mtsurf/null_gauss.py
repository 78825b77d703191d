"""Null Gauss map of a marginally trapped surface and the conformal invariants
of the resulting conformal immersion into the conformal 3-sphere.

The null Gauss map sends a point to the null line of N1 + N2.  Its canonical
lift Y = e^u / (sqrt(2) |xi1 - xi2|) (N1 + N2) satisfies <Y_z, Y_zbar> = 1/2 and
does not depend on the normal frame gauge.  kappa and the Schwarzian s are
computed twice: from the lift (kappa = <Y_zz, f>, s = 2 <Y_zz, N>) and from the
surface data (kappa = e^{u + i theta} / sqrt(2), s from h, u and theta).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import SimpleNamespace

import numpy as np

from .errors import DegeneracyError, DomainError, IsotropyError, StateError
from .invariants import LocalInvariants, ResidualReport
from .minkowski import bilinear, so41_membership_residual

SQRT2 = np.sqrt(2.0)
ISOTROPY_TOL = 1e-8
DEEP_KEYS = ("conformal_gauss", "structure_iii")
RESIDUAL_KEYS = ("fundamental", "fundamental_im", "conformal_codazzi", "structure_i", "structure_ii",
                 "N_defect", "N_closed_gap", "lift_norm", "lift_iso")
COND_MAX = 1e12
_SIGN = np.array([1.0, 1.0, 1.0, 1.0, -1.0])


# ---------------------------------------------------------------------------
# pointwise algebra


def dual_section(Y, Yz, Yzzb, cond_max: float = COND_MAX):
    """The null N in span{Y, Re Y_z, Im Y_z, Y_zzbar} with <Y, N> = -1, N _|_ Y_z.

    Solves the Gram system for right-hand side (-1, 0, 0, gamma) and picks gamma
    so that <N, N> = 0; that condition is linear in gamma because the (3, 3)
    entry of the inverse Gram matrix vanishes for a null Y.
    """
    basis = np.stack([Y, np.real(Yz), np.imag(Yz), np.real(Yzzb)], axis=-2)  # (...,4,5)
    G = (basis * _SIGN) @ np.swapaxes(basis, -1, -2)
    if np.isfinite(cond_max):
        cond = np.linalg.cond(G)
        bad = ~np.isfinite(cond) | (cond > cond_max)
        if np.any(bad):
            worst = tuple(int(i) for i in np.argwhere(bad)[0]) if cond.ndim else ()
            raise DegeneracyError(f"dual section system is singular (condition number "
                                  f"{np.max(cond):.3e}) at index {worst}")
    Gi = np.linalg.inv(G)
    gamma = Gi[..., 0, 0] / (2 * Gi[..., 0, 3])
    rhs = np.stack([-np.ones_like(gamma), 0 * gamma, 0 * gamma, gamma], axis=-1)
    c = (Gi @ rhs[..., None])[..., 0]
    return (c[..., None, :] @ basis)[..., 0, :]


def conformal_residual_fields(L, kappa, s, delta, deep: bool = True) -> dict:
    """Fundamental equation and conformal Gauss-Codazzi residuals from fields.

    The conformal Gauss residual differentiates s and is only formed when
    ``deep`` is set.
    """
    kzbzb = L.dzb(L.dzb(kappa))
    k, sv, d = kappa.value, s.value, delta.value
    lhs = kzbzb.value + 0.5 * np.conj(sv) * k
    out = {
        "fundamental": lhs - np.real(np.conj(d) * k),
        "fundamental_im": np.imag(np.conj(d) * k),
        "conformal_codazzi": np.imag(lhs),
    }
    if deep:
        kz, kbz, szb = L.dz(kappa), L.dz(kappa.conj()), L.dzb(s)
        out["conformal_gauss"] = 0.5 * szb.value - 3 * kbz.value * k - np.conj(k) * kz.value
    return out


def conformal_fields(lj):
    """Lazy conformal fields on one lattice (cached on the LocalJet)."""
    if "conf" in lj.cache:
        return lj.cache["conf"]
    I = LocalInvariants.of(lj)
    L = I.L
    N1, N2 = I.frame
    ns = SimpleNamespace()
    ns.Y = L.map(lambda g, q, a, b: (np.sqrt(g) / (SQRT2 * np.abs(q)))[..., None] * (a + b),
                 I.e2u, I.q, N1, N2)
    ns.Yz, ns.Yzb = L.dz_dzb(ns.Y)
    ns.Yzz = L.dz(ns.Yz)
    ns.Yzzb = L.map(np.real, L.dzb(ns.Yz))
    ns.N = L.map(lambda a, b, c: dual_section(a, b, c, np.inf), ns.Y, ns.Yz, ns.Yzzb)
    ns.kappa_lift = L.map(lambda a, f: bilinear(a, f), ns.Yzz, lj.f)
    ns.s_lift = L.map(lambda a, n: 2 * bilinear(a, n), ns.Yzz, ns.N)
    ns.kappa = L.map(lambda g, q: np.sqrt(g / 2) * q / np.abs(q), I.e2u, I.q)
    qz, qzb = L.dz_dzb(I.q)
    # (u - i theta)_z through logarithmic derivatives of q
    ns.w_z = L.map(lambda uz, q, a, b: uz - 0.5 * (a / q - np.conj(b / q)), I.u_z, I.q, qz, qzb)
    wzz = L.dz(ns.w_z)
    ns.s_data = L.map(lambda d, a, b: 2 * (d - a * a - b), I.delta, ns.w_z, wzz)
    ns.delta = I.delta
    lj.cache["conf"] = ns
    return ns


def local_fields(lj, base: dict, deep: bool = False) -> dict:
    I = LocalInvariants.of(lj)
    N1, N2 = I.frame
    Lamb = lj.to_ambient(N1.value + N2.value)
    out = {"G": _normalize_lines(Lamb)}
    qrel = np.abs(I.q.value) / np.sqrt(I.e2u.value)
    out["q_rel"] = qrel
    names = ("Y", "Yz", "Yzz", "Yzzb", "N", "kappa", "kappa_lift", "s_lift", "s_data",
             "fundamental", "fundamental_im", "conformal_codazzi",
             "lift_norm", "lift_iso", "N_closed_gap", "N_defect", "structure_i",
             "structure_ii") + (DEEP_KEYS if deep else ())
    scale = 1.0 + np.max(np.abs(base["xi1"])) + np.max(np.abs(base["xi2"]))
    interior = _interior(lj)
    if np.min(qrel[interior]) < ISOTROPY_TOL * scale:
        for k in names:
            shape = qrel.shape + ((5,) if k in ("Y", "Yz", "Yzz", "Yzzb", "N") else ())
            out[k] = np.full(shape, np.nan)
        return out
    ns = conformal_fields(lj)
    L = I.L
    f = lj.f.value
    Y, Yz, Yzz, Yzzb, N = ns.Y.value, ns.Yz.value, ns.Yzz.value, ns.Yzzb.value, ns.N.value
    k2 = I.e2u.value / 2
    s = ns.s_lift.value
    out.update({
        "Y": lj.to_ambient(Y), "Yz": lj.to_ambient(Yz), "Yzz": lj.to_ambient(Yzz),
        "Yzzb": lj.to_ambient(Yzzb), "N": lj.to_ambient(N),
        "kappa": ns.kappa.value, "kappa_lift": ns.kappa_lift.value,
        "s_lift": s, "s_data": ns.s_data.value,
        "lift_norm": bilinear(Yz, np.conj(Yz)) - 0.5,
        "lift_iso": bilinear(Yz, Yz),
        "N_closed_gap": _norm(N - 2 * (Yzzb + k2[..., None] * Y)),
        "N_defect": np.maximum.reduce([np.abs(bilinear(N, N)), np.abs(bilinear(Y, N) + 1),
                                       np.abs(bilinear(N, Yz))]),
    })
    out.update(conformal_residual_fields(L, ns.kappa, ns.s_lift, ns.delta, deep))
    kap = ns.kappa.value
    out["structure_i"] = _norm(Yzz + 0.5 * s[..., None] * Y - kap[..., None] * f)
    out["structure_ii"] = _norm(Yzzb + k2[..., None] * Y - 0.5 * N)
    if deep:
        kzb = L.dzb(ns.kappa).value
        Nz = L.dz(ns.N).value
        out["structure_iii"] = _norm(Nz + 2 * k2[..., None] * Yz + s[..., None] * np.conj(Yz)
                                     - 2 * kzb[..., None] * f)
    return out


def _interior(lj):
    lat = lj.lattice
    if hasattr(lat, "grid"):
        return lat.grid.interior_mask(4)
    return np.ones(lat.x.shape, dtype=bool)


def _norm(v):
    return np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))


def _normalize_lines(L):
    # scale-invariant null normalization; tolerate FD-level null defects
    return L / L[..., 4:5]


# ---------------------------------------------------------------------------
# records


@dataclass
class MoebiusFrame:
    grid: object
    Y: np.ndarray
    Y_z: np.ndarray
    Y_zz: np.ndarray
    Y_zzb: np.ndarray
    N: np.ndarray | None = None
    N_closed: np.ndarray | None = None

    @property
    def Y_zb(self):
        return np.conj(self.Y_z)

    def defining_residuals(self) -> dict:
        Y, Yz = self.Y, self.Y_z
        out = {
            "YY": np.abs(bilinear(Y, Y)),
            "YzYz": np.abs(bilinear(Yz, Yz)),
            "YzYzb_half": np.abs(bilinear(Yz, np.conj(Yz)) - 0.5),
        }
        if self.N is not None:
            N = self.N
            out.update({
                "NN": np.abs(bilinear(N, N)),
                "YN_plus_one": np.abs(bilinear(Y, N) + 1),
                "NYz": np.abs(bilinear(N, Yz)),
            })
        return out


@dataclass
class ConformalInvariants:
    grid: object
    backend: str
    kappa: np.ndarray
    kappa_lift: np.ndarray
    s: np.ndarray
    s_data: np.ndarray
    G: np.ndarray
    delta: np.ndarray
    mask: np.ndarray
    residuals: dict
    jet: object = field(default=None, repr=False, compare=False)

    def deep_residuals(self) -> dict:
        """Residuals including those that need third derivatives (computed lazily)."""
        if all(k in self.residuals for k in DEEP_KEYS):
            return self.residuals
        if self.jet is None:
            raise StateError("third-derivative residuals need the originating JetGrid")
        a = self.jet.analysis(deep=True)
        self.residuals.update({k: a[k] for k in DEEP_KEYS})
        return self.residuals

    @property
    def s_routes(self):
        return self.s, self.s_data

    def to_columns(self) -> dict:
        cols = {}
        for k in ("kappa", "s", "s_data"):
            v = getattr(self, k)
            cols[k + "_re"] = np.real(v).ravel()
            cols[k + "_im"] = np.imag(v).ravel()
        for i in range(5):
            cols[f"G{i}"] = self.G[..., i].ravel()
        return cols


# ---------------------------------------------------------------------------
# public operations


def null_gauss_map(jet) -> np.ndarray:
    """Null Gauss map as null vectors with last component 1, shape (nx, ny, 5)."""
    return jet.analysis()["G"]


def _require_lift(jet, deep=False):
    a = jet.analysis(deep)
    if np.any(np.isnan(a["kappa"])):
        qrel = a["q_rel"]
        mask = jet.report_mask(4)
        idx = np.unravel_index(np.argmin(np.where(mask, qrel, np.inf)), qrel.shape)
        raise IsotropyError(f"Hopf differential vanishes (|q| e^-u = {qrel[idx]:.3e}) at grid index "
                            f"{tuple(int(i) for i in idx)}; canonical lift undefined")
    return a


def canonical_lift(jet, field=None) -> MoebiusFrame:
    a = _require_lift(jet)
    return MoebiusFrame(jet.grid, a["Y"], a["Yz"], a["Yzz"], a["Yzzb"])


def dual_section_N(frame: MoebiusFrame, cond_max: float = COND_MAX) -> MoebiusFrame:
    """Fill N by the per-point solve; N_closed = 2 (Y_zzbar + |kappa|^2 Y) as check."""
    N = dual_section(frame.Y, frame.Y_z, frame.Y_zzb, cond_max)
    out = replace(frame, N=N)
    Yzzb, Y = frame.Y_zzb, frame.Y
    # <N, N> = 0 and <Y_zzbar, Y> = -1/2 force |kappa|^2 = <Y_zzbar, Y_zzbar>
    k2 = bilinear(Yzzb, Yzzb)
    out.N_closed = 2 * (Yzzb + k2[..., None] * Y)
    return out


def conformal_invariants(jet, field=None, frame=None, deep: bool = False) -> ConformalInvariants:
    """(kappa, s, G, delta) on the grid; ``deep`` also forms the third-derivative residuals."""
    a = _require_lift(jet, deep)
    mask = jet.report_mask(4)
    res = {k: a[k] for k in RESIDUAL_KEYS + (DEEP_KEYS if deep else ())}
    xi1, xi2 = a["xi1"], a["xi2"]
    h = 0.5 * (a["h1"] + a["h2"])
    return ConformalInvariants(jet.grid, jet.backend, a["kappa"], a["kappa_lift"], a["s_lift"],
                               a["s_data"], a["G"], h * (xi1 - xi2), mask, res, jet)


def fundamental_equation_residual(inv: ConformalInvariants, field=None, threshold=None) -> ResidualReport:
    rep = ResidualReport(spacing=inv.grid.spacing)
    m = inv.mask
    rep.add("fundamental", inv.residuals["fundamental"][m], threshold)
    rep.add("fundamental_im", inv.residuals["fundamental_im"][m], threshold)
    return rep


def conformal_gauss_codazzi_residuals(inv: ConformalInvariants, threshold=None) -> ResidualReport:
    rep = ResidualReport(spacing=inv.grid.spacing)
    m = inv.mask
    rep.add("conformal_gauss", inv.deep_residuals()["conformal_gauss"][m], threshold)
    rep.add("conformal_codazzi", inv.residuals["conformal_codazzi"][m], threshold)
    return rep


def lift_structure_residuals(inv: ConformalInvariants, threshold=None) -> ResidualReport:
    rep = ResidualReport(spacing=inv.grid.spacing)
    m = inv.mask
    res = inv.deep_residuals()
    for k in ("structure_i", "structure_ii", "structure_iii", "N_defect", "N_closed_gap",
              "lift_norm", "lift_iso"):
        rep.add(k, res[k][m], threshold)
    return rep


def willmore_energy(inv: ConformalInvariants, grid=None) -> float:
    """Raw integral of |kappa|^2 dx dy (rectangle/midpoint rule on the grid)."""
    grid = grid or inv.grid
    return float(np.sum(np.abs(inv.kappa) ** 2) * grid.quadrature_weight())


@dataclass
class CoordinateChange:
    """Data of z = g(w) at the grid points: dz/dw and the Schwarzian S_w(g)."""

    dz_dw: np.ndarray
    schwarzian: np.ndarray

    @classmethod
    def from_map(cls, g, w):
        _, g1, _, _ = g.derivatives(w)
        return cls(g1, g.schwarzian(w))


def transform_invariants(inv: ConformalInvariants, change: CoordinateChange) -> ConformalInvariants:
    """kappa' = kappa (dz/dw)^{3/2} (dzbar/dwbar)^{-1/2}, s' = s (dz/dw)^2 + S_w(z).

    With a common branch of the square root the half-integer powers combine to
    (dz/dw)^2 / |dz/dw|, which is single valued.
    """
    g1 = np.asarray(change.dz_dw, complex)
    if np.any(g1 == 0):
        raise DomainError("coordinate change has vanishing derivative")
    fac = g1 * g1 / np.abs(g1)
    return replace(inv, kappa=inv.kappa * fac, kappa_lift=inv.kappa_lift * fac,
                   s=inv.s * g1 * g1 + change.schwarzian,
                   s_data=inv.s_data * g1 * g1 + change.schwarzian,
                   delta=inv.delta * g1 * g1, residuals={}, jet=None)


def classify_gauss_map(inv_or_jet, field=None, tol: float | None = None) -> dict:
    """Willmore / constrained-Willmore / isothermic flags of the null Gauss map.

    Accepts a JetGrid (preferred; detects the constant Gauss map) or a
    ConformalInvariants record together with its InvariantField.
    """
    from .chart import JetGrid
    from .invariants import invariant_field

    if isinstance(inv_or_jet, JetGrid):
        jet = inv_or_jet
        field = field or invariant_field(jet)
        a = jet.analysis()
        if np.any(np.isnan(a["kappa"])):
            raise IsotropyError("gauss-map-constant: the Hopf differential vanishes, classification undefined")
    elif field is None:
        raise StateError("classification needs the invariant field")
    q = field.q
    m = field.mask
    if np.min(np.abs(q[m])) < ISOTROPY_TOL * (1 + np.max(np.abs(q[m]))):
        raise IsotropyError("gauss-map-constant: the Hopf differential vanishes, classification undefined")
    if tol is None:
        tol = 1e-7 if field.backend == "analytic" else 10 * max(field.grid.spacing) ** 2
    delta = field.delta[m]
    dzb = field.delta_zb[m]
    q0 = q[m].ravel()[np.argmax(np.abs(q[m]))]
    phase = np.abs(np.imag(q[m] * np.conj(q0) / np.abs(q0))) / np.abs(q[m])
    out = {
        "classification": None,
        "willmore": bool(np.max(np.abs(delta)) < tol),
        "constrained_willmore": bool(np.max(np.abs(dzb)) < tol),
        "isothermic": bool(np.max(phase) < tol),
        "non_isotropic": field.is_non_isotropic,
        "max_abs_delta": float(np.max(np.abs(delta))),
        "max_abs_delta_zbar": float(np.max(np.abs(dzb))),
        "max_phase_variation": float(np.max(phase)),
        "tolerance": tol,
    }
    out["classification"] = ("willmore" if out["willmore"] else
                             "constrained-willmore" if out["constrained_willmore"] else "generic")
    return out


def adapted_frame(jet, index=(0, 0)) -> np.ndarray:
    """(f, F1, F2, N1, N2) at a grid index, F1 - i F2 = sqrt(2) e^-u f_z."""
    i, j = index
    f = jet.f[i, j]
    fz = jet.fz[i, j]
    eu = np.sqrt(np.real(bilinear(fz, np.conj(fz))))
    F1 = SQRT2 / eu * np.real(fz)
    F2 = -SQRT2 / eu * np.imag(fz)
    return np.stack([f, F1, F2, jet.N1[i, j], jet.N2[i, j]], axis=-1)


def congruence_test(jetA, jetB, tol: float = 1e-9, index=(0, 0)) -> dict:
    """Recover Phi with Phi f_A = f_B from the adapted frames at ``index``."""
    if jetA.grid.shape != jetB.grid.shape:
        raise DomainError(f"grid mismatch {jetA.grid.shape} vs {jetB.grid.shape}")
    FA = adapted_frame(jetA, index)
    FB = adapted_frame(jetB, index)
    # a plain inverse: on fd data the adapted frame is only nearly orthonormal
    Phi = FB @ np.linalg.inv(FA)
    fA, fB = jetA.f, jetB.f
    img = np.einsum("ij,...j->...i", Phi, fA)
    scale = 1.0 + np.max(np.abs(fB), axis=-1)
    residual = float(np.max(np.linalg.norm(img - fB, axis=-1) / scale))
    antipodal = float(np.max(np.linalg.norm(img + fB, axis=-1) / scale))
    return {
        "Phi": Phi,
        "residual": residual,
        "antipodal_residual": antipodal,
        "congruent": residual < tol,
        "so41_residual": so41_membership_residual(Phi),
        "time_orientation_preserving": bool(Phi[4, 4] > 0),
        "determinant": float(np.linalg.det(Phi)),
    }
