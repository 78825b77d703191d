"""Scalar invariants of a conformal spacelike surface in S^4_1: second
fundamental data, curvatures, Hopf-type differentials and the residuals of the
Gauss, Codazzi and Ricci equations."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import StateError
from .minkowski import bilinear

SQRT2 = np.sqrt(2.0)

MARGINAL_TOL = 1e-8
FLAT_NORMAL_TOL = 1e-7
PARALLEL_H_TOL = 1e-7
NONISOTROPY_TOL = 1e-6


# ---------------------------------------------------------------------------
# reports


@dataclass
class ResidualReport:
    spacing: tuple = (0.0, 0.0)
    entries: dict = field(default_factory=dict)

    def add(self, name, values, threshold=None, order=None):
        v = np.abs(np.asarray(values))
        v = v[np.isfinite(v)] if v.size else v
        e = {
            "max": float(np.max(v)) if v.size else 0.0,
            "mean": float(np.mean(v)) if v.size else 0.0,
            "spacing": [float(s) for s in self.spacing],
        }
        if threshold is not None:
            e["threshold"] = float(threshold)
            e["passed"] = bool(e["max"] < threshold)
        if order is not None:
            e["order"] = float(order)
        self.entries[name] = e
        return e

    def __getitem__(self, name):
        return self.entries[name]["max"]

    def __contains__(self, name):
        return name in self.entries

    @property
    def passed(self) -> bool:
        return all(e.get("passed", True) for e in self.entries.values())

    def to_dict(self) -> dict:
        return {k: dict(v) for k, v in self.entries.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def convergence_order(err_coarse: float, err_fine: float, ratio: float = 2.0) -> float:
    return float(np.log(err_coarse / err_fine) / np.log(ratio))


# ---------------------------------------------------------------------------
# lattice-level quantities


class LocalInvariants:
    """Invariant fields on one lattice, in the pointwise frame gauge."""

    def __init__(self, lj):
        self.lj = lj
        self.L = lj.lattice

    @classmethod
    def of(cls, lj) -> "LocalInvariants":
        if "inv" not in lj.cache:
            lj.cache["inv"] = cls(lj)
        return lj.cache["inv"]

    def m(self, fn, *fields):
        return self.L.map(fn, *fields)

    @cached_property
    def e2u(self):
        return self.m(lambda fz: np.real(bilinear(fz, np.conj(fz))), self.lj.fz)

    @cached_property
    def u(self):
        return self.m(lambda g: 0.5 * np.log(g), self.e2u)

    @cached_property
    def u_z(self):
        # d<f_z, f_zbar> = <f_zz, f_zbar> + <f_z, f_zzbar>
        return self.m(lambda fz, fzz, fzzb, g: (bilinear(fzz, np.conj(fz)) + bilinear(fz, fzzb)) / (2 * g),
                      self.lj.fz, self.lj.fzz, self.lj.fzzb, self.e2u)

    @cached_property
    def frame(self):
        return self.lj.frame

    @cached_property
    def xi(self):
        N1, N2 = self.frame
        xi1 = self.m(lambda a, n: bilinear(a, n), self.lj.fzz, N1)
        xi2 = self.m(lambda a, n: -bilinear(a, n), self.lj.fzz, N2)
        return xi1, xi2

    @cached_property
    def hh(self):
        N1, N2 = self.frame
        h1 = self.m(lambda a, n, g: bilinear(a, n) / g, self.lj.fzzb, N1, self.e2u)
        h2 = self.m(lambda a, n, g: -bilinear(a, n) / g, self.lj.fzzb, N2, self.e2u)
        return h1, h2

    @cached_property
    def sigma(self):
        N1z, _ = self.lj.frame_z
        _, N2 = self.frame
        return self.m(lambda a, n: -bilinear(a, n), N1z, N2)

    @cached_property
    def q(self):
        xi1, xi2 = self.xi
        return xi1 - xi2

    @cached_property
    def h(self):
        h1, h2 = self.hh
        return self.m(lambda a, b: 0.5 * (a + b), h1, h2)

    @cached_property
    def delta(self):
        return self.h * self.q


def local_fields(lj) -> dict:
    """Arrays of every chart-level invariant on the lattice of ``lj``."""
    I = LocalInvariants.of(lj)
    L = I.L
    xi1, xi2 = I.xi
    h1, h2 = I.hh
    N1, N2 = I.frame
    out = {
        "u": I.u.value,
        "u_z": I.u_z.value,
        "xi1": xi1.value,
        "xi2": xi2.value,
        "h1": h1.value,
        "h2": h2.value,
        "sigma": I.sigma.value,
        "isotropy": np.abs(bilinear(lj.fz.value, lj.fz.value)) / I.e2u.value,
    }
    out["u_zzb"] = np.real(L.dzb(I.u_z).value)
    for name, F in (("xi1", xi1), ("xi2", xi2), ("h1", h1), ("h2", h2), ("sigma", I.sigma)):
        dz, dzb = L.dz_dzb(F)
        out[name + "_z"] = dz.value
        out[name + "_zb"] = dzb.value
    # normal part of d/dzbar of mu = xi1 N1 + xi2 N2, in frame components
    mu = L.map(lambda a, b, n1, n2: a[..., None] * n1 + b[..., None] * n2, xi1, xi2, N1, N2)
    mu_zb = L.dzb(mu).value
    out["harm_a"] = bilinear(mu_zb, N1.value)
    out["harm_b"] = -bilinear(mu_zb, N2.value)
    return out


# ---------------------------------------------------------------------------
# invariant field record


def _mix(beta, a, b):
    """Frame components after the boost N1 -> ch N1 + sh N2, N2 -> sh N1 + ch N2.

    Both pairs (xi1, xi2), (h1, h2) and (a, b) transform as
    a' = ch a - sh b, b' = -sh a + ch b.
    """
    ch, sh = np.cosh(beta), np.sinh(beta)
    return ch * a - sh * b, -sh * a + ch * b


def _mix_d(beta, beta_d, a, b, a_d, b_d):
    """Derivative of _mix along a direction where beta has derivative beta_d."""
    ch, sh = np.cosh(beta), np.sinh(beta)
    da = ch * a_d - sh * b_d + beta_d * (sh * a - ch * b)
    db = -sh * a_d + ch * b_d + beta_d * (-ch * a + sh * b)
    return da, db


@dataclass
class InvariantField:
    """Per-point invariants in the frame gauge of the JetGrid they came from."""

    grid: object
    backend: str
    u: np.ndarray
    u_z: np.ndarray
    u_zzb: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    sigma: np.ndarray
    xi1_z: np.ndarray
    xi1_zb: np.ndarray
    xi2_z: np.ndarray
    xi2_zb: np.ndarray
    h1_z: np.ndarray
    h2_z: np.ndarray
    sigma_z: np.ndarray
    sigma_zb: np.ndarray
    harm_a: np.ndarray
    harm_b: np.ndarray
    mask: np.ndarray
    isotropy: np.ndarray
    nonisotropy_tol: float = NONISOTROPY_TOL

    # -- derived -----------------------------------------------------------
    @property
    def h(self):
        return 0.5 * (self.h1 + self.h2)

    @property
    def h_z(self):
        return 0.5 * (self.h1_z + self.h2_z)

    @property
    def q(self):
        return self.xi1 - self.xi2

    @property
    def Q(self):
        return self.xi1 ** 2 - self.xi2 ** 2

    @property
    def delta(self):
        return self.h * self.q

    @property
    def theta(self):
        return np.angle(self.q)

    @property
    def q_zb(self):
        return self.xi1_zb - self.xi2_zb

    @property
    def q_z(self):
        return self.xi1_z - self.xi2_z

    @property
    def Q_zb(self):
        return 2 * (self.xi1 * self.xi1_zb - self.xi2 * self.xi2_zb)

    @property
    def delta_zb(self):
        return np.conj(self.h_z) * self.q + self.h * self.q_zb

    @property
    def K(self):
        return self.K_routes[0]

    @property
    def K_routes(self):
        e2u = np.exp(2 * self.u)
        a = -2.0 / e2u * self.u_zzb
        b = 1.0 - (np.abs(self.xi1) ** 2 - np.abs(self.xi2) ** 2) / e2u ** 2
        return a, b

    @property
    def Kperp_routes(self):
        e2u = np.exp(2 * self.u)
        a = -np.imag(self.sigma_zb) / e2u
        b = -np.imag(self.xi1 * np.conj(self.xi2)) / e2u ** 2
        return a, b

    @property
    def Kperp(self):
        return self.Kperp_routes[0]

    def masked(self, arr):
        return np.asarray(arr)[self.mask]

    # -- flags --------------------------------------------------------------
    @property
    def marginal_residual(self):
        return np.abs(self.h1 - self.h2)

    def _fd_scale(self, tol: float) -> float:
        if self.backend == "analytic":
            return tol
        return max(tol, 10.0 * max(self.grid.spacing) ** 2)

    @property
    def is_marginally_trapped(self) -> bool:
        tol = self._fd_scale(MARGINAL_TOL) * (1 + np.abs(self.h1) + np.abs(self.h2))
        return bool(np.all(self.masked(self.marginal_residual < tol)))

    @property
    def has_flat_normal_bundle(self) -> bool:
        return bool(np.max(np.abs(self.masked(np.imag(self.sigma_zb)))) < self._fd_scale(FLAT_NORMAL_TOL))

    def parallel_h_tol(self) -> float:
        return self._fd_scale(PARALLEL_H_TOL)

    @property
    def has_parallel_mean_curvature(self) -> bool:
        return bool(np.max(np.abs(self.masked(self.h_z + self.sigma * self.h))) < self.parallel_h_tol())

    @property
    def is_non_isotropic(self) -> bool:
        return bool(np.min(np.abs(self.masked(self.Q))) > self.nonisotropy_tol)

    # -- gauge --------------------------------------------------------------
    def boosted(self, beta, beta_z, beta_zz, beta_zzb) -> "InvariantField":
        """The same invariants after the normal boost by beta."""
        beta_zb = np.conj(beta_z)
        xi1, xi2 = _mix(beta, self.xi1, self.xi2)
        h1, h2 = _mix(beta, self.h1, self.h2)
        xi1_z, xi2_z = _mix_d(beta, beta_z, self.xi1, self.xi2, self.xi1_z, self.xi2_z)
        xi1_zb, xi2_zb = _mix_d(beta, beta_zb, self.xi1, self.xi2, self.xi1_zb, self.xi2_zb)
        h1_z, h2_z = _mix_d(beta, beta_z, self.h1, self.h2, self.h1_z, self.h2_z)
        ha, hb = _mix(beta, self.harm_a, self.harm_b)
        return InvariantField(
            grid=self.grid, backend=self.backend, u=self.u, u_z=self.u_z, u_zzb=self.u_zzb,
            xi1=xi1, xi2=xi2, h1=h1, h2=h2, sigma=self.sigma + beta_z,
            xi1_z=xi1_z, xi1_zb=xi1_zb, xi2_z=xi2_z, xi2_zb=xi2_zb, h1_z=h1_z, h2_z=h2_z,
            sigma_z=self.sigma_z + beta_zz, sigma_zb=self.sigma_zb + beta_zzb,
            harm_a=ha, harm_b=hb, mask=self.mask, isotropy=self.isotropy,
            nonisotropy_tol=self.nonisotropy_tol)

    def to_columns(self) -> dict:
        """Flat columns for CSV export; complex values split into re/im."""
        cols = {}
        real = {"u": self.u, "h1": self.h1, "h2": self.h2, "h": self.h, "theta": self.theta,
                "K": self.K, "Kperp": self.Kperp}
        cplx = {"xi1": self.xi1, "xi2": self.xi2, "sigma": self.sigma, "q": self.q,
                "Q": self.Q, "delta": self.delta}
        for k, v in real.items():
            cols[k] = np.real(v).ravel()
        for k, v in cplx.items():
            cols[k + "_re"] = np.real(v).ravel()
            cols[k + "_im"] = np.imag(v).ravel()
        return cols


_FIELD_KEYS = ("u", "u_z", "u_zzb", "xi1", "xi2", "h1", "h2", "sigma", "xi1_z", "xi1_zb",
               "xi2_z", "xi2_zb", "h1_z", "h2_z", "sigma_z", "sigma_zb", "harm_a", "harm_b",
               "isotropy")


def invariant_field(jet, nonisotropy_tol: float = NONISOTROPY_TOL) -> InvariantField:
    a = jet.analysis()
    fld = InvariantField(grid=jet.grid, backend=jet.backend, mask=jet.report_mask(4),
                         nonisotropy_tol=nonisotropy_tol, **{k: a[k] for k in _FIELD_KEYS})
    if jet.gauge is not None:
        fld = fld.boosted(*jet.gauge)
    return fld


# ---------------------------------------------------------------------------
# public operations


def gaussian_curvature(field: InvariantField):
    """(K from the metric, K from the Gauss equation)."""
    return field.K_routes


def normal_curvature(field: InvariantField):
    """(K_perp from the normal connection, K_perp from the Ricci equation)."""
    return field.Kperp_routes


def mean_curvature_data(field: InvariantField):
    """(h, |h1 - h2|)."""
    return field.h, field.marginal_residual


def normal_derivative_H(field: InvariantField):
    """Coefficient h_z + sigma h of the normal derivative of H along N1 + N2."""
    if not field.is_marginally_trapped:
        raise StateError("normal derivative of H in the null gauge needs a marginally trapped field")
    return field.h_z + field.sigma * field.h


def compatibility_arrays(field: InvariantField) -> dict:
    e2u = np.exp(2 * field.u)
    xi1, xi2, s = field.xi1, field.xi2, field.sigma
    return {
        "gauss": 2 * field.u_zzb + e2u - (np.abs(xi1) ** 2 - np.abs(xi2) ** 2) / e2u
        + e2u * (field.h1 ** 2 - field.h2 ** 2),
        "codazzi1": e2u * (field.h1_z + s * field.h2) - field.xi1_zb - xi2 * np.conj(s),
        "codazzi2": e2u * (field.h2_z + s * field.h1) - field.xi2_zb - xi1 * np.conj(s),
        "ricci": np.imag(field.sigma_zb) - np.imag(xi1 * np.conj(xi2)) / e2u,
    }


def compatibility_residuals(field: InvariantField, threshold: float | None = None) -> ResidualReport:
    rep = ResidualReport(spacing=field.grid.spacing)
    for k, v in compatibility_arrays(field).items():
        rep.add(k, field.masked(v), threshold)
    return rep


def hopf_differentials(field: InvariantField, threshold: float | None = None):
    """(q, Q, delta, report of their dzbar-residuals and the non-isotropy flag)."""
    rep = ResidualReport(spacing=field.grid.spacing)
    rep.add("q_zbar", field.masked(field.q_zb), threshold)
    rep.add("Q_zbar", field.masked(field.Q_zb), threshold)
    rep.add("delta_zbar", field.masked(field.delta_zb), threshold)
    rep.entries["non_isotropic"] = {"value": field.is_non_isotropic,
                                    "min_abs_Q": float(np.min(np.abs(field.masked(field.Q))))}
    return field.q, field.Q, field.delta, rep


def flags(field: InvariantField) -> dict:
    return {
        "marginally_trapped": field.is_marginally_trapped,
        "flat_normal_bundle": field.has_flat_normal_bundle,
        "parallel_mean_curvature": field.has_parallel_mean_curvature,
        "non_isotropic": field.is_non_isotropic,
    }
