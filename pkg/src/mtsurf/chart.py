"""Jets of a conformal spacelike immersion into de Sitter space and its adapted
Lorentzian normal frame.

A ``JetGrid`` couples a grid with a source of jets:

* ``analytic``: a closed-form surface from :mod:`mtsurf.catalog`; position jets
  are exact, derived quantities are differentiated by a sixth-order stencil.
* ``fd``: tabulated positions, all derivatives by second-order central differences.
* ``frame``: frames integrated from a Maurer-Cartan form; jets follow from
  F_z = F A exactly, derived quantities use central differences.

The normal frame is a pointwise function of the jets.  N2 is the normalized
normal projection of e4 (always timelike and future pointing because the
tangent-plus-position space is spacelike) and N1 completes a basis with
det(f, F1, F2, N1, N2) > 0.  That fixes the null line of N1 + N2; the
``normalized`` rule then applies the boost making |<f_zz, N1 + N2>| = e^u,
i.e. N1 + N2 = sqrt(2) Y with Y the canonical lift of the null Gauss map.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DomainError, GeometryError, IntegrabilityError, SpacelikeError, StateError, ValidationError
from .fields import ANALYTIC_STEP, Field, FrameLattice, GridLattice, GridSpec, PointLattice
from .minkowski import bilinear

MIN_RESOLUTION = 5
CHUNK = 4096
E4 = np.array([0.0, 0.0, 0.0, 0.0, 1.0])


def lorentz_c(a, b):
    """Complex bilinear Lorentz pairing over the last axis (keeps reals real)."""
    return bilinear(a, b)


def _matvec(M, v):
    return (M @ v[..., None])[..., 0]


# ---------------------------------------------------------------------------
# frame rules


@dataclass(frozen=True)
class FrameRule:
    """How N1, N2 are produced from the jets.

    kind: ``reference`` (N2 from e4, orientation rule), ``normalized`` (reference
    frame boosted so that N1 + N2 = sqrt(2) Y) or ``supplied`` (given by the source).
    flip: replace N1 by -N1 afterwards, i.e. reverse the normal orientation so that
    the mean curvature vector lies on the null line of N1 + N2.
    """

    kind: str = "normalized"
    flip: bool = False


_SIGN = np.array([1.0, 1.0, 1.0, 1.0, -1.0])


def _dot(a, b):
    return ((a * b) @ _SIGN)[..., None]


def reference_frame(f, fz):
    """Pointwise (N1, N2): N2 from e4, N1 by the orientation rule.

    The tangent-plus-position block is orthonormalized by Gram-Schmidt (all
    three vectors are spacelike); N2 is the normalized normal part of e4 and N1
    the normal part of a coordinate vector, oriented so that
    det(f, F1, F2, N1, N2) > 0 with F1 ~ Re f_z, F2 ~ -Im f_z.
    """
    t1, t2 = fz.real, fz.imag
    basis = []
    for v in (f, t1, t2):
        for e in basis:
            v = v - _dot(v, e) * e
        nv = _dot(v, v)
        if np.any(nv <= 0):
            raise GeometryError("tangent block is not spacelike")
        basis.append(v / np.sqrt(nv))

    def normal_part(v):
        for e in basis:
            v = v - _dot(v, e) * e
        return v
    n = normal_part(np.broadcast_to(E4, f.shape))
    nn = _dot(n, n)
    if np.any(nn >= 0):
        raise GeometryError("normal space is not Lorentzian")
    N2 = n / np.sqrt(-nn)
    best, best_norm = None, None
    for k in range(4):
        v = normal_part(np.broadcast_to(np.eye(5)[k], f.shape))
        v = v + _dot(v, N2) * N2
        vv = _dot(v, v)
        if best is None:
            best, best_norm = v, vv
        else:
            pick = vv > best_norm
            best = np.where(pick, v, best)
            best_norm = np.where(pick, vv, best_norm)
    if np.any(best_norm <= 0):
        raise GeometryError("degenerate normal space")
    N1 = best / np.sqrt(best_norm)
    sgn = np.sign(np.linalg.det(np.stack([f, t1, -t2, N1, N2], axis=-1)))
    return sgn[..., None] * N1, N2


def boost_pair(N1, N2, beta):
    ch, sh = np.cosh(beta)[..., None], np.sinh(beta)[..., None]
    return ch * N1 + sh * N2, sh * N1 + ch * N2


def normalized_frame(f, fz, fzz, flip=False):
    N1, N2 = reference_frame(f, fz)
    if flip:
        N1 = -N1
    e2u = np.real(lorentz_c(fz, np.conj(fz)))
    q = lorentz_c(fzz, N1 + N2)
    aq = np.abs(q)
    if np.any(aq == 0):
        raise GeometryError("Hopf differential vanishes; normalized frame undefined")
    beta = 0.5 * np.log(e2u) - np.log(aq)
    return boost_pair(N1, N2, beta)


# ---------------------------------------------------------------------------
# jet sources


@dataclass
class FrameData:
    """Integrated frames F and their coefficient matrices A (F_z = F A) on a grid."""

    F: np.ndarray
    A: np.ndarray


class LocalJet:
    """Fields of one lattice: jets, frame and frame derivatives, all lazy."""

    def __init__(self, lattice, f, fz, fzz, fzzb, rule: FrameRule, anchor=None,
                 N1=None, N2=None, N1z=None, N2z=None):
        self.lattice = lattice
        self.f, self.fz, self.fzz, self.fzzb = f, fz, fzz, fzzb
        self.rule = rule
        self.anchor = anchor
        self._N = (N1, N2, N1z, N2z)
        self.cache: dict = {}

    @cached_property
    def frame(self) -> tuple[Field, Field]:
        N1, N2, _, _ = self._N
        if self.rule.kind == "supplied":
            if N1 is None:
                raise StateError("frame rule 'supplied' but the source has no frame")
            return N1, N2
        L = self.lattice
        if self.rule.kind == "reference":
            def build(f, fz):
                a, b = reference_frame(f, fz)
                return np.stack([-a if self.rule.flip else a, b], axis=-2)
            both = L.map(build, self.f, self.fz)
        elif self.rule.kind == "normalized":
            both = L.map(lambda f, fz, fzz: np.stack(normalized_frame(f, fz, fzz, self.rule.flip), axis=-2),
                         self.f, self.fz, self.fzz)
        else:
            raise StateError(f"unknown frame rule {self.rule.kind!r}")
        return L.map(lambda v: v[..., 0, :], both), L.map(lambda v: v[..., 1, :], both)

    @cached_property
    def frame_z(self) -> tuple[Field, Field]:
        _, _, N1z, N2z = self._N
        if self.rule.kind == "supplied" and N1z is not None:
            return N1z, N2z
        N1, N2 = self.frame
        return self.lattice.dz(N1), self.lattice.dz(N2)

    def to_ambient(self, v: np.ndarray) -> np.ndarray:
        """Map vectors from anchored coordinates back to ambient coordinates."""
        if self.anchor is None:
            return v
        return _matvec(self.anchor, v)


@dataclass
class JetGrid:
    """2-jet of a surface on a grid plus the rule producing its normal frame.

    ``gauge`` optionally holds (beta, beta_z) arrays of a boost applied on top of
    the pointwise frame; see :func:`apply_boost_gauge`.
    """

    grid: GridSpec
    backend: str
    source: object
    rule: FrameRule | None = None
    gauge: tuple | None = None
    step: float = ANALYTIC_STEP
    recenter: bool = True
    chunk: int = CHUNK
    _results: dict = field(default_factory=dict, repr=False, compare=False)

    # -- lattice plumbing -------------------------------------------------
    def locals(self, rule: FrameRule | None = None):
        """Yield (flat index array, LocalJet) pairs covering the grid."""
        rule = rule or self.rule or FrameRule("reference")
        if self.backend == "analytic":
            X, Y = self.grid.nodes()
            x, y = X.ravel(), Y.ravel()
            for start in range(0, x.size, self.chunk):
                idx = np.arange(start, min(start + self.chunk, x.size))
                yield idx, self._analytic_local(x[idx], y[idx], rule)
        else:
            yield np.arange(self.grid.shape[0] * self.grid.shape[1]), self._grid_local(rule)

    def _analytic_local(self, x0, y0, rule):
        surf = self.source
        lat = PointLattice(x0, y0, self.step)
        anchor = surf.anchor(x0, y0) if self.recenter else None
        e = lat.step[0]
        if anchor is not None:
            raw = Field(lat, lambda i, j: surf.local_jets(x0, y0, i * e, j * e))
        else:
            raw = Field(lat, lambda i, j: surf.jets(x0 + i * e, y0 + j * e))
        parts = [lat.map(lambda v, k=k: v[k], raw) for k in range(4)]
        return LocalJet(lat, *parts, rule=rule, anchor=anchor)

    def _grid_local(self, rule):
        lat = GridLattice(self.grid)
        if self.backend == "fd":
            pos = np.asarray(self.source, dtype=float)
            f = lat.table(pos)
            fz = lat.dz(f)
            fzz = lat.dz(fz)
            fzzb = lat.map(np.real, lat.dzb(fz))
            return LocalJet(lat, f, fz, fzz, fzzb, rule=rule)
        if self.backend == "frame":
            # everything in frame components; the frames only map results back
            F, A = self.source.F, self.source.A
            B = np.conj(A)
            lat = FrameLattice(self.grid, A)
            Az_f, Azb_f = lat.dz_dzb(lat.table(A))
            Az, Azb = Az_f.value, Azb_f.value
            e = np.broadcast_to(np.eye(5), A.shape)
            t = lat.table
            return LocalJet(lat, t(e[..., :, 0]), t(A[..., :, 0]), t((A @ A + Az)[..., :, 0]),
                            t(np.real((B @ A + Azb)[..., :, 0])), rule=rule, anchor=F,
                            N1=t(e[..., :, 3]), N2=t(e[..., :, 4]),
                            N1z=t(A[..., :, 3]), N2z=t(A[..., :, 4]))
        raise DomainError(f"unknown backend {self.backend!r}")

    def evaluate(self, fn, rule: FrameRule | None = None) -> dict:
        """Run ``fn(LocalJet) -> dict of arrays`` over the grid and assemble."""
        out: dict = {}
        shape = self.grid.shape
        n = shape[0] * shape[1]
        for idx, lj in self.locals(rule):
            res = fn(lj)
            for k, v in res.items():
                v = np.asarray(v)
                if self.backend != "analytic":
                    out[k] = v.reshape(shape + v.shape[2:]) if v.ndim >= 2 else v
                    continue
                if k not in out:
                    out[k] = np.empty((n,) + v.shape[1:], dtype=v.dtype)
                out[k][idx] = v
        if self.backend == "analytic":
            for k, v in out.items():
                out[k] = v.reshape(shape + v.shape[1:])
        return out

    # -- materialized arrays ---------------------------------------------
    def _jet_arrays(self):
        if "jets" not in self._results:
            def grab(lj):
                out = {"f": lj.f.value, "fz": lj.fz.value, "fzz": lj.fzz.value, "fzzb": lj.fzzb.value}
                return {k: lj.to_ambient(v) for k, v in out.items()}
            self._results["jets"] = self.evaluate(grab)
        return self._results["jets"]

    @property
    def f(self):
        return self._jet_arrays()["f"]

    @property
    def fz(self):
        return self._jet_arrays()["fz"]

    @property
    def fzb(self):
        return np.conj(self.fz)

    @property
    def fzz(self):
        return self._jet_arrays()["fzz"]

    @property
    def fzzb(self):
        return self._jet_arrays()["fzzb"]

    def _frame_arrays(self):
        if self.rule is None:
            raise StateError("normal frame not built; call build_positively_oriented_normal_frame")
        if "frame" not in self._results:
            def grab(lj):
                N1, N2 = lj.frame
                return {"N1": lj.to_ambient(N1.value), "N2": lj.to_ambient(N2.value)}
            fr = self.evaluate(grab)
            if self.gauge is not None:
                fr["N1"], fr["N2"] = boost_pair(fr["N1"], fr["N2"], self.gauge[0])
            self._results["frame"] = fr
        return self._results["frame"]

    @property
    def N1(self):
        return self._frame_arrays()["N1"]

    @property
    def N2(self):
        return self._frame_arrays()["N2"]

    @property
    def has_frame(self) -> bool:
        return self.rule is not None

    def analysis(self, deep: bool = False) -> dict:
        """All pointwise invariants in the pointwise gauge (cached).

        ``deep`` adds the residuals that need third derivatives of the frame
        (conformal Gauss equation, derivative of the dual section); on the
        analytic backend they roughly double the cost.
        """
        key = "analysis_deep" if deep else "analysis"
        if key not in self._results:
            if self.rule is None:
                raise StateError("normal frame not built")
            from . import invariants, null_gauss

            def run(lj):
                out = invariants.local_fields(lj)
                out.update(null_gauss.local_fields(lj, out, deep=deep))
                return out
            self._results[key] = self.evaluate(run)
            if deep:
                self._results["analysis"] = self._results[key]
        return self._results[key]

    def with_rule(self, rule: FrameRule | None, gauge=None) -> "JetGrid":
        return replace(self, rule=rule, gauge=gauge, _results={})

    @property
    def gauge_closure(self) -> dict | None:
        """Path and seam gaps of an integrated gauge, None for a pointwise frame."""
        return self._results.get("gauge_closure")

    def report_mask(self, reach: int = 3) -> np.ndarray:
        if self.backend == "analytic":
            return np.ones(self.grid.shape, dtype=bool)
        return self.grid.interior_mask(reach)


# ---------------------------------------------------------------------------
# public operations


def _grid_for(grid: GridSpec | None, shape=None) -> GridSpec:
    if grid is None:
        grid = GridSpec()
    if shape is not None and tuple(shape) != grid.shape:
        raise ValidationError(f"tabulated shape {shape} does not match grid {grid.shape}")
    return grid


def sample_analytic_surface(definition, grid: GridSpec | None = None, *, step: float = ANALYTIC_STEP,
                            recenter: bool = True, tol: float = 1e-10) -> JetGrid:
    """Analytic-backend jets of a closed-form surface on ``grid``.

    Raises ValidationError naming the worst point when the surface leaves S^4_1.
    """
    grid = _grid_for(grid)
    jet = JetGrid(grid, "analytic", definition, step=step, recenter=recenter)

    def quadric(lj):
        f = lj.f.value
        return {"defect": np.abs(bilinear(f, f) - 1.0)}
    defect = jet.evaluate(quadric)["defect"]
    worst = np.unravel_index(np.argmax(defect), defect.shape)
    if defect[worst] > tol:
        raise ValidationError(f"surface leaves S^4_1: |<f,f>-1| = {defect[worst]:.3e} at grid index {worst}")
    return jet


def jets_by_finite_difference(positions, grid: GridSpec | None = None) -> JetGrid:
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 3 or positions.shape[-1] != 5:
        raise ValidationError("positions must have shape (nx, ny, 5)")
    grid = _grid_for(grid, positions.shape[:2])
    if min(grid.shape) < MIN_RESOLUTION:
        raise DomainError(f"resolution {grid.shape} below {MIN_RESOLUTION} in some axis")
    return JetGrid(grid, "fd", positions)


def jets_from_frames(frames: FrameData, grid: GridSpec) -> JetGrid:
    """Jets of f = F e0 for integrated frames; the frame columns 3, 4 are N1, N2.

    Integrated frames need not close up over a period, so the grid is opened
    (same nodes, no wrap-around in the differences).
    """
    return JetGrid(grid.opened(), "frame", frames, rule=FrameRule("supplied"))


def conformal_factor(jet: JetGrid) -> np.ndarray:
    """u = log <f_z, f_zbar> / 2; raises SpacelikeError at the first bad point."""
    g = np.real(lorentz_c(jet.fz, jet.fzb))
    bad = ~(g > 0)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SpacelikeError(f"<f_z, f_zbar> = {g[idx]:.3e} is not positive at grid index {idx}")
    return 0.5 * np.log(g)


def conformality_residual(jet: JetGrid, threshold: float = 1e-8):
    """Isotropy |<f_z, f_z>| normalized by <f_z, f_zbar>, and quadric defect."""
    from .invariants import ResidualReport

    g = np.real(lorentz_c(jet.fz, jet.fzb))
    iso = np.abs(lorentz_c(jet.fz, jet.fz)) / g
    quad = np.abs(bilinear(jet.f, jet.f) - 1.0)
    mask = jet.report_mask(2)
    rep = ResidualReport(spacing=jet.grid.spacing)
    rep.add("isotropy", iso[mask], threshold)
    rep.add("quadric", quad[mask], threshold)
    return rep


def build_positively_oriented_normal_frame(jet: JetGrid, rule: str = "auto",
                                           isotropy_tol: float = 1e-8) -> JetGrid:
    """Attach the adapted normal frame.

    ``rule``: ``auto`` (normalized when the Hopf differential has no zero on the
    grid, reference otherwise), ``normalized`` or ``reference``.  The normal
    orientation is reversed when the mean curvature vector lies on the null line
    of N1 - N2, so that afterwards H = h (N1 + N2).
    """
    if jet.backend == "frame":
        return jet  # frames come with the integration
    conformal_factor(jet)

    def probe(lj):
        N1, N2 = lj.frame
        n1, n2 = N1.value, N2.value
        e2u = np.real(lorentz_c(lj.fz.value, np.conj(lj.fz.value)))
        fzz, fzzb = lj.fzz.value, lj.fzzb.value
        return {
            "hsum": bilinear(fzzb, n1 - n2) / e2u,   # h1 + h2
            "hdiff": bilinear(fzzb, n1 + n2) / e2u,  # h1 - h2
            "qrel": np.abs(lorentz_c(fzz, n1 + n2)) / np.sqrt(e2u),
            "prel": np.abs(lorentz_c(fzz, n1 - n2)) / np.sqrt(e2u),
        }
    pr = jet.evaluate(probe, FrameRule("reference"))
    mask = jet.report_mask(2)
    flip = bool(np.sum(np.abs(pr["hsum"][mask])) < np.sum(np.abs(pr["hdiff"][mask])))
    # after flipping N1, the roles of N1 + N2 and N1 - N2 swap
    qrel = pr["prel"] if flip else pr["qrel"]
    if rule == "auto":
        scale = 1.0 + float(np.max(np.abs(np.concatenate([pr["qrel"][mask], pr["prel"][mask]]))))
        rule = "normalized" if float(np.min(qrel[mask])) > isotropy_tol * scale else "reference"
    if rule not in ("normalized", "reference"):
        raise ValidationError(f"unknown frame rule {rule!r}")
    return jet.with_rule(FrameRule(rule, flip))


def apply_boost_gauge(jet: JetGrid, beta, beta_z, beta_zz=0.0, beta_zzb=0.0) -> JetGrid:
    """Boost the normal frame by beta(x, y): N1+N2 -> e^beta (N1+N2).

    beta_z (and optionally beta_zz, beta_zzbar) must hold derivatives of beta;
    gauge-dependent invariants are transformed algebraically with them.  Gauges
    compose additively.
    """
    if jet.rule is None:
        raise StateError("normal frame not built")
    shape = jet.grid.shape
    parts = [np.broadcast_to(np.asarray(v, dt), shape).copy()
             for v, dt in ((beta, float), (beta_z, complex), (beta_zz, complex), (beta_zzb, float))]
    if jet.gauge is not None:
        parts = [a + b for a, b in zip(parts, jet.gauge)]
    new = replace(jet, gauge=tuple(parts), _results={})
    # the pointwise analysis does not depend on the gauge, so share it
    for key in ("analysis", "analysis_deep"):
        if key in jet._results:
            new._results[key] = jet._results[key]
    if "jets" in jet._results:
        new._results["jets"] = jet._results["jets"]
    return new


def second_fundamental_data(jet: JetGrid):
    from .invariants import invariant_field

    if not jet.has_frame:
        raise StateError("second fundamental data needs a normal frame")
    return invariant_field(jet)


def integrate_potential(gx, gy, grid: GridSpec, rows_first: bool = False) -> np.ndarray:
    """Integrate d(beta) = gx dx + gy dy over the grid from the origin node.

    Default path: up column 0 (x index 0, increasing y), then along every row in
    x.  ``rows_first`` goes along row 0 first and then up every column.  Uses the
    trapezoid rule with an endpoint derivative correction where derivatives of
    gx, gy are supplied as (gx, gx_x) tuples; plain trapezoid otherwise.
    """
    hx, hy = grid.spacing

    def cum(g, h, axis):
        g = np.asarray(g)
        inc = 0.5 * h * (np.take(g, np.arange(1, g.shape[axis]), axis=axis)
                         + np.take(g, np.arange(0, g.shape[axis] - 1), axis=axis))
        zero = np.zeros_like(np.take(g, [0], axis=axis))
        return np.concatenate([zero, np.cumsum(inc, axis=axis)], axis=axis)

    def corrected(pair, h, axis):
        if isinstance(pair, tuple):
            g, gd = pair
            base = cum(g, h, axis)
            # Euler-Maclaurin: subtract h^2/12 (g'(x_k) - g'(x_0))
            return base - h * h / 12.0 * (gd - np.take(gd, [0], axis=axis))
        return cum(pair, h, axis)

    if not rows_first:
        col = corrected(_slice(gy, 0, 0), hy, 0)          # along y at x index 0
        rows = corrected(gx, hx, 0)                        # along x for each y
        return col[None, :] + rows
    row = corrected(_slice(gx, 1, 0), hx, 0)              # along x at y index 0
    cols = corrected(gy, hy, 1)
    return row[:, None] + cols


def _slice(pair, axis, index):
    if isinstance(pair, tuple):
        return tuple(np.take(p, index, axis=axis) for p in pair)
    return np.take(pair, index, axis=axis)


def parallelize_normal_frame(field, jet: JetGrid, tol: float = 1e-7, kperp_tol: float = 1e-7) -> JetGrid:
    """Boost the frame so that sigma = 0, integrating beta_z = -sigma from the origin.

    Raises IntegrabilityError when the normal bundle is not flat or when the
    two integration paths disagree by more than ``tol`` or the quadrature
    error scale of the grid, whichever is larger.  On periodic axes beta is not
    forced to close up: the mismatch across the seam is only reported, as
    ``seam_gap`` in ``gauge_closure`` of the result.
    """
    a = jet.analysis()
    mask = jet.report_mask(4)
    kperp = np.max(np.abs(np.imag(a["sigma_zb"]))[mask])
    if kperp > kperp_tol:
        raise IntegrabilityError(f"normal bundle is not flat (max |Im sigma_zbar| = {kperp:.3e})")
    sigma = field.sigma
    beta_z = -sigma
    # d beta = beta_x dx + beta_y dy with beta_z = (beta_x - i beta_y) / 2
    gx, gy = 2 * np.real(beta_z), -2 * np.imag(beta_z)
    if jet.backend == "analytic":
        sz, szb = field.sigma_z, field.sigma_zb
        # derivatives of gx, gy along their own axes, from sigma_z and sigma_zbar
        bzz, bzzb = -sz, -szb
        gxx = 2 * np.real(bzz + bzzb)            # d/dx (2 Re beta_z)
        gyy = 2 * np.real(bzzb - bzz)            # d/dy (-2 Im beta_z)
        gx_, gy_ = (gx, gxx), (gy, gyy)
    else:
        gx_, gy_ = gx, gy
    beta = integrate_potential(gx_, gy_, jet.grid)
    beta2 = integrate_potential(gx_, gy_, jet.grid, rows_first=True)
    gap = float(np.max(np.abs(beta - beta2)))
    # the corrected trapezoid rule is fourth order, plain trapezoid second order
    order = 4 if jet.backend == "analytic" else 2
    budget = max(tol, 10.0 * max(jet.grid.spacing) ** order)
    if gap > budget:
        raise IntegrabilityError(f"path-dependent parallel gauge: discrepancy {gap:.3e} > {budget:.1e}")
    out = apply_boost_gauge(jet, beta, beta_z, -field.sigma_z, -np.real(field.sigma_zb))
    seam = 0.0
    # close each row (x) or column (y) through the seam, with the same endpoint
    # correction as the integration itself
    for axis, b, pair in ((0, beta, gx_), (1, beta2, gy_)):
        if not jet.grid.periodic[axis]:
            continue
        h = jet.grid.spacing[axis]
        g, gd = pair if isinstance(pair, tuple) else (pair, None)
        b0, b1 = np.take(b, 0, axis=axis), np.take(b, -1, axis=axis)
        jump = b1 + 0.5 * h * (np.take(g, -1, axis=axis) + np.take(g, 0, axis=axis)) - b0
        if gd is not None:
            jump = jump - h * h / 12.0 * (np.take(gd, 0, axis=axis) - np.take(gd, -1, axis=axis))
        seam = max(seam, float(np.max(np.abs(jump))))
    out._results["gauge_closure"] = {"path_gap": gap, "seam_gap": seam}
    return out
