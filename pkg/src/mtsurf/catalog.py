"""Closed-form surfaces used as ground truth, and the manifest hook that routes
custom surfaces to a backend.

Analytic surfaces expose ``jets(x, y)`` returning ``(f, f_z, f_zz, f_zzbar)`` as
arrays with a trailing axis of length 5.  Surfaces whose ambient coordinates
grow fast over the domain (the flat tori with h > 0 do) additionally expose an
anchor: an isometry A(p) with ``A(p)^{-1} f`` of moderate size near p.  The
analysis pipeline then works in those local coordinates, which keeps inner
products accurate, and maps vectors back at the end.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConsistencyError, ManifestError, ValidationError
from .minkowski import ETA, lorentz_inverse

# ---------------------------------------------------------------------------
# matrix exponential


def _taylor_exp(X: np.ndarray, terms: int = 18) -> np.ndarray:
    n = X.shape[-1]
    out = np.broadcast_to(np.eye(n, dtype=X.dtype), X.shape).copy()
    term = out.copy()
    for k in range(1, terms + 1):
        term = term @ X / k
        out = out + term
    return out


def expm(X) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a Taylor polynomial.

    Works on stacks of square matrices.  Each matrix is scaled by 2^-s so that its
    1-norm is at most 1/2, where 18 Taylor terms leave a truncation error below
    1e-22 relative; the result is then squared s times.
    """
    X = np.asarray(X)
    if not np.iscomplexobj(X):
        X = X.astype(float)
    norms = np.max(np.sum(np.abs(X), axis=-2), axis=-1)
    s = np.maximum(0, np.ceil(np.log2(np.maximum(norms, 1e-300) / 0.5))).astype(int)
    smax = int(np.max(s)) if s.size else 0
    scale = np.ldexp(1.0, -s)[..., None, None]
    E = _taylor_exp(X * scale)
    # square each matrix its own number of times
    for k in range(smax):
        todo = (s > k)[..., None, None]
        E = np.where(todo, E @ E, E)
    return E


# ---------------------------------------------------------------------------
# surface protocol helpers


class AnalyticSurface:
    """Base class: subclasses implement ``jets``; anchors are optional."""

    name = "analytic"
    params: dict = {}

    def jets(self, x, y):
        raise NotImplementedError

    def position(self, x, y):
        return self.jets(x, y)[0]

    def anchor(self, x, y):
        """Isometry per point, or None when absolute coordinates are fine."""
        return None

    def local_jets(self, x0, y0, dx, dy):
        """Jets at (x0 + dx, y0 + dy) expressed in the anchor coordinates of (x0, y0)."""
        A = self.anchor(x0, y0)
        jets = self.jets(np.asarray(x0) + dx, np.asarray(y0) + dy)
        if A is None:
            return jets
        Ainv = lorentz_inverse(A)
        return tuple((Ainv @ v[..., None])[..., 0] for v in jets)

    def describe(self) -> dict:
        return {"id": self.name, **self.params}


def _stack_jets(f, fz, fzz, fzzb):
    return (np.asarray(f, float), np.asarray(fz, complex), np.asarray(fzz, complex),
            np.asarray(fzzb, float) if not np.iscomplexobj(fzzb) else np.real(fzzb))


# ---------------------------------------------------------------------------
# flat homogeneous torus


@dataclass
class FlatTorus(AnalyticSurface):
    """Homogeneous marginally trapped chart with u = 0, xi1 = 1, xi2 = 0, sigma = 0.

    The frame is F(z) = exp(A z + B zbar) with constant commuting A and B = conj(A),
    f = F e0, f_z = F A e0, f_zz = F A^2 e0 and f_zzbar = F A B e0.
    """

    h: float = 1.0
    A: np.ndarray = field(init=False, repr=False)
    B: np.ndarray = field(init=False, repr=False)

    name = "flat_torus"

    def __post_init__(self):
        from .deformation import frame_matrix

        self.A = frame_matrix(u=0.0, u_z=0.0, xi1=1.0, xi2=0.0, h=self.h, sigma=0.0)
        self.B = self.A.conj()
        comm = np.max(np.abs(self.A @ self.B - self.B @ self.A))
        if comm > 1e-12:
            raise ConsistencyError(f"torus coefficient matrices do not commute ({comm:.3e})")
        self.Mx = (self.A + self.B).real
        self.My = (1j * (self.A - self.B)).real
        self._single = {}
        e0 = np.eye(5)[:, 0]
        self._v = (e0, self.A @ e0, self.A @ self.A @ e0, (self.A @ self.B @ e0).real)

    @property
    def params(self):
        return {"h": self.h}

    def frame(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        # exp(x Mx + y My) = exp(x Mx) exp(y My) since the generators commute
        ux, ix = np.unique(x, return_inverse=True)
        uy, iy = np.unique(y, return_inverse=True)
        if ux.size == 1 and uy.size == 1:
            # recentred evaluation shifts every base point by the same offset
            key = (float(ux[0]), float(uy[0]))
            M = self._single.get(key)
            if M is None:
                M = expm(key[0] * self.Mx) @ expm(key[1] * self.My)
                if len(self._single) < 4096:
                    self._single[key] = M
            return np.broadcast_to(M, x.shape + (5, 5))
        Ex = expm(ux[:, None, None] * self.Mx)
        Ey = expm(uy[:, None, None] * self.My)
        return (Ex[ix.reshape(x.shape)] @ Ey[iy.reshape(y.shape)])

    def jets(self, x, y):
        F = self.frame(x, y)
        if F.ndim > 2 and F.strides[0] == 0:
            # one frame broadcast over every point: multiply once
            F0 = F.reshape(-1, 5, 5)[0]
            return _stack_jets(*(np.broadcast_to(F0 @ v, F.shape[:-1]) for v in self._v))
        return _stack_jets(*(F @ v for v in self._v))

    def anchor(self, x, y):
        return self.frame(x, y)

    def local_jets(self, x0, y0, dx, dy):
        # homogeneity: F(p0)^{-1} F(p0 + d) = exp(dx Mx + dy My)
        shape = np.broadcast(np.asarray(x0), np.asarray(dx)).shape
        return self.jets(np.broadcast_to(dx, shape), np.broadcast_to(dy, shape))


# ---------------------------------------------------------------------------
# degenerate surface in the hypersurface orthogonal to e3 + e4


def _profile(spec) -> Callable:
    """t-profile as a callable returning (t, t_x, t_y, t_xx, t_xy, t_yy)."""
    if callable(spec):
        return spec
    spec = dict(spec or {"kind": "zero"})
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return lambda x, y: tuple(np.zeros_like(x) for _ in range(6))
    if kind == "sine":
        a = float(spec.get("amplitude", 0.1))
        k = float(spec.get("wavenumber", 1.0))

        def sine(x, y):
            s, c = np.sin(k * x), np.cos(k * x)
            z = np.zeros_like(x)
            return a * s, a * k * c, z, -a * k * k * s, z, z
        return sine
    if kind == "sine_exp":
        # t = a sin(kx) exp(m y): not harmonic for the sphere metric in general
        a = float(spec.get("amplitude", 0.1))
        k = float(spec.get("wavenumber", 1.0))
        m = float(spec.get("rate", 0.5))

        def sine_exp(x, y):
            s, c, e = np.sin(k * x), np.cos(k * x), np.exp(m * y)
            return (a * s * e, a * k * c * e, a * m * s * e, -a * k * k * s * e,
                    a * k * m * c * e, a * m * m * s * e)
        return sine_exp
    raise ManifestError(f"unknown t-profile kind {kind!r}")


@dataclass
class DegenerateSurface(AnalyticSurface):
    """f = (p, t, t) with p a conformal chart of the unit sphere.

    p is the inverse stereographic projection of zeta = exp(-i b z), which is
    periodic in x with period 2 pi / b.  The null vector e3 + e4 is normal to f,
    so the Hopf differential vanishes and the null Gauss map is constant.
    """

    b: float = 1.0
    profile: object = None
    name = "degenerate"

    @property
    def params(self):
        return {"b": self.b, "profile": self.profile if not callable(self.profile) else "callable"}

    def jets(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        b = self.b
        rho, phi = b * y, -b * x
        S, T = 1.0 / np.cosh(rho), np.tanh(rho)
        c, s = np.cos(phi), np.sin(phi)
        # derivatives of (S, T) in rho
        S1, T1 = -S * T, S * S
        S2, T2 = S * T * T - S ** 3, -2 * S * S * T
        P = np.stack([S * c, S * s, T], axis=-1)
        # d/dx = -b d/dphi, d/dy = b d/drho
        Px = -b * np.stack([-S * s, S * c, 0 * T], axis=-1)
        Py = b * np.stack([S1 * c, S1 * s, T1], axis=-1)
        Pxx = b * b * np.stack([-S * c, -S * s, 0 * T], axis=-1)
        Pyy = b * b * np.stack([S2 * c, S2 * s, T2], axis=-1)
        Pxy = -b * b * np.stack([-S1 * s, S1 * c, 0 * T], axis=-1)
        t, tx, ty, txx, txy, tyy = _profile(self.profile)(x, y)

        def full(p, tt):
            tt = np.asarray(tt)
            return np.concatenate([p, tt[..., None], tt[..., None]], axis=-1)

        f = full(P, t)
        fx, fy = full(Px, tx), full(Py, ty)
        fxx, fxy, fyy = full(Pxx, txx), full(Pxy, txy), full(Pyy, tyy)
        fz = 0.5 * (fx - 1j * fy)
        fzz = 0.25 * (fxx - 2j * fxy - fyy)
        fzzb = 0.25 * (fxx + fyy)
        return _stack_jets(f, fz, fzz, fzzb)


# ---------------------------------------------------------------------------
# holomorphic coordinate changes and derived surfaces


@dataclass
class ConformalMap:
    """Holomorphic map z = g(w) with its first three derivatives."""

    kind: str = "affine"
    a: complex = 1.0
    b: complex = 0.0
    c: complex = 0.0
    d: complex = 1.0

    def derivatives(self, w):
        w = np.asarray(w, complex)
        a, b, c, d = self.a, self.b, self.c, self.d
        if self.kind == "affine":  # a w + b
            one = np.ones_like(w)
            return a * w + b, a * one, 0 * one, 0 * one
        if self.kind == "exp":  # b + a exp(c w)  (c defaults to 1)
            cc = c if c != 0 else 1.0
            e = a * np.exp(cc * w)
            return b + e, cc * e, cc * cc * e, cc ** 3 * e
        if self.kind == "moebius":  # (a w + b) / (c w + d)
            den = c * w + d
            det = a * d - b * c
            return ((a * w + b) / den, det / den ** 2, -2 * c * det / den ** 3,
                    6 * c * c * det / den ** 4)
        if self.kind == "sine":  # w + a sin(w)
            return w + a * np.sin(w), 1 + a * np.cos(w), -a * np.sin(w), -a * np.cos(w)
        raise ManifestError(f"unknown conformal map kind {self.kind!r}")

    def __call__(self, w):
        return self.derivatives(w)[0]

    def schwarzian(self, w):
        """S_w(g) = (g''/g')' - (g''/g')^2 / 2."""
        _, g1, g2, g3 = self.derivatives(w)
        return g3 / g1 - 1.5 * (g2 / g1) ** 2


@dataclass
class Reparametrized(AnalyticSurface):
    """The surface w -> base(g(w)) for a holomorphic coordinate change g."""

    base: AnalyticSurface
    g: ConformalMap
    name = "reparametrized"

    @property
    def params(self):
        return {"base": self.base.describe(), "map": vars(self.g)}

    def _pull(self, jets, w):
        f, fz, fzz, fzzb = jets
        _, g1, g2, _ = self.g.derivatives(w)
        g1, g2 = g1[..., None], g2[..., None]
        return _stack_jets(f, fz * g1, fzz * g1 * g1 + fz * g2, fzzb * np.abs(g1) ** 2)

    def _image(self, x, y):
        z = self.g(np.asarray(x) + 1j * np.asarray(y))
        return z.real, z.imag

    def jets(self, x, y):
        w = np.asarray(x) + 1j * np.asarray(y)
        return self._pull(self.base.jets(*self._image(x, y)), w)

    def anchor(self, x, y):
        return self.base.anchor(*self._image(x, y))

    def local_jets(self, x0, y0, dx, dy):
        w = np.asarray(x0) + dx + 1j * (np.asarray(y0) + dy)
        X0, Y0 = self._image(x0, y0)
        X, Y = self._image(np.asarray(x0) + dx, np.asarray(y0) + dy)
        return self._pull(self.base.local_jets(X0, Y0, X - X0, Y - Y0), w)


@dataclass
class Isometric(AnalyticSurface):
    """Phi o base for a Lorentz transformation Phi."""

    base: AnalyticSurface
    Phi: np.ndarray
    use_anchor: bool = True
    name = "isometric"

    @property
    def params(self):
        return {"base": self.base.describe(), "Phi": np.asarray(self.Phi).tolist()}

    def jets(self, x, y):
        return tuple(np.einsum("ij,...j->...i", self.Phi, v) for v in self.base.jets(x, y))

    def anchor(self, x, y):
        if not self.use_anchor:
            return None
        A = self.base.anchor(x, y)
        return None if A is None else self.Phi @ A

    def local_jets(self, x0, y0, dx, dy):
        if not self.use_anchor or self.base.anchor(x0, y0) is None:
            return AnalyticSurface.local_jets(self, x0, y0, dx, dy)
        return self.base.local_jets(x0, y0, dx, dy)


@dataclass
class FunctionSurface(AnalyticSurface):
    """User supplied jets callable."""

    fn: Callable = None
    name = "function"

    def jets(self, x, y):
        return _stack_jets(*self.fn(x, y))


# ---------------------------------------------------------------------------
# public generators


def flat_homogeneous_torus(h: float = 1.0) -> FlatTorus:
    return FlatTorus(h=float(h))


def degenerate_graph_surface(profile=None, b: float = 1.0) -> DegenerateSurface:
    if b == 0:
        raise ValidationError("sphere chart scale must be nonzero")
    return DegenerateSurface(b=float(b), profile=profile)


def stereographic_chart_check(surface: DegenerateSurface, x, y, tol=1e-12) -> float:
    """Conformality defect of the sphere chart, raising when above ``tol``."""
    _, fz, _, _ = surface.jets(x, y)
    p = fz[..., :3]
    defect = float(np.max(np.abs(np.sum(p * p, axis=-1))))
    if defect > tol:
        raise ValidationError(f"sphere chart is not conformal (defect {defect:.3e})")
    return defect


@dataclass
class Tabulated:
    """Positions on a grid, to be differentiated by finite differences."""

    positions: np.ndarray
    source: str = ""
    name = "tabulated"

    def describe(self):
        return {"id": self.name, "source": self.source}


def read_positions_csv(path, grid_shape=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a CSV with header x,y,f0..f4; return (x, y, positions[nx, ny, 5]).

    Rows may come in any order; they are sorted onto the grid by (x, y).
    """
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ManifestError(f"{path}: empty file") from None
        want = ["x", "y", "f0", "f1", "f2", "f3", "f4"]
        if header[:7] != want:
            raise ManifestError(f"{path}: header must start with {','.join(want)}, got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row[:7]])
            except ValueError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
            if len(row) < 7:
                raise ManifestError(f"{path}:{lineno}: expected 7 columns, got {len(row)}")
    data = np.array(rows)
    if data.size == 0:
        raise ManifestError(f"{path}: no data rows")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if len(xs) * len(ys) != len(data):
        raise ManifestError(f"{path}: rows do not form a rectangular grid")
    if grid_shape is not None and (len(xs), len(ys)) != tuple(grid_shape):
        raise ManifestError(f"{path}: grid {len(xs)}x{len(ys)} does not match {grid_shape}")
    order = np.lexsort((data[:, 1], data[:, 0]))
    pos = data[order, 2:].reshape(len(xs), len(ys), 5)
    return xs, ys, pos


def custom_surface(entry: dict):
    """Route a manifest surface entry to an analytic or tabulated definition."""
    if not isinstance(entry, dict):
        raise ManifestError("surface entry must be an object")
    sources = [k for k in ("id", "csv") if k in entry]
    if len(sources) != 1:
        raise ManifestError("surface entry needs exactly one of 'id' or 'csv'")
    if "csv" in entry:
        _, _, pos = read_positions_csv(entry["csv"])
        return Tabulated(pos, source=str(entry["csv"]))
    sid = entry["id"]
    params = entry.get("params", {})
    try:
        if sid == "flat_torus":
            surf = flat_homogeneous_torus(float(params.get("h", 1.0)))
        elif sid == "degenerate":
            surf = degenerate_graph_surface(params.get("profile"), float(params.get("b", 1.0)))
        else:
            raise ManifestError(f"unknown surface id {sid!r}")
        if "reparametrize" in params:
            rp = dict(params["reparametrize"])
            coeffs = {k: complex(*v) if isinstance(v, (list, tuple)) else complex(v)
                      for k, v in rp.items() if k in "abcd"}
            surf = Reparametrized(surf, ConformalMap(rp.get("kind", "affine"), **coeffs))
        if "isometry" in params:
            surf = Isometric(surf, np.array(params["isometry"], dtype=float))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ManifestError):
            raise
        raise ManifestError(f"bad parameters for {sid!r}: {exc}") from None
    return surf


__all__ = [
    "expm", "FlatTorus", "DegenerateSurface", "ConformalMap", "Reparametrized",
    "Isometric", "FunctionSurface", "Tabulated", "flat_homogeneous_torus",
    "degenerate_graph_surface", "custom_surface", "read_positions_csv", "ETA",
]
