"""Independent reference values at single points.

Everything is computed from the position map alone, in 80-digit arithmetic,
with nested central differences.  Only gauge-free quantities are produced:
u, K, Q, delta = <f_zz, H>, kappa^2 and s (from the canonical lift and its dual
section), so no normal frame convention enters.
"""
from __future__ import annotations

import mpmath as mp

DPS = 80
STEP = mp.mpf("1e-16")
SIGN = (1, 1, 1, 1, -1)


def _dot(a, b):
    return sum(SIGN[k] * a[k] * b[k] for k in range(5))


def _add(*terms):
    out = [mp.mpc(0)] * 5
    for c, v in terms:
        out = [o + c * x for o, x in zip(out, v)]
    return out


def partials(fun, x, y, h=STEP):
    """(f, f_x, f_y, f_xx, f_xy, f_yy) by second order central differences."""
    g = {(i, j): fun(x + i * h, y + j * h) for i in (-1, 0, 1) for j in (-1, 0, 1)}

    def comb(c):
        return [sum(w * g[k][n] for k, w in c.items()) for n in range(5)]
    return (g[0, 0],
            comb({(1, 0): 1 / (2 * h), (-1, 0): -1 / (2 * h)}),
            comb({(0, 1): 1 / (2 * h), (0, -1): -1 / (2 * h)}),
            comb({(1, 0): 1 / h ** 2, (0, 0): -2 / h ** 2, (-1, 0): 1 / h ** 2}),
            comb({(1, 1): 1 / (4 * h * h), (-1, -1): 1 / (4 * h * h),
                  (1, -1): -1 / (4 * h * h), (-1, 1): -1 / (4 * h * h)}),
            comb({(0, 1): 1 / h ** 2, (0, 0): -2 / h ** 2, (0, -1): 1 / h ** 2}))


def complex_jets(p):
    f, fx, fy, fxx, fxy, fyy = p
    fz = [(a - 1j * b) / 2 for a, b in zip(fx, fy)]
    fzz = [(a - 2j * b - c) / 4 for a, b, c in zip(fxx, fxy, fyy)]
    fzzb = [(a + c) / 4 for a, c in zip(fxx, fyy)]
    return f, fz, fzz, fzzb


def _normal_projector(f, fx, fy):
    """Project onto the orthogonal complement of span(f, f_x, f_y)."""
    basis = [f, fx, fy]
    G = mp.matrix(3, 3)
    for i in range(3):
        for j in range(3):
            G[i, j] = _dot(basis[i], basis[j])
    Ginv = G ** -1

    def proj(v):
        c = [_dot(b, v) for b in basis]
        coef = [sum(Ginv[i, j] * c[j] for j in range(3)) for i in range(3)]
        return _add((1, v), *[(-coef[i], basis[i]) for i in range(3)])
    return proj


def surface_data(fun, x, y):
    """u, K-ingredients, Q, delta, H and the null direction of H at (x, y)."""
    p = partials(fun, x, y)
    f, fx, fy = p[0], p[1], p[2]
    _, fz, fzz, fzzb = complex_jets(p)
    e2u = mp.re(_dot(fz, [mp.conj(v) for v in fz]))
    proj = _normal_projector(f, fx, fy)
    H = [v / e2u for v in proj(fzzb)]
    nzz = proj(fzz)
    return {"u": mp.log(e2u) / 2, "Q": _dot(nzz, nzz), "delta": _dot(fzz, H), "H": H,
            "HH": _dot(H, H), "nzz": nzz, "proj": proj}


def _lift(fun, x, y, sign=1):
    """Canonical lift e^u / (sqrt2 |q|) L with L a null normal along H."""
    d = surface_data(fun, x, y)
    H = [mp.re(v) for v in d["H"]]
    hn = mp.sqrt(sum(v * v for v in H))
    L = [sign * v / hn for v in H]
    q = _dot(d["nzz"], L)
    return [mp.exp(d["u"]) / (mp.sqrt(2) * abs(q)) * v for v in L]


def conformal_data(fun, x, y, sign=1):
    """kappa^2 and s from the canonical lift of the Gauss map (needs H != 0)."""
    with mp.workdps(DPS):
        x, y = mp.mpf(x), mp.mpf(y)
        h2 = mp.mpf("1e-12")
        pY = partials(lambda a, b: _lift(fun, a, b, sign), x, y, h2)
        Y, Yz, Yzz, Yzzb = complex_jets(pY)
        Yzzb = [mp.re(v) for v in Yzzb]
        N = _add((2 * _dot(Yzzb, Yzzb), Y), (2, Yzzb))
        s = 2 * _dot(Yzz, N)
        d = surface_data(fun, x, y)
        q = _dot(d["nzz"], [sign * v for v in d["H"]])
        kappa2 = mp.exp(2 * d["u"]) * q * q / (2 * abs(q) ** 2)
        return {"kappa2": complex(kappa2), "s": complex(s),
                "lift_norm": complex(_dot(Yz, [mp.conj(v) for v in Yz]))}


def point_values(fun, x, y):
    """u, K, Q, delta and <H, H> at (x, y)."""
    with mp.workdps(DPS):
        x, y = mp.mpf(x), mp.mpf(y)
        d = surface_data(fun, x, y)
        h = mp.mpf("1e-12")
        uu = partials(lambda a, b: [surface_data(fun, a, b)["u"]] * 5, x, y, h)
        lap = uu[3][0] + uu[5][0]
        # metric 2 e^{2u} |dz|^2
        K = -lap / (2 * mp.exp(2 * d["u"]))
        return {"u": float(d["u"]), "K": float(K), "Q": complex(d["Q"]),
                "delta": complex(d["delta"]), "HH": float(mp.re(d["HH"]))}


# ---------------------------------------------------------------------------
# surfaces in mp arithmetic


def torus(h):
    """Position map of the homogeneous torus, exp(x Mx + y My) e0."""
    from mtsurf.catalog import flat_homogeneous_torus

    T = flat_homogeneous_torus(h)
    Mx = mp.matrix(T.Mx.tolist())
    My = mp.matrix(T.My.tolist())

    def fun(x, y):
        E = mp.expm(x * Mx + y * My)
        return [E[k, 0] for k in range(5)]
    return fun


def reparametrized_torus(h, a):
    """Torus composed with z = w + a sin(w)."""
    base = torus(h)

    def fun(x, y):
        w = mp.mpc(x, y)
        z = w + a * mp.sin(w)
        return base(mp.re(z), mp.im(z))
    return fun


def degenerate(amplitude, wavenumber=1):
    """(p, t, t) with p the inverse stereographic image of exp(-i z), t = a sin(k x)."""
    def fun(x, y):
        S, T = 1 / mp.cosh(y), mp.tanh(y)
        t = amplitude * mp.sin(wavenumber * x)
        return [S * mp.cos(-x), S * mp.sin(-x), T, t, t]
    return fun
