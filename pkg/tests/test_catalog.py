import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from mtsurf.catalog import (ConformalMap, Isometric, Reparametrized, Tabulated, custom_surface,
                            degenerate_graph_surface, expm, flat_homogeneous_torus,
                            read_positions_csv, stereographic_chart_check)
from mtsurf.errors import ManifestError
from mtsurf.minkowski import bilinear, random_lorentz

pts = st.tuples(st.floats(-3, 3), st.floats(-3, 3))


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 30))
@settings(max_examples=40)
def test_expm_matches_scipy(seed, scale):
    X = np.random.default_rng(seed).normal(size=(5, 5)) * scale / 5
    ref = scipy.linalg.expm(X)
    assert np.max(np.abs(expm(X) - ref)) <= 1e-13 * max(1.0, np.max(np.abs(ref))) * (1 + scale)


def test_expm_batches_and_complex():
    X = np.random.default_rng(0).normal(size=(3, 4, 4)) + 1j * np.random.default_rng(1).normal(size=(3, 4, 4))
    for k in range(3):
        assert np.allclose(expm(X)[k], scipy.linalg.expm(X[k]), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("h", [0.0, 0.5, 1.0, 2.0])
@given(p=pts)
@settings(max_examples=10, deadline=None)
def test_torus_is_conformal_and_on_the_quadric(h, p):
    f, fz, fzz, fzzb = flat_homogeneous_torus(h).jets(*p)
    scale = np.max(np.abs(f)) ** 2
    assert bilinear(f, f) == pytest.approx(1.0, abs=1e-12 * scale)
    assert abs(bilinear(fz, fz)) < 1e-12 * scale
    # u = 0 in this chart
    assert np.real(bilinear(fz, np.conj(fz))) == pytest.approx(1.0, abs=1e-12 * scale)


def test_torus_anchor_recentres():
    T = flat_homogeneous_torus(1.0)
    f0 = T.local_jets(np.array([2.0]), np.array([1.0]), 0.0, 0.0)[0]
    assert np.allclose(f0, [[1, 0, 0, 0, 0]], atol=1e-14)


@given(p=pts)
@settings(max_examples=20)
def test_degenerate_surface_is_null_normal_and_spacelike(p):
    D = degenerate_graph_surface({"kind": "sine_exp", "amplitude": 0.2})
    f, fz, fzz, fzzb = D.jets(*p)
    n = np.array([0, 0, 0, 1.0, 1.0])
    assert bilinear(f, f) == pytest.approx(1.0, abs=1e-12)
    assert abs(bilinear(fz, fz)) < 1e-12
    assert np.real(bilinear(fz, np.conj(fz))) > 0
    assert abs(bilinear(f, n)) < 1e-14 and abs(bilinear(fz, n)) < 1e-14


def test_stereographic_chart_is_conformal():
    D = degenerate_graph_surface()
    x, y = np.meshgrid(np.linspace(0, 6, 7), np.linspace(-2, 2, 5))
    assert stereographic_chart_check(D, x, y) < 1e-14


@pytest.mark.parametrize("g", [ConformalMap("affine", a=0.5 + 0.2j, b=1.0),
                               ConformalMap("exp", a=0.3), ConformalMap("sine", a=0.3),
                               ConformalMap("moebius", a=1.0, b=0.1, c=0.2, d=1.0)])
def test_conformal_map_derivatives(g):
    w = np.array([0.3 + 0.2j, -0.7 + 0.1j])
    e = 1e-5
    _, g1, g2, g3 = g.derivatives(w)
    num1 = (g(w + e) - g(w - e)) / (2 * e)
    num2 = (g(w + e) - 2 * g(w) + g(w - e)) / e ** 2
    assert np.allclose(g1, num1, atol=1e-8)
    assert np.allclose(g2, num2, atol=1e-4)
    _, a1, a2, _ = g.derivatives(w + e)
    _, b1, b2, _ = g.derivatives(w - e)
    assert np.allclose(g3, (a2 - b2) / (2 * e), atol=1e-6)


def test_moebius_has_zero_schwarzian():
    g = ConformalMap("moebius", a=1.0, b=0.3, c=0.4, d=2.0)
    assert np.max(np.abs(g.schwarzian(np.array([0.1 + 0.5j, 1.0])))) < 1e-12


def test_reparametrized_chain_rule():
    T = flat_homogeneous_torus(0.5)
    g = ConformalMap("affine", a=np.exp(0.4j), b=0.2)
    R = Reparametrized(T, g)
    w = 0.3 + 0.8j
    z = g(w)
    f, fz, fzz, fzzb = R.jets(w.real, w.imag)
    F, Fz, Fzz, Fzzb = T.jets(z.real, z.imag)
    assert np.allclose(f, F) and np.allclose(fz, Fz * g.a) and np.allclose(fzz, Fzz * g.a ** 2)
    assert np.allclose(fzzb, Fzzb)


def test_isometric_copy():
    Phi = random_lorentz(np.random.default_rng(3))
    T = flat_homogeneous_torus(1.0)
    S = Isometric(T, Phi, use_anchor=False)
    assert np.allclose(S.jets(0.5, 0.2)[0], Phi @ T.jets(0.5, 0.2)[0])
    assert S.anchor(0.5, 0.2) is None


def _write(tmp_path, text):
    p = tmp_path / "pos.csv"
    p.write_text(text)
    return p


def test_read_positions_csv_sorts_rows(tmp_path):
    rows = ["x,y,f0,f1,f2,f3,f4"]
    for x, y in [(1, 1), (0, 0), (1, 0), (0, 1)]:
        rows.append(f"{x},{y},{x},{y},0,0,1")
    xs, ys, pos = read_positions_csv(_write(tmp_path, "\n".join(rows)))
    assert list(xs) == [0, 1] and list(ys) == [0, 1]
    assert pos[1, 0, 0] == 1 and pos[0, 1, 1] == 1


@pytest.mark.parametrize("text, match", [
    ("", "empty"),
    ("x,y,a\n", "header"),
    ("x,y,f0,f1,f2,f3,f4\n0,0,1,2,3,4,oops\n", ":2:"),
    ("x,y,f0,f1,f2,f3,f4\n", "no data"),
    ("x,y,f0,f1,f2,f3,f4\n0,0,1,0,0,0,0\n1,1,1,0,0,0,0\n1,0,1,0,0,0,0\n", "rectangular"),
])
def test_read_positions_csv_diagnostics(tmp_path, text, match):
    with pytest.raises(ManifestError, match=match):
        read_positions_csv(_write(tmp_path, text))


def test_custom_surface_routing(tmp_path):
    assert custom_surface({"id": "flat_torus", "params": {"h": 2}}).h == 2.0
    assert custom_surface({"id": "degenerate"}).name == "degenerate"
    rp = custom_surface({"id": "flat_torus", "params": {"reparametrize": {"kind": "affine", "a": [0, 1]}}})
    assert isinstance(rp, Reparametrized) and rp.g.a == 1j
    p = _write(tmp_path, "x,y,f0,f1,f2,f3,f4\n0,0,1,0,0,0,0\n")
    assert isinstance(custom_surface({"csv": str(p)}), Tabulated)
    with pytest.raises(ManifestError, match="unknown surface id"):
        custom_surface({"id": "klein_bottle"})
    with pytest.raises(ManifestError, match="exactly one"):
        custom_surface({"id": "flat_torus", "csv": str(p)})
    with pytest.raises(ManifestError, match="profile"):
        custom_surface({"id": "degenerate", "params": {"profile": {"kind": "spiral"}}}).jets(0.0, 0.0)
