import numpy as np
import pytest

from conftest import DEGENERATE_GRID, cached, degenerate_jet, torus_jet
from mtsurf.catalog import ConformalMap, Reparametrized, flat_homogeneous_torus
from mtsurf.chart import build_positively_oriented_normal_frame, sample_analytic_surface
from mtsurf.deformation import (alpha_family, assemble_frame_matrix, closed_form_frame, coefficients,
                                deform, extended_symmetry_residuals, extract_deformed_surface,
                                frame_matrix, gauss_transform_harmonicity_residual,
                                integrate_extended_frame, lie_algebra_residual,
                                maurer_cartan_residual, prepare_base, reductive_split,
                                relative_orthogonality)
from mtsurf.errors import IntegrabilityError, NormalizationError, ParameterError, StateError
from mtsurf.fields import GridSpec
from mtsurf.invariants import convergence_order, invariant_field
from surfaces import small_sphere

LAM_I = 1j
LAM_30 = np.exp(1j * np.pi / 6)


def base(h=1.0, family="lambda", n=32):
    return cached(("base", h, family, n), lambda: prepare_base(torus_jet(h, n), family))


def reparametrized_jet(n, kind="sine", **params):
    surf = Reparametrized(flat_homogeneous_torus(1.0), ConformalMap(kind, **params))
    grid = GridSpec((n, n), (0.0, -0.5), (2 * np.pi, 1.0), (True, False))
    return build_positively_oriented_normal_frame(sample_analytic_surface(surf, grid))


def test_frame_matrix_is_in_the_lie_algebra():
    rng = np.random.default_rng(0)
    u, h = rng.normal(size=4), rng.normal(size=4)
    xi1, xi2, uz, sig = (rng.normal(size=4) + 1j * rng.normal(size=4) for _ in range(4))
    A = frame_matrix(u, uz, xi1, xi2, h, sig)
    # A is a complex combination of real so(4,1) elements
    assert lie_algebra_residual(A) < 1e-14


def test_coefficient_signs():
    a1, a2, b1, b2 = coefficients(0.0, 2.0, 0.5, 1.0)
    s = np.sqrt(2)
    assert np.allclose([a1, a2, b1, b2], [3 / s, 1.5 / s, 1 / s, -0.5 / s])


def test_frame_matrix_reproduces_analytic_jets(torus1):
    # F_z = F A with F the adapted frame (f, F1, F2, N1, N2)
    coeff = base().coeff
    from mtsurf.null_gauss import adapted_frame
    F = adapted_frame(torus1, (3, 5))
    fz = torus1.fz[3, 5]
    assert np.allclose(F @ coeff.A[3, 5][:, 0], fz, atol=1e-10)


@pytest.mark.parametrize("n", [16, 32])
def test_maurer_cartan_holds_for_oracle_surfaces(n):
    assert maurer_cartan_residual(base(n=n).coeff, 1e-10).passed
    coeff = assemble_frame_matrix(invariant_field(reparametrized_jet(n, a=0.25)))
    assert maurer_cartan_residual(coeff, 1e-9).passed
    coeff = assemble_frame_matrix(invariant_field(degenerate_jet({"kind": "sine_exp", "amplitude": 0.2}, n)))
    assert maurer_cartan_residual(coeff, 1e-9).passed


def test_reductive_split_and_trivial_members():
    varying = assemble_frame_matrix(invariant_field(reparametrized_jet(16, a=0.25)))
    sp = reductive_split(varying)
    assert np.allclose(sp.A_m + sp.A_h, varying.A)
    support = np.abs(sp.A_h).max(axis=(0, 1)) > 0
    assert set(zip(*np.nonzero(support))) == {(1, 2), (2, 1)}
    assert np.all(sp.A_m[..., 1, 2] == 0)
    coeff = base().coeff
    sp = reductive_split(coeff)
    same = alpha_family(sp, 1.0)
    assert np.allclose(same.A, coeff.A) and np.allclose(same.B, coeff.B)
    calapso0 = alpha_family(base(family="calapso").coeff, 0.0, "calapso")
    assert np.allclose(calapso0.A, base(family="calapso").coeff.A)


@pytest.mark.parametrize("lam", [LAM_I, LAM_30, -1.0])
def test_lambda_family_stays_integrable(lam):
    coeff = alpha_family(base().coeff, lam)
    assert maurer_cartan_residual(coeff, 1e-10).passed
    # unit lambda keeps the real form: B is still the conjugate of A
    assert np.allclose(coeff.B, np.conj(coeff.A))


def test_extended_member_leaves_the_real_form():
    coeff = alpha_family(base().coeff, 2.0, "extended")
    assert maurer_cartan_residual(coeff, 1e-10).passed
    assert not np.allclose(coeff.B, np.conj(coeff.A))


def test_lambda_family_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        alpha_family(base().coeff, 2.0)
    with pytest.raises(ParameterError):
        alpha_family(base().coeff, 0.0, "extended")
    with pytest.raises(ParameterError):
        alpha_family(base().coeff, 1.0, "bogus")


def test_integration_matches_closed_form():
    coeff = alpha_family(base().coeff, LAM_30)
    fr = integrate_extended_frame(coeff, F0=base().F0)
    ref = closed_form_frame(coeff, F0=base().F0)
    assert np.max(np.abs(fr.F - ref)) / np.max(np.abs(ref)) < 1e-8
    assert fr.orthogonality_residual < 1e-12
    assert fr.path_discrepancy < 1e-10
    assert relative_orthogonality(ref) < 1e-12


def test_integration_refuses_non_integrable_coefficients():
    coeff = base().coeff
    from dataclasses import replace
    X, _ = coeff.grid.nodes()
    A = coeff.A * (1 + 0.1 * np.sin(X))[..., None, None]
    bad = replace(coeff, A=A, B=np.conj(A), A_zb=None, B_z=None)
    with pytest.raises(IntegrabilityError):
        integrate_extended_frame(bad)


def test_integrator_is_fourth_order_on_varying_coefficients():
    errs = []
    for n in (16, 32):
        jet = reparametrized_jet(n, a=0.25)
        b = prepare_base(jet, "lambda")
        fr = integrate_extended_frame(b.coeff, F0=b.F0, path_budget=1.0)
        f = jet.f
        errs.append(np.max(np.abs(fr.F[..., :, 0] - f)) / np.max(np.abs(f)))
    assert convergence_order(*errs) > 3.5


def test_identity_member_reproduces_the_surface(torus1):
    d = deform(base(), 1.0)
    assert np.max(np.abs(d.frames.F[..., :, 0] - torus1.f)) / np.max(np.abs(torus1.f)) < 1e-8
    assert d.laws.passed


@pytest.mark.parametrize("lam", [LAM_I, LAM_30])
def test_lambda_laws(lam):
    d = deform(base(), lam)
    for k in ("u", "xi1", "xi2", "h", "kappa", "s", "delta"):
        assert d.laws[k] < 1e-6, k
    assert d.laws["isotropy"] < 1e-8
    assert d.laws.entries["flags"]["marginally_trapped"]


@pytest.mark.parametrize("t", [1.0, 3.0])
def test_calapso_laws(t):
    b = base(family="calapso")
    assert b.c == pytest.approx(1.0)
    d = deform(b, t, "calapso")
    for k in ("kappa", "s", "h", "xi1", "xi2", "u"):
        assert d.laws[k] < 1e-6, k
    assert np.allclose(d.field.h, 1.0 + t / 2, atol=1e-6)
    flags = d.laws.entries["flags"]
    assert flags["marginally_trapped"] and flags["flat_normal_bundle"]


def test_calapso_on_a_rotated_chart():
    # q = e^{i phi} in the rotated chart; the base is rotated back to q real
    jet = reparametrized_jet(16, kind="affine", a=np.exp(0.6j))
    b = prepare_base(jet, "calapso")
    assert b.rotation_angle == pytest.approx(-0.6, abs=1e-9) or b.rotation_angle == pytest.approx(0.6, abs=1e-9)
    assert b.c == pytest.approx(1.0, abs=1e-9)


def test_calapso_needs_constant_hopf_differential():
    with pytest.raises(NormalizationError):
        prepare_base(reparametrized_jet(16, a=0.25), "calapso")


def test_preconditions_name_the_flag(degenerate):
    with pytest.raises(StateError, match="non_isotropic"):
        prepare_base(degenerate, "lambda")
    grid = GridSpec((16, 16), **DEGENERATE_GRID)
    sphere = build_positively_oriented_normal_frame(sample_analytic_surface(small_sphere(), grid))
    with pytest.raises(StateError, match="marginally_trapped"):
        prepare_base(sphere, "calapso")
    with pytest.raises(ParameterError):
        prepare_base(torus_jet(1.0, 16), "bogus")


def test_deformed_surface_record():
    fr = integrate_extended_frame(alpha_family(base().coeff, LAM_I), F0=base().F0)
    jet, fld = extract_deformed_surface(fr)
    assert jet.backend == "frame" and jet.grid.periodic == (False, False)
    assert fld.is_marginally_trapped


@pytest.mark.parametrize("lam", [2.0, 1 + 1j])
def test_extended_symmetry(lam):
    rep = extended_symmetry_residuals(torus_jet(1.0, 16), lam, 1e-8)
    assert rep.passed


def test_harmonicity_vanishes_for_parallel_mean_curvature(torus1):
    rep = gauss_transform_harmonicity_residual(torus1, threshold=1e-9)
    assert rep.passed


def test_harmonicity_pattern_on_non_parallel_surface():
    jet = degenerate_jet({"kind": "sine_exp", "amplitude": 0.2}, 24)
    rep = gauss_transform_harmonicity_residual(jet)
    assert rep["harmonicity"] > 1e-3
    assert rep["pattern_gap"] < 1e-8
