"""Manifest-driven command line front end.

A manifest is a JSON object::

    {
      "surface": {"id": "flat_torus", "params": {"h": 1.0}},   # or {"csv": "positions.csv"}
      "grid": {"shape": [64, 64], "origin": [0, 0], "extent": [6.283185307179586, 6.283185307179586],
               "periodic": [true, true]},
      "backend": "analytic",                                   # or "fd"
      "tolerance": 1e-8,
      "frame_rule": "auto",
      "deform": {"family": "lambda", "params": [[0, 1], [0.8660254037844387, 0.5]]},
      "output": "out"
    }

Complex parameters are given as numbers, [re, im] pairs or strings accepted by
``complex()``.  Relative paths are resolved against the manifest's directory.

Exit codes: 0 success, 1 residuals or laws above tolerance, verify reports
not congruent, or the data fail a geometric check, 2 manifest, IO or parse
error, 3 violated precondition, 4 grid mismatch.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from .catalog import Tabulated, custom_surface, read_positions_csv
from .chart import (build_positively_oriented_normal_frame, conformality_residual,
                    jets_by_finite_difference, sample_analytic_surface)
from .errors import (DomainError, IntegrabilityError, IntegrationError, IsotropyError,
                     ManifestError, NormalizationError, ParameterError, StateError,
                     SurfaceError)
from .fields import GridSpec
from .invariants import compatibility_residuals, flags, hopf_differentials, invariant_field
from .null_gauss import (classify_gauss_map, conformal_invariants, congruence_test,
                         fundamental_equation_residual, willmore_energy)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_PRECONDITION, EXIT_GRID = 0, 1, 2, 3, 4
FAMILIES = ("lambda", "calapso", "extended")


class Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# serialization


def fmt(x) -> str:
    return format(float(x), ".17g")


def _json_text(obj, indent=0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_json_text(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _json_text(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return _json_text([obj.real, obj.imag])
    if isinstance(obj, np.ndarray):
        return _json_text(obj.tolist(), indent)
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_json_text(obj) + "\n")


def write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float).ravel() for k in names])
    lines = [",".join(names)]
    lines.extend(",".join(fmt(v) for v in row) for row in data)
    path.write_text("\n".join(lines) + "\n")


def _coords(grid: GridSpec) -> dict:
    X, Y = grid.nodes()
    return {"x": X.ravel(), "y": Y.ravel()}


def write_positions(path: Path, grid: GridSpec, f: np.ndarray) -> None:
    cols = _coords(grid)
    for i in range(5):
        cols[f"f{i}"] = f[..., i].ravel()
    write_csv(path, cols)


# ---------------------------------------------------------------------------
# manifest


def parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return complex(float(v))


@dataclass
class Manifest:
    surface: dict
    grid: GridSpec
    backend: str
    tolerance: float | None
    frame_rule: str
    deform: dict | None
    output: Path | None
    base_dir: Path
    digest: str
    raw: dict = field(default_factory=dict)


def _grid_from(entry: dict | None, shape_override=None) -> GridSpec:
    entry = dict(entry or {})
    try:
        shape = tuple(int(v) for v in entry.get("shape", (64, 64)))
        origin = tuple(float(v) for v in entry.get("origin", (0.0, 0.0)))
        extent = tuple(float(v) for v in entry.get("extent", (2 * np.pi, 2 * np.pi)))
        periodic = tuple(bool(v) for v in entry.get("periodic", (True, True)))
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"bad grid entry: {exc}") from None
    if shape_override is not None:
        shape = shape_override
    if len(shape) != 2 or len(origin) != 2 or len(extent) != 2 or len(periodic) != 2:
        raise ManifestError("grid shape, origin, extent and periodic need two entries each")
    try:
        return GridSpec(shape, origin, extent, periodic)
    except DomainError as exc:
        raise ManifestError(str(exc)) from None


def load_manifest(path, grid=None, backend=None, tol=None) -> Manifest:
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from None
    try:
        raw = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    surface = raw.get("surface")
    if not isinstance(surface, dict):
        raise ManifestError("manifest needs a 'surface' object")
    if sum(k in surface for k in ("id", "csv")) != 1:
        raise ManifestError("surface needs exactly one of 'id' or 'csv'")
    surface = dict(surface)
    base = path.resolve().parent
    if "csv" in surface:
        surface["csv"] = str((base / surface["csv"]).resolve())
    backend = backend or raw.get("backend") or ("fd" if "csv" in surface else "analytic")
    if backend not in ("analytic", "fd"):
        raise ManifestError(f"unknown backend {backend!r}")
    if backend == "analytic" and "csv" in surface:
        raise ManifestError("tabulated surfaces need the fd backend")
    tolerance = tol if tol is not None else raw.get("tolerance")
    if tolerance is not None:
        try:
            tolerance = float(tolerance)
        except (TypeError, ValueError):
            raise ManifestError(f"bad tolerance {tolerance!r}") from None
        if not tolerance > 0:
            raise ManifestError("tolerance must be positive")
    rule = raw.get("frame_rule", "auto")
    if rule not in ("auto", "normalized", "reference"):
        raise ManifestError(f"unknown frame_rule {rule!r}")
    deform = raw.get("deform")
    if deform is not None:
        if not isinstance(deform, dict) or deform.get("family") not in FAMILIES:
            raise ManifestError(f"deform needs a family among {FAMILIES}")
        params = deform.get("params")
        if not isinstance(params, list) or not params:
            raise ManifestError("deform params must be a nonempty list")
        try:
            deform = {"family": deform["family"], "params": [parse_complex(p) for p in params]}
        except (TypeError, ValueError) as exc:
            raise ManifestError(f"bad deformation parameter: {exc}") from None
    out = raw.get("output")
    # the digest covers the manifest bytes and every command line override
    h = hashlib.sha256(text)
    h.update(json.dumps({"grid": grid, "backend": backend, "tol": tol}, sort_keys=True).encode())
    return Manifest(surface, _grid_from(raw.get("grid"), grid), backend, tolerance, rule, deform,
                    (base / out) if out else None, base, h.hexdigest(), raw)


def _default_tol(m: Manifest, analytic: float) -> float:
    if m.tolerance is not None:
        return m.tolerance
    if m.backend == "analytic":
        return analytic
    return 100.0 * max(m.grid.spacing) ** 2


def build_jet(m: Manifest):
    """Sample the manifest surface on its grid and attach the normal frame."""
    surf = custom_surface(m.surface)
    grid = m.grid
    if isinstance(surf, Tabulated):
        if surf.positions.shape[:2] != grid.shape:
            raise Failure(EXIT_GRID, f"CSV grid {surf.positions.shape[:2]} does not match manifest grid {grid.shape}")
        jet = jets_by_finite_difference(surf.positions, grid)
    elif m.backend == "fd":
        X, Y = grid.nodes()
        jet = jets_by_finite_difference(surf.jets(X, Y)[0], grid)
    else:
        jet = sample_analytic_surface(surf, grid)
    return build_positively_oriented_normal_frame(jet, m.frame_rule)


def _header(m: Manifest, command: str) -> dict:
    return {"tool": "mtsurf", "version": __version__, "command": command,
            "manifest_sha256": m.digest, "backend": m.backend,
            "grid": {"shape": list(m.grid.shape), "origin": list(m.grid.origin),
                     "extent": list(m.grid.extent), "periodic": list(m.grid.periodic)}}


def _out_dir(m: Manifest, out) -> Path:
    d = Path(out) if out else m.output
    if d is None:
        raise ManifestError("no output directory: pass --out or set 'output' in the manifest")
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ManifestError(f"cannot create output directory: {exc}") from None
    return d


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(m: Manifest, out) -> int:
    d = _out_dir(m, out)
    tol = _default_tol(m, 1e-8)
    jet = build_jet(m)
    fld = invariant_field(jet)
    rep = compatibility_residuals(fld, tol)
    conf = conformality_residual(jet, tol)
    rep.entries.update(conf.entries)
    _, _, _, hopf = hopf_differentials(fld)
    cols = _coords(jet.grid)
    cols["reported"] = fld.mask.ravel().astype(float)
    cols.update(fld.to_columns())
    classification: dict
    willmore = None
    try:
        inv = conformal_invariants(jet)
    except IsotropyError as exc:
        classification = {"classification": "gauss-map-constant", "reason": str(exc)}
    else:
        rep.entries.update(fundamental_equation_residual(inv, threshold=tol).entries)
        rep.add("s_routes", (inv.s - inv.s_data)[inv.mask], tol)
        cols.update(inv.to_columns())
        classification = classify_gauss_map(jet, fld)
        willmore = willmore_energy(inv)
    write_csv(d / "invariants.csv", cols)
    write_json(d / "classification.json", {
        **_header(m, "analyze"), "surface": m.surface, **classification,
        "flags": flags(fld), "willmore_energy": willmore,
        "min_abs_Q": hopf.entries["non_isotropic"]["min_abs_Q"]})
    write_json(d / "residuals.json", {**_header(m, "analyze"), "tolerance": tol, "passed": rep.passed,
                                      "residuals": rep.to_dict()})
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_deform(m: Manifest, out) -> int:
    from .deformation import deform, prepare_base
    from .invariants import flags as field_flags

    if m.deform is None:
        raise ManifestError("manifest has no 'deform' entry")
    d = _out_dir(m, out)
    tol = m.tolerance if m.tolerance is not None else 1e-6
    family = m.deform["family"]
    jet = build_jet(m)
    base = prepare_base(jet, "lambda" if family == "extended" else family)
    summary = []
    ok = True
    for k, p in enumerate(m.deform["params"]):
        if family == "calapso" and p.imag != 0:
            raise ManifestError(f"calapso parameter must be real, got {p}")
        param = p.real if family == "calapso" else p
        res = deform(base, param, family)
        laws = res.laws
        for e in laws.entries.values():
            if "max" in e:
                e["threshold"] = tol
                e["passed"] = bool(e["max"] < tol)
        sub = d / f"{family}_{k:02d}"
        sub.mkdir(exist_ok=True)
        write_positions(sub / "surface.csv", m.grid, res.frames.F[..., :, 0])
        cols = _coords(m.grid)
        cols["reported"] = res.field.mask.ravel().astype(float)
        cols.update(res.field.to_columns())
        try:
            cols.update(conformal_invariants(res.jet).to_columns())
        except IsotropyError:
            pass
        write_csv(sub / "invariants.csv", cols)
        fr = res.frames
        write_json(sub / "laws.json", {
            **_header(m, "deform"), "family": family, "param": p, "tolerance": tol,
            "passed": laws.passed, "laws": laws.to_dict(), "flags": field_flags(res.field),
            "integration": {"orthogonality": fr.orthogonality_residual, "drift": fr.drift,
                            "path_discrepancy": fr.path_discrepancy, "substeps": fr.substeps},
            "calapso_c": base.c, "rotation_angle": base.rotation_angle,
            "gauge_closure": base.jet.gauge_closure})
        summary.append({"param": p, "directory": sub.name, "passed": laws.passed})
        ok = ok and laws.passed
    write_json(d / "deform.json", {**_header(m, "deform"), "family": family, "runs": summary})
    return EXIT_OK if ok else EXIT_FAIL


def _operand(spec: str, m: Manifest | None):
    """A verify operand: a JSON manifest (returned as such) or a positions CSV
    (returned as (grid, positions))."""
    p = Path(spec)
    if p.suffix.lower() == ".json":
        return load_manifest(p)
    try:
        xs, ys, pos = read_positions_csv(p)
    except OSError as exc:
        raise ManifestError(f"cannot read {p}: {exc}") from None
    if m is not None:
        return m.grid.with_shape(pos.shape[:2]) if pos.shape[:2] != m.grid.shape else m.grid, pos
    # without a manifest the nodes are taken as cell centres of an open grid
    n = pos.shape[:2]
    hx = (xs[-1] - xs[0]) / (n[0] - 1) if n[0] > 1 else 1.0
    hy = (ys[-1] - ys[0]) / (n[1] - 1) if n[1] > 1 else 1.0
    grid = GridSpec(n, (float(xs[0]) - hx / 2, float(ys[0]) - hy / 2), (hx * n[0], hy * n[1]), (False, False))
    return grid, pos


def _operand_jet(op):
    if isinstance(op, Manifest):
        return build_jet(op)
    grid, pos = op
    return build_positively_oriented_normal_frame(jets_by_finite_difference(pos, grid))


def cmd_verify(m: Manifest | None, path_a: str, path_b: str, out, tol) -> int:
    ops = [_operand(path_a, m), _operand(path_b, m)]
    shapes = [op.grid.shape if isinstance(op, Manifest) else op[1].shape[:2] for op in ops]
    if shapes[0] != shapes[1]:
        raise Failure(EXIT_GRID, f"grid mismatch {shapes[0]} vs {shapes[1]}")
    ja, jb = (_operand_jet(op) for op in ops)
    if tol is None:
        tol = m.tolerance if m is not None and m.tolerance is not None else None
    fd = "fd" in (ja.backend, jb.backend)
    if tol is None:
        tol = 10.0 * max(ja.grid.spacing) ** 2 if fd else 1e-9
    # edge stencils lean on extrapolated nodes; take the frames at the centre there
    index = (0, 0) if fd is False else tuple(n // 2 for n in ja.grid.shape)
    rep = congruence_test(ja, jb, tol, index=index)
    rep["frame_index"] = list(index)
    fa, fb = invariant_field(ja), invariant_field(jb)
    mask = fa.mask & fb.mask
    gaps = {k: float(np.max(np.abs(getattr(fa, k) - getattr(fb, k))[mask]))
            for k in ("u", "h", "K", "Kperp")}
    gaps["abs_q"] = float(np.max(np.abs(np.abs(fa.q) - np.abs(fb.q))[mask]))
    try:
        ia, ib = conformal_invariants(ja), conformal_invariants(jb)
        gaps["kappa"] = float(np.max(np.abs(ia.kappa - ib.kappa)[mask]))
        gaps["s"] = float(np.max(np.abs(ia.s_data - ib.s_data)[mask]))
    except IsotropyError:
        pass
    header = {"tool": "mtsurf", "version": __version__, "command": "verify",
              "manifest_sha256": m.digest if m is not None else None,
              "operands": [str(path_a), str(path_b)]}
    verdict = {**header, "tolerance": tol, **rep, "invariant_gaps": gaps}
    text = _json_text(verdict) + "\n"
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "congruence.json").write_text(text)
    else:
        click.echo(text, nl=False)
    return EXIT_OK if rep["congruent"] else EXIT_FAIL


def cmd_generate(m: Manifest, out) -> int:
    d = _out_dir(m, out)
    surf = custom_surface(m.surface)
    if isinstance(surf, Tabulated):
        raise ManifestError("generate needs a catalog surface, not a CSV")
    X, Y = m.grid.nodes()
    write_positions(d / "positions.csv", m.grid, surf.jets(X, Y)[0])
    write_json(d / "generate.json", {**_header(m, "generate"), "surface": m.surface})
    return EXIT_OK


# ---------------------------------------------------------------------------
# click wiring


def _run(fn, *args) -> None:
    try:
        code = fn(*args)
    except Failure as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(exc.code)
    except (StateError, NormalizationError, IntegrabilityError) as exc:
        click.echo(f"precondition failed: {exc}", err=True)
        raise SystemExit(EXIT_PRECONDITION)
    except DomainError as exc:
        click.echo(f"grid error: {exc}", err=True)
        raise SystemExit(EXIT_GRID)
    except (ManifestError, ParameterError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_INPUT)
    except (IntegrationError, SurfaceError) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        raise SystemExit(EXIT_FAIL)
    raise SystemExit(code)


def _grid_option(value):
    if value is None:
        return None
    try:
        nx, ny = (int(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter("expected nx,ny") from None
    return nx, ny


_manifest = click.option("--manifest", "manifest", type=click.Path(dir_okay=False), required=True)
_out = click.option("--out", type=click.Path(file_okay=False), default=None, help="output directory")
_tol = click.option("--tol", type=float, default=None, help="residual tolerance")
_grid = click.option("--grid", default=None, help="grid resolution nx,ny")
_backend = click.option("--backend", type=click.Choice(["analytic", "fd"]), default=None)


def _load(manifest, grid, backend, tol):
    try:
        return load_manifest(manifest, _grid_option(grid), backend, tol)
    except ManifestError as exc:
        click.echo(f"error: {exc}", err=True)
        raise SystemExit(EXIT_INPUT)


@click.group()
@click.version_option(__version__, prog_name="mtsurf")
def main():
    """Analyse and deform marginally trapped surfaces in de Sitter 4-space."""


@main.command()
@_manifest
@_out
@_tol
@_grid
@_backend
def analyze(manifest, out, tol, grid, backend):
    """Invariants, compatibility residuals and Gauss map classification."""
    _run(cmd_analyze, _load(manifest, grid, backend, tol), out)


@main.command()
@_manifest
@_out
@_tol
@_grid
@_backend
def deform(manifest, out, tol, grid, backend):
    """Integrate the requested deformation family and check its laws."""
    _run(cmd_deform, _load(manifest, grid, backend, tol), out)


@main.command()
@click.option("--manifest", "manifest", type=click.Path(dir_okay=False), default=None)
@_out
@_tol
@_grid
@_backend
@click.argument("path_a")
@click.argument("path_b")
def verify(manifest, out, tol, grid, backend, path_a, path_b):
    """Congruence test of two surfaces (positions CSVs or manifests)."""
    m = _load(manifest, grid, backend, tol) if manifest else None
    _run(cmd_verify, m, path_a, path_b, out, tol)


@main.command()
@_manifest
@_out
@_grid
def generate(manifest, out, grid):
    """Write the positions CSV of a catalog surface."""
    _run(cmd_generate, _load(manifest, grid, None, None), out)


if __name__ == "__main__":
    main()
