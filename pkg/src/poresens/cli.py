"""Command-line front end: ``poresens solve|estimate|oracle|compare|sweep|stats``.

Every command reads a JSON run configuration (``--config``), writes its
results to ``--out`` (JSON or CSV via ``--format``) and optionally an SVG
plot (``--plot``).  JSON outputs carry ``"schema": "poresens/1"``, the fully
resolved configuration and a SHA-256 hash of every input file.  On any
failure the process prints one ``error: <Type>: <message>`` line to stderr,
removes whatever outputs it had written and exits with status 1.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import estimator, fem, porestats, schemas, svg
from .adjoint import QuantitySpec
from .benchmark import ellipse_circularity
from .mesh import (Mesh, canonical_json, circle_pore, ellipse_pore, generate_porous_mesh, load_mesh,
                   load_pores, rectangle_outline)

PARAMS = ("radius", "surface-distance", "pore-spacing", "density", "circularity")

DEFAULTS = {
    "dense_h": 2.5,
    "estimator": {"xi": 1e-3, "bem_elements": 256},
    "oracle": {"h": 5.0, "tol": 5e-3, "max_refinements": 4, "grading": 0.15, "pore_size_ratio": 1.0 / 16.0,
               "converge_on": "delta"},
    "sweep": {"radius": 2.0, "segments": 64},
}


def benchmark_config() -> dict:
    """Configuration of the clamped 200 × 100 plate benchmark."""
    return {
        "schema": schemas.SCHEMA_TAG,
        "geometry": {"width": 200.0, "height": 100.0},
        "material": {"E": 6.89e10, "nu": 0.35},
        "boundary_conditions": {
            "dirichlet": [{"tag": "left", "components": "xy"}],
            "tractions": [{"tag": "top", "vector": [0.0, -1000.0]}],
        },
        "quantities": [
            {"kind": "compliance", "name": "compliance"},
            {"kind": "nodal_disp", "component": "y", "point": [200.0, 50.0], "name": "tip_disp"},
            {"kind": "region_avg_disp", "component": "y", "box": [160.0, 40.0, 190.0, 60.0], "name": "reg_disp"},
        ],
        "sweep": {"radius": 2.0, "segments": 64, "center": [100.0, 50.0], "box": [60.0, 20.0, 140.0, 80.0]},
    }


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    raw: dict
    base: Path
    material: fem.Material
    bcs: fem.BoundaryConditions
    specs: list
    outline: np.ndarray
    tags: list
    regions: dict

    @property
    def estimator_config(self) -> dict:
        return self.raw["estimator"]

    def path(self, key: str) -> Path | None:
        v = self.raw.get(key)
        return None if v is None else (self.base / v)


def _merge_defaults(raw: dict) -> dict:
    cfg = copy.deepcopy(raw)
    cfg.setdefault("schema", schemas.SCHEMA_TAG)
    cfg.setdefault("dense_h", DEFAULTS["dense_h"])
    for key in ("estimator", "oracle", "sweep"):
        cfg[key] = {**DEFAULTS[key], **cfg.get(key, {})}
    return cfg


def resolve_config(raw: dict, base: Path | str = ".") -> RunConfig:
    """Validate a configuration document and build the solver objects."""
    schemas.validate(raw, schemas.CONFIG, "config")
    cfg = _merge_defaults(raw)
    base = Path(base)
    for key in ("mesh", "pores"):
        if key in cfg and not (base / cfg[key]).is_file():
            raise FileNotFoundError(f"{key} file not found: {base / cfg[key]}")
    m = cfg["material"]
    material = fem.Material(float(m["E"]), float(m["nu"]), m.get("thickness"))
    b = cfg["boundary_conditions"]
    bcs = fem.BoundaryConditions(
        dirichlet=tuple(fem.Dirichlet(d["tag"], d.get("components", "xy"), d.get("value", 0.0))
                        for d in b.get("dirichlet", [])),
        tractions=tuple(fem.Traction(t["tag"], tuple(t["vector"])) for t in b.get("tractions", [])),
        point_loads=tuple(fem.PointLoad(tuple(p["point"]), tuple(p["force"])) for p in b.get("point_loads", [])),
        body_force=tuple(b["body_force"]) if "body_force" in b else None,
    )
    specs = [QuantitySpec.from_dict(q) for q in cfg["quantities"]]
    geo = cfg.get("geometry", {})
    if "outline" in geo:
        outline = np.asarray(geo["outline"], dtype=float)
        tags = list(geo.get("tags") or [f"outer{i}" for i in range(len(outline))])
        if len(tags) != len(outline):
            raise ValueError("geometry tags must match the outline edges")
    elif "width" in geo and "height" in geo:
        outline, tags = rectangle_outline(geo["width"], geo["height"])
    else:
        outline, tags = None, None
    return RunConfig(cfg, base, material, bcs, specs, outline, tags, dict(geo.get("regions", {})))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from None
    return resolve_config(raw, path.parent)


def _need_outline(rc: RunConfig):
    if rc.outline is None:
        raise ValueError("config geometry (width/height or outline) is required for this command")
    return rc.outline, rc.tags


def dense_mesh_for(rc: RunConfig, mesh_path=None) -> Mesh:
    """The dense mesh from ``--mesh``, the config, or generated from the geometry."""
    path = mesh_path or rc.path("mesh")
    if path is not None:
        return load_mesh(path)
    outline, tags = _need_outline(rc)
    boxes = dict(rc.regions)
    boxes.update({f"box{k}": tuple(s.box) for k, s in enumerate(rc.specs) if s.box is not None})
    points = [tuple(s.point) for s in rc.specs if s.point is not None]
    points += [tuple(p.node) for p in rc.bcs.point_loads]
    return generate_porous_mesh(outline, [], rc.raw["dense_h"], outer_tags=tags, regions=boxes,
                                extra_points=points, thickness=rc.material.thickness or 1.0)


def pores_for(rc: RunConfig, pores_path=None) -> list:
    path = pores_path or rc.path("pores")
    return [] if path is None else load_pores(path)


# --------------------------------------------------------------------------
# Output handling
# --------------------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Outputs:
    """Collects output files and writes them atomically; removes all on failure."""

    def __init__(self):
        self.pending: list[tuple[Path, str]] = []
        self.written: list[Path] = []

    def add(self, path, text: str) -> None:
        self.pending.append((Path(path), text))

    def commit(self) -> None:
        for path, text in self.pending:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            try:
                with os.fdopen(fd, "w") as fh:
                    fh.write(text)
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
            self.written.append(path)

    def rollback(self) -> None:
        for path in self.written:
            path.unlink(missing_ok=True)
        self.written.clear()


def _envelope(kind: str, rc: RunConfig | None, inputs: dict) -> dict:
    hashes = {name: sha256_file(p) for name, p in inputs.items() if p is not None}
    return {"schema": schemas.SCHEMA_TAG, "kind": kind, "config": rc.raw if rc else {}, "inputs": hashes}


def _json_out(doc: dict) -> str:
    schemas.validate(json.loads(json.dumps(doc)), schemas.OUTPUTS[doc["kind"]], f"{doc['kind']} output")
    return canonical_json(doc) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _check_csv(text: str, header) -> None:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != list(header) or any(len(r) != len(header) for r in rows):
        raise ValueError("malformed CSV output")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def _inputs(args, rc: RunConfig, **extra) -> dict:
    d = {"config": args.config}
    mesh = args.mesh if getattr(args, "mesh", None) else rc.path("mesh")
    pores = args.pores if getattr(args, "pores", None) else rc.path("pores")
    if mesh is not None:
        d["mesh"] = mesh
    if pores is not None:
        d["pores"] = pores
    d.update({k: v for k, v in extra.items() if v is not None})
    return d


def _est_config(rc: RunConfig, threads) -> estimator.EstimatorConfig:
    e = rc.estimator_config
    return estimator.EstimatorConfig(xi=e["xi"], bem_elements=e["bem_elements"], threads=threads)


def _oracle(rc: RunConfig, pores) -> estimator.OracleResult:
    outline, tags = _need_outline(rc)
    o = rc.raw["oracle"]
    return estimator.run_oracle(outline, pores, rc.material, rc.bcs, rc.specs, o["h"], outer_tags=tags,
                                regions=rc.regions or None, tol=o["tol"], max_refinements=o["max_refinements"],
                                grading=o["grading"], pore_size_ratio=o["pore_size_ratio"],
                                converge_on=o["converge_on"], thickness=rc.material.thickness or 1.0)


def cmd_solve(args, out: Outputs) -> None:
    rc = load_config(args.config)
    mesh = dense_mesh_for(rc, args.mesh)
    state = estimator.solve_dense(mesh, rc.material, rc.bcs, rc.specs)
    field = state.primary
    if args.format == "csv":
        header = ["node", "x", "y", "ux", "uy"]
        rows = [[i, _fmt(x), _fmt(y), _fmt(a), _fmt(b)]
                for i, ((x, y), (a, b)) in enumerate(zip(mesh.nodes.tolist(), field.u.tolist()))]
        out.add(args.out, _csv_text(header, rows))
    else:
        doc = _envelope("solve", rc, _inputs(args, rc))
        doc.update({"quantities": [s.to_dict() for s in rc.specs], "psi0": list(state.psi0),
                    "n_nodes": mesh.n_nodes, "n_elements": mesh.n_elements,
                    "displacement": field.u.tolist(),
                    "stress": np.column_stack([field.stress[:, 0, 0], field.stress[:, 1, 1],
                                               field.stress[:, 0, 1]]).tolist()})
        out.add(args.out, _json_out(doc))


def _estimate(rc, args, pores):
    mesh = dense_mesh_for(rc, getattr(args, "mesh", None))
    return estimator.estimate(mesh, rc.material, rc.bcs, rc.specs, pores, _est_config(rc, args.threads))


def _report_doc(kind, rc, inputs, reports) -> dict:
    doc = _envelope(kind, rc, inputs)
    doc["reports"] = [r.to_dict() for r in reports]
    doc["notes"] = [estimator.I_PSI_NOTE, estimator.SHAPE_NOTE, estimator.MEASURE_NOTE]
    return doc


def _von_mises_plot(reports) -> str:
    vm = [c.max_von_mises for c in reports[0].contributions] if reports else []
    if not vm:
        raise ValueError("no pores to plot")
    x, frac = porestats.cumulative_distribution(vm)
    return svg.line_plot({"pores": (x, frac)}, xlabel="max surface von Mises stress",
                         ylabel="fraction of pores", title="Pore surface stress")


def cmd_estimate(args, out: Outputs) -> None:
    rc = load_config(args.config)
    pores = pores_for(rc, args.pores)
    reports = _estimate(rc, args, pores)
    if args.format == "csv":
        text = estimator.comparison_csv(reports)
        _check_csv(text, estimator.CSV_COLUMNS)
        out.add(args.out, text)
    else:
        out.add(args.out, _json_out(_report_doc("estimate", rc, _inputs(args, rc), reports)))
    if args.plot:
        out.add(args.plot, _von_mises_plot(reports))


def cmd_oracle(args, out: Outputs) -> None:
    rc = load_config(args.config)
    pores = pores_for(rc, args.pores)
    res = _oracle(rc, pores)
    if args.format == "csv":
        header = ["spec", "psi", "psi0", "delta"]
        rows = [[s.label, _fmt(a), _fmt(b), _fmt(a - b)] for s, a, b in zip(res.specs, res.psi, res.psi0)]
        out.add(args.out, _csv_text(header, rows))
    else:
        doc = _envelope("oracle", rc, _inputs(args, rc))
        doc["oracle"] = res.to_dict()
        out.add(args.out, _json_out(doc))


def _load_json(path, kind) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON: {exc}") from None
    schemas.validate(doc, schemas.OUTPUTS[kind], f"{kind} file")
    return doc


def cmd_compare(args, out: Outputs) -> None:
    rc = load_config(args.config) if args.config else None
    if args.estimate:
        reports = [estimator.EstimateReport.from_dict(r) for r in _load_json(args.estimate, "estimate")["reports"]]
    else:
        if rc is None:
            raise ValueError("compare needs --config or --estimate")
        reports = _estimate(rc, args, pores_for(rc, args.pores))
    if args.oracle:
        o = _load_json(args.oracle, "oracle")["oracle"]
        res = estimator.OracleResult([QuantitySpec.from_dict(s) for s in o["specs"]], o["psi"], o["psi0"],
                                     o["history"], o.get("converged", True))
    else:
        if rc is None:
            raise ValueError("compare needs --config or --oracle")
        res = _oracle(rc, pores_for(rc, args.pores))
    estimator.attach_oracle(reports, res)
    if args.format == "json":
        inputs = {"config": args.config, "estimate": args.estimate, "oracle": args.oracle}
        if rc is not None:
            inputs = _inputs(args, rc, estimate=args.estimate, oracle=args.oracle)
        out.add(args.out, _json_out(_report_doc("compare", rc, inputs, reports)))
    else:
        text = estimator.comparison_csv(reports)
        _check_csv(text, estimator.CSV_COLUMNS)
        out.add(args.out, text)


def sweep_pores(param: str, value: float, *, radius: float, center, bbox, box, segments: int) -> list:
    """Pore layout of one sweep point.

    ``radius`` varies the radius of a single pore at ``center``;
    ``surface-distance`` puts a pore of fixed radius with its edge
    ``value · 2R`` above the bottom of ``bbox``; ``pore-spacing`` places two
    pores side by side with edges ``value · 2R`` apart; ``density`` spreads
    ``value²`` pores evenly over ``box``; ``circularity`` uses an ellipse of
    area ``πR²`` with that circularity.
    """
    cx, cy = map(float, center)
    if param == "radius":
        return [circle_pore("p1", (cx, cy), value, segments)]
    if param == "surface-distance":
        return [circle_pore("p1", (cx, bbox[1] + value * 2.0 * radius + radius), radius, segments)]
    if param == "pore-spacing":
        half = radius * (1.0 + value)
        return [circle_pore("p1", (cx - half, cy), radius, segments),
                circle_pore("p2", (cx + half, cy), radius, segments)]
    if param == "density":
        k = int(round(value))
        if k < 1 or k != value:
            raise ValueError("density values are pores per side (positive integers)")
        x0, y0, x1, y1 = box
        xs = x0 + (np.arange(k) + 0.5) * (x1 - x0) / k
        ys = y0 + (np.arange(k) + 0.5) * (y1 - y0) / k
        return [circle_pore(f"p{j * k + i + 1}", (x, y), radius, segments)
                for j, y in enumerate(ys) for i, x in enumerate(xs)]
    if param == "circularity":
        if not 0.0 < value <= 1.0:
            raise ValueError("circularity must lie in (0, 1]")
        q = 1.0 if value >= 1.0 - 1e-12 else brentq(lambda t: ellipse_circularity(t) - value, 1e-4, 1.0,
                                                     xtol=1e-14)
        a = radius / math.sqrt(q)
        return [ellipse_pore("p1", (cx, cy), a, a * q, segments)]
    raise ValueError(f"unknown sweep parameter {param!r}")


SWEEP_COLUMNS = ["param", "value", "spec", "psi0", "D_topo_total", "D_shape_total", "D_pore_total",
                 "psi_pred", "psi_oracle", "I_psi", "I_D"]


def run_sweep(rc: RunConfig, param: str, values, threads=None, mesh_path=None) -> list[list]:
    """Estimate and oracle per sweep value; one row per value and quantity."""
    if param not in PARAMS:
        raise ValueError(f"--param must be one of {', '.join(PARAMS)}")
    outline, _ = _need_outline(rc)
    sw = rc.raw["sweep"]
    lo, hi = outline.min(axis=0), outline.max(axis=0)
    center = sw.get("center", (0.5 * (lo + hi)).tolist())
    box = sw.get("box", [lo[0] + 0.3 * (hi[0] - lo[0]), lo[1] + 0.2 * (hi[1] - lo[1]),
                         hi[0] - 0.3 * (hi[0] - lo[0]), hi[1] - 0.2 * (hi[1] - lo[1])])
    mesh = dense_mesh_for(rc, mesh_path)
    state = estimator.solve_dense(mesh, rc.material, rc.bcs, rc.specs)
    cfg = _est_config(rc, threads)
    rows = []
    for v in values:
        pores = sweep_pores(param, v, radius=sw["radius"], center=center, bbox=[*lo, *hi], box=box,
                            segments=sw["segments"])
        reports = estimator.estimate(mesh, rc.material, rc.bcs, rc.specs, pores, cfg, state)
        estimator.attach_oracle(reports, _oracle(rc, pores))
        for r in reports:
            e = r.effectivity()
            rows.append([param, v, r.spec.label, r.psi0, r.D_topo, r.D_shape, r.D, r.psi_pred, r.psi_exact,
                         e.I_psi, e.I_D])
    return rows


def cmd_sweep(args, out: Outputs) -> None:
    rc = load_config(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ValueError("--values must be a comma-separated list of numbers") from None
    if not values:
        raise ValueError("--values is empty")
    rows = run_sweep(rc, args.param, values, args.threads, args.mesh)
    if args.format == "json":
        doc = _envelope("sweep", rc, _inputs(args, rc))
        doc["param"] = args.param
        doc["rows"] = [dict(zip(SWEEP_COLUMNS, r)) for r in rows]
        out.add(args.out, _json_out(doc))
    else:
        text = _csv_text(SWEEP_COLUMNS, [[r[0], repr(float(r[1])), r[2]] + [_fmt(v) for v in r[3:]]
                                         for r in rows])
        _check_csv(text, SWEEP_COLUMNS)
        out.add(args.out, text)
    if args.plot:
        series = {}
        for r in rows:
            x, y = series.setdefault(r[2], ([], []))
            x.append(r[1])
            y.append(np.nan if r[10] is None else r[10])
        out.add(args.plot, svg.line_plot(series, xlabel=args.param, ylabel="I_D",
                                         title=f"Effectivity vs {args.param}", hlines=(1.0,),
                                         logx=args.param == "radius"))


def cmd_stats(args, out: Outputs) -> None:
    rc = load_config(args.config) if args.config else None
    if args.descriptors:
        table = porestats.read_descriptor_csv(args.descriptors)
    elif args.pores:
        if rc is None:
            raise ValueError("stats on a pores file needs --config with the part geometry")
        outline, _ = _need_outline(rc)
        table = porestats.descriptor_table(load_pores(args.pores), outline)
    else:
        raise ValueError("stats needs --descriptors or --pores")
    cols = {"eq_diameter": table.eq_diameter, "sphericity": table.sphericity,
            "dist_surface": table.dist_surface, "dist_pore": table.dist_pore}
    fits, notes, cdfs = {}, [], {}
    for name, v in cols.items():
        v = v[np.isfinite(v)]
        if v.size:
            cdfs[name] = {"median": float(np.median(v)), "count": int(v.size)}
        try:
            fits[name] = porestats.fit_distributions(v).to_dict()
        except porestats.StatsError as exc:
            notes.append(f"{name}: {exc}")
    reg = None
    ok = np.isfinite(table.eq_diameter) & np.isfinite(table.sphericity)
    if ok.sum() >= 3:
        r = porestats.linear_regression(table.eq_diameter[ok], table.sphericity[ok])
        reg = {"x": "eq_diameter", "y": "sphericity", "slope": r.slope, "intercept": r.intercept, "r": r.r,
               "r_log": r.r_log}
    if args.format == "csv":
        text = io.StringIO()
        w = csv.writer(text, lineterminator="\n")
        w.writerow(porestats.DESCRIPTOR_COLUMNS)
        for row in table.rows():
            w.writerow([row[0]] + ["" if math.isnan(v) else _fmt(v) for v in row[1:]])
        out.add(args.out, text.getvalue())
    else:
        inputs = {"config": args.config, "descriptors": args.descriptors, "pores": args.pores}
        doc = _envelope("stats", rc, inputs)
        doc.update({"fits": fits, "notes": notes, "summary": cdfs, "regression": reg, "count": len(table)})
        out.add(args.out, _json_out(doc))
    if args.plot:
        v = table.eq_diameter[np.isfinite(table.eq_diameter)]
        x, frac = porestats.cumulative_distribution(v)
        out.add(args.plot, svg.line_plot({"eq_diameter": (x, frac)}, xlabel="equivalent diameter",
                                         ylabel="cumulative fraction", title="Pore size distribution"))


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors follow the one-line error convention."""

    def error(self, message):
        print(f"error: UsageError: {' '.join(message.split())}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="poresens", description="Porosity-sensitivity estimates of linear-elastic quantities.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats=("json", "csv"), default="json", config_required=True):
        p.add_argument("--config", required=config_required, help="run configuration JSON")
        p.add_argument("--out", required=True, help="output file")
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--threads", type=int, default=None, help="worker threads for the pore loop")
        return p

    p = common(sub.add_parser("solve", help="dense FE solve"))
    p.add_argument("--mesh")
    p.set_defaults(func=cmd_solve, plot=None)
    for name, func, text in (
        ("estimate", cmd_estimate, "first-order porosity estimate"),
        ("oracle", cmd_oracle, "direct FE reference on refined porous meshes"),
    ):
        p = common(sub.add_parser(name, help=text), default="json")
        p.add_argument("--mesh", help="dense mesh JSON (generated from the config if omitted)")
        p.add_argument("--pores", help="pores JSON (overrides the config's pore list)")
        p.add_argument("--plot", help="SVG output path")
        p.set_defaults(func=func)
    p = common(sub.add_parser("compare", help="join estimate and oracle"), default="csv", config_required=False)
    p.add_argument("--mesh")
    p.add_argument("--pores")
    p.add_argument("--estimate", help="estimate JSON from a previous run")
    p.add_argument("--oracle", help="oracle JSON from a previous run")
    p.add_argument("--plot")
    p.set_defaults(func=cmd_compare)
    p = common(sub.add_parser("sweep", help="effectivity versus one pore parameter"), default="csv")
    p.add_argument("--mesh")
    p.add_argument("--param", required=True, choices=PARAMS)
    p.add_argument("--values", required=True, help="comma-separated parameter values")
    p.add_argument("--plot")
    p.set_defaults(func=cmd_sweep)
    p = common(sub.add_parser("stats", help="pore descriptor statistics"), config_required=False)
    p.add_argument("--descriptors", help="descriptor CSV")
    p.add_argument("--pores", help="pores JSON (descriptors are computed)")
    p.add_argument("--plot")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("error: ValueError: --threads must be positive", file=sys.stderr)
        return 1
    if getattr(args, "plot", None) and args.func in (cmd_oracle, cmd_compare):
        print(f"error: ValueError: --plot is not supported by {args.command}", file=sys.stderr)
        return 1
    out = Outputs()
    try:
        args.func(args, out)
        out.commit()
    except Exception as exc:  # noqa: BLE001  any failure becomes a one-line error
        out.rollback()
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
