"""Command-line interface: mesh generation, single solves, convergence
studies, and layer-profile sampling, all emitting plain-text artifacts.

Config precedence is flags > config file > defaults; the merged effective
configuration is echoed as `# key = value` header comments into every
output artifact so each file documents how to reproduce itself.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

PROBLEMS_1D = ("exact1d", "zero1d", "smooth1d")
PROBLEMS_2D = ("exact2d", "zero2d")


class CliError(Exception):
    """Invalid user input (maps to exit code 2)."""


def _apply_thread_cap():
    """Honor BLFEM_THREADS before the numerical stack spins up its pools."""
    cap = os.environ.get("BLFEM_THREADS")
    if not cap:
        return
    try:
        n = str(int(cap))
    except ValueError:
        raise CliError(f"BLFEM_THREADS must be an integer, got {cap!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = n


# ---------------------------------------------------------------------------
# configuration handling


def read_config_file(path):
    """Parse a `key = value` per line config file; '#' starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
                key, val = line.split("=", 1)
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}")
    return values


def _convert(key, text, default):
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int) and not isinstance(default, bool):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    except ValueError:
        raise CliError(f"config key {key}: cannot parse {text!r}")


def merge_config(defaults, file_values, flag_values):
    """Merged effective config: flags override file values override defaults.

    Unknown keys in the config file are rejected so typos fail loudly."""
    merged = dict(defaults)
    for key, text in file_values.items():
        if key not in defaults:
            raise CliError(f"unknown config key {key!r}")
        merged[key] = _convert(key, text, defaults[key])
    for key, val in flag_values.items():
        if val is not None:
            merged[key] = val
    return merged


def config_header_lines(config):
    return [f"{k} = {config[k]}" for k in sorted(config)]


# ---------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    """A fully resolved solver run (problem, discretization, outputs)."""

    problem: str
    epsilon: float
    T: float
    dt: float
    scheme: str
    level: int
    enrichment_kind: str = "phi_m1_lin"
    sigma: float = None
    quad_refine: int = 1
    solver_method: str = "direct_cholesky"
    solver_tolerance: float = 1e-10
    output: str = None
    timing: bool = True
    random_seed: int = 0  # reserved; default paths are deterministic
    warnings: list = field(default_factory=list)

    @property
    def dim(self):
        return 1 if self.problem in PROBLEMS_1D else 2

    def validate(self):
        if self.problem not in PROBLEMS_1D + PROBLEMS_2D:
            raise CliError(f"unknown problem {self.problem!r}")
        if self.scheme not in ("sfem", "nfem"):
            raise CliError(f"unknown scheme {self.scheme!r}")
        for name in ("epsilon", "T", "dt"):
            if getattr(self, name) <= 0.0:
                raise CliError(f"{name} must be positive")
        n_steps = round(self.T / self.dt)
        if n_steps < 1 or abs(n_steps * self.dt - self.T) > 1e-12:
            raise CliError(f"dt = {self.dt} does not tile [0, T = {self.T}]")
        if self.dim == 1 and self.level < 2:
            raise CliError("1D meshes need at least 2 elements")
        if self.dim == 2 and self.level < 8:
            raise CliError("2D meshes need at least 8 boundary nodes")
        if self.quad_refine < 1:
            raise CliError("quad-refine must be >= 1")
        if self.sigma is not None and self.sigma <= 0.0:
            raise CliError("sigma must be positive")


# ---------------------------------------------------------------------------
# subcommands


def _add_config_flag(p):
    p.add_argument("--config", help="key = value config file; flags override its entries")


def _collect(args, defaults):
    file_values = read_config_file(args.config) if args.config else {}
    flag_values = {k: getattr(args, k) for k in defaults}
    return merge_config(defaults, file_values, flag_values)


MESH_DEFAULTS = {"dim": 2, "n": 50, "boundary_nodes": 52, "output": "mesh.txt"}


def cmd_mesh(args):
    from .mesh import build_disk_mesh, build_interval_mesh, write_mesh

    cfg = _collect(args, MESH_DEFAULTS)
    if cfg["dim"] == 1:
        if cfg["n"] < 2:
            raise CliError("1D meshes need at least 2 elements")
        mesh = build_interval_mesh(cfg["n"])
        print(f"1D mesh: {len(mesh.nodes)} nodes, h = {mesh.h:.6g}")
    elif cfg["dim"] == 2:
        if cfg["boundary_nodes"] < 8:
            raise CliError("2D meshes need at least 8 boundary nodes")
        mesh = build_disk_mesh(cfg["boundary_nodes"])
        print(
            f"2D mesh: {len(mesh.nodes)} nodes, {len(mesh.triangles)} triangles, "
            f"{len(mesh.boundary_nodes)} boundary nodes"
        )
        print(
            f"quality: h = {mesh.h:.6g}, min angle = {mesh.min_angle_deg:.2f} deg, "
            f"quasi-uniformity = {mesh.quasi_uniformity:.3f}"
        )
    else:
        raise CliError("dim must be 1 or 2")
    write_mesh(mesh, cfg["output"], header_comments=config_header_lines(cfg))
    print(f"wrote {cfg['output']}")
    return EXIT_OK


SOLVE_DEFAULTS = {
    "problem": "exact1d",
    "epsilon": 1e-5,
    "n": 50,
    "dt": 0.01,
    "T": 1.0,
    "scheme": "nfem",
    "kind": "phi_m1_lin",
    "sigma": 0.0,  # 0 = mesh-derived default
    "quad_refine": 1,
    "solver": "direct_cholesky",
    "tol": 1e-10,
    "output": "",
    "dump_field": "",
    "dump_matrices": "",
    "no_timing": False,
    "seed": 0,
}


def _scenario_from_config(cfg):
    scn = Scenario(
        problem=cfg["problem"],
        epsilon=cfg["epsilon"],
        T=cfg["T"],
        dt=cfg["dt"],
        scheme=cfg["scheme"],
        level=cfg["n"],
        enrichment_kind=cfg["kind"],
        sigma=cfg["sigma"] or None,
        quad_refine=cfg["quad_refine"],
        solver_method=cfg["solver"],
        solver_tolerance=cfg["tol"],
        output=cfg["output"] or None,
        timing=not cfg["no_timing"],
        random_seed=cfg["seed"],
    )
    scn.validate()
    return scn


def _dump_matrix(matrix, path):
    import scipy.sparse as sp

    coo = sp.coo_matrix(matrix)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")


def cmd_solve(args):
    from .analysis import CSV_HEADER, format_csv_row, solve_scenario
    from .linsolve import SolverConfig

    cfg = _collect(args, SOLVE_DEFAULTS)
    scn = _scenario_from_config(cfg)
    solver_config = SolverConfig(method=scn.solver_method, rel_tolerance=scn.solver_tolerance)
    for line in config_header_lines(cfg):
        print(f"# {line}")
    report, fieldsol, space, exact = solve_scenario(
        scn.dim,
        scn.epsilon,
        scn.level,
        scn.T,
        scn.dt,
        scn.scheme,
        enrichment_kind=scn.enrichment_kind,
        sigma=scn.sigma,
        solver_config=solver_config,
        refine=scn.quad_refine,
        problem=scn.problem,
        degenerate_ok=True,
    )
    import math

    print(f"scheme      : {scn.scheme}")
    print(f"dofs        : {report.dofs}")
    print(f"h           : {report.h:.10g}")
    if math.isnan(report.rel_l2):
        print(f"abs_l2      : {report.abs_l2:.10g}")
        print("rel_l2      : undefined (exact solution has zero L2 norm)")
    else:
        print(f"rel_l2      : {report.rel_l2:.10g}")
        print(f"abs_l2      : {report.abs_l2:.10g}")
    print(f"h1_err      : {report.h1_seminorm_error:.10g}")
    print(f"osc_index   : {report.oscillation_index:.10g}")
    if scn.timing:
        print(f"runtime_s   : {report.runtime:.3f}")
    print(f"T*epsilon   : {scn.T * scn.epsilon:.3g}  (time-independent profile heuristic window)")

    if cfg["output"]:
        row = {
            "scheme": scn.scheme,
            "epsilon": scn.epsilon,
            "h": report.h,
            "dofs": report.dofs,
            "dt": scn.dt,
            "T": scn.T,
            "rel_l2": report.rel_l2,
            "h1_err": report.h1_seminorm_error,
            "osc_index": report.oscillation_index,
            "runtime_s": report.runtime if scn.timing else 0.0,
        }
        with open(cfg["output"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(f"# {line}" for line in config_header_lines(cfg)) + "\n")
            fh.write(CSV_HEADER + "\n")
            fh.write(format_csv_row(row) + "\n")
        print(f"wrote {cfg['output']}")

    if cfg["dump_field"]:
        _dump_field(space, fieldsol, scn, cfg)
        print(f"wrote {cfg['dump_field']}")

    if cfg["dump_matrices"]:
        from .assembly import assemble_enriched, assemble_standard

        system = (
            assemble_standard(space, scn.epsilon)
            if space.enrichment is None
            else assemble_enriched(space, scn.epsilon, t=scn.T)
        )
        _dump_matrix(system.mass, cfg["dump_matrices"] + ".mass")
        _dump_matrix(system.stiffness, cfg["dump_matrices"] + ".stiffness")
        print(f"wrote {cfg['dump_matrices']}.mass / .stiffness")
    return EXIT_OK


def _dump_field(space, fieldsol, scn, cfg):
    import numpy as np

    from .assembly import evaluate_field_1d, evaluate_field_2d

    with open(cfg["dump_field"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(f"# {line}" for line in config_header_lines(cfg)) + "\n")
        if space.mesh.dim == 1:
            xs = np.linspace(0.0, 1.0, 4 * scn.level + 1)
            vals = evaluate_field_1d(space, fieldsol.final, xs, t=scn.T)
            fh.write("x,u\n")
            for x, v in zip(xs, vals):
                fh.write(f"{x:.10g},{v:.10g}\n")
        else:
            nodes = space.mesh.nodes
            vals = evaluate_field_2d(
                space, fieldsol.final, nodes[:, 0], nodes[:, 1], t=scn.T
            )
            fh.write("x,y,u\n")
            for (x, y), v in zip(nodes, vals):
                fh.write(f"{x:.10g},{y:.10g},{v:.10g}\n")


CONVERGE_DEFAULTS = {
    "dim": 1,
    "problem": "",  # empty = the dimension's exact benchmark
    "epsilon": 1e-5,
    "levels": "25,50,100,200",
    "dt": 0.01,
    "T": 1.0,
    "schemes": "sfem,nfem",
    "kind": "phi_m1_lin",
    "sigma": 0.0,
    "dt_rule": "fixed",
    "output": "convergence.csv",
    "no_timing": False,
}


def cmd_converge(args):
    from .analysis import ConvergenceTable, fit_loglog, solve_scenario, write_convergence_csv

    cfg = _collect(args, CONVERGE_DEFAULTS)
    if cfg["dim"] not in (1, 2):
        raise CliError("dim must be 1 or 2")
    try:
        levels = [int(tok) for tok in cfg["levels"].split(",") if tok.strip()]
    except ValueError:
        raise CliError(f"cannot parse levels {cfg['levels']!r}")
    if len(levels) < 3:
        raise CliError("need at least 3 mesh levels")
    schemes = [tok.strip() for tok in cfg["schemes"].split(",") if tok.strip()]
    if not schemes or any(s not in ("sfem", "nfem") for s in schemes):
        raise CliError(f"schemes must be a comma list drawn from sfem,nfem, got {cfg['schemes']!r}")
    if cfg["dt_rule"] not in ("fixed", "h-squared"):
        raise CliError("dt-rule must be 'fixed' or 'h-squared'")
    problem = cfg["problem"] or ("exact1d" if cfg["dim"] == 1 else "exact2d")

    table = ConvergenceTable(epsilon=cfg["epsilon"], T=cfg["T"])
    failures = []
    for scheme in schemes:
        for level in levels:
            dt_l = cfg["dt"] if cfg["dt_rule"] == "fixed" else cfg["T"] / level**2
            scn = Scenario(
                problem=problem,
                epsilon=cfg["epsilon"],
                T=cfg["T"],
                dt=dt_l,
                scheme=scheme,
                level=level,
                enrichment_kind=cfg["kind"],
                sigma=cfg["sigma"] or None,
                timing=not cfg["no_timing"],
            )
            scn.validate()
            try:
                report, _, _, _ = solve_scenario(
                    scn.dim,
                    scn.epsilon,
                    scn.level,
                    scn.T,
                    scn.dt,
                    scn.scheme,
                    enrichment_kind=scn.enrichment_kind,
                    sigma=scn.sigma,
                    problem=problem,
                )
            except Exception as exc:  # record, keep going
                failures.append(f"error: scheme={scheme} level={level}: {exc}")
                continue
            table.rows.append(
                {
                    "scheme": scheme,
                    "epsilon": cfg["epsilon"],
                    "h": report.h,
                    "dofs": report.dofs,
                    "dt": dt_l,
                    "T": cfg["T"],
                    "rel_l2": report.rel_l2,
                    "h1_err": report.h1_seminorm_error,
                    "osc_index": report.oscillation_index,
                    "runtime_s": report.runtime if scn.timing else 0.0,
                }
            )
        rows = table.scheme_rows(scheme)
        rows.sort(key=lambda r: -r["h"])
        if len(rows) >= 3:
            table.slopes[scheme] = fit_loglog(
                [r["h"] for r in rows], [r["rel_l2"] for r in rows]
            )
    table.rows.sort(key=lambda r: (r["scheme"], -r["h"]))
    header = config_header_lines(cfg)
    header += [f"slope[{s}] = {table.slopes[s][0]:.6g}" for s in sorted(table.slopes)]
    header += failures
    write_convergence_csv(table, cfg["output"], header_comments=header)
    for line in failures:
        print(f"# {line}", file=sys.stderr)
    print(f"wrote {cfg['output']} ({len(table.rows)} rows)")
    return EXIT_NUMERICAL if failures and not table.rows else EXIT_OK


CORRECTOR_DEFAULTS = {
    "epsilon": 1e-5,
    "t": 1.0,
    "sigma": 0.1,
    "xi_max": 0.5,
    "points": 400,
    "output": "profiles.csv",
}


def cmd_corrector(args):
    import numpy as np

    from .corrector import ENRICHMENT_KINDS, EnrichmentSpec, enrichment_profile

    cfg = _collect(args, CORRECTOR_DEFAULTS)
    if cfg["epsilon"] <= 0.0:
        raise CliError("epsilon must be positive")
    if cfg["t"] <= 0.0:
        raise CliError("t must be positive (phi0 and phi0_tilde are time dependent)")
    if not 0.0 < cfg["sigma"] <= 0.5:
        raise CliError("sigma must lie in (0, 0.5]")
    if cfg["points"] < 2:
        raise CliError("need at least 2 sample points")
    if cfg["xi_max"] <= 0.0 or cfg["xi_max"] > 1.0:
        raise CliError("xi-max must lie in (0, 1]")

    xi_min = np.sqrt(cfg["epsilon"]) / 100.0
    xi = np.concatenate([[0.0], np.geomspace(xi_min, cfg["xi_max"], cfg["points"] - 1)])
    columns = {}
    for kind in ENRICHMENT_KINDS:
        spec = EnrichmentSpec(
            kind=kind,
            epsilon=cfg["epsilon"],
            sigma=cfg["sigma"] if kind == "phi_m1_lin" else None,
        )
        columns[kind] = np.asarray(enrichment_profile(spec, xi, cfg["t"]), dtype=float)

    with open(cfg["output"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(f"# {line}" for line in config_header_lines(cfg)) + "\n")
        fh.write("xi,phi0,phi0_tilde,phi_m1,phi_m1_lin\n")
        for i, xv in enumerate(xi):
            vals = ",".join(f"{columns[k][i]:.10g}" for k in ENRICHMENT_KINDS)
            fh.write(f"{xv:.10g},{vals}\n")
    print(f"wrote {cfg['output']} ({len(xi)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blfem",
        description="Boundary-layer-enriched P1 finite elements for u_t - eps*Lap(u) = f",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate and write a mesh file")
    p.add_argument("--dim", type=int, choices=(1, 2))
    p.add_argument("--n", type=int, help="1D element count")
    p.add_argument("--boundary-nodes", dest="boundary_nodes", type=int, help="2D boundary node count")
    p.add_argument("-o", "--output", dest="output")
    _add_config_flag(p)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("solve", help="run one scenario and report errors")
    p.add_argument("--problem", choices=PROBLEMS_1D + PROBLEMS_2D)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n", type=int, help="elements (1D) or boundary nodes (2D)")
    p.add_argument("--dt", type=float)
    p.add_argument("--T", dest="T", type=float)
    p.add_argument("--scheme", choices=("sfem", "nfem"))
    p.add_argument("--kind", choices=("phi0", "phi0_tilde", "phi_m1", "phi_m1_lin"))
    p.add_argument("--sigma", type=float, help="taper width; 0 = mesh-derived default")
    p.add_argument("--quad-refine", dest="quad_refine", type=int)
    p.add_argument("--solver", choices=("direct_cholesky", "cg_jacobi"))
    p.add_argument("--tol", type=float)
    p.add_argument("-o", "--output", dest="output", help="write an error-report CSV row here")
    p.add_argument("--dump-field", dest="dump_field", help="write sampled solution values here")
    p.add_argument("--dump-matrices", dest="dump_matrices", help="prefix for i-j-value matrix dumps")
    p.add_argument("--no-timing", dest="no_timing", action="store_const", const=True)
    p.add_argument("--seed", type=int, help="reserved")
    _add_config_flag(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", help="mesh-refinement study, writes the error CSV")
    p.add_argument("--dim", type=int, choices=(1, 2))
    p.add_argument("--problem", choices=PROBLEMS_1D + PROBLEMS_2D)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--levels", help="comma-separated mesh levels")
    p.add_argument("--dt", type=float)
    p.add_argument("--T", dest="T", type=float)
    p.add_argument("--schemes", help="comma list from sfem,nfem")
    p.add_argument("--kind", choices=("phi0", "phi0_tilde", "phi_m1", "phi_m1_lin"))
    p.add_argument("--sigma", type=float)
    p.add_argument("--dt-rule", dest="dt_rule", choices=("fixed", "h-squared"))
    p.add_argument("-o", "--output", dest="output")
    p.add_argument("--no-timing", dest="no_timing", action="store_const", const=True)
    _add_config_flag(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("corrector", help="sample the four layer profiles to CSV")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--xi-max", dest="xi_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("-o", "--output", dest="output")
    _add_config_flag(p)
    p.set_defaults(func=cmd_corrector)
    return parser


def main(argv=None) -> int:
    try:
        _apply_thread_cap()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        from .assembly import AssemblyError
        from .linsolve import NoConvergence, NotPositiveDefinite

        if isinstance(exc, (NotPositiveDefinite, NoConvergence, AssemblyError)):
            detail = ""
            residual = getattr(exc, "residual", None)
            if residual is not None:
                detail = f" (residual {residual:.3e})"
            print(f"numerical failure: {exc}{detail}", file=sys.stderr)
            return EXIT_NUMERICAL
        raise


if __name__ == "__main__":
    sys.exit(main())
