"""Command line interface: ``nlbc-iga <command> --config cfg.json --out result.csv``.

Exit codes: 0 success, 2 configuration error, 3 every solve was singular.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import functionals as fn
from . import study
from .assembly import IMPOSITIONS, Discretization, build_system, dump_system
from .errors import ConfigurationError, DomainError
from .geometry import BoundarySpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3

COMMANDS = ("solve", "sweep-beta", "sweep-gamma", "converge", "sparsity")
HELP = {
    "solve": "solve one configuration",
    "sweep-beta": "error and conditioning against the penalty parameter",
    "sweep-gamma": "conditioning against the coupling weight",
    "converge": "h-refinement convergence study",
    "sparsity": "nnz percentage and bandwidths for every method and case",
}


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError("config must be a JSON object")
    return cfg


def _methods(cfg, default):
    m = cfg.get("method", cfg.get("methods", default))
    methods = (m,) if isinstance(m, str) else tuple(m)
    for x in methods:
        if x not in IMPOSITIONS:
            raise ConfigurationError(f"unknown method {x!r}; choose from {IMPOSITIONS}")
    return methods


def _beta(cfg):
    b = cfg.get("beta", 1e2)
    if b == "adaptive":
        return b
    try:
        return float(b)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid beta {b!r}") from exc


def _case(cfg):
    return study.CaseId(cfg.get("case", "classical"), float(cfg.get("gamma", 1.0)))


def _grid(spec, default):
    if spec is None:
        return default
    if isinstance(spec, dict):
        if spec.get("log", False):
            return np.logspace(float(spec["lo"]), float(spec["hi"]), int(spec["n"]))
        return np.linspace(float(spec["lo"]), float(spec["hi"]), int(spec["n"]))
    return np.asarray(spec, dtype=float)


def _run_solve(cfg, args, timing):
    methods = _methods(cfg, "greville")
    if len(methods) != 1:
        raise ConfigurationError("solve takes a single method")
    case = _case(cfg)
    geo = study.reference_geometry(int(cfg.get("degree", 2)), int(cfg.get("spans", 10)))
    disc = Discretization(geo, BoundarySpec(cfg.get("dirichlet", ("eta0", "eta1"))))
    if "L1" in cfg or "L2" in cfg:
        L1 = fn.from_config(cfg.get("L1"))
        L2 = fn.from_config(cfg.get("L2"))
        row, system, rep = _solve_custom(disc, L1, L2, methods[0], _beta(cfg), timing)
    else:
        row, system, rep = study.solve_case(case, methods[0], beta=_beta(cfg), disc=disc,
                                            timing=timing, return_system=True)
    if args.dump_matrix:
        dump_system(system, args.dump_matrix, {"case": row.case, "gamma": row.gamma})
    return study.StudyResult([row])


def _solve_custom(disc, L1, L2, imposition, beta, timing):
    import time

    from .assembly import ProblemSpec
    from .linsolve import solve_and_report

    exact = study.exact_solution
    c1 = fn.apply_to_function(L1, disc.geo, disc.mesh, exact)
    c2 = fn.apply_to_function(L2, disc.geo, disc.mesh, exact)
    spec = ProblemSpec(
        disc.geo, disc.boundary, kappa=disc.kappa,
        f=lambda x, y: -np.exp(x) * y,
        g=lambda x, y: exact(x, y) + c1,
        h=lambda x, y, n: np.einsum("pc,pc->p", study.exact_gradient(x, y), n) + c2,
        L1=L1, L2=L2)
    method = study._method(imposition, beta, disc.n)
    t0 = time.perf_counter()
    system = build_system(spec, method, disc)
    rep = solve_and_report(system.matrix, system.rhs)
    wall = time.perf_counter() - t0
    err = float("nan")
    if rep.solution is not None:
        err = study.l2_error(disc.geo, disc.mesh, fn.DiscreteField(disc.basis, rep.solution), exact)
    row = study.StudyRow("solve", "custom", float("nan"), imposition,
                         float(method.beta) if method.is_weak else float("nan"),
                         disc.basis.degrees[0], len(disc.mesh.breaks_u) - 1, disc.n, err, rep.cond2,
                         rep.sigma_min, rep.nnz_percent, rep.bandwidth_natural, rep.bandwidth_rcm,
                         rep.residual_norm, singular=rep.singular,
                         wall_time=wall if timing else float("nan"))
    return row, system, rep


def _run(command, cfg, args):
    timing = bool(cfg.get("timing", False) or args.timing)
    if command == "solve":
        return _run_solve(cfg, args, timing)
    if command == "sweep-beta":
        betas = _grid(cfg.get("betas"), np.logspace(-2, 8, 21))
        return study.run_beta_sweep(_case(cfg), _methods(cfg, ("penalty", "nitsche")), betas,
                                    int(cfg.get("degree", 2)), int(cfg.get("spans", 10)), timing=timing)
    if command == "sweep-gamma":
        case = cfg.get("case", "case1")
        gammas = _grid(cfg.get("gammas"), study.default_gamma_grid())
        return study.run_gamma_sweep(case, _methods(cfg, IMPOSITIONS), gammas, _beta(cfg),
                                     int(cfg.get("degree", 2)), int(cfg.get("spans", 10)),
                                     include_critical=bool(cfg.get("include_critical", True)),
                                     timing=timing)
    if command == "converge":
        degrees = tuple(int(d) for d in cfg.get("degrees", (2, 3, 4)))
        meshes = tuple(int(m) for m in cfg.get("meshes", (4, 8, 16, 32)))
        return study.run_convergence(_case(cfg), _methods(cfg, IMPOSITIONS), degrees, meshes,
                                     cfg.get("beta_policy", "fixed"), float(cfg.get("beta", 1e2)),
                                     with_cond=bool(cfg.get("cond", True)), timing=timing)
    if command == "sparsity":
        cases = cfg.get("cases", study.CASES)
        return study.run_sparsity_census(_methods(cfg, IMPOSITIONS), tuple(cases),
                                         float(cfg.get("gamma", 1.0)), int(cfg.get("degree", 2)),
                                         int(cfg.get("spans", 10)), _beta(cfg), timing=timing)
    raise ConfigurationError(f"unknown command {command!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nlbc-iga",
        description="Poisson problems with nonlocal boundary conditions on a NURBS quarter ring.",
        epilog="exit codes: 0 success, 2 configuration error, 3 every system singular")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", help="CSV output path (default: config 'out' or stdout)")
        p.add_argument("--timing", action="store_true", help="record wall times (breaks byte-reproducibility)")
        if name == "solve":
            p.add_argument("--dump-matrix", dest="dump_matrix", help="write the global matrix as triplets")
        else:
            p.set_defaults(dump_matrix=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        threadpool_limits = None
    try:
        cfg = _load_config(args.config)
        if threadpool_limits is not None:
            # single-threaded BLAS keeps every number independent of the machine's thread count
            with threadpool_limits(limits=1):
                result = _run(args.command, cfg, args)
        else:
            result = _run(args.command, cfg, args)
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.get("out")
    text = result.to_csv(out)
    if out is None:
        sys.stdout.write(text)
    if result.all_singular:
        print("every system in this run was singular", file=sys.stderr)
        return EXIT_SINGULAR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
