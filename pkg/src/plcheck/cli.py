"""Command line entry point ``plcheck``.

Exit status is 0 when every reported verdict passes, 1 when a check fails
and 2 for invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .dual_group import e_map
from .errors import PLCheckError
from .forms import FORM_IDS, evaluate_form
from .gw_flow import FlowConfig, dual_route_gap, integrate_flow, reversibility_error, symplecto_residual
from .harness import CHECK_IDS, RunConfig, reports_to_csv, run_all, run_check
from .lie_su import CartanForm, CoalgebraVector, PoissonParams, random_su
from .orbits import orbit_sample

GROUPED_CHECKS = {
    "lemma1": ("lemma1",),
    "lemma2": ("lemma2",),
    "lemma3": ("lemma3",),
    "theorem1": ("theorem1_moment", "theorem1_nondegeneracy", "theorem1_invariance"),
    "convexity": ("convexity",),
    "gw-flow": ("gw_flow",),
}


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _emit(obj, out=None, text: str | None = None):
    payload = text if text is not None else json.dumps(obj, indent=2, sort_keys=False)
    if out:
        with open(out, "w") as fh:
            fh.write(payload if payload.endswith("\n") else payload + "\n")
    else:
        sys.stdout.write(payload if payload.endswith("\n") else payload + "\n")


def _cartan(path, n: int) -> CartanForm:
    if path is None:
        return CartanForm.zero(n)
    u = CartanForm.from_json(_load_json(path))
    if u.n != n:
        raise PLCheckError(f"Cartan form in {path} is for n={u.n}, expected n={n}")
    return u


def _params(args) -> PoissonParams:
    return PoissonParams.generic(args.t, _cartan(args.u_file, args.n))


def _emit_reports(reports, args, summary=None) -> int:
    if args.format == "csv":
        _emit(None, args.out, reports_to_csv(reports))
    else:
        body = {"reports": [r.to_json() for r in reports]}
        if summary is not None:
            body["summary"] = summary
        _emit(body, args.out)
    return 0 if all(r.passed for r in reports) else 1


# --- subcommands ------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.threads:
        cfg = RunConfig.from_json({**_config_dict(cfg), "threads": args.threads})
    return _emit_reports([run_check(args.check, cfg)], args)


def _config_dict(cfg: RunConfig) -> dict:
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}


def cmd_run_all(args) -> int:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.threads:
        cfg = RunConfig.from_json({**_config_dict(cfg), "threads": args.threads})
    reports, summary = run_all(cfg)
    return _emit_reports(reports, args, summary)


def cmd_check(args) -> int:
    overrides = {"n": args.n, "t": args.t, "samples": args.samples, "seed": args.seed}
    if args.u_file:
        overrides["u"] = _load_json(args.u_file)
    if args.w_file:
        overrides["w"] = _load_json(args.w_file)
    elif args.name == "lemma3":
        overrides["w"] = "random"
    cfg = RunConfig.from_json(overrides)
    reports = [run_check(cid, cfg) for cid in GROUPED_CHECKS[args.name]]
    return _emit_reports(reports, args)


def cmd_emap(args) -> int:
    a = CoalgebraVector.from_json(_load_json(args.input))
    A = e_map(a, PoissonParams.generic(args.t, _cartan(args.u_file, a.n)))
    _emit(A.to_json(), args.out)
    return 0


def cmd_omega(args) -> int:
    obj = _load_json(args.input)
    a = CoalgebraVector.from_json(obj["a"])
    X = CoalgebraVector.from_json(obj["X"]).alpha
    Y = CoalgebraVector.from_json(obj["Y"]).alpha
    params = PoissonParams.from_json(obj["params"])
    form_id = args.form_id or obj.get("form_id", "omega_total")
    _emit(evaluate_form(form_id, a, X, Y, params).to_json(), args.out)
    return 0


def cmd_dressing_sample(args) -> int:
    params = _params(args)
    if args.base_file:
        base = CoalgebraVector.from_json(_load_json(args.base_file))
    else:
        base = CoalgebraVector(random_su(np.random.default_rng(args.seed), args.n))
    pts = orbit_sample(args.seed, args.count, base, "dressing", params)
    _emit([p.to_json() for p in pts], args.out)
    return 0


def cmd_gw_flow(args) -> int:
    u = _cartan(args.u_file, args.n)
    if args.seeds_file:
        obj = _load_json(args.seeds_file)
        obj = obj if isinstance(obj, list) else [obj]
        seeds = [CoalgebraVector.from_json(o).alpha for o in obj]
    else:
        seeds = [random_su(np.random.default_rng(args.seed), args.n)]
    cfg = FlowConfig(args.t_start, args.t_end, u, steps=args.steps)
    flow = integrate_flow(seeds, cfg)
    rep = symplecto_residual(flow, n_pairs=args.pairs, seed=args.seed, fd_step=args.fd_step)
    body = flow.to_json(include_trajectory=args.trajectory)
    body["symplecto_residual"] = rep.to_json()
    body["reversibility"] = reversibility_error(seeds, cfg)
    body["dual_route"] = [
        gap / scale for gap, scale in (dual_route_gap(a, cfg.params_at(0.0)) for a in seeds)
    ]
    body["passed"] = bool(rep.max <= args.tol)
    _emit(body, args.out)
    return 0 if body["passed"] else 1


# --- parser --------------------------------------------------------------------------

def _add_output(p):
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plcheck", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one named check")
    p.add_argument("--check", required=True, choices=CHECK_IDS)
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--threads", type=int)
    _add_output(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("run-all", help="run every check over the configured grid")
    p.add_argument("--config", help="RunConfig JSON")
    p.add_argument("--threads", type=int)
    _add_output(p)
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("check", help="run a group of checks with inline parameters")
    p.add_argument("name", choices=sorted(GROUPED_CHECKS))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--u-file")
    p.add_argument("--w-file")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    _add_output(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("emap", help="map a coalgebra vector into the dual group")
    p.add_argument("--input", required=True, help="CoalgebraVector JSON")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--u-file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_emap)

    p = sub.add_parser("omega", help="evaluate a two-form")
    p.add_argument("--input", required=True, help='JSON with "a", "X", "Y", "params"')
    p.add_argument("--form-id", choices=FORM_IDS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("dressing-orbit", help="dressing orbit utilities")
    dsub = p.add_subparsers(dest="action", required=True)
    q = dsub.add_parser("sample", help="sample points of one dressing orbit")
    q.add_argument("--n", type=int, default=2)
    q.add_argument("--t", type=float, default=0.5)
    q.add_argument("--u-file")
    q.add_argument("--base-file")
    q.add_argument("--count", type=int, default=10)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_dressing_sample)

    p = sub.add_parser("gw-flow", help="integrate the deformation flow and certify it")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--t-start", type=float, default=0.5)
    p.add_argument("--t-end", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--u-file")
    p.add_argument("--seeds-file")
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fd-step", type=float, default=1e-2)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--trajectory", action="store_true", help="include full trajectories")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gw_flow)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PLCheckError, ValueError, KeyError, OSError) as exc:
        print(f"plcheck: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
