"""
Named verification suites with seeded sampling and residual statistics.

Every suite draws its random instances from ``numpy`` generators seeded by
``(seed, suite, sample index)``, so results do not depend on the order in
which a thread pool completes them.  A suite may measure several residual
components, each with its own tolerance; its verdict passes iff every
component maximum is within tolerance and no sample raised.
"""
from __future__ import annotations

import csv
import io
import json
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .cmatrix import herm_exp, herm_log
from .dual_group import (
    dress,
    e_inverse,
    e_map,
    e_w_inverse,
    e_w_map,
    f_inverse,
    f_map,
    from_special_body,
    j_map,
    special_inverse,
    special_multiply,
    to_special_body,
)
from .errors import ConfigInvalid
from .forms import (
    contraction_terms,
    contraction_terms_special,
    ext_deriv_residual,
    omega_eval,
    omega_w_eval,
)
from .gw_flow import FlowConfig, dual_route_gap, integrate_flow, reversibility_error, symplecto_residual
from .lie_su import (
    CartanForm,
    PoissonParams,
    coadjoint_act,
    random_cartan_form,
    random_su,
    random_unitary,
)
from .orbits import (
    coadjoint_tangent,
    convexity_check,
    dressing_form_matrix,
    dressing_point,
    form_rank,
    invariance_residual,
    moment_residual_hamiltonian,
    moment_terms_poisson,
    orbit_sample,
)

CHECK_IDS = (
    "lemma1",
    "lemma2",
    "lemma3",
    "theorem1_moment",
    "theorem1_nondegeneracy",
    "theorem1_invariance",
    "convexity",
    "gw_flow",
)
GENERIC_CHECKS = tuple(c for c in CHECK_IDS if c != "lemma3")
SPECIAL_CHECKS = ("lemma3",)

DEFAULT_TOLERANCES = {
    "lemma1.f_image": 1e-10,
    "lemma1.coadjoint": 1e-10,
    "lemma1.roundtrip": 1e-11,
    "lemma2.closedness": 1e-5,
    "lemma2.contraction": 1e-6,
    "lemma3.closedness": 1e-12,
    "lemma3.contraction": 1e-12,
    "lemma3.roundtrip": 1e-11,
    "theorem1_moment.poisson": 1e-5,
    "theorem1_moment.hamiltonian": 1e-10,
    "theorem1_nondegeneracy.rank_deficit": 0.0,
    "theorem1_nondegeneracy.antisymmetry": 1e-10,
    "theorem1_invariance.kks": 1e-6,
    "convexity.spread": 1e-8,
    "gw_flow.symplecto": 1e-3,
    "gw_flow.reversibility": 1e-6,
    "gw_flow.dual_route": 1e-5,
    "gw_flow.orbit_drift": 1e-6,
}

DEFAULT_GRID = {"n": [2, 3], "t": [0.1, 0.5, 1.0], "u": ["zero", "random"], "w": ["zero", "random"]}


# --- configuration ---------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Settings for one suite or a grid of suites.

    ``u`` and ``w`` are either CartanForms or the selectors ``"zero"`` and
    ``"random"``; a random form is drawn from ``seed`` and ``n``.
    """

    n: int = 2
    family: str = "generic"
    t: float = 0.5
    u: object = "zero"
    w: object = "zero"
    samples: int = 100
    seed: int = 42
    tolerances: dict = field(default_factory=dict)
    fd_step: float | None = None
    rank_margin: float = 1e-6
    regular_gap: float = 0.1
    flow_steps: int = 100
    flow_seeds: int = 1
    flow_pairs: int = 20
    flow_fd_step: float = 1e-2
    flow_t_ratio: float = 0.2
    threads: int = 1
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    output: str | None = None

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ConfigInvalid("n must be an integer >= 2")
        if self.family not in ("generic", "special"):
            raise ConfigInvalid(f"unknown family {self.family!r}")
        if self.samples < 1:
            raise ConfigInvalid("samples must be >= 1")
        if self.threads < 1:
            raise ConfigInvalid("threads must be >= 1")
        if self.family == "generic":
            self.params()  # validates t and u
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigInvalid(f"unknown tolerance keys {sorted(unknown)}")

    def _form(self, choice, salt: int) -> CartanForm:
        if isinstance(choice, CartanForm):
            if choice.n != self.n:
                raise ConfigInvalid("Cartan form does not match n")
            return choice
        if isinstance(choice, str) and choice == "zero":
            return CartanForm.zero(self.n)
        if isinstance(choice, str) and choice == "random":
            return random_cartan_form(np.random.default_rng([self.seed, self.n, salt]), self.n)
        try:
            form = CartanForm(np.asarray(choice, dtype=float))
        except Exception as exc:  # noqa: BLE001
            raise ConfigInvalid(f"bad Cartan form {choice!r}: {exc}") from exc
        if form.n != self.n:
            raise ConfigInvalid("Cartan form does not match n")
        return form

    def u_form(self) -> CartanForm:
        return self._form(self.u, 1)

    def w_form(self) -> CartanForm:
        return self._form(self.w, 2)

    def params(self) -> PoissonParams:
        if self.family == "special":
            return PoissonParams.special(self.w_form())
        try:
            return PoissonParams.generic(float(self.t), self.u_form())
        except ConfigInvalid:
            raise
        except Exception as exc:  # noqa: BLE001
            raise ConfigInvalid(str(exc)) from exc

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def label(self) -> str:
        if self.family == "special":
            return f"n={self.n},family=special,w={_form_label(self.w)}"
        return f"n={self.n},t={self.t},u={_form_label(self.u)}"

    def echo(self) -> dict:
        out = {
            "n": self.n,
            "family": self.family,
            "seed": self.seed,
            "samples": self.samples,
            "fd_step": self.fd_step,
        }
        if self.family == "special":
            out["w"] = self.w_form().to_json()
        else:
            out["t"] = self.t
            out["u"] = self.u_form().to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ConfigInvalid("config must be a JSON object")
        names = set(cls.__dataclass_fields__)
        unknown = set(obj) - names
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _form_label(choice) -> str:
    return choice if isinstance(choice, str) else "custom"


# --- reports -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualStats:
    min: float
    median: float
    max: float
    count: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.count > 0 and self.max <= self.tol

    @classmethod
    def of(cls, values, tol: float) -> "ResidualStats":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(float("nan"), float("nan"), float("nan"), 0, tol)
        return cls(float(v.min()), float(np.median(v)), float(v.max()), int(v.size), tol)


@dataclass
class CheckReport:
    check_id: str
    config: dict
    label: str
    stats: dict
    errors: list
    extras: dict = field(default_factory=dict)
    version: str = __version__
    timestamp: float = field(default_factory=time.time)

    @property
    def verdict(self) -> str:
        ok = not self.errors and all(s.passed for s in self.stats.values())
        return "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def body(self) -> dict:
        """Report content without the timestamp; deterministic in the config."""
        return {
            "check_id": self.check_id,
            "label": self.label,
            "config": self.config,
            "residuals": {k: asdict(v) for k, v in self.stats.items()},
            "errors": self.errors,
            "extras": self.extras,
            "verdict": self.verdict,
        }

    def to_json(self) -> dict:
        out = self.body()
        out["provenance"] = {"version": self.version, "timestamp": self.timestamp}
        return out


def reports_to_csv(reports) -> str:
    """One row per (report, residual component)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check_id", "label", "component", "min", "median", "max", "count", "tol", "passed", "verdict", "errors"])
    for r in reports:
        for name, s in r.stats.items():
            w.writerow([
                r.check_id, r.label, name, repr(s.min), repr(s.median), repr(s.max),
                s.count, repr(s.tol), s.passed, r.verdict, len(r.errors),
            ])
    return buf.getvalue()


# --- sampling helpers ------------------------------------------------------------------------

def _rng(cfg: RunConfig, check_id: str, i: int) -> np.random.Generator:
    salt = zlib.crc32(check_id.encode())
    return np.random.default_rng([cfg.seed, cfg.n, salt, i])


def _regular_su(rng, n: int, gap: float, tries: int = 200) -> np.ndarray:
    """Random su(n) element whose spectrum has gaps at least ``gap``."""
    for _ in range(tries):
        a = random_su(rng, n)
        ev = np.sort(np.linalg.eigvalsh(1j * a))
        if n < 2 or np.min(np.diff(ev)) >= gap:
            return a
    raise ConfigInvalid("could not draw a regular element with the requested gap")


def _scale(*vals) -> float:
    return 1.0 + max(abs(v) for v in vals)


# --- per-sample residual evaluators --------------------------------------------------------------
# Each returns a dict component -> residual for one sample.

def _lemma1(cfg, rng, params):
    n = cfg.n
    a = random_su(rng, n)
    g = random_unitary(rng, n)
    A = e_map(a, params)
    Ag, _ = dress(g, A)
    target = g @ j_map(a, params.t) @ g.conj().T
    r1 = np.linalg.norm(f_map(Ag) - target) / (1.0 + np.linalg.norm(target))
    ga = coadjoint_act(g, a)
    r2 = np.linalg.norm(e_inverse(Ag, params).alpha - ga) / (1.0 + np.linalg.norm(ga))
    return {"f_image": r1, "coadjoint": r2, "roundtrip": _roundtrips(rng, n, params)}


def _roundtrips(rng, n, params) -> float:
    """Worst relative error of f o f^-1, e o e^-1 and exp o log on fresh samples."""
    P = j_map(random_su(rng, n), params.t)
    back_f = f_map(f_inverse(P, params.u, params.t))
    back_exp = herm_exp(herm_log(P))
    A = e_map(random_su(rng, n), params)
    back_e = e_map(e_inverse(A, params), params).embedding
    nP = 1.0 + np.linalg.norm(P)
    return max(
        np.linalg.norm(back_f - P) / nP,
        np.linalg.norm(back_exp - P) / nP,
        np.linalg.norm(back_e - A.embedding) / (1.0 + np.linalg.norm(A.embedding)),
    )


def _lemma2(cfg, rng, params):
    n = cfg.n
    a = random_su(rng, n)
    X, Y, Z, eps = (random_su(rng, n) for _ in range(4))
    form = lambda b, U, V: omega_eval(b, U, V, params)  # noqa: E731
    closed = ext_deriv_residual(form, a, X, Y, Z, cfg.fd_step) / (1.0 + np.linalg.norm(a))
    lhs, rhs = contraction_terms(a, eps, X, params)
    return {"closedness": closed, "contraction": abs(lhs - rhs) / _scale(lhs, rhs)}


def _lemma3(cfg, rng, params):
    n = cfg.n
    w = params.w
    a = random_su(rng, n)
    X, Y, Z, eps = (random_su(rng, n) for _ in range(4))
    form = lambda b, U, V: omega_w_eval(b, U, V, w)  # noqa: E731
    closed = ext_deriv_residual(form, a, X, Y, Z, cfg.fd_step)
    lhs, rhs = contraction_terms_special(a, eps, X, w)
    A = e_w_map(to_special_body(a), w)
    B = e_w_map(to_special_body(random_su(rng, n)), w)
    back = np.linalg.norm(from_special_body(e_w_inverse(A)) - a) / (1.0 + np.linalg.norm(a))
    prod = special_multiply(special_multiply(A, B), special_inverse(B))
    law = np.linalg.norm(prod.body - A.body) + np.linalg.norm(prod.tag - A.tag)
    return {
        "closedness": closed,
        "contraction": abs(lhs - rhs),
        "roundtrip": max(back, law / (1.0 + np.linalg.norm(A.body))),
    }


def _theorem1_moment(cfg, rng, params):
    n = cfg.n
    a = _regular_su(rng, n, cfg.regular_gap)
    x = dressing_point(a, params)
    eps = random_su(rng, n)
    c = rng.standard_normal(len(x.tangent_basis))
    X = np.tensordot(c, x.tangent_basis, axes=1)
    lhs, rhs = moment_terms_poisson(x, eps, X, params)
    xi = random_su(rng, n)
    Xc = coadjoint_tangent(a, random_su(rng, n))
    return {
        "poisson": abs(lhs - rhs) / _scale(lhs, rhs),
        "hamiltonian": moment_residual_hamiltonian(a, xi, Xc),
    }


def _theorem1_nondegeneracy(cfg, rng, params):
    n = cfg.n
    a = _regular_su(rng, n, cfg.regular_gap)
    x = dressing_point(a, params)
    W = dressing_form_matrix(x, x.tangent_basis, params)
    rank, smin = form_rank(W, cfg.rank_margin)
    return {
        "rank_deficit": float(n * n - n - rank),
        "antisymmetry": float(np.max(np.abs(W + W.T))) / (1.0 + float(np.max(np.abs(W)))),
        "_min_singular": smin,
    }


def _theorem1_invariance(cfg, rng, params):
    n = cfg.n
    a = _regular_su(rng, n, cfg.regular_gap)
    x = dressing_point(a, params)
    T = x.tangent_basis
    X = np.tensordot(rng.standard_normal(len(T)), T, axes=1)
    Y = np.tensordot(rng.standard_normal(len(T)), T, axes=1)
    g = random_unitary(rng, n)
    diff, before = invariance_residual(x, g, X, Y, params)
    return {"kks": diff / (1.0 + before)}


_SAMPLERS = {
    "lemma1": _lemma1,
    "lemma2": _lemma2,
    "lemma3": _lemma3,
    "theorem1_moment": _theorem1_moment,
    "theorem1_nondegeneracy": _theorem1_nondegeneracy,
    "theorem1_invariance": _theorem1_invariance,
}


def _sampled_suite(check_id, cfg: RunConfig, params):
    fn = _SAMPLERS[check_id]

    def one(i):
        try:
            return i, fn(cfg, _rng(cfg, check_id, i), params), None
        except Exception as exc:  # noqa: BLE001 - recorded as a tagged failure
            return i, None, {"sample": i, "error": type(exc).__name__, "message": str(exc)}

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(one, range(cfg.samples)))
    else:
        results = [one(i) for i in range(cfg.samples)]
    results.sort(key=lambda r: r[0])  # ordered reduction
    comps: dict[str, list] = {}
    errors = []
    for _, vals, err in results:
        if err is not None:
            errors.append(err)
            continue
        for k, v in vals.items():
            comps.setdefault(k, []).append(float(v))
    stats, extras = {}, {}
    for k, v in comps.items():
        if k.startswith("_"):
            extras[k[1:]] = {"min": float(np.min(v)), "median": float(np.median(v))}
            continue
        stats[k] = ResidualStats.of(v, cfg.tol(f"{check_id}.{k}"))
    if not stats:
        for key in DEFAULT_TOLERANCES:
            if key.startswith(check_id + "."):
                stats[key.split(".", 1)[1]] = ResidualStats.of([], cfg.tol(key))
    return stats, errors, extras


def _convexity_suite(cfg: RunConfig, params):
    rng = _rng(cfg, "convexity", 0)
    base = random_su(rng, cfg.n)
    errors = []
    try:
        pts = orbit_sample(cfg.seed, cfg.samples, base, "dressing", params, via_dressing=True)
        ref = convexity_check(pts[:1], params).dominant_weight
        res = []
        for x in pts:
            single = convexity_check([x], params).dominant_weight
            res.append(float(np.max(np.abs(single - ref))))
        report = convexity_check(pts, params, tol=np.inf)
        extras = {"dominant_weight": report.dominant_weight.tolist(), "polytope_vertices": 1}
    except Exception as exc:  # noqa: BLE001
        res, extras = [], {}
        errors.append({"sample": 0, "error": type(exc).__name__, "message": str(exc)})
    return {"spread": ResidualStats.of(res, cfg.tol("convexity.spread"))}, errors, extras


def _gw_suite(cfg: RunConfig, params):
    errors, extras = [], {}
    comps = {"symplecto": [], "reversibility": [], "dual_route": [], "orbit_drift": []}
    try:
        rng = _rng(cfg, "gw_flow", 0)
        seeds = [_regular_su(rng, cfg.n, cfg.regular_gap) for _ in range(cfg.flow_seeds)]
        fcfg = FlowConfig(params.t, params.t * cfg.flow_t_ratio, params.u, steps=cfg.flow_steps)
        flow = integrate_flow(seeds, fcfg)
        rep = symplecto_residual(flow, n_pairs=cfg.flow_pairs, seed=cfg.seed, fd_step=cfg.flow_fd_step)
        comps["symplecto"] = rep.residuals.tolist()
        comps["reversibility"] = [reversibility_error(seeds, fcfg)]
        comps["orbit_drift"] = [flow.diagnostics["orbit_drift"]]
        for a in seeds:
            gap, scale = dual_route_gap(a, params)
            comps["dual_route"].append(gap / scale)
        extras = {
            "t_end": fcfg.t_end,
            "steps": fcfg.steps,
            "quad_order": flow.diagnostics["quad_order"],
            "sign_convention": flow.diagnostics["sign_convention"],
        }
    except Exception as exc:  # noqa: BLE001
        errors.append({"sample": 0, "error": type(exc).__name__, "message": str(exc)})
    stats = {k: ResidualStats.of(v, cfg.tol(f"gw_flow.{k}")) for k, v in comps.items()}
    return stats, errors, extras


def run_check(check_id: str, config: RunConfig) -> CheckReport:
    """Run one named suite and aggregate its residual statistics."""
    if check_id not in CHECK_IDS:
        raise ConfigInvalid(f"unknown check {check_id!r}; expected one of {CHECK_IDS}")
    if check_id == "lemma3" and config.family != "special":
        config = replace(config, family="special")
    elif check_id != "lemma3" and config.family != "generic":
        raise ConfigInvalid(f"{check_id} needs the generic family")
    params = config.params()
    if check_id == "convexity":
        stats, errors, extras = _convexity_suite(config, params)
    elif check_id == "gw_flow":
        stats, errors, extras = _gw_suite(config, params)
    else:
        stats, errors, extras = _sampled_suite(check_id, config, params)
    if check_id == "theorem1_moment":
        extras["pairing_convention"] = "<da(X), xi> = K(X, xi); <dA A^-1, eps> = Im K"
    return CheckReport(check_id, config.echo(), config.label(), stats, errors, extras)


# --- grids -----------------------------------------------------------------------------------------

def grid_configs(config: RunConfig) -> list[tuple[RunConfig, tuple]]:
    """Expand ``config.grid`` into (config, checks) pairs."""
    g = config.grid or {}
    out = []
    for n in g.get("n", []):
        for t in g.get("t", []):
            for u in g.get("u", []):
                c = replace(config, n=int(n), family="generic", t=float(t), u=u, grid={})
                out.append((c, GENERIC_CHECKS))
        for w in g.get("w", []):
            c = replace(config, n=int(n), family="special", w=w, grid={})
            out.append((c, SPECIAL_CHECKS))
    return out


def run_all(config: RunConfig):
    """Run every applicable suite over the configured grid.

    Returns
    -------
    reports : list of CheckReport
    summary : dict
        Pass/fail matrix keyed by configuration label.
    """
    reports = []
    matrix: dict[str, dict] = {}
    configs = grid_configs(config)
    for cfg, checks in configs:
        row = matrix.setdefault(cfg.label(), {})
        for cid in checks:
            rep = run_check(cid, cfg)
            reports.append(rep)
            row[cid] = rep.verdict
    summary = {
        "configurations": len(configs),
        "reports": len(reports),
        "all_pass": all(r.passed for r in reports),
        "matrix": matrix,
    }
    if not configs:
        summary["note"] = "zero configurations in grid"
    return reports, summary
