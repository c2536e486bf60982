"""Command-line frontend: cumord <command> [options].

Exit codes: 0 ok, 1 input error, 2 non-admissible pair, 3 invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .bounds import bound_report
from .core import INF, Quadratic
from .errors import (
    ClassCError,
    CumOrdError,
    DegenerateRecurrenceError,
    InputError,
    MomentBudgetError,
    NotAdmissibleError,
    OrderError,
    UnreachableBranchError,
    WindowTooSmallError,
)
from .family import DEFAULT_TAIL_TOL, TYPE_ALIASES, OrdModel, check_admissible, classify
from .fourier import resolve, spectrum
from .moments import fmt, moment_table
from .polynomials import coeffs_csv, orthonormal_basis, polys_csv
from .suites import SUITES, registry_models, run_suites

log = logging.getLogger("cumord")

EXIT_OK, EXIT_INPUT, EXIT_NOT_ADMISSIBLE, EXIT_INVARIANT = 0, 1, 2, 3
COMMANDS = ("classify", "pmf", "moments", "polys", "spectrum", "bounds", "verify", "sweep")
NEEDS_G = ("spectrum", "bounds", "sweep")

# flag name -> canonical parameter name
TYPE_PARAMS = {
    "lambda": "lam",
    "N": "N",
    "p": "p",
    "r": "r",
    "s": "s",
    "rho": "rho",
    "z1": "z1",
    "z2": "z2",
    "w1": "w1",
    "w2": "w2",
    "value": "value",
}


@dataclass
class RunConfig:
    command: str
    mu: Optional[float] = None
    delta: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    type: Optional[str] = None
    params: dict = field(default_factory=dict)
    g: Optional[str] = None
    m_max: int = 2
    n_max: int = 2
    K: Optional[int] = None
    R: int = 6
    degree: Optional[int] = None
    coeffs: bool = False
    tail_tol: float = DEFAULT_TAIL_TOL
    format: str = "csv"
    output: Optional[str] = None
    only: list = field(default_factory=list)
    model_file: Optional[str] = None
    sweep_param: Optional[str] = None
    sweep_values: list = field(default_factory=list)
    jobs: int = 1

    def validate(self) -> None:
        raw = [self.mu, self.delta, self.beta, self.gamma]
        has_raw = any(v is not None for v in raw)
        if self.command == "verify":
            return
        if has_raw and self.type:
            raise InputError("give either --mu/--delta/--beta/--gamma or --type, not both")
        if not has_raw and not self.type:
            raise InputError("a model is required: --mu/--delta/--beta/--gamma or --type")
        if has_raw and any(v is None for v in raw):
            raise InputError("a raw pair needs all of --mu, --delta, --beta, --gamma")
        if self.command in NEEDS_G and not self.g:
            raise InputError(f"{self.command} needs --g")
        if self.format not in ("csv", "json"):
            raise InputError("--format must be csv or json")
        if not self.tail_tol > 0:
            raise InputError("--tail-tol must be positive")
        for v in (self.m_max, self.n_max):
            if v < 0:
                raise InputError("--m-max and --n-max must be nonnegative")

    def pair(self) -> tuple[float, Quadratic]:
        if self.type:
            from .family import canonical_pair

            return canonical_pair(self.type, **self.params)
        return float(self.mu), Quadratic(float(self.delta), float(self.beta), float(self.gamma))

    def model(self) -> OrdModel:
        mu, q = self.pair()
        return OrdModel.build(mu, q, self.tail_tol)


# ---------------------------------------------------------------------------
# argument parsing


def _complex(text: str) -> complex | float:
    try:
        z = complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return z.real if z.imag == 0 else z


def _csv_list(text: str) -> list[str]:
    return [t for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file mirroring RunConfig; flags override it")
    m = common.add_argument_group("model")
    for name in ("mu", "delta", "beta", "gamma"):
        m.add_argument(f"--{name}", type=float, default=argparse.SUPPRESS)
    m.add_argument("--type", default=argparse.SUPPRESS, help=f"one of {', '.join(sorted(TYPE_ALIASES))}")
    for flag in TYPE_PARAMS:
        m.add_argument(f"--{flag}", type=_complex, default=argparse.SUPPRESS, dest=f"param_{flag}")
    m.add_argument("--tail-tol", type=float, default=argparse.SUPPRESS, dest="tail_tol")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    o.add_argument("--output", "-o", default=argparse.SUPPRESS)
    o.add_argument("-v", "--verbose", action="store_true")

    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--g", default=argparse.SUPPRESS, help="builtin name, expression in x, or table file")
    g.add_argument("--K", type=int, default=argparse.SUPPRESS)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--m-max", type=int, default=argparse.SUPPRESS, dest="m_max")
    grid.add_argument("--n-max", type=int, default=argparse.SUPPRESS, dest="n_max")

    parser = argparse.ArgumentParser(prog="cumord", description="Cumulative Ord family toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="admissibility, support, type and constant")
    sub.add_parser("pmf", parents=[common], help="tabulated pmf (j, p)")
    p = sub.add_parser("moments", parents=[common], help="factorial and raw moments")
    p.add_argument("--R", type=int, default=argparse.SUPPRESS, help="highest order (default 6)")
    p = sub.add_parser("polys", parents=[common], help="orthogonal polynomials on the window")
    p.add_argument("--degree", type=int, default=argparse.SUPPRESS, help="highest degree (default min(6, M))")
    p.add_argument("--coeffs", action="store_true", default=argparse.SUPPRESS, help="emit monomial coefficients")
    sub.add_parser("spectrum", parents=[common, g], help="Fourier coefficients by both routes")
    sub.add_parser("bounds", parents=[common, g, grid], help="S_{m,n} grid with residuals and caps")
    p = sub.add_parser("verify", parents=[common], help="property suites over the model registry")
    p.add_argument("--only", type=_csv_list, default=argparse.SUPPRESS, help=f"subset of {', '.join(SUITES)}")
    p.add_argument("--model-file", default=argparse.SUPPRESS, dest="model_file")
    p = sub.add_parser("sweep", parents=[common, g, grid], help="bounds over a parameter grid")
    p.add_argument("--param", required=False, default=argparse.SUPPRESS, dest="sweep_param")
    p.add_argument("--values", type=_csv_list, default=argparse.SUPPRESS, dest="sweep_values")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    return parser


def config_from_args(argv: list[str]) -> tuple[RunConfig, bool]:
    ns = vars(build_parser().parse_args(argv))
    verbose = ns.pop("verbose", False)
    data: dict = {}
    path = ns.pop("config", None)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config {path}: {e}") from None
        if not isinstance(data, dict):
            raise InputError("config file must hold a JSON object")
    params = {TYPE_PARAMS.get(k, k): v for k, v in dict(data.pop("params", {})).items()}
    for k in list(ns):
        if k.startswith("param_"):
            params[TYPE_PARAMS[k[6:]]] = ns.pop(k)
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    data.update(ns)
    data["params"] = params
    return RunConfig(**data), verbose


# ---------------------------------------------------------------------------
# commands; each returns (text, exit code)


def _end(x: float) -> str:
    return "inf" if x == INF else "-inf" if x == -INF else str(int(x))


def _support(alpha: float, omega: float) -> str:
    return "{" + f"{_end(alpha)},...,{_end(omega)}" + "}"


def _kv_csv(rows: list[tuple[str, object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for k, v in rows:
        w.writerow([k, fmt(v) if isinstance(v, float) else v])
    return buf.getvalue()


def _param_text(v) -> str:
    if isinstance(v, complex):
        return f"{fmt(v.real)}{'+' if v.imag >= 0 else '-'}{fmt(abs(v.imag))}i"
    return fmt(v) if isinstance(v, float) else str(v)


def cmd_classify(cfg: RunConfig) -> tuple[str, int]:
    mu, q = cfg.pair()
    rep = check_admissible(mu, q)
    if not rep.admissible:
        rec = {"admissible": False, "mu": mu, "q": list(q.as_tuple()), "failure_reason": rep.failure_reason}
        if cfg.format == "json":
            return json.dumps(rec, indent=2) + "\n", EXIT_NOT_ADMISSIBLE
        return _kv_csv([("admissible", "false"), ("failure_reason", rep.failure_reason)]), EXIT_NOT_ADMISSIBLE
    model = OrdModel.build(mu, q, cfg.tail_tol)
    kind = classify(mu, q)
    if cfg.format == "json":
        rec = {"admissible": True, "support": _support(model.alpha, model.omega), **model.to_json()}
        return json.dumps(rec, indent=2) + "\n", EXIT_OK
    rows = [
        ("admissible", "true"),
        ("mu", float(mu)),
        ("delta", float(q.delta)),
        ("beta", float(q.beta)),
        ("gamma", float(q.gamma)),
        ("alpha", _end(model.alpha)),
        ("omega", _end(model.omega)),
        ("support", _support(model.alpha, model.omega)),
        ("type", kind.tag),
        ("orientation", kind.orientation),
        ("offset", kind.offset),
    ]
    rows += [(f"param_{k}", _param_text(v)) for k, v in kind.params.items()]
    rows += [
        ("norm_constant", float(model.pmf.norm_constant)),
        ("in_class_C", str(model.in_class_C).lower()),
        ("max_order", _end(model.max_order)),
        ("moment_budget", "inf" if model.moment_budget.max_finite_order == INF else fmt(model.moment_budget.max_finite_order)),
    ]
    return _kv_csv(rows), EXIT_OK


def cmd_pmf(cfg: RunConfig) -> tuple[str, int]:
    model = cfg.model()
    if cfg.format == "json":
        rec = model.to_json()
        rec.update(
            tail_mass_lo=model.pmf.tail_mass_lo,
            tail_mass_hi=model.pmf.tail_mass_hi,
            j=model.js.tolist(),
            p=model.p.tolist(),
        )
        return json.dumps(rec) + "\n", EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "p"])
    for j, p in zip(model.js, model.p):
        w.writerow([int(j), fmt(p)])
    return buf.getvalue(), EXIT_OK


def cmd_moments(cfg: RunConfig) -> tuple[str, int]:
    model = cfg.model()
    tab = moment_table(model, cfg.R)
    if cfg.format == "json":
        rec = {"R": tab.R, "descending": tab.descending, "ascending": tab.ascending, "raw": tab.raw}
        return json.dumps(rec, indent=2) + "\n", EXIT_OK
    return tab.to_csv(), EXIT_OK


def cmd_polys(cfg: RunConfig) -> tuple[str, int]:
    model = cfg.model()
    n = cfg.degree if cfg.degree is not None else int(min(6, model.max_order))
    basis = orthonormal_basis(model, n)
    if cfg.format == "json":
        rec = {
            "polys": [
                {
                    "k": b.k,
                    "lead": b.lead,
                    "norm_sq": b.norm_sq,
                    "d_k": b.d_k,
                    "coeffs": b.coeffs.tolist(),
                    "non_dense": b.non_dense,
                }
                for b in basis
            ]
        }
        if not cfg.coeffs:
            rec["j"] = model.js.tolist()
            for r, b in zip(rec["polys"], basis):
                r["values"] = b.values.tolist()
        return json.dumps(rec) + "\n", EXIT_OK
    return (coeffs_csv(basis) if cfg.coeffs else polys_csv(basis)), EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> tuple[str, int]:
    model = cfg.model()
    g = resolve(cfg.g, model)
    sp = spectrum(model, g, cfg.K)
    if cfg.format == "json":
        rec = {
            "g": g.name,
            "K": sp.K,
            "alphas": sp.alphas.tolist(),
            "alphas_direct": sp.alphas_direct.tolist(),
            "var_direct": sp.var_direct,
            "remainder_estimate": sp.remainder_estimate,
            "non_dense": sp.non_dense,
        }
        return json.dumps(rec, indent=2) + "\n", EXIT_OK
    return sp.to_csv(), EXIT_OK


def cmd_bounds(cfg: RunConfig) -> tuple[str, int]:
    model = cfg.model()
    g = resolve(cfg.g, model)
    rep = bound_report(model, g, cfg.m_max, cfg.n_max, cfg.K)
    for f in rep.failures:
        log.error("invariant failure: %s", f)
    text = json.dumps(rep.to_json(), indent=2) + "\n" if cfg.format == "json" else rep.to_csv()
    return text, EXIT_OK if rep.passed else EXIT_INVARIANT


def _load_models(path: str) -> dict[str, OrdModel]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read model file {path}: {e}") from None
    if isinstance(data, dict) and ("mu" in data or "type" in data):
        data = {Path(path).stem: data}
    elif isinstance(data, list):
        data = {f"model{i}": rec for i, rec in enumerate(data)}
    out = {}
    for name, rec in data.items():
        if "type" in rec:
            params = {TYPE_PARAMS.get(k, k): _complex(v) if isinstance(v, str) else v for k, v in rec.get("params", {}).items()}
            out[name] = OrdModel.from_type(rec["type"], float(rec.get("tail_tol", DEFAULT_TAIL_TOL)), **params)
        else:
            out[name] = OrdModel.from_json(rec)
    return out


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    unknown = [s for s in cfg.only if s not in SUITES]
    if unknown:
        raise InputError(f"unknown suites {unknown}; choose from {', '.join(SUITES)}")
    models = _load_models(cfg.model_file) if cfg.model_file else registry_models()
    run = run_suites(models, cfg.only or None)
    log.info("verify: %d checks, %d failures, %.2f s", len(run.checks), len(run.failures), run.seconds)
    if cfg.format == "json":
        rec = {
            "seconds": run.seconds,
            "checks": len(run.checks),
            "failures": [c.__dict__ for c in run.failures],
            "results": [c.__dict__ for c in run.checks],
        }
        text = json.dumps(rec, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite", "model", "check", "value", "tol", "passed", "note"])
        for c in run.checks:
            w.writerow([c.suite, c.model, c.name, fmt(c.value), fmt(c.tol), int(c.passed), c.note])
        text = buf.getvalue()
    summary = f"verify: {len(run.checks)} checks, {len(run.failures)} failures, {run.seconds:.2f} s"
    print(summary, file=sys.stderr)
    return text, EXIT_OK if not run.failures else EXIT_INVARIANT


SWEEP_RAW = ("mu", "delta", "beta", "gamma")


def _sweep_one(cfg: RunConfig, value: str) -> list[list]:
    c = RunConfig(**{f.name: getattr(cfg, f.name) for f in fields(RunConfig)})
    c.params = dict(cfg.params)
    if cfg.sweep_param in SWEEP_RAW:
        setattr(c, cfg.sweep_param, float(value))
    else:
        c.params[TYPE_PARAMS.get(cfg.sweep_param, cfg.sweep_param)] = _complex(value)
    try:
        model = c.model()
        g = resolve(c.g, model)
        rep = bound_report(model, g, c.m_max, c.n_max, c.K)
    except NotAdmissibleError as e:
        return [[value, "", "", "", "", "", "", f"not admissible: {e}"]]
    except CumOrdError as e:
        return [[value, "", "", "", "", "", "", f"{type(e).__name__}: {e}"]]
    status = "ok" if rep.passed else "invariant failure: " + "; ".join(rep.failures)
    return [
        [value, m, n, fmt(rep.var_direct), fmt(cell.S), fmt(cell.residual), int(cell.equality), status]
        for (m, n), cell in sorted(rep.cells.items())
    ]


def cmd_sweep(cfg: RunConfig) -> tuple[str, int]:
    if not cfg.sweep_param or not cfg.sweep_values:
        raise InputError("sweep needs --param and --values")
    if cfg.sweep_param not in SWEEP_RAW and cfg.sweep_param not in TYPE_PARAMS and cfg.sweep_param not in TYPE_PARAMS.values():
        raise InputError(f"cannot sweep {cfg.sweep_param!r}")
    if cfg.sweep_param in SWEEP_RAW and cfg.type:
        raise InputError("raw-pair parameters can only be swept for a raw pair")
    values = [str(v) for v in cfg.sweep_values]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_sweep_one, [cfg] * len(values), values))
    else:
        results = [_sweep_one(cfg, v) for v in values]
    rows = [r for chunk in results for r in chunk]
    failed = any(r[-1].startswith("invariant failure") for r in rows)
    if cfg.format == "json":
        keys = ["value", "m", "n", "var", "S", "residual", "equality_flag", "status"]
        return json.dumps([dict(zip(keys, r)) for r in rows], indent=2) + "\n", EXIT_INVARIANT if failed else EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([cfg.sweep_param, "m", "n", "var", "S", "residual", "equality_flag", "status"])
    w.writerows(rows)
    return buf.getvalue(), EXIT_INVARIANT if failed else EXIT_OK


HANDLERS = {
    "classify": cmd_classify,
    "pmf": cmd_pmf,
    "moments": cmd_moments,
    "polys": cmd_polys,
    "spectrum": cmd_spectrum,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig) -> tuple[str, int]:
    cfg.validate()
    return HANDLERS[cfg.command](cfg)


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, verbose = config_from_args(argv)
    except SystemExit as e:  # argparse usage errors
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text, code = run(cfg)
    except NotAdmissibleError as e:
        print(f"not admissible: {e}", file=sys.stderr)
        return EXIT_NOT_ADMISSIBLE
    except (InputError, OrderError, WindowTooSmallError, MomentBudgetError, ClassCError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateRecurrenceError, UnreachableBranchError) as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
