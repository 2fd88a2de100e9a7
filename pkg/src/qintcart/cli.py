"""Command-line front end: ``qintcart list | verify | determining | simulate``.

Exit codes: 0 pass, 1 verification or drift failure, 2 configuration error,
3 blow-up during simulation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .catalog import (
    CASE_IDS,
    CatalogError,
    case_parameters,
    make_case,
    normalize_id,
    parse_perturbation,
    perturb,
    verify_case,
)
from .expr import (
    EvalPoint,
    ParseError,
    UnboundSymbolError,
    evaluate,
    free_symbols,
    parse,
    substitute,
    to_string,
)
from .expr.evaluate import DEFAULT_TOL, DEFAULT_TRIALS

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3
SCHEMA = "qintcart/1"


class ConfigError(Exception):
    pass


def _seed(value) -> int:
    if value is None:
        value = os.environ.get("QINTCART_SEED", "0")
    try:
        s = int(value, 0) if isinstance(value, str) else int(value)
    except ValueError as exc:
        raise ConfigError(f"seed must be an integer, got {value!r}") from exc
    if not 0 <= s < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    return s


def _number(text: str):
    try:
        e = parse(text)
    except ParseError as exc:
        raise ConfigError(f"cannot parse value {text!r}: {exc}") from exc
    if free_symbols(e):
        raise ConfigError(f"parameter value must be numeric: {text!r}")
    v = complex(evaluate(e, EvalPoint()))
    return v.real if v.imag == 0 else v


def _extra_params(extra: list[str]) -> dict:
    """``["--C", "1", "--C1=0"]`` -> ``{"C": 1.0, "C1": 0.0}``."""
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        name, eq, value = tok[2:].partition("=")
        if not eq:
            try:
                value = next(it)
            except StopIteration as exc:
                raise ConfigError(f"missing value for --{name}") from exc
        out[name] = _number(value)
    return out


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# -- list ---------------------------------------------------------------------


def _case_rows(prefix: str | None):
    rows = []
    for cid in CASE_IDS:
        if prefix and not (cid == prefix or cid.startswith(prefix) and prefix.startswith("6.") and len(prefix) == 3):
            continue
        spec = make_case(cid)
        rows.append({"id": cid, "summary": spec.summary, "free_parameters": spec.free_params})
    return rows


def cmd_list(args) -> int:
    prefix = args.case
    if prefix and prefix not in CASE_IDS and prefix not in ("6.1", "6.2", "6.3", "6.4"):
        raise ConfigError(f"unknown case or family {prefix!r}")
    rows = _case_rows(prefix)
    if args.format == "json":
        print(_dump(rows))
    else:
        for r in rows:
            params = ", ".join(r["free_parameters"]) or "-"
            print(f"{r['id']:<6} {r['summary']}  [params: {params}]")
    return EXIT_OK


# -- verify -------------------------------------------------------------------


def _verify_one(job):
    cid, bindings, perturbation, trials, tol, seed, samples = job
    spec = make_case(cid, bindings)
    if perturbation:
        spec = perturb(spec, *parse_perturbation(perturbation))
    rep = verify_case(spec, trials, tol, seed, samples)
    d = rep.to_dict()
    d["version"] = __version__
    d["perturbation"] = perturbation
    d["omega_printed"] = None if spec.omega is None else [to_string(e) for e in spec.omega]
    d["field"] = {"V": to_string(spec.field.V), "A": [to_string(a) for a in spec.field.A]}
    return d


def _text_report(d) -> str:
    verdict = "PASS" if d["passed"] else "FAIL"
    worst = ", ".join(f"{k} {v['max_residual']:.2e}" for k, v in d["commutators"].items())
    lines = [f"case {d['case']}: {verdict}  ({worst})" + ("  [non-real field]" if d["non_real_field"] else "")]
    for group in ("HQ", "HP", "QP"):
        for c in d["commutators"][group]["coefficients"]:
            if not c["passed"]:
                lines.append(f"  {group} d^{tuple(c['index'])}: residual {c['max_residual']:.3e}")
                if "witness" in c:
                    lines.append(f"    witness: {json.dumps(c['witness'], sort_keys=True)}")
    for c in d["eq4"] + d["omega"]:
        if not c["passed"]:
            lines.append(f"  {c['commutator']} {c['index']}: residual {c['max_residual']:.3e}")
    return "\n".join(lines)


def cmd_verify(args, extra) -> int:
    if bool(args.all) == bool(args.case):
        raise ConfigError("give exactly one of --case or --all")
    seed = _seed(args.seed)
    params = _extra_params(extra)
    ids = list(CASE_IDS) if args.all else [normalize_id(args.case)]
    if args.perturb:
        parse_perturbation(args.perturb)
    jobs = []
    for cid in ids:
        names = case_parameters(cid)
        bindings = {k: v for k, v in params.items() if k in names} if args.all else params
        if not args.all:
            make_case(cid, bindings)  # raise configuration errors early
        jobs.append((cid, bindings, args.perturb, args.trials, args.tol, seed, args.samples))
    if len(jobs) > 1 and args.workers != 1:
        with ProcessPoolExecutor(max_workers=args.workers or None) as pool:
            results = list(pool.map(_verify_one, jobs))
    else:
        results = [_verify_one(j) for j in jobs]
    results.sort(key=lambda d: CASE_IDS.index(d["case"].rstrip("*")))
    passed = all(d["passed"] for d in results)
    if args.format == "json":
        doc = {"schema": SCHEMA, "version": __version__, "seed": seed, "trials": args.trials, "tol": args.tol,
               "passed": passed, "reports": results}
        print(_dump(doc if args.all else {**doc, **results[0], "reports": None}))
    else:
        for d in results:
            print(_text_report(d))
        if args.all:
            print(f"{sum(d['passed'] for d in results)}/{len(results)} cases pass (seed {seed})")
    return EXIT_OK if passed else EXIT_FAIL


# -- determining ----------------------------------------------------------------


def cmd_determining(args, extra) -> int:
    from .determining import generate, substitute_case

    seed = _seed(args.seed)
    system = generate(seed=seed)
    if args.substitute:
        spec = make_case(args.substitute, _extra_params(extra))
        rep = substitute_case(system, spec, trials=args.trials, tol=args.tol, seed=seed)
        if args.format == "json":
            print(_dump({"schema": SCHEMA, "version": __version__, "seed": seed, **rep.to_dict()}))
        else:
            for r, e, t in rep.results:
                state = "0" if t.passed else f"NONZERO ({t.residual:.3e})"
                print(f"{r.commutator} {r.index} hbar^{r.hbar_power}: {state}")
            print(f"case {spec.id}: {'all residuals zero' if rep.passed else 'FAIL'}")
        return EXIT_OK if rep.passed else EXIT_FAIL
    if extra:
        raise ConfigError(f"unexpected arguments {' '.join(extra)}")
    if args.latex:
        print(system.to_latex())
    elif args.format == "json":
        print(_dump({"schema": SCHEMA, "version": __version__, "seed": seed, "residuals": system.to_json()}))
    else:
        for r in system:
            print(f"{r.commutator} order {r.order} {r.index} hbar^{r.hbar_power}: {to_string(r.expr)} = 0")
    return EXIT_OK


# -- simulate -------------------------------------------------------------------


def _ode_profile(spec, name, body, x_range):
    from .classical import integrate_profile

    inside = body[4:-1] if body.startswith("ode(") and body.endswith(")") else None
    try:
        f0, f0p = (float(_number(v)) for v in inside.split(","))
    except (ValueError, TypeError, AttributeError) as exc:
        raise ConfigError(f"profile {name}=ode(f0, f0') needs two numbers") from exc
    rule = next((r for r in spec.rules if r.function == name), None)
    if rule is None:
        raise ConfigError(f"case {spec.id} has no ODE for {name}")
    def at(v):
        e = substitute(rule.replacement, functions={name: v})
        if free_symbols(e):
            raise ConfigError(f"ODE for {name} has unbound parameters: "
                              + ", ".join(sorted(str(s) for s in free_symbols(e))))
        return complex(evaluate(e, EvalPoint())).real

    c4 = at(0)
    c1 = (at(1) - at(-1)) / 2
    c = (at(1) + at(-1)) / 2 - c4
    return integrate_profile(c, c1, c4, f0, f0p, (-x_range, x_range))


def cmd_simulate(args, extra) -> int:
    from .classical import MissingBindingError, PhaseState, concretize, integrate_trajectory, is_real_system

    seed = _seed(args.seed)
    params = _extra_params(extra)
    spec = make_case(args.case, params)
    profiles = {}
    text = args.profile or ""
    # split on commas that are not inside parentheses
    depth, cur, pieces = 0, "", []
    for ch in text:
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            pieces.append(cur)
            cur = ""
        else:
            cur += ch
    pieces.append(cur)
    for piece in filter(None, (p.strip() for p in pieces)):
        name, eq, body = piece.partition("=")
        name, body = name.strip(), body.strip()
        if not eq or not name:
            raise ConfigError(f"profile must look like name=expression: {piece!r}")
        if body.startswith("ode("):
            profiles[name] = _ode_profile(spec, name, body, args.x_range)
        else:
            try:
                profiles[name] = parse(body)
            except ParseError as exc:
                raise ConfigError(f"cannot parse profile {name}: {exc}") from exc
    try:
        system = concretize(spec, profiles)
    except MissingBindingError as exc:
        raise ConfigError(str(exc)) from exc
    if not is_real_system(system):
        raise ConfigError(f"case {spec.id} gives a complex Hamiltonian with these bindings")
    if args.state:
        vals = [float(_number(v)) for v in args.state.split(",")]
        if len(vals) != 6:
            raise ConfigError("--state needs x,y,z,p1,p2,p3")
    else:
        rng = np.random.default_rng([seed & 0xFFFFFFFF, seed >> 32, 0x5EED])
        vals = list(rng.uniform(-1.0, 1.0, 6))
    state = PhaseState(vals[:3], vals[3:])
    log = integrate_trajectory(system, state, args.t_final, args.rtol, samples=args.samples)
    drift = log.drift
    ok = all(v < args.drift_bound for v in drift.values())
    log.meta = {"case": spec.id, "seed": seed, "version": __version__, "t_final": args.t_final,
                "initial_state": vals, "drift_bound": args.drift_bound, "passed": ok and not log.blew_up}
    if args.out:
        with open(args.out + ".csv", "w") as fh:
            fh.write(log.to_csv())
        with open(args.out + ".json", "w") as fh:
            fh.write(log.dumps() + "\n")
    if args.format == "json":
        print(log.dumps())
    else:
        print(f"case {spec.id}: {log.status} at t = {log.t_stop:g}; drift "
              + ", ".join(f"{k} {v:.2e}" for k, v in drift.items()))
    if log.blew_up:
        return EXIT_BLOWUP
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qintcart", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qintcart {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", default=None, help="64-bit seed (default: $QINTCART_SEED or 0)")
        sp.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = sub.add_parser("list", help="list catalog entries")
    sp.add_argument("--case", help="case id or Case 6 family such as 6.2")
    sp.add_argument("--format", choices=("text", "json"), default="text")

    sp = sub.add_parser("verify", help="zero-test [H,Q], [H,P], [Q,P] for catalog entries",
                        epilog="Extra --NAME VALUE pairs bind case parameters.")
    sp.add_argument("--case")
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--perturb", help="tamper with the spec, e.g. V+x*y or Q+p3")
    sp.add_argument("--samples", type=int, default=1, help="independent parameter samples")
    sp.add_argument("--workers", type=int, default=0, help="worker processes for --all (0: one per CPU)")
    common(sp)

    sp = sub.add_parser("determining", help="emit the determining system")
    sp.add_argument("--substitute", metavar="CASE")
    sp.add_argument("--latex", action="store_true")
    common(sp)

    sp = sub.add_parser("simulate", help="integrate classical trajectories")
    sp.add_argument("--case", required=True)
    sp.add_argument("--profile", help='e.g. "u1=x^2,u2=y^2" or "f=ode(0.3,0)"')
    sp.add_argument("--t-final", type=float, default=100.0)
    sp.add_argument("--rtol", type=float, default=1e-10)
    sp.add_argument("--state", help="x,y,z,p1,p2,p3 (default: seeded random)")
    sp.add_argument("--samples", type=int, default=1001)
    sp.add_argument("--drift-bound", type=float, default=1e-6)
    sp.add_argument("--x-range", type=float, default=300.0, help="half-width of ODE profile tables")
    sp.add_argument("--out", help="write OUT.csv and OUT.json")
    sp.add_argument("--seed", default=None)
    sp.add_argument("--format", choices=("text", "json"), default="text")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        if args.command == "list":
            if extra:
                raise ConfigError(f"unexpected arguments {' '.join(extra)}")
            return cmd_list(args)
        if args.command == "verify":
            return cmd_verify(args, extra)
        if args.command == "determining":
            return cmd_determining(args, extra)
        if args.command == "simulate":
            return cmd_simulate(args, extra)
    except (ConfigError, CatalogError, ParseError, UnboundSymbolError, ValueError) as exc:
        print(f"qintcart: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
