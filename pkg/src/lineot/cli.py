"""Command line entry point.

Exit codes: 0 ok, 1 a checked property is false, 2 input error,
3 a solver did not converge. Errors are printed to stderr as JSON.
"""

import argparse
import json
import sys

from . import figures
from .couplings import (NotConverged, OrderViolation, check_optimal_crossings, cost,
                        is_strongly_multiplicative_on, is_weakly_multiplicative,
                        kellerer_parts, monotone_coupling, w1_oracle)
from .decomposition import (MassMismatch, barrier_set, decomposition_report,
                            four_set_union, line_components)
from .entropic import sinkhorn_solve, sweep_to_limit, verify_eps_invariance
from .measure import discretize, fmt, measure_from_json
from .orders import check_relation
from .plan import FloatPlan, marginal_l1_error, read_plan_csv, write_plan_csv

DEFAULT_SCHEDULE = "1,0.3,0.1,0.03,0.01"


class InputError(Exception):
  pass


class CheckFailed(Exception):
  def __init__(self, payload):
    super().__init__("check failed")
    self.payload = payload


class SolverFailed(Exception):
  def __init__(self, payload):
    super().__init__("no convergence")
    self.payload = payload


def num(x):
  """Floats at a fixed 12 significant digits for reproducible output."""
  return float(format(x, ".12g"))


def _read_json(path):
  try:
    with open(path) as fh:
      return json.load(fh)
  except OSError as exc:
    raise InputError(f"cannot read {path}: {exc.strerror}") from exc
  except json.JSONDecodeError as exc:
    raise InputError(f"{path} is not valid JSON: {exc.msg}") from exc


def load_problem(args, need_atomic=False):
  if args.problem:
    obj = _read_json(args.problem)
    if not isinstance(obj, dict) or "mu" not in obj or "nu" not in obj:
      raise InputError("problem file must hold an object with keys mu and nu")
    raw_mu, raw_nu = obj["mu"], obj["nu"]
  elif args.mu and args.nu:
    raw_mu, raw_nu = _read_json(args.mu), _read_json(args.nu)
  else:
    raise InputError("give --problem FILE or both --mu FILE and --nu FILE")
  try:
    mu, nu = measure_from_json(raw_mu), measure_from_json(raw_nu)
  except (KeyError, TypeError, ValueError) as exc:
    raise InputError(f"invalid measure: {exc}") from exc
  if mu.mass != nu.mass:
    raise InputError("marginal masses differ")
  if mu.mass <= 0:
    raise InputError("marginals must have positive mass")
  if need_atomic and not (mu.is_atomic and nu.is_atomic):
    if not args.discretize:
      raise InputError("this command needs atomic measures; pass --discretize N")
    mu, nu = discretize(mu, args.discretize), discretize(nu, args.discretize)
  return mu, nu


def load_plan(args):
  try:
    with open(args.plan) as fh:
      return read_plan_csv(fh.read(), exact=not args.float_weights)
  except OSError as exc:
    raise InputError(f"cannot read {args.plan}: {exc.strerror}") from exc
  except ValueError as exc:
    raise InputError(f"invalid plan: {exc}") from exc


def emit(args, payload):
  text = json.dumps(payload, indent=2) + "\n"
  if args.out:
    with open(args.out, "w") as fh:
      fh.write(text)
  else:
    sys.stdout.write(text)


def write_text(path, text):
  with open(path, "w") as fh:
    fh.write(text)


def cmd_decompose(args):
  mu, nu = load_problem(args)
  report = decomposition_report(mu, nu)
  if args.svg:
    figures.plot_cdfs(mu, nu, line_components(mu, nu), args.svg)
  return report


def cmd_barriers(args):
  mu, nu = load_problem(args)
  eq = barrier_set(mu, nu)
  return {
      "barrier_set": str(eq),
      "intervals": [{"lo": fmt(iv.lo), "hi": fmt(iv.hi), "lo_closed": iv.lo_closed,
                     "hi_closed": iv.hi_closed} for iv in eq],
      "matches_cdf_union": eq == four_set_union(mu, nu),
  }


def cmd_kellerer(args):
  mu, nu = load_problem(args, need_atomic=True)
  try:
    parts = kellerer_parts(mu, nu, args.tol, args.max_iter)
  except NotConverged as exc:
    raise SolverFailed({"error": "kellerer iteration did not converge",
                        "residual": num(exc.residual)}) from exc
  plan = FloatPlan()
  for p, _ in parts:
    plan = plan + p
  if args.csv:
    write_text(args.csv, write_plan_csv(plan))
  if args.svg:
    figures.plot_plan(plan, args.svg, "Kellerer plan")
  w1 = w1_oracle(mu, nu)
  return {
      "cells": len(plan),
      "marginal_error": num(marginal_l1_error(plan, mu, nu)),
      "cost": num(cost(plan)),
      "w1": str(w1),
      "components": [
          {"halfplane": h, "cells": len(p), "mass": num(p.mass),
           "strongly_multiplicative": bool(is_strongly_multiplicative_on(p, h, 1e-9))
           if h != "D" else True}
          for p, h in parts
      ],
  }


def cmd_sinkhorn(args):
  mu, nu = load_problem(args, need_atomic=True)
  res = sinkhorn_solve(mu, nu, args.epsilon, args.tol, args.max_iter)
  if args.csv:
    write_text(args.csv, write_plan_csv(res.plan))
  if args.svg:
    figures.plot_plan(res.plan, args.svg, f"entropic plan, epsilon={args.epsilon:g}")
  payload = {
      "epsilon": args.epsilon,
      "iterations": res.iterations,
      "marginal_error": num(res.marginal_error),
      "converged": res.converged,
      "cost": num(cost(res.plan)),
      "w1": str(w1_oracle(mu, nu)),
      "eps_invariant": verify_eps_invariance(res, mu, nu, 1e-8, seed=args.seed),
      "phi": [num(v) for v in res.phi],
      "psi": [num(v) for v in res.psi],
  }
  if not res.converged:
    raise SolverFailed(payload)
  return payload


def _schedule(text):
  try:
    return [float(v) for v in text.split(",") if v.strip()]
  except ValueError as exc:
    raise InputError(f"bad schedule {text!r}") from exc


def cmd_sweep(args):
  mu, nu = load_problem(args, need_atomic=True)
  try:
    report = sweep_to_limit(mu, nu, _schedule(args.schedule), args.tol, args.max_iter,
                            warm_start=not args.cold)
  except ValueError as exc:
    raise InputError(str(exc)) from exc
  if args.csv:
    write_text(args.csv, report.to_csv())
  if args.svg:
    figures.plot_sweep(report, args.svg)
  payload = report.to_json()
  for r in payload["records"]:
    for k, v in r.items():
      if isinstance(v, float):
        r[k] = num(v)
  payload["w1"] = num(payload["w1"])
  payload["reference_marginal_error"] = num(payload["reference_marginal_error"])
  if not report.all_converged():
    raise SolverFailed(payload)
  return payload


def _witness(w):
  if w is None:
    return None
  return {"kind": w.kind, "data": json.loads(json.dumps(w.data, default=str))}


def cmd_check(args):
  if args.what == "order":
    mu, nu = load_problem(args)
    v = check_relation(mu, nu, args.relation)
    payload = {"relation": args.relation, "holds": v.holds,
               "witness_t": None if v.holds else fmt(v.witness_t), "reason": v.reason}
  elif args.what == "optimal":
    pi = load_plan(args)
    v = check_optimal_crossings(pi)
    payload = {"holds": v.holds, "witness": _witness(v.witness), "cost": str(cost(pi))}
    if pi.exact:
      mu, nu = pi.marginals()
      payload["w1"] = str(w1_oracle(mu, nu))
  else:
    pi = load_plan(args)
    if args.halfplane:
      v = is_strongly_multiplicative_on(pi, args.halfplane, args.tol)
    else:
      v = is_weakly_multiplicative(pi, args.tol)
    payload = {"holds": v.holds, "witness": _witness(v.witness),
               "halfplane": args.halfplane}
  if not payload["holds"]:
    raise CheckFailed(payload)
  return payload


def cmd_oracle_compare(args):
  mu, nu = load_problem(args, need_atomic=True)
  mono = monotone_coupling(mu, nu)
  w1 = w1_oracle(mu, nu)
  plan = FloatPlan()
  for p, _ in kellerer_parts(mu, nu, args.tol, args.max_iter):
    plan = plan + p
  payload = {
      "w1_oracle": str(w1),
      "monotone_cost": str(cost(mono)),
      "kellerer_cost": num(cost(plan)),
      "monotone_matches": cost(mono) == w1,
      "kellerer_gap": num(abs(cost(plan) - float(w1))),
  }
  if not payload["monotone_matches"] or payload["kellerer_gap"] > 1e-9:
    raise CheckFailed(payload)
  return payload


def build_parser():
  p = argparse.ArgumentParser(prog="lineot", description=__doc__.splitlines()[0])
  sub = p.add_subparsers(dest="command", required=True)

  def common(sp, tol=1e-12, max_iter=100000):
    sp.add_argument("--problem", help="JSON file with keys mu and nu")
    sp.add_argument("--mu", help="measure JSON file")
    sp.add_argument("--nu", help="measure JSON file")
    sp.add_argument("--out", help="write the JSON report here instead of stdout")
    sp.add_argument("--csv", help="write the CSV artifact here")
    sp.add_argument("--svg", help="write a figure here (format from extension)")
    sp.add_argument("--tol", type=float, default=tol)
    sp.add_argument("--max-iter", type=int, default=max_iter)
    sp.add_argument("--discretize", type=int, default=0, metavar="N",
                    help="replace density pieces by N midpoint atoms each")
    sp.add_argument("--seed", type=int, default=0)

  for name, fn in (("decompose", cmd_decompose), ("barriers", cmd_barriers),
                   ("kellerer", cmd_kellerer), ("oracle-compare", cmd_oracle_compare)):
    sp = sub.add_parser(name)
    common(sp)
    sp.set_defaults(func=fn)

  sp = sub.add_parser("sinkhorn")
  common(sp, 1e-10, 200000)
  sp.add_argument("--epsilon", type=float, default=0.1)
  sp.set_defaults(func=cmd_sinkhorn)

  sp = sub.add_parser("sweep")
  common(sp, 1e-10, 200000)
  sp.add_argument("--schedule", default=DEFAULT_SCHEDULE,
                  help="comma separated, strictly decreasing epsilons")
  sp.add_argument("--cold", action="store_true", help="disable warm starts")
  sp.set_defaults(func=cmd_sweep)

  sp = sub.add_parser("check")
  sp.add_argument("what", choices=["order", "optimal", "multiplicative"])
  common(sp, 1e-9)
  sp.add_argument("--relation", choices=["st", "F", "G"], default="F")
  sp.add_argument("--plan", help="plan CSV with header x,y,w")
  sp.add_argument("--float-weights", action="store_true",
                  help="read plan weights as floats instead of exact rationals")
  sp.add_argument("--halfplane", choices=["F", "G", "F~", "G~"],
                  help="test strong multiplicativity on this half-plane")
  sp.set_defaults(func=cmd_check)
  return p


def _fail(code, payload):
  sys.stderr.write(json.dumps(payload, indent=2) + "\n")
  return code


def main(argv=None):
  args = build_parser().parse_args(argv)
  if getattr(args, "what", None) in ("optimal", "multiplicative") and not args.plan:
    return _fail(2, {"error": "--plan is required", "code": 2})
  try:
    payload = args.func(args)
  except CheckFailed as exc:
    emit(args, exc.payload)
    return 1
  except SolverFailed as exc:
    emit(args, exc.payload)
    return _fail(3, {"error": "solver did not converge", "code": 3})
  except NotConverged as exc:
    return _fail(3, {"error": str(exc), "code": 3})
  except (InputError, MassMismatch, OrderViolation) as exc:
    return _fail(2, {"error": str(exc), "code": 2})
  emit(args, payload)
  return 0


if __name__ == "__main__":
  sys.exit(main())
