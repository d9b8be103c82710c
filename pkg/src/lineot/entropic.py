"""Entropic transport for the distance cost and its small-epsilon limit."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .couplings import cost, kellerer_plan, relative_entropy, w1_oracle
from .decomposition import MassMismatch
from .measure import Measure
from .plan import FloatPlan, TransportPlan


@dataclass(frozen=True)
class SinkhornResult:
  """Potentials in cost units with plan ``a b exp((phi + psi - |y - x|) / eps)``."""

  xs: tuple
  ys: tuple
  phi: np.ndarray
  psi: np.ndarray
  plan: FloatPlan
  iterations: int
  marginal_error: float
  epsilon: float
  converged: bool


def _atoms(m: Measure):
  if not m.is_atomic:
    raise ValueError("atomic measures required; discretize first")
  xs = tuple(x for x, _ in m.atoms)
  w = np.array([float(v) for _, v in m.atoms])
  return xs, w


def _cost_matrix(xs, ys):
  return np.abs(np.array([float(y) for y in ys])[None, :]
                - np.array([float(x) for x in xs])[:, None])


def _log_plan(la, lb, phi, psi, c, eps):
  return la[:, None] + lb[None, :] + (phi[:, None] + psi[None, :] - c) / eps


def plan_from_potentials(xs, ys, a, b, phi, psi, epsilon) -> FloatPlan:
  c = _cost_matrix(xs, ys)
  w = np.exp(_log_plan(np.log(a), np.log(b), phi, psi, c, epsilon))
  return FloatPlan(tuple((xs[i], ys[j], w[i, j])
                         for i in range(len(xs)) for j in range(len(ys))))


def _dual_loss(la, lb, a, b, phi, psi, c, eps):
  with np.errstate(over="ignore"):
    w = np.exp(_log_plan(la, lb, phi, psi, c, eps))
  return eps * w.sum() - a @ phi - b @ psi, w


def _marginal_error(w, a, b):
  return float(np.abs(w.sum(axis=1) - a).sum() + np.abs(w.sum(axis=0) - b).sum())


def _newton_step(la, lb, a, b, phi, psi, c, eps):
  """One damped Newton step on the dual, with backtracking on the loss."""
  n = len(a)
  loss, w = _dual_loss(la, lb, a, b, phi, psi, c, eps)
  rows, cols = w.sum(axis=1), w.sum(axis=0)
  grad = np.concatenate([rows - a, cols - b])
  hess = np.block([[np.diag(rows), w], [w.T, np.diag(cols)]]) / eps
  step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
  slope = grad @ step
  t = 1.0
  while t > 1e-12:
    phi2, psi2 = phi + t * step[:n], psi + t * step[n:]
    loss2, _ = _dual_loss(la, lb, a, b, phi2, psi2, c, eps)
    if np.isfinite(loss2) and loss2 <= loss + 1e-4 * t * slope:
      return phi2, psi2
    t /= 2
  return phi, psi


def sinkhorn_solve(mu: Measure, nu: Measure, epsilon: float, tol: float = 1e-10,
                   max_iter: int = 200000, init=None,
                   newton_after: int = 1000) -> SinkhornResult:
  """Log-domain Sinkhorn iterations from zero (or ``init``) potentials.

  Stops once the L1 violation of both marginals falls below ``tol``. After
  ``newton_after`` sweeps each sweep is followed by a damped Newton step on
  the same dual problem, kept only when it lowers the marginal error. Newton
  rescues nearly block-diagonal kernels, where sweeps move mass between
  blocks at a rate of order ``exp(-gap / epsilon)``; the sweeps still handle
  directions whose curvature is below machine precision, which Newton cannot
  resolve. When the budget runs out the last iterate is returned with
  ``converged=False``.
  """
  if mu.mass != nu.mass:
    raise MassMismatch()
  if not epsilon > 0:
    raise ValueError("epsilon must be positive")
  xs, a = _atoms(mu)
  ys, b = _atoms(nu)
  la, lb = np.log(a), np.log(b)
  c = _cost_matrix(xs, ys)
  if init is None:
    phi, psi = np.zeros(len(xs)), np.zeros(len(ys))
  else:
    phi, psi = (np.array(v, dtype=float) for v in init)
  err = math.inf
  it = 0
  for it in range(1, max_iter + 1):
    phi = -epsilon * logsumexp((psi[None, :] - c) / epsilon + lb[None, :], axis=1)
    psi = -epsilon * logsumexp((phi[:, None] - c) / epsilon + la[:, None], axis=0)
    err = _marginal_error(np.exp(_log_plan(la, lb, phi, psi, c, epsilon)), a, b)
    if it > newton_after and err >= tol:
      phi2, psi2 = _newton_step(la, lb, a, b, phi, psi, c, epsilon)
      with np.errstate(over="ignore", invalid="ignore"):
        err2 = _marginal_error(np.exp(_log_plan(la, lb, phi2, psi2, c, epsilon)), a, b)
      if err2 < err:
        phi, psi, err = phi2, psi2, err2
    if err < tol:
      break
  plan = plan_from_potentials(xs, ys, a, b, phi, psi, epsilon)
  plan = FloatPlan(plan.triples, err)
  return SinkhornResult(xs, ys, phi, psi, plan, it, err, epsilon, err < tol)


def tv_distance(p1: TransportPlan, p2: TransportPlan) -> float:
  c1, c2 = p1.cells, p2.cells
  return 0.5 * math.fsum(abs(float(c1.get(k, 0)) - float(c2.get(k, 0)))
                         for k in set(c1) | set(c2))


def _cycle_gap(table, rows, cols):
  """Log-weight difference between a cycle's diagonal and shifted cells."""
  k = len(rows)
  diag = [(rows[s], cols[s]) for s in range(k)]
  shifted = [(rows[s], cols[(s + 1) % k]) for s in range(k)]
  if any(cell not in table for cell in diag + shifted):
    return None
  return math.fsum(table[c] for c in diag) - math.fsum(table[c] for c in shifted)


def is_eps_cyclically_invariant(pi: TransportPlan, mu: Measure, nu: Measure,
                                epsilon: float, tol: float = 1e-8, samples: int = 256,
                                seed: int = 0) -> bool:
  """Spot-checks the cycle identity on random 2- and 3-cycles.

  With density ``f`` of ``pi`` against ``mu x nu`` the identity says that
  ``log f + |y - x| / eps`` sums to the same value along a cycle of cells and
  along its shift, i.e. that the tilted density splits as ``g(x) h(y)``.
  """
  table = {}
  for x, y, w in pi.triples:
    a, b = float(mu.atom_weight(x)), float(nu.atom_weight(y))
    if a == 0 or b == 0:
      return False
    table[(x, y)] = math.log(w) - math.log(a) - math.log(b) + float(abs(y - x)) / epsilon
  xs = sorted({x for x, _ in table})
  ys = sorted({y for _, y in table})
  rng = np.random.default_rng(seed)
  for k in (2, 3):
    if len(xs) < k or len(ys) < k:
      continue
    for _ in range(samples):
      rows = [xs[i] for i in rng.choice(len(xs), k, replace=False)]
      cols = [ys[j] for j in rng.choice(len(ys), k, replace=False)]
      gap = _cycle_gap(table, rows, cols)
      if gap is not None and abs(gap) > tol:
        return False
  return True


def verify_eps_invariance(res: SinkhornResult, mu: Measure, nu: Measure,
                          tol: float = 1e-8, seed: int = 0) -> bool:
  """Rebuilds the plan from the potentials and checks the cycle identity."""
  _, a = _atoms(mu)
  _, b = _atoms(nu)
  rebuilt = plan_from_potentials(res.xs, res.ys, a, b, res.phi, res.psi, res.epsilon)
  c1, c2 = rebuilt.cells, res.plan.cells
  for key in set(c1) | set(c2):
    if abs(c1.get(key, 0.0) - c2.get(key, 0.0)) > tol:
      return False
  return is_eps_cyclically_invariant(res.plan, mu, nu, res.epsilon, tol, seed=seed)


@dataclass
class SweepReport:
  schedule: list
  records: list = field(default_factory=list)
  warm_start: bool = True
  reference_error: float = 0.0
  w1: float = 0.0

  def tvs(self):
    return [r["tv"] for r in self.records]

  def final_tv(self) -> float:
    return self.records[-1]["tv"]

  def tv_eventually_decreasing(self, tail: int = 3, slack: float = 1e-9) -> bool:
    """TV is nonincreasing over the last ``tail`` schedule entries."""
    t = self.tvs()[-tail:]
    return all(b <= a + slack for a, b in zip(t, t[1:]))

  def cost_nonincreasing(self, slack: float = 1e-9) -> bool:
    c = [r["cost"] for r in self.records]
    return all(b <= a + slack for a, b in zip(c, c[1:]))

  def entropy_nondecreasing(self, slack: float = 1e-9) -> bool:
    e = [r["entropy"] for r in self.records]
    return all(b >= a - slack for a, b in zip(e, e[1:]))

  def all_converged(self) -> bool:
    return all(r["converged"] for r in self.records)

  def to_json(self) -> dict:
    return {
        "schedule": list(self.schedule),
        "warm_start": self.warm_start,
        "w1": self.w1,
        "reference_marginal_error": self.reference_error,
        "records": self.records,
        "diagnostics": {
            "tv_eventually_decreasing": self.tv_eventually_decreasing(),
            "cost_nonincreasing": self.cost_nonincreasing(),
            "entropy_nondecreasing": self.entropy_nondecreasing(),
            "all_converged": self.all_converged(),
        },
    }

  def to_csv(self) -> str:
    cols = ["epsilon", "tv", "cost", "cost_gap", "entropy", "iterations",
            "marginal_error", "converged"]
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(cols)
    for r in self.records:
      out.writerow([format(r[c], ".12g") if isinstance(r[c], float) else r[c]
                    for c in cols])
    return buf.getvalue()


def sweep_to_limit(mu: Measure, nu: Measure, schedule, tol: float = 1e-10,
                   max_iter: int = 200000, warm_start: bool = True,
                   reference: FloatPlan | None = None) -> SweepReport:
  """Solves along a decreasing schedule and measures the distance to the
  Kellerer plan, together with the cost gap to the exact transport cost."""
  schedule = [float(e) for e in schedule]
  if any(e <= 0 for e in schedule) or any(b >= a for a, b in zip(schedule, schedule[1:])):
    raise ValueError("schedule must be positive and strictly decreasing")
  ref = reference if reference is not None else kellerer_plan(mu, nu)
  w1 = float(w1_oracle(mu, nu))
  report = SweepReport(schedule, warm_start=warm_start,
                       reference_error=ref.marginal_error, w1=w1)
  init = None
  for eps in schedule:
    res = sinkhorn_solve(mu, nu, eps, tol, max_iter, init=init)
    if warm_start:
      init = (res.phi, res.psi)
    c = cost(res.plan)
    report.records.append({
        "epsilon": eps,
        "tv": tv_distance(res.plan, ref),
        "cost": c,
        "cost_gap": c - w1,
        "entropy": relative_entropy(res.plan, mu, nu),
        "iterations": res.iterations,
        "marginal_error": res.marginal_error,
        "converged": res.converged,
    })
  return report
