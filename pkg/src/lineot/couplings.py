"""Couplings for the distance cost: construction and certification."""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .decomposition import MassMismatch, line_components, marginal_components
from .measure import MINUS, PLUS, Measure, cdf, scan_grid
from .orders import leq_F, leq_G
from .plan import FloatPlan, TransportPlan, marginal_l1_error

HALFPLANES = {
    "F": lambda x, y: x <= y,
    "G": lambda x, y: x < y,
    "F~": lambda x, y: x >= y,
    "G~": lambda x, y: x > y,
}


@dataclass(frozen=True)
class Witness:
  kind: str
  data: tuple


@dataclass(frozen=True)
class Verdict:
  holds: bool
  witness: Witness | None = None

  def __bool__(self):
    return self.holds


class OrderViolation(ValueError):
  def __init__(self, verdict):
    super().__init__(f"order precondition fails at t={verdict.witness_t} ({verdict.reason})")
    self.verdict = verdict


class NotConverged(RuntimeError):
  def __init__(self, residual, iterations):
    super().__init__(f"no convergence after {iterations} iterations, residual {residual:.3e}")
    self.residual = residual
    self.iterations = iterations


def _require_atomic(*ms):
  for m in ms:
    if not m.is_atomic:
      raise ValueError("atomic measures required; discretize first")


def monotone_coupling(mu: Measure, nu: Measure) -> TransportPlan:
  """Northwest-corner coupling of two atomic measures."""
  _require_atomic(mu, nu)
  if mu.mass != nu.mass:
    raise MassMismatch()
  xs, ys = list(mu.atoms), list(nu.atoms)
  i = j = 0
  rx = xs[0][1] if xs else 0
  ry = ys[0][1] if ys else 0
  out = []
  while i < len(xs) and j < len(ys):
    w = min(rx, ry)
    out.append((xs[i][0], ys[j][0], w))
    rx -= w
    ry -= w
    if rx == 0:
      i += 1
      rx = xs[i][1] if i < len(xs) else 0
    if ry == 0:
      j += 1
      ry = ys[j][1] if j < len(ys) else 0
  return TransportPlan(tuple(out))


def cost(pi: TransportPlan):
  if pi.exact:
    return sum((w * abs(y - x) for x, y, w in pi.triples), Fraction(0))
  return math.fsum(w * float(abs(y - x)) for x, y, w in pi.triples)


def w1_oracle(mu: Measure, nu: Measure) -> Fraction:
  """Integral of ``|F_mu+ - F_nu+|`` computed cell by cell."""
  if mu.mass != nu.mass:
    raise MassMismatch()
  pts = [e.lo for e in scan_grid([mu, nu], [(0, 1)]) if e.is_point]
  total = Fraction(0)
  for lo, hi in zip(pts, pts[1:]):
    d0 = cdf(mu, lo, PLUS) - cdf(nu, lo, PLUS)
    d1 = cdf(mu, hi, MINUS) - cdf(nu, hi, MINUS)
    total += (abs(d0) + abs(d1)) / 2 * (hi - lo)
  return total


def entropy_form(pi: TransportPlan, mu: Measure, nu: Measure) -> dict | None:
  """Exact symbolic relative entropy as ``{ratio: weight}``.

  The entropy equals the sum of ``weight * log(ratio)``. Returns None when
  the plan charges a cell outside the product of the supports.
  """
  form: dict = {}
  for x, y, w in pi.triples:
    a, b = mu.atom_weight(x), nu.atom_weight(y)
    if a == 0 or b == 0:
      return None
    r = Fraction(w) / (a * b)
    form[r] = form.get(r, 0) + w
  return form


def relative_entropy(pi: TransportPlan, mu: Measure, nu: Measure) -> float:
  terms = []
  for x, y, w in pi.triples:
    a, b = mu.atom_weight(x), nu.atom_weight(y)
    if a == 0 or b == 0:
      return math.inf
    if pi.exact:
      terms.append(float(w) * math.log(Fraction(w) / (a * b)))
    else:
      terms.append(w * (math.log(w) - math.log(a) - math.log(b)))
  return math.fsum(terms)


@dataclass(frozen=True)
class KellererComponent:
  plan: FloatPlan
  xs: tuple
  ys: tuple
  u: np.ndarray
  v: np.ndarray
  iterations: int
  residual: float
  halfplane: str = "F"


def kellerer_component(g1: Measure, g2: Measure, halfplane: str = "F",
                       tol: float = 1e-12, max_iter: int = 100000) -> KellererComponent:
  """Product-form coupling on a half-plane by iterative proportional fitting.

  Scales the kernel ``1_H(x, y) g1(x) g2(y)`` by ``u(x) v(y)`` until the row
  and column sums match ``g1`` and ``g2`` in L1 up to ``tol``.
  """
  _require_atomic(g1, g2)
  if halfplane not in ("F", "G"):
    raise ValueError("halfplane must be 'F' or 'G'")
  verdict = (leq_F if halfplane == "F" else leq_G)(g1, g2)
  if not verdict:
    raise OrderViolation(verdict)
  xs = tuple(x for x, _ in g1.atoms)
  ys = tuple(y for y, _ in g2.atoms)
  a = np.array([float(w) for _, w in g1.atoms])
  b = np.array([float(w) for _, w in g2.atoms])
  inside = HALFPLANES[halfplane]
  mask = np.array([[inside(x, y) for y in ys] for x in xs], dtype=float)
  kernel = mask * np.outer(a, b)
  u = np.ones(len(xs))
  v = np.ones(len(ys))
  residual = math.inf
  it = 0
  for it in range(1, max_iter + 1):
    u = a / (kernel @ v)
    v = b / (kernel.T @ u)
    residual = float(np.abs(u * (kernel @ v) - a).sum())
    if residual < tol:
      break
  else:
    raise NotConverged(residual, max_iter)
  weights = u[:, None] * kernel * v[None, :]
  triples = tuple((xs[i], ys[j], weights[i, j])
                  for i in range(len(xs)) for j in range(len(ys)) if mask[i, j])
  plan = FloatPlan(triples, residual)
  return KellererComponent(plan, xs, ys, u, v, it, residual, halfplane)


def kellerer_parts(mu: Measure, nu: Measure, tol: float = 1e-12,
                   max_iter: int = 100000) -> list:
  """Per-component plans of the generalized Kellerer plan.

  Returns ``(plan, halfplane)`` pairs: ``F`` for components moving right,
  ``F~`` for reflected components moving left, and ``D`` for the identity
  on the fixed part.
  """
  _require_atomic(mu, nu)
  dec = line_components(mu, nu)
  mc = marginal_components(mu, nu, dec)
  parts = []
  for m, n in mc.pos:
    parts.append((kellerer_component(m, n, "F", tol, max_iter).plan, "F"))
  for m, n in mc.neg:
    parts.append((kellerer_component(n, m, "F", tol, max_iter).plan.transpose(), "F~"))
  fixed = mc.mu_eq
  parts.append((FloatPlan(tuple((x, x, float(w)) for x, w in fixed.atoms)), "D"))
  return parts


def kellerer_plan(mu: Measure, nu: Measure, tol: float = 1e-12,
                  max_iter: int = 100000) -> FloatPlan:
  out = FloatPlan()
  for p, _ in kellerer_parts(mu, nu, tol, max_iter):
    out = out + p
  return FloatPlan(out.triples, marginal_l1_error(out, mu, nu))


def mix(p1: TransportPlan, p2: TransportPlan, lam) -> TransportPlan:
  """The convex combination ``lam * p1 + (1 - lam) * p2``."""
  return p1.scale(lam) + p2.scale(1 - lam)


def check_optimal_crossings(pi: TransportPlan) -> Verdict:
  """True iff the support has no non-free crossing.

  Two paths ``(x1, y1)`` and ``(x2, y2)`` cross when ``x1 <= x2`` and
  ``y2 <= y1``; the crossing is free when ``y1 <= x1`` or ``x2 <= y2``.
  Ties ``x1 == x2`` or ``y1 == y2`` are free too: swapping those targets
  leaves the cost unchanged.
  """
  pts = sorted({(x, y) for x, y, _ in pi.triples})
  for p, q in combinations(pts, 2):
    for (x1, y1), (x2, y2) in ((p, q), (q, p)):
      if x1 < x2 and y2 < y1 and not (y1 <= x1 or x2 <= y2):
        return Verdict(False, Witness("crossing", ((x1, y1), (x2, y2))))
  return Verdict(True)


def _grid(values):
  vals = sorted(set(values))
  if not vals:
    return [Fraction(0)]
  out = [vals[0] - 1]
  for lo, hi in zip(vals, vals[1:]):
    out += [lo, (lo + hi) / 2]
  return out + [vals[-1], vals[-1] + 1]


def is_weakly_multiplicative(pi: TransportPlan, tol: float = 1e-9) -> Verdict:
  """Checks that restrictions to product sets inside ``{x<=y}`` or ``{x>=y}``
  are product measures, through two rectangle identities in ``(t, x, y)``.

  Exact plans are checked with integer arithmetic, float plans up to ``tol``.
  """
  coords = sorted({c for x, y, _ in pi.triples for c in (x, y)})
  m = len(coords)
  index = {c: k for k, c in enumerate(coords)}
  if pi.exact:
    den = math.lcm(*(Fraction(w).denominator for _, _, w in pi.triples)) if m else 1
    mat = np.zeros((m, m), dtype=object)
    mat[:] = 0
    for x, y, w in pi.triples:
      mat[index[x], index[y]] = int(w * den)
    prefix = np.zeros((m + 1, m + 1), dtype=object)
    prefix[:] = 0
  else:
    mat = np.zeros((m, m))
    for x, y, w in pi.triples:
      mat[index[x], index[y]] = w
    prefix = np.zeros((m + 1, m + 1))
  prefix[1:, 1:] = mat.cumsum(axis=0).cumsum(axis=1)

  g = _grid(coords)
  le = np.array([bisect_right(coords, s) for s in g])
  lt = np.array([bisect_left(coords, s) for s in g])
  n = len(g)
  gi = np.arange(n)
  T, X, Y = np.meshgrid(gi, gi, gi, indexing="ij")
  tx = np.minimum(T, X)
  ty = np.minimum(T, Y)

  def rect(x0, x1, y0, y1):
    x1 = np.maximum(x0, x1)
    y1 = np.maximum(y0, y1)
    return prefix[x1, y1] - prefix[x0, y1] - prefix[x1, y0] + prefix[x0, y0]

  zero = np.zeros_like(T)
  full = np.full_like(T, m)
  # Restrictions to ]-inf,t] x [t,inf[.
  lhs1 = rect(zero, le[T], lt[T], full) * rect(zero, le[tx], lt[T], le[Y])
  rhs1 = rect(zero, le[tx], lt[T], full) * rect(zero, le[T], lt[T], le[Y])
  # Restrictions to [t,inf[ x ]-inf,t].
  lhs2 = rect(lt[T], full, zero, le[T]) * rect(lt[T], le[X], zero, le[ty])
  rhs2 = rect(lt[T], le[X], zero, le[T]) * rect(lt[T], full, zero, le[ty])
  for which, lhs, rhs in ((1, lhs1, rhs1), (2, lhs2, rhs2)):
    if pi.exact:
      bad = lhs != rhs
    else:
      bad = np.abs(lhs - rhs) > tol
    if bad.any():
      i, j, k = np.argwhere(bad)[0]
      return Verdict(False, Witness("factorization", (which, g[i], g[j], g[k])))
  return Verdict(True)


def is_strongly_multiplicative_on(pi: TransportPlan, halfplane: str = "F",
                                  tol: float = 1e-9) -> Verdict:
  """Cross-ratio test for being a product measure restricted to a half-plane."""
  inside = HALFPLANES[halfplane]
  for x, y, _ in pi.triples:
    if not inside(x, y):
      return Verdict(False, Witness("support", (x, y)))
  xs = sorted({x for x, _, _ in pi.triples})
  ys = sorted({y for _, y, _ in pi.triples})
  for x in xs:
    for y in ys:
      if inside(x, y) and pi.weight(x, y) == 0:
        return Verdict(False, Witness("factorization", ("missing", x, y)))
  if pi.exact:
    mat = np.array([[Fraction(pi.weight(x, y)) for y in ys] for x in xs], dtype=object)
  else:
    mat = np.array([[float(pi.weight(x, y)) for y in ys] for x in xs])
  mask = np.array([[inside(x, y) for y in ys] for x in xs], dtype=bool)
  for i, k in combinations(range(len(xs)), 2):
    both = mask[i][:, None] & mask[k][None, :] & mask[i][None, :] & mask[k][:, None]
    # both[j, l]: cells (i,j), (k,l), (i,l), (k,j) all inside the half-plane.
    diff = np.outer(mat[i], mat[k]) - np.outer(mat[k], mat[i])
    if pi.exact:
      bad = both & (diff != 0)
    else:
      bad = both & (np.abs(diff.astype(float)) > tol)
    if bad.any():
      j, l = np.argwhere(bad)[0]
      return Verdict(False, Witness("factorization", (xs[i], xs[k], ys[j], ys[l])))
  return Verdict(True)
