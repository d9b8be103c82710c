"""Components of the line, of the marginals and of optimal plans.

For marginals ``mu`` and ``nu`` of equal mass the line splits into

* ``E+``: where both ``F_mu+ > F_nu+`` and ``F_mu- > F_nu-`` (mass moves right),
* ``E-``: the symmetric set (mass moves left),
* ``E=``: the closed remainder, made of barrier points no optimal plan crosses.

Each connected component of ``E+`` or ``E-`` carries a pair of marginal
pieces; atoms sitting on component endpoints are split between the moving
pieces and the fixed part by CDF differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .measure import (INF, MINUS, PLUS, ZERO, Interval, IntervalUnion, Measure,
                      cdf, drop_atoms, restrict, restrict_union, scan_grid,
                      union_from_mask)
from .plan import TransportPlan, marginal_l1_error


class MassMismatch(ValueError):
  def __init__(self, msg="marginal masses differ"):
    super().__init__(msg)


@dataclass(frozen=True)
class LineDecomposition:
  mu: Measure
  nu: Measure
  pos: tuple = ()
  neg: tuple = ()
  e_eq: IntervalUnion = field(default_factory=IntervalUnion)

  @property
  def left_pos(self):
    return sorted(a for a, _ in self.pos if a != -INF)

  @property
  def right_pos(self):
    return sorted(b for _, b in self.pos if b != INF)

  @property
  def left_neg(self):
    return sorted(a for a, _ in self.neg if a != -INF)

  @property
  def right_neg(self):
    return sorted(b for _, b in self.neg if b != INF)

  @property
  def boundary(self):
    return sorted(set(self.left_pos + self.right_pos + self.left_neg + self.right_neg))

  def in_eq(self, t) -> bool:
    return self.e_eq.contains(t)


def _require_equal_mass(mu: Measure, nu: Measure):
  if mu.mass != nu.mass:
    raise MassMismatch()


def line_components(mu: Measure, nu: Measure) -> LineDecomposition:
  _require_equal_mass(mu, nu)
  elements = scan_grid([mu, nu], [(0, 1)])
  pos_mask, neg_mask = [], []
  for e in elements:
    (m1, p1), (m2, p2) = e.values
    pos_mask.append(p1 > p2 and m1 > m2)
    neg_mask.append(p1 < p2 and m1 < m2)
  pos = union_from_mask(elements, pos_mask)
  neg = union_from_mask(elements, neg_mask)
  for iv in list(pos) + list(neg):
    assert not iv.lo_closed and not iv.hi_closed, "components must be open"
  eq = union_from_mask(elements, [not (p or n) for p, n in zip(pos_mask, neg_mask)])
  return LineDecomposition(
      mu, nu,
      tuple((iv.lo, iv.hi) for iv in pos),
      tuple((iv.lo, iv.hi) for iv in neg),
      eq,
  )


@dataclass(frozen=True)
class MarginalComponents:
  pos: tuple = ()
  neg: tuple = ()
  mu_eq1: Measure = ZERO
  mu_eq2: Measure = ZERO
  nu_eq1: Measure = ZERO
  nu_eq2: Measure = ZERO

  @property
  def mu_eq(self) -> Measure:
    return self.mu_eq1 + self.mu_eq2

  @property
  def nu_eq(self) -> Measure:
    return self.nu_eq1 + self.nu_eq2

  def mu_total(self) -> Measure:
    out = self.mu_eq
    for m, _ in self.pos + self.neg:
      out = out + m
    return out

  def nu_total(self) -> Measure:
    out = self.nu_eq
    for _, n in self.pos + self.neg:
      out = out + n
    return out


def _boundary_atom(x, w) -> Measure:
  if x in (INF, -INF) or w == 0:
    return ZERO
  return Measure(((x, w),))


def _gap(m1, m2, t, side):
  if t in (INF, -INF):
    return 0
  return cdf(m1, t, side) - cdf(m2, t, side)


def marginal_components(mu: Measure, nu: Measure,
                        dec: LineDecomposition | None = None) -> MarginalComponents:
  if dec is None:
    dec = line_components(mu, nu)
  pos = []
  for a, b in dec.pos:
    inside = Interval.open(a, b)
    mu_k = _boundary_atom(a, _gap(mu, nu, a, PLUS)) + restrict(mu, inside)
    nu_k = restrict(nu, inside) + _boundary_atom(b, _gap(mu, nu, b, MINUS))
    pos.append((mu_k, nu_k))
  neg = []
  for a, b in dec.neg:
    inside = Interval.open(a, b)
    mu_k = restrict(mu, inside) + _boundary_atom(b, _gap(nu, mu, b, MINUS))
    nu_k = _boundary_atom(a, _gap(nu, mu, a, PLUS)) + restrict(nu, inside)
    neg.append((mu_k, nu_k))
  fixed = []
  for x in dec.boundary:
    w = (min(cdf(mu, x, PLUS), cdf(nu, x, PLUS))
         - max(cdf(mu, x, MINUS), cdf(nu, x, MINUS)))
    fixed.append((x, w))
  shared = Measure(tuple(fixed))
  return MarginalComponents(
      tuple(pos), tuple(neg),
      mu_eq1=drop_atoms(restrict_union(mu, dec.e_eq), dec.boundary),
      mu_eq2=shared,
      nu_eq1=drop_atoms(restrict_union(nu, dec.e_eq), dec.boundary),
      nu_eq2=shared,
  )


def four_set_union(mu: Measure, nu: Measure) -> IntervalUnion:
  """Union of the four CDF sets characterizing barrier points."""
  elements = scan_grid([mu, nu], [(0, 1)])
  mask = []
  for e in elements:
    (m1, p1), (m2, p2) = e.values
    mask.append(p1 == p2 or m1 == m2
                or (m2 < m1 <= p1 < p2)
                or (m1 < m2 <= p2 < p1))
  return union_from_mask(elements, mask)


def barrier_set(mu: Measure, nu: Measure) -> IntervalUnion:
  """Returns ``E=`` after checking it against the four-set union."""
  dec = line_components(mu, nu)
  other = four_set_union(mu, nu)
  if other != dec.e_eq:
    raise AssertionError(f"barrier set mismatch: {dec.e_eq} vs {other}")
  return dec.e_eq


@dataclass(frozen=True)
class PlanComponents:
  pos: tuple = ()
  neg: tuple = ()
  eq1: TransportPlan = TransportPlan()
  eq2: TransportPlan = TransportPlan()
  rest: TransportPlan = TransportPlan()

  def all(self):
    return list(self.pos) + list(self.neg) + [self.eq1, self.eq2, self.rest]


def _between(t, lo, hi, lo_closed, hi_closed):
  return Interval(lo, hi, lo_closed, hi_closed).contains(t)


def split_plan(pi: TransportPlan, dec: LineDecomposition,
               tol: float = 1e-8) -> PlanComponents:
  """Restricts ``pi`` to the component blocks of ``dec``.

  Cells outside every block (impossible for optimal plans) go to ``rest``.
  """
  if pi.exact:
    ok = pi.marginals() == (dec.mu, dec.nu)
  else:
    ok = marginal_l1_error(pi, dec.mu, dec.nu) <= tol * max(1.0, float(dec.mu.mass))
  if not ok:
    raise ValueError("plan marginals differ from the decomposed pair")
  boundary = set(dec.boundary)
  buckets = {"pos": [[] for _ in dec.pos], "neg": [[] for _ in dec.neg],
             "eq1": [], "eq2": [], "rest": []}
  for x, y, w in pi.triples:
    cell = (x, y, w)
    for k, (a, b) in enumerate(dec.pos):
      if _between(x, a, b, True, False) and _between(y, a, b, False, True):
        buckets["pos"][k].append(cell)
        break
    else:
      for k, (a, b) in enumerate(dec.neg):
        if _between(x, a, b, False, True) and _between(y, a, b, True, False):
          buckets["neg"][k].append(cell)
          break
      else:
        if x not in boundary and dec.in_eq(x):
          buckets["eq1"].append(cell)
        elif x in boundary and x == y:
          buckets["eq2"].append(cell)
        else:
          buckets["rest"].append(cell)
  make = pi._make
  return PlanComponents(
      tuple(make(c) for c in buckets["pos"]),
      tuple(make(c) for c in buckets["neg"]),
      make(buckets["eq1"]), make(buckets["eq2"]), make(buckets["rest"]),
  )


def reassemble(pc: PlanComponents) -> TransportPlan:
  parts = pc.all()
  out = parts[0]
  for p in parts[1:]:
    out = out + p
  return out


def decomposition_report(mu: Measure, nu: Measure) -> dict:
  """JSON-ready description of the line and marginal components."""
  from .measure import fmt, measure_to_json

  dec = line_components(mu, nu)
  mc = marginal_components(mu, nu, dec)
  return {
      "mass": str(mu.mass),
      "e_plus": [[fmt(a), fmt(b)] for a, b in dec.pos],
      "e_minus": [[fmt(a), fmt(b)] for a, b in dec.neg],
      "e_eq": str(dec.e_eq),
      "boundary": {
          "left_plus": [str(x) for x in dec.left_pos],
          "right_plus": [str(x) for x in dec.right_pos],
          "left_minus": [str(x) for x in dec.left_neg],
          "right_minus": [str(x) for x in dec.right_neg],
          "all": [str(x) for x in dec.boundary],
      },
      "positive": [{"mu": measure_to_json(m), "nu": measure_to_json(n)}
                   for m, n in mc.pos],
      "negative": [{"mu": measure_to_json(m), "nu": measure_to_json(n)}
                   for m, n in mc.neg],
      "fixed": {
          "mu_eq1": measure_to_json(mc.mu_eq1),
          "nu_eq1": measure_to_json(mc.nu_eq1),
          "shared_atoms": measure_to_json(mc.mu_eq2),
      },
  }
