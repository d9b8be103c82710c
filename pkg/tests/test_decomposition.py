from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lineot.couplings import check_optimal_crossings, kellerer_plan, monotone_coupling
from lineot.decomposition import (MassMismatch, PlanComponents, barrier_set,
                                  decomposition_report, four_set_union, line_components,
                                  marginal_components, reassemble, split_plan)
from lineot.measure import (INF, Interval, Measure, atomic, dirac, discretize, scan_grid,
                            union_from_mask, uniform)
from lineot.orders import leq_F
from lineot.plan import TransportPlan, marginal_l1_error
from oracles import GUIDING_MU, GUIDING_NU, cdf_direct
from strategies import measures

H = F(1, 2)


def test_guiding_line_components():
  dec = line_components(GUIDING_MU, GUIDING_NU)
  assert dec.pos == ((0, 2),)
  assert dec.neg == ((2, 3), (3, 4))
  assert str(dec.e_eq) == "]-inf,0] u {2} u {3} u [4,inf["
  assert dec.left_pos == [0] and dec.right_pos == [2]
  assert dec.left_neg == [2, 3] and dec.right_neg == [3, 4]
  assert dec.boundary == [0, 2, 3, 4]


def test_guiding_marginal_components():
  mc = marginal_components(GUIDING_MU, GUIDING_NU)
  (mu1p, nu1p), = mc.pos
  (mu1m, nu1m), (mu2m, nu2m) = mc.neg
  assert mu1p == Measure(((1, 1),), ((0, 1, 1), (1, 2, 1)))
  assert nu1p == Measure(((1, 1), (2, H)), ((H, 1, 1), (1, 2, 1)))
  assert mu1m == uniform(2, 3)
  assert nu1m == Measure(((2, H),), ((2, 3, H),))
  assert mu2m == uniform(3, 4)
  assert nu2m == Measure(((3, H),), ((3, 4, H),))
  assert mc.mu_eq1 == Measure(((5, 1),), ((4, 5, 1), (5, 6, 1)))
  # Boundary points 2, 3 and 4 each keep one unit in place.
  assert mc.mu_eq2 == atomic({2: 1, 3: 1, 4: 1})
  assert mc.mu_eq == mc.nu_eq


def test_point_splitting():
  mu = atomic({-1: 1, 0: 6, 1: 1})
  nu = atomic({-3: 1, -2: 2, 0: 3, 2: 1, 3: 1})
  dec = line_components(mu, nu)
  assert dec.neg == ((-3, 0),) and dec.pos == ((0, 3),)
  mc = marginal_components(mu, nu, dec)
  assert mc.mu_eq2 == dirac(0, 3)
  assert mc.neg == ((atomic({-1: 1, 0: 2}), atomic({-3: 1, -2: 2})),)
  assert mc.pos == ((atomic({0: 1, 1: 1}), atomic({2: 1, 3: 1})),)


def test_atomless_example():
  mu = uniform(0, 1)
  nu = Measure((), ((F(1, 8), F(1, 4), 2), (F(3, 8), H, 2), (H, F(3, 4), 1),
                    (F(3, 4), F(7, 8), 2)))
  dec = line_components(mu, nu)
  assert dec.pos == ((0, F(1, 4)), (F(1, 4), H))
  assert dec.neg == ((F(3, 4), 1),)
  assert any(p.contains(H) and p.contains(F(3, 4)) and p.lo <= H and p.hi >= F(3, 4)
             for p in dec.e_eq)
  # Without atoms the barrier set is where the CDFs agree.
  elements = scan_grid([mu, nu], [(0, 1)])
  equal = union_from_mask(elements, [e.values[0][1] == e.values[1][1] for e in elements])
  assert barrier_set(mu, nu) == equal


def test_identical_marginals():
  m = atomic({0: 1, 2: 3})
  dec = line_components(m, m)
  assert dec.pos == () and dec.neg == () and dec.boundary == []
  assert [str(p) for p in dec.e_eq] == ["]-inf,inf["]
  pc = split_plan(TransportPlan(((0, 0, 1), (2, 2, 3))), dec)
  assert pc.pos == () and pc.neg == ()
  assert len(pc.eq1) + len(pc.eq2) == 2 and len(pc.rest) == 0


def test_mass_mismatch():
  with pytest.raises(MassMismatch, match="marginal masses differ"):
    line_components(dirac(0), dirac(1, 2))


def test_split_monotone_point_splitting():
  mu = atomic({-1: 1, 0: 6, 1: 1})
  nu = atomic({-3: 1, -2: 2, 0: 3, 2: 1, 3: 1})
  pi = monotone_coupling(mu, nu)
  pc = split_plan(pi, line_components(mu, nu))
  assert pc.neg[0].mass == 3 and pc.pos[0].mass == 2
  assert pc.eq2 == TransportPlan(((0, 0, 3),))
  assert reassemble(pc) == pi
  with pytest.raises(ValueError):
    split_plan(TransportPlan(((0, 0, 8),)), line_components(mu, nu))


def test_reassemble_single_fixed_cell():
  pc = PlanComponents(eq2=TransportPlan(((0, 0, 1),)))
  assert reassemble(pc) == TransportPlan(((0, 0, 1),))


def test_kellerer_split_of_discretized_guiding():
  mu, nu = discretize(GUIDING_MU, 4), discretize(GUIDING_NU, 4)
  dec = line_components(mu, nu)
  mc = marginal_components(mu, nu, dec)
  pc = split_plan(kellerer_plan(mu, nu), dec)
  assert len(pc.rest) == 0
  for plan, (m, n) in zip(pc.pos + pc.neg, mc.pos + mc.neg):
    assert marginal_l1_error(plan, m, n) < 1e-10


def test_mixing_components_of_two_optimal_plans():
  mu = atomic({-1: 1, 0: 6, 1: 1})
  nu = atomic({-3: 1, -2: 2, 0: 3, 2: 1, 3: 1})
  dec = line_components(mu, nu)
  a = split_plan(monotone_coupling(mu, nu), dec)
  b = split_plan(kellerer_plan(mu, nu), dec)
  mixed = reassemble(PlanComponents(a.pos, b.neg, a.eq1, b.eq2))
  assert check_optimal_crossings(mixed)
  assert marginal_l1_error(mixed, mu, nu) < 1e-12


def test_report_is_json_ready():
  import json
  rep = decomposition_report(GUIDING_MU, GUIDING_NU)
  assert json.loads(json.dumps(rep)) == rep
  assert rep["e_plus"] == [["0", "2"]]
  assert rep["boundary"]["all"] == ["0", "2", "3", "4"]


def _same_mass(m1, m2):
  if m1.mass == 0 or m2.mass == 0:
    return None
  return m1, m2.scale(m1.mass / m2.mass)


def _probe_points(mu, nu):
  pts = sorted(set(mu.breakpoints()) | set(nu.breakpoints()))
  out = set(pts)
  for lo, hi in zip(pts, pts[1:]):
    for k in range(1, 8):
      out.add(lo + (hi - lo) * k / 8)
  if pts:
    out |= {pts[0] - 1, pts[-1] + 1}
  return sorted(out)


@settings(max_examples=60, deadline=None)
@given(measures(), measures())
def test_decomposition_invariants(m1, m2):
  pair = _same_mass(m1, m2)
  if pair is None:
    return
  mu, nu = pair
  dec = line_components(mu, nu)
  mc = marginal_components(mu, nu, dec)
  assert mc.mu_total() == mu and mc.nu_total() == nu
  assert mc.mu_eq == mc.nu_eq
  for m, n in mc.pos:
    assert m.mass == n.mass and leq_F(m, n)
  for m, n in mc.neg:
    assert m.mass == n.mass and leq_F(n, m)
  assert barrier_set(mu, nu) == four_set_union(mu, nu)
  for x in dec.boundary:
    assert dec.in_eq(x)
  # Membership of E+ and E- through direct CDF sums at probe points.
  pos = [Interval.open(a, b) for a, b in dec.pos]
  neg = [Interval.open(a, b) for a, b in dec.neg]
  for t in _probe_points(mu, nu):
    dp = cdf_direct(mu, t, "plus") - cdf_direct(nu, t, "plus")
    dm = cdf_direct(mu, t, "minus") - cdf_direct(nu, t, "minus")
    assert any(iv.contains(t) for iv in pos) == (dp > 0 and dm > 0)
    assert any(iv.contains(t) for iv in neg) == (dp < 0 and dm < 0)
    assert dec.in_eq(t) == (not (dp > 0 and dm > 0) and not (dp < 0 and dm < 0))


@settings(max_examples=60, deadline=None)
@given(measures(), measures())
def test_swapping_marginals_swaps_components(m1, m2):
  pair = _same_mass(m1, m2)
  if pair is None:
    return
  mu, nu = pair
  dec, rev = line_components(mu, nu), line_components(nu, mu)
  assert rev.pos == dec.neg and rev.neg == dec.pos and rev.e_eq == dec.e_eq
  mc, mr = marginal_components(mu, nu, dec), marginal_components(nu, mu, rev)
  assert mr.pos == tuple((n, m) for m, n in mc.neg)
  assert mr.neg == tuple((n, m) for m, n in mc.pos)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.integers(-4, 6), st.integers(1, 5), min_size=1, max_size=6),
       st.dictionaries(st.integers(-4, 6), st.integers(1, 5), min_size=1, max_size=6))
def test_split_reassemble_monotone(a, b):
  mu, nu = atomic(a), atomic(b)
  nu = nu.scale(mu.mass / nu.mass)
  dec = line_components(mu, nu)
  mc = marginal_components(mu, nu, dec)
  pi = monotone_coupling(mu, nu)
  pc = split_plan(pi, dec)
  assert len(pc.rest) == 0 and reassemble(pc) == pi
  for plan, pair in zip(pc.pos + pc.neg, mc.pos + mc.neg):
    assert plan.marginals() == pair
  assert pc.eq1.marginals() == (mc.mu_eq1, mc.nu_eq1)
  assert pc.eq2.marginals() == (mc.mu_eq2, mc.nu_eq2)
  assert INF not in dec.boundary
