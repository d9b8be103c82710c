import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lineot.couplings import (OrderViolation, check_optimal_crossings, cost, entropy_form,
                              is_strongly_multiplicative_on, is_weakly_multiplicative,
                              kellerer_component, kellerer_parts, kellerer_plan, mix,
                              monotone_coupling, relative_entropy, w1_oracle)
from lineot.decomposition import line_components, marginal_components, split_plan
from lineot.measure import atomic, common_part, dirac, uniform
from lineot.plan import TransportPlan, couples_exactly, marginal_l1_error
from oracles import (GUIDING_MU, GUIDING_NU, cyclically_monotone_bruteforce, random_atomic_pair,
                     random_coupling, w1_by_quantiles)

pairs = st.builds(lambda seed: random_atomic_pair(random.Random(seed)),
                  st.integers(0, 10**9))


def test_monotone_and_cost_examples():
  mu, nu = atomic({0: 1, 1: 1}), atomic({2: 1, 3: 1})
  pi = monotone_coupling(mu, nu)
  assert pi == TransportPlan(((0, 2, 1), (1, 3, 1)))
  assert cost(pi) == 4 == w1_oracle(mu, nu)
  assert cost(TransportPlan(((0, 1, 1), (3, 2, 1)))) == 2
  assert monotone_coupling(dirac(0, 2), atomic({-1: 1, 1: 1})) == \
      TransportPlan(((0, -1, 1), (0, 1, 1)))


def test_w1_oracle_on_densities():
  assert w1_oracle(uniform(0, 1), uniform(1, 2)) == 1
  assert w1_oracle(GUIDING_MU, GUIDING_MU) == 0
  # The CDFs differ by t/2 on [0, 1/2] and by (1 - t)/2 on [1/2, 1].
  assert w1_oracle(uniform(0, 1), dirac(F(1, 2))) == F(1, 4)


def test_relative_entropy_examples():
  assert relative_entropy(TransportPlan(((0, 0, 1),)), dirac(0), dirac(0)) == 0
  mu, nu = atomic({0: 1, 1: 1}), atomic({2: 1, 3: 1})
  assert relative_entropy(monotone_coupling(mu, nu), mu, nu) == 0
  uni = TransportPlan(tuple((x, y, F(1, 2)) for x in (0, 1) for y in (2, 3)))
  assert relative_entropy(uni, mu, nu) == pytest.approx(-2 * math.log(2), abs=1e-15)
  assert relative_entropy(uni.to_float(), mu, nu) == pytest.approx(-2 * math.log(2), abs=1e-15)
  assert relative_entropy(TransportPlan(((5, 2, 1),)), mu, nu) == math.inf
  assert entropy_form(uni, mu, nu) == {F(1, 2): 2}


def test_crossing_examples():
  bad = TransportPlan(((0, 2, 1), (3, 1, 1)))
  v = check_optimal_crossings(bad)
  assert not v and v.witness.kind == "crossing"
  assert v.witness.data == ((0, 2), (3, 1))
  assert cost(bad) == 4 > w1_oracle(atomic({0: 1, 3: 1}), atomic({1: 1, 2: 1})) == 2
  free = TransportPlan(((0, 3, 1), (1, 2, 1)))
  assert check_optimal_crossings(free)
  assert cost(free) == 4 == w1_oracle(atomic({0: 1, 1: 1}), atomic({2: 1, 3: 1}))


def test_split_atom_paths_are_not_crossings():
  # Mass leaving one point in both directions costs the same after swapping.
  assert check_optimal_crossings(TransportPlan(((0, -2, 1), (0, 2, 1))))
  assert check_optimal_crossings(TransportPlan(((-3, 0, 1), (2, 0, 1))))


def test_weak_multiplicativity_examples():
  assert is_weakly_multiplicative(TransportPlan(((0, 0, 1),)))
  uni = TransportPlan(tuple((x, y, F(1, 2)) for x in (0, 1) for y in (2, 3)))
  assert is_weakly_multiplicative(uni)
  v = is_weakly_multiplicative(TransportPlan(((0, 2, 1), (1, 3, 1))))
  assert not v and v.witness.kind == "factorization"


def test_strong_multiplicativity_examples():
  uni = TransportPlan(tuple((x, y, F(1, 2)) for x in (0, 1) for y in (2, 3)))
  assert is_strongly_multiplicative_on(uni, "F")
  v = is_strongly_multiplicative_on(TransportPlan(((0, 2, 1), (1, 3, 1))), "F")
  assert not v and v.witness.data[0] == "missing"
  assert not is_strongly_multiplicative_on(TransportPlan(((1, 0, 1),)), "F")
  # Product of (1,2) and (1,1) restricted to x <= y on {0,1} x {1,2}.
  tri = TransportPlan(((0, 1, 1), (0, 2, 1), (1, 1, 2), (1, 2, 2)))
  assert is_strongly_multiplicative_on(tri, "F")
  skew = TransportPlan(((0, 1, 1), (0, 2, 2), (1, 1, 2), (1, 2, 2)))
  assert not is_strongly_multiplicative_on(skew, "F")


def test_kellerer_component_examples():
  comp = kellerer_component(atomic({0: 1, 1: 1}), atomic({2: 1, 3: 1}))
  for x in (0, 1):
    for y in (2, 3):
      assert comp.plan.weight(x, y) == pytest.approx(0.5, abs=1e-12)
  with pytest.raises(OrderViolation):
    kellerer_component(atomic({0: 1, 1: 1}), atomic({0: 1, 1: 1}))
  with pytest.raises(OrderViolation):
    kellerer_component(dirac(0), dirac(0), "G")


def test_kellerer_plan_identity_and_point_splitting():
  m = atomic({0: 1, 2: 3})
  assert kellerer_plan(m, m).cells == {(0, 0): 1.0, (2, 2): 3.0}
  mu = atomic({-1: 1, 0: 6, 1: 1})
  nu = atomic({-3: 1, -2: 2, 0: 3, 2: 1, 3: 1})
  k = kellerer_plan(mu, nu)
  assert k.marginal_error < 1e-10
  assert cost(k) == pytest.approx(float(w1_oracle(mu, nu)), abs=1e-9)
  assert k.weight(0, 0) == pytest.approx(3.0, abs=1e-12)
  kinds = [h for _, h in kellerer_parts(mu, nu)]
  assert kinds == ["F", "F~", "D"]
  for part, h in kellerer_parts(mu, nu):
    if h != "D":
      assert is_strongly_multiplicative_on(part, h, 1e-9)


def test_mixing_two_optimal_plans():
  mu, nu = atomic({0: 1, 1: 1}), atomic({2: 1, 3: 1})
  a = monotone_coupling(mu, nu)
  b = TransportPlan(((0, 3, 1), (1, 2, 1)))
  m = mix(a, b, F(1, 3))
  assert couples_exactly(m, mu, nu) and check_optimal_crossings(m)
  assert cost(m) == w1_oracle(mu, nu)


@settings(max_examples=80, deadline=None)
@given(pairs)
def test_w1_routes_agree(pair):
  mu, nu = pair
  assert w1_oracle(mu, nu) == w1_by_quantiles(mu, nu) == cost(monotone_coupling(mu, nu))
  assert check_optimal_crossings(monotone_coupling(mu, nu))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_crossings_characterize_optimality(seed):
  pi = random_coupling(random.Random(seed))
  mu, nu = pi.marginals()
  verdict = bool(check_optimal_crossings(pi))
  assert verdict == (cost(pi) == w1_oracle(mu, nu))
  assert verdict == cyclically_monotone_bruteforce(pi)


@settings(max_examples=40, deadline=None)
@given(pairs)
def test_kellerer_properties(pair):
  mu, nu = pair
  k = kellerer_plan(mu, nu)
  assert marginal_l1_error(k, mu, nu) < 1e-10
  assert cost(k) == pytest.approx(float(w1_oracle(mu, nu)), abs=1e-9)
  assert is_weakly_multiplicative(k, 1e-9)
  mono = monotone_coupling(mu, nu).to_float()
  ek = relative_entropy(k, mu, nu)
  for lam in (0, 0.25, 0.5, 0.75):
    assert ek <= relative_entropy(mix(k, mono, lam), mu, nu) + 1e-9


@settings(max_examples=60, deadline=None)
@given(pairs)
def test_entropy_additivity_exact(pair):
  mu, nu = pair
  pi = monotone_coupling(mu, nu)
  pc = split_plan(pi, line_components(mu, nu))
  total: dict = {}
  for part in pc.all():
    for r, w in entropy_form(part, mu, nu).items():
      total[r] = total.get(r, 0) + w
  assert total == entropy_form(pi, mu, nu)
  parts = math.fsum(relative_entropy(p, mu, nu) for p in pc.all())
  assert parts == pytest.approx(relative_entropy(pi, mu, nu), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(pairs)
def test_no_common_atoms_F_equals_G(pair):
  mu, nu = pair
  mc = marginal_components(mu, nu)
  for m, n in mc.pos:
    if common_part(m, n).is_zero:
      f = kellerer_component(m, n, "F").plan
      g = kellerer_component(m, n, "G").plan
      assert all(x != y for x, y, _ in f.triples)
      assert set(f.cells) == set(g.cells)
      for cell, w in f.cells.items():
        assert g.cells[cell] == pytest.approx(w, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(pairs)
def test_mutual_singularity_and_diagonal_mass(pair):
  mu, nu = pair
  common = common_part(mu, nu)
  k = kellerer_plan(mu, nu)
  mono = monotone_coupling(mu, nu)
  for pi in (k, mono):
    diag = sum(w for x, y, w in pi.triples if x == y)
    if common.is_zero:
      assert diag == 0
  # Residual monotone coupling plus identity on the common part.
  rest_mu = atomic({x: w - common.atom_weight(x) for x, w in mu.atoms
                    if w > common.atom_weight(x)})
  rest_nu = atomic({y: w - common.atom_weight(y) for y, w in nu.atoms
                    if w > common.atom_weight(y)})
  pi = TransportPlan(tuple((x, x, w) for x, w in common.atoms))
  if rest_mu.mass:
    pi = pi + monotone_coupling(rest_mu, rest_nu)
  assert couples_exactly(pi, mu, nu)
  assert sum(w for x, y, w in pi.triples if x == y) == common.mass
