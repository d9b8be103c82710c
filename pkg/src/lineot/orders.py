"""Stochastic order and its two reinforced variants, decided exactly."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .measure import INF, Measure, scan_grid


@dataclass(frozen=True)
class OrderVerdict:
  holds: bool
  witness_t: Fraction | float | None = None
  reason: str = ""

  def __bool__(self):
    return self.holds


def _mass_check(g1: Measure, g2: Measure):
  if g1.mass != g2.mass:
    return OrderVerdict(False, INF, "masses differ")
  return None


def _first_failure(elements, failing):
  for e in elements:
    reason = failing(e)
    if reason:
      return OrderVerdict(False, e.sample, reason)
  return OrderVerdict(True)


def leq_st(g1: Measure, g2: Measure) -> OrderVerdict:
  """Equal masses and ``F1+ >= F2+`` everywhere."""
  bad = _mass_check(g1, g2)
  if bad is not None:
    return bad

  def failing(e):
    (_, p1), (_, p2) = e.values
    return "F1+ < F2+" if p1 < p2 else ""

  return _first_failure(scan_grid([g1, g2], [(0, 1)]), failing)


def leq_F(g1: Measure, g2: Measure) -> OrderVerdict:
  """Large reinforced order: strict CDF gaps wherever both can be strict."""
  st = leq_st(g1, g2)
  if not st:
    return st
  total = g2.mass

  def failing(e):
    (m1, p1), (m2, p2) = e.values
    if p1 > 0 and p2 < total and not p1 > p2:
      return "F1+ = F2+ inside T+"
    if m1 > 0 and m2 < total and not m1 > m2:
      return "F1- = F2- inside T-"
    return ""

  return _first_failure(scan_grid([g1, g2], [(0, 1)]), failing)


def leq_G(g1: Measure, g2: Measure) -> OrderVerdict:
  """Strict reinforced order: ``F1- >= F2+`` with strictness on ``T*``.

  Equal masses are required as well, so that the order refines ``leq_st``.
  """
  bad = _mass_check(g1, g2)
  if bad is not None:
    return bad
  total = g2.mass

  def failing(e):
    (m1, _), (_, p2) = e.values
    if m1 < p2:
      return "F1- < F2+"
    if m1 > 0 and p2 < total and not m1 > p2:
      return "F1- = F2+ inside T*"
    return ""

  return _first_failure(scan_grid([g1, g2], [(0, 1)]), failing)


def check_relation(g1: Measure, g2: Measure, relation: str) -> OrderVerdict:
  table = {"st": leq_st, "F": leq_F, "G": leq_G}
  if relation not in table:
    raise ValueError(f"unknown relation {relation!r}")
  return table[relation](g1, g2)
