"""Finitely supported transport plans on the plane."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable

from .measure import Measure, scalar

DROP_BELOW = 1e-15


@dataclass(frozen=True)
class TransportPlan:
  """Sorted ``(x, y, w)`` triples with exact positive weights."""

  triples: tuple = ()

  def __post_init__(self):
    acc: dict = {}
    for x, y, w in self.triples:
      key = (scalar(x), scalar(y))
      acc[key] = acc.get(key, 0) + self._weight(w)
    kept = tuple(sorted((x, y, w) for (x, y), w in acc.items() if self._keep(w)))
    object.__setattr__(self, "triples", kept)

  @staticmethod
  def _weight(w):
    w = scalar(w)
    if w < 0:
      raise ValueError("negative plan weight")
    return w

  @staticmethod
  def _keep(w):
    return w != 0

  @property
  def exact(self) -> bool:
    return True

  def _make(self, triples):
    return type(self)(tuple(triples))

  @cached_property
  def cells(self) -> dict:
    return {(x, y): w for x, y, w in self.triples}

  def weight(self, x, y):
    return self.cells.get((x, y), 0)

  @property
  def mass(self):
    return sum((w for _, _, w in self.triples), self._zero())

  def _zero(self):
    return Fraction(0)

  def __len__(self):
    return len(self.triples)

  def __iter__(self):
    return iter(self.triples)

  def first_marginal(self) -> dict:
    out: dict = {}
    for x, _, w in self.triples:
      out[x] = out.get(x, self._zero()) + w
    return out

  def second_marginal(self) -> dict:
    out: dict = {}
    for _, y, w in self.triples:
      out[y] = out.get(y, self._zero()) + w
    return out

  def marginals(self) -> tuple[Measure, Measure]:
    """Both projections as exact measures (exact plans only)."""
    return (Measure(tuple(self.first_marginal().items())),
            Measure(tuple(self.second_marginal().items())))

  def restrict(self, keep: Callable) -> "TransportPlan":
    return self._make(t for t in self.triples if keep(t[0], t[1]))

  def transpose(self) -> "TransportPlan":
    return self._make((y, x, w) for x, y, w in self.triples)

  def scale(self, c) -> "TransportPlan":
    return self._make((x, y, c * w) for x, y, w in self.triples)

  def __add__(self, other: "TransportPlan") -> "TransportPlan":
    if self.exact and other.exact:
      return TransportPlan(self.triples + other.triples)
    return FloatPlan(self.to_float().triples + other.to_float().triples)

  def to_float(self) -> "FloatPlan":
    return FloatPlan(tuple((x, y, float(w)) for x, y, w in self.triples))


@dataclass(frozen=True)
class FloatPlan(TransportPlan):
  """Same shape with float weights; cells below ``DROP_BELOW`` are dropped.

  ``marginal_error`` records the L1 marginal residual reported by the solver
  that produced the plan.
  """

  marginal_error: float = 0.0

  @staticmethod
  def _weight(w):
    w = float(w)
    if not w >= 0 or math.isinf(w):
      raise ValueError(f"invalid plan weight {w}")
    return w

  @staticmethod
  def _keep(w):
    return w >= DROP_BELOW

  @property
  def exact(self) -> bool:
    return False

  def _make(self, triples):
    return FloatPlan(tuple(triples), self.marginal_error)

  def _zero(self):
    return 0.0

  def scale(self, c) -> "FloatPlan":
    return self._make((x, y, float(c) * w) for x, y, w in self.triples)

  def to_float(self) -> "FloatPlan":
    return self


def plan_from(triples: Iterable, exact: bool) -> TransportPlan:
  return TransportPlan(tuple(triples)) if exact else FloatPlan(tuple(triples))


def marginal_l1_error(pi: TransportPlan, mu: Measure, nu: Measure) -> float:
  """L1 distance between the projections of ``pi`` and atomic ``mu``, ``nu``."""
  err = 0.0
  for proj, m in ((pi.first_marginal(), mu), (pi.second_marginal(), nu)):
    pts = set(proj) | set(m.support_points())
    err += sum(abs(float(proj.get(p, 0)) - float(m.atom_weight(p))) for p in pts)
  return err


def couples_exactly(pi: TransportPlan, mu: Measure, nu: Measure) -> bool:
  return pi.exact and pi.marginals() == (mu, nu)


def write_plan_csv(pi: TransportPlan) -> str:
  buf = io.StringIO()
  out = csv.writer(buf, lineterminator="\n")
  out.writerow(["x", "y", "w"])
  for x, y, w in pi.triples:
    out.writerow([str(x), str(y), str(w) if pi.exact else format(w, ".17g")])
  return buf.getvalue()


def read_plan_csv(text: str, exact: bool = True) -> TransportPlan:
  rows = list(csv.reader(io.StringIO(text)))
  if not rows or [c.strip() for c in rows[0]] != ["x", "y", "w"]:
    raise ValueError("plan CSV must start with the header x,y,w")
  triples = []
  for row in rows[1:]:
    if not row:
      continue
    if len(row) != 3:
      raise ValueError(f"bad plan row {row!r}")
    x, y, w = row
    triples.append((scalar(x), scalar(y), scalar(w) if exact else float(w)))
  seen = set()
  for x, y, _ in triples:
    if (x, y) in seen:
      raise ValueError(f"duplicate plan cell ({x},{y})")
    seen.add((x, y))
  return plan_from(triples, exact)
