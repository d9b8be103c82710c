"""Exact finite measures on the real line.

A measure is a finite list of atoms plus piecewise-constant density pieces.
Positions, weights and densities are ``fractions.Fraction`` values so every
CDF comparison is decided exactly.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

INF = math.inf
PLUS = "plus"
MINUS = "minus"


def scalar(v) -> Fraction:
  """Converts ints, Fractions and decimal or ``p/q`` strings to a Fraction."""
  if isinstance(v, bool):
    raise TypeError("booleans are not scalars")
  if isinstance(v, Fraction):
    return v
  if isinstance(v, int):
    return Fraction(v)
  if isinstance(v, str):
    try:
      return Fraction(v.strip())
    except (ValueError, ZeroDivisionError) as exc:
      raise ValueError(f"not a rational number: {v!r}") from exc
  if isinstance(v, float):
    if not math.isfinite(v):
      raise ValueError("scalars must be finite")
    return Fraction(v)
  raise TypeError(f"cannot convert {type(v).__name__} to a scalar")


def fmt(v) -> str:
  """Formats an exact scalar (or an infinity) as a string."""
  if isinstance(v, float) and math.isinf(v):
    return "inf" if v > 0 else "-inf"
  return str(v)


@dataclass(frozen=True)
class Interval:
  """Interval of the line; infinite ends are always open."""

  lo: Fraction | float
  hi: Fraction | float
  lo_closed: bool = False
  hi_closed: bool = False

  def __post_init__(self):
    if self.lo == -INF or self.lo == INF:
      object.__setattr__(self, "lo_closed", False)
    if self.hi == INF or self.hi == -INF:
      object.__setattr__(self, "hi_closed", False)
    if self.lo > self.hi:
      raise ValueError("interval with lo > hi")
    if self.lo == self.hi and not (self.lo_closed and self.hi_closed):
      raise ValueError("degenerate interval must be a closed singleton")

  @classmethod
  def open(cls, lo, hi):
    return cls(lo, hi, False, False)

  @classmethod
  def closed(cls, lo, hi):
    return cls(lo, hi, True, True)

  @classmethod
  def point(cls, x):
    return cls(x, x, True, True)

  @classmethod
  def real_line(cls):
    return cls(-INF, INF, False, False)

  def contains(self, t) -> bool:
    if t < self.lo or t > self.hi:
      return False
    if t == self.lo and not self.lo_closed:
      return False
    if t == self.hi and not self.hi_closed:
      return False
    return True

  def __str__(self):
    if self.lo == self.hi:
      return "{" + fmt(self.lo) + "}"
    left = "[" if self.lo_closed else "]"
    right = "]" if self.hi_closed else "["
    return f"{left}{fmt(self.lo)},{fmt(self.hi)}{right}"


@dataclass(frozen=True)
class IntervalUnion:
  """Sorted, pairwise disjoint, non-adjacent union of intervals."""

  parts: tuple[Interval, ...] = ()

  def contains(self, t) -> bool:
    return any(p.contains(t) for p in self.parts)

  def is_empty(self) -> bool:
    return not self.parts

  def __iter__(self):
    return iter(self.parts)

  def __len__(self):
    return len(self.parts)

  def __str__(self):
    if not self.parts:
      return "{}"
    return " u ".join(str(p) for p in self.parts)


def _canonical_pieces(pieces):
  """Adds overlapping pieces and merges neighbours with equal density."""
  pieces = [(a, b, d) for a, b, d in pieces if a != b and d != 0]
  if not pieces:
    return ()
  for a, b, d in pieces:
    if a > b:
      raise ValueError("piece with a > b")
    if d < 0:
      raise ValueError("negative density")
  ends = sorted({a for a, _, _ in pieces} | {b for _, b, _ in pieces})
  out = []
  for lo, hi in zip(ends, ends[1:]):
    d = sum((p[2] for p in pieces if p[0] <= lo and hi <= p[1]), Fraction(0))
    if d == 0:
      continue
    if out and out[-1][1] == lo and out[-1][2] == d:
      out[-1] = (out[-1][0], hi, d)
    else:
      out.append((lo, hi, d))
  return tuple(out)


def _canonical_atoms(atoms):
  acc: dict[Fraction, Fraction] = {}
  for x, w in atoms:
    if w < 0:
      raise ValueError("negative atom weight")
    acc[x] = acc.get(x, Fraction(0)) + w
  return tuple(sorted((x, w) for x, w in acc.items() if w != 0))


@dataclass(frozen=True)
class Measure:
  """Atoms ``(x, w)`` plus density pieces ``(a, b, density)``.

  The constructor canonicalizes its input: atoms at the same position are
  added, overlapping pieces are summed and adjacent pieces of equal density
  are merged, so two equal measures compare equal with ``==``.
  """

  atoms: tuple = ()
  pieces: tuple = ()

  def __post_init__(self):
    atoms = [(scalar(x), scalar(w)) for x, w in self.atoms]
    pieces = [(scalar(a), scalar(b), scalar(d)) for a, b, d in self.pieces]
    object.__setattr__(self, "atoms", _canonical_atoms(atoms))
    object.__setattr__(self, "pieces", _canonical_pieces(pieces))

  @cached_property
  def mass(self) -> Fraction:
    return sum((w for _, w in self.atoms), Fraction(0)) + sum(
        (d * (b - a) for a, b, d in self.pieces), Fraction(0))

  @property
  def is_atomic(self) -> bool:
    return not self.pieces

  @property
  def is_zero(self) -> bool:
    return not self.atoms and not self.pieces

  @cached_property
  def _atom_xs(self):
    return [x for x, _ in self.atoms]

  @cached_property
  def _atom_cum(self):
    acc, out = Fraction(0), [Fraction(0)]
    for _, w in self.atoms:
      acc += w
      out.append(acc)
    return out

  @cached_property
  def _piece_ends(self):
    return [b for _, b, _ in self.pieces]

  @cached_property
  def _piece_cum(self):
    acc, out = Fraction(0), [Fraction(0)]
    for a, b, d in self.pieces:
      acc += d * (b - a)
      out.append(acc)
    return out

  def atom_weight(self, x) -> Fraction:
    i = bisect_left(self._atom_xs, x)
    if i < len(self.atoms) and self.atoms[i][0] == x:
      return self.atoms[i][1]
    return Fraction(0)

  def continuous_cdf(self, t) -> Fraction:
    if t == -INF:
      return Fraction(0)
    if t == INF:
      return self._piece_cum[-1]
    k = bisect_right(self._piece_ends, t)
    out = self._piece_cum[k]
    if k < len(self.pieces):
      a, _, d = self.pieces[k]
      if a < t:
        out += d * (t - a)
    return out

  def breakpoints(self) -> list:
    pts = set(self._atom_xs)
    for a, b, _ in self.pieces:
      pts.add(a)
      pts.add(b)
    return sorted(pts)

  def support_points(self) -> list:
    return list(self._atom_xs)

  def __add__(self, other: "Measure") -> "Measure":
    return Measure(self.atoms + other.atoms, self.pieces + other.pieces)

  def scale(self, c) -> "Measure":
    c = scalar(c)
    return Measure(tuple((x, c * w) for x, w in self.atoms),
                   tuple((a, b, c * d) for a, b, d in self.pieces))

  def __repr__(self):
    atoms = ", ".join(f"{w}@{x}" for x, w in self.atoms)
    pieces = ", ".join(f"{d}*[{a},{b}]" for a, b, d in self.pieces)
    return f"Measure(atoms=[{atoms}], pieces=[{pieces}])"


ZERO = Measure()


def atomic(pairs: Iterable) -> Measure:
  """Builds an atomic measure from ``(x, w)`` pairs or a ``{x: w}`` dict."""
  if isinstance(pairs, dict):
    pairs = pairs.items()
  return Measure(tuple(pairs), ())


def uniform(a, b, density=1) -> Measure:
  return Measure((), ((a, b, density),))


def dirac(x, w=1) -> Measure:
  return Measure(((x, w),), ())


def cdf(m: Measure, t, side: str = PLUS) -> Fraction:
  """Mass of ``]-inf, t]`` (side plus) or ``]-inf, t[`` (side minus)."""
  if t == -INF:
    return Fraction(0)
  if t == INF:
    return m.mass
  if side == PLUS:
    k = bisect_right(m._atom_xs, t)
  elif side == MINUS:
    k = bisect_left(m._atom_xs, t)
  else:
    raise ValueError(f"unknown side {side!r}")
  return m._atom_cum[k] + m.continuous_cdf(t)


def restrict(m: Measure, iv: Interval) -> Measure:
  atoms = tuple((x, w) for x, w in m.atoms if iv.contains(x))
  pieces = []
  for a, b, d in m.pieces:
    lo, hi = max(a, iv.lo), min(b, iv.hi)
    if lo < hi:
      pieces.append((lo, hi, d))
  return Measure(atoms, tuple(pieces))


def restrict_union(m: Measure, u: IntervalUnion) -> Measure:
  out = ZERO
  for iv in u:
    out = out + restrict(m, iv)
  return out


def drop_atoms(m: Measure, xs) -> Measure:
  xs = set(xs)
  return Measure(tuple((x, w) for x, w in m.atoms if x not in xs), m.pieces)


def quantile(m: Measure, u) -> Fraction:
  """Returns ``inf{t : cdf(m, t, plus) >= u}`` for ``0 < u <= mass``."""
  u = scalar(u)
  if not 0 < u <= m.mass:
    raise ValueError(f"quantile level {u} outside ]0, {m.mass}]")
  prev = None
  for p in m.breakpoints():
    if cdf(m, p, PLUS) >= u:
      left = cdf(m, p, MINUS)
      if prev is not None:
        start = cdf(m, prev, PLUS)
        if left >= u > start:
          slope = (left - start) / (p - prev)
          return prev + (u - start) / slope
      return p
    prev = p
  raise AssertionError("quantile scan did not terminate")


def common_part(m1: Measure, m2: Measure) -> Measure:
  """Largest measure below both arguments."""
  atoms = [(x, min(w, m2.atom_weight(x))) for x, w in m1.atoms]
  ends = sorted({e for a, b, _ in m1.pieces + m2.pieces for e in (a, b)})
  pieces = []
  for lo, hi in zip(ends, ends[1:]):
    d1 = _density_on(m1, lo, hi)
    d2 = _density_on(m2, lo, hi)
    if min(d1, d2) > 0:
      pieces.append((lo, hi, min(d1, d2)))
  return Measure(tuple(atoms), tuple(pieces))


def _density_on(m: Measure, lo, hi) -> Fraction:
  for a, b, d in m.pieces:
    if a <= lo and hi <= b:
      return d
  return Fraction(0)


def discretize(m: Measure, cells_per_piece: int) -> Measure:
  """Replaces each density piece by midpoint atoms carrying the cell mass."""
  if cells_per_piece < 1:
    raise ValueError("cells_per_piece must be at least 1")
  atoms = list(m.atoms)
  for a, b, d in m.pieces:
    h = (b - a) / cells_per_piece
    for j in range(cells_per_piece):
      atoms.append((a + (2 * j + 1) * h / 2, d * h))
  return Measure(tuple(atoms), ())


# Scanning the line cell by cell.


@dataclass(frozen=True)
class Element:
  """A grid point (``lo == hi``) or an open cell between grid points.

  ``values[i]`` holds ``(F-, F+)`` of the i-th scanned measure at ``sample``;
  on open cells both sides coincide and the value is representative for
  every point of the cell.
  """

  lo: Fraction | float
  hi: Fraction | float
  sample: Fraction
  values: tuple

  @property
  def is_point(self) -> bool:
    return self.lo == self.hi


def _sample(lo, hi):
  if lo == -INF and hi == INF:
    return Fraction(0)
  if lo == -INF:
    return hi - 1
  if hi == INF:
    return lo + 1
  return (lo + hi) / 2


def scan_grid(measures: Sequence[Measure], pairs: Sequence[tuple] = ()) -> list:
  """Partitions the line into grid points and open cells.

  The grid is the union of the breakpoints of ``measures``, refined by the
  zeros of ``F_i - F_j`` inside cells for each ``(i, j)`` in ``pairs``. On each
  resulting open cell every CDF is affine and every listed difference has a
  constant sign, so any sign condition can be decided at the sample point.
  """
  pts = sorted(set().union(*(m.breakpoints() for m in measures)) if measures else set())
  extra = set()
  for lo, hi in zip(pts, pts[1:]):
    for i, j in pairs:
      d0 = cdf(measures[i], lo, PLUS) - cdf(measures[j], lo, PLUS)
      d1 = cdf(measures[i], hi, MINUS) - cdf(measures[j], hi, MINUS)
      if (d0 > 0 > d1) or (d0 < 0 < d1):
        extra.add(lo + (hi - lo) * d0 / (d0 - d1))
  pts = sorted(set(pts) | extra)
  bounds = [-INF] + pts + [INF]
  out = []
  for k, (lo, hi) in enumerate(zip(bounds, bounds[1:])):
    s = _sample(lo, hi)
    vals = tuple((cdf(m, s, MINUS), cdf(m, s, PLUS)) for m in measures)
    out.append(Element(lo, hi, s, vals))
    if k < len(pts):
      x = pts[k]
      vals = tuple((cdf(m, x, MINUS), cdf(m, x, PLUS)) for m in measures)
      out.append(Element(x, x, x, vals))
  return out


def union_from_mask(elements: Sequence[Element], mask: Sequence[bool]) -> IntervalUnion:
  """Merges consecutive selected grid elements into maximal intervals."""
  parts = []
  run = None
  for e, keep in zip(elements, mask):
    if keep:
      if run is None:
        run = [e.lo, e.is_point]
      run_hi, run_hi_closed = e.hi, e.is_point
    elif run is not None:
      parts.append(Interval(run[0], run_hi, run[1], run_hi_closed))
      run = None
  if run is not None:
    parts.append(Interval(run[0], run_hi, run[1], run_hi_closed))
  return IntervalUnion(tuple(parts))


# JSON schema: {"atoms": [{"x", "w"}], "pieces": [{"a", "b", "density"}]}.


def measure_from_json(obj) -> Measure:
  """Parses and validates the measure schema."""
  if not isinstance(obj, dict):
    raise ValueError("measure must be a JSON object")
  unknown = set(obj) - {"atoms", "pieces"}
  if unknown:
    raise ValueError(f"unknown measure keys: {sorted(unknown)}")
  atoms = []
  seen = set()
  for item in obj.get("atoms", []):
    x, w = scalar(item["x"]), scalar(item["w"])
    if w < 0:
      raise ValueError(f"negative atom weight at {x}")
    if x in seen:
      raise ValueError(f"duplicate atom at {x}")
    seen.add(x)
    atoms.append((x, w))
  pieces = []
  for item in obj.get("pieces", []):
    a, b, d = scalar(item["a"]), scalar(item["b"]), scalar(item["density"])
    if not a < b:
      raise ValueError(f"piece [{a},{b}] must have a < b")
    if d < 0:
      raise ValueError(f"negative density on [{a},{b}]")
    pieces.append((a, b, d))
  pieces.sort()
  for (a1, b1, _), (a2, _, _) in zip(pieces, pieces[1:]):
    if a2 < b1:
      raise ValueError(f"overlapping pieces at [{a2},{b1}]")
  return Measure(tuple(atoms), tuple(pieces))


def measure_to_json(m: Measure) -> dict:
  return {
      "atoms": [{"x": str(x), "w": str(w)} for x, w in m.atoms],
      "pieces": [{"a": str(a), "b": str(b), "density": str(d)}
                 for a, b, d in m.pieces],
  }
