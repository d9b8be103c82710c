"""Matplotlib figures written next to the JSON and CSV reports."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .measure import INF, MINUS, PLUS, cdf  # noqa: E402

plt.rcParams["svg.hashsalt"] = "lineot"


def _save(fig, path):
  meta = {"Date": None} if str(path).lower().endswith((".svg", ".pdf")) else None
  fig.savefig(path, metadata=meta)
  plt.close(fig)


def _cdf_path(m, pts, lo, hi):
  xs, ys = [lo], [0.0]
  for p in pts:
    xs += [float(p), float(p)]
    ys += [float(cdf(m, p, MINUS)), float(cdf(m, p, PLUS))]
  xs.append(hi)
  ys.append(float(m.mass))
  return xs, ys


def plot_cdfs(mu, nu, dec, path):
  """Both right-continuous CDFs with the moving regions shaded."""
  pts = sorted(set(mu.breakpoints()) | set(nu.breakpoints()))
  span = float(pts[-1] - pts[0]) if len(pts) > 1 else 1.0
  lo, hi = float(pts[0]) - 0.1 * span, float(pts[-1]) + 0.1 * span
  fig, ax = plt.subplots(figsize=(7, 4))
  for a, b in dec.pos:
    ax.axvspan(max(float(a), lo), min(float(b), hi), color="tab:red", alpha=0.12, lw=0)
  for a, b in dec.neg:
    ax.axvspan(max(float(a), lo), min(float(b), hi), color="tab:blue", alpha=0.12, lw=0)
  ax.plot(*_cdf_path(mu, pts, lo, hi), color="tab:red", label="F_mu")
  ax.plot(*_cdf_path(nu, pts, lo, hi), color="tab:blue", ls="--", label="F_nu")
  for x in dec.boundary:
    if x not in (INF, -INF):
      ax.axvline(float(x), color="0.4", lw=0.6, ls=":")
  ax.set_xlabel("t")
  ax.set_ylabel("cumulative mass")
  ax.legend(loc="upper left")
  fig.tight_layout()
  _save(fig, path)


def plot_plan(pi, path, title=""):
  """Support of a plan, marker area proportional to weight."""
  fig, ax = plt.subplots(figsize=(5, 5))
  if len(pi):
    xs = [float(x) for x, _, _ in pi.triples]
    ys = [float(y) for _, y, _ in pi.triples]
    ws = [float(w) for _, _, w in pi.triples]
    top = max(ws)
    ax.scatter(xs, ys, s=[400 * w / top for w in ws], alpha=0.6)
    lo, hi = min(xs + ys), max(xs + ys)
    ax.plot([lo, hi], [lo, hi], color="0.5", lw=0.6)
  ax.set_xlabel("x")
  ax.set_ylabel("y")
  if title:
    ax.set_title(title)
  fig.tight_layout()
  _save(fig, path)


def plot_sweep(report, path):
  """Distance to the limit plan and cost gap along the epsilon schedule."""
  eps = [r["epsilon"] for r in report.records]
  floor = 1e-18
  fig, ax = plt.subplots(figsize=(6, 4))
  ax.loglog(eps, [max(r["tv"], floor) for r in report.records], "o-", label="TV to limit plan")
  ax.loglog(eps, [max(abs(r["cost_gap"]), floor) for r in report.records], "s--",
            label="cost gap")
  ax.invert_xaxis()
  ax.set_xlabel("epsilon")
  ax.legend()
  fig.tight_layout()
  _save(fig, path)
