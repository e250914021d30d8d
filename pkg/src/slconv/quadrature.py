"""Quadrature toolkit: Gauss-Legendre panels, adaptive bisection, and
improper integrals with divergence detection over geometric cut-offs.

All integrand callables are expected to accept numpy arrays.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import errors


@lru_cache(maxsize=None)
def gl_nodes(n):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def gl_integrate(f, a, b, n=32):
    """Fixed-order Gauss-Legendre on one panel."""
    u, w = gl_nodes(n)
    xs = a + (b - a) * u
    return (b - a) * float(np.dot(w, f(xs)))


def panel_integrate(f, breakpoints, n=16):
    """Composite Gauss-Legendre over consecutive panels; cascade-summed."""
    bp = np.asarray(breakpoints, dtype=float)
    u, w = gl_nodes(n)
    widths = np.diff(bp)
    xs = bp[:-1, None] + widths[:, None] * u[None, :]
    vals = f(xs.ravel()).reshape(xs.shape)
    contribs = widths * (vals @ w)
    return cascade_sum(contribs)


def cascade_sum(terms):
    """Pairwise summation to control cancellation in long signed sums."""
    t = np.asarray(terms, dtype=float)
    while t.size > 1:
        if t.size % 2:
            t = np.concatenate([t, [0.0]])
        t = t[0::2] + t[1::2]
    return float(t[0]) if t.size else 0.0


def adaptive_quad(f, a, b, rtol=1e-11, atol=1e-13, max_splits=2000):
    """Adaptive bisection with embedded GL8/GL16 error estimate."""
    if a == b:
        return 0.0
    stack = [(float(a), float(b))]
    total = 0.0
    err_scale = max(atol, abs(gl_integrate(f, a, b, 16)) * rtol)
    splits = 0
    while stack:
        lo, hi = stack.pop()
        coarse = gl_integrate(f, lo, hi, 8)
        fine = gl_integrate(f, lo, hi, 16)
        if abs(fine - coarse) <= err_scale * max(1e-3, (hi - lo) / (b - a)):
            total += fine
        else:
            splits += 1
            if splits > max_splits:
                raise errors.QuadratureBudgetExceeded(
                    "adaptive quadrature exceeded %d splits" % max_splits)
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid))
            stack.append((mid, hi))
    return total


@dataclass(frozen=True)
class QuadConfig:
    """Knobs for improper-integral evaluation and divergence detection."""
    growth_factor: float = 1.5     # partial-value growth declaring divergence
    growth_runs: int = 6           # consecutive growth shells required
    flat_ratio: float = 0.75       # increments not decaying below this ratio
    flat_runs: int = 6             # ... for this many shells => divergent
    decay_runs: int = 6            # decaying increments accepted as convergent
    rel_tol: float = 1e-9          # early stop when increment is negligible
    max_shells: int = 48
    shell_nodes: int = 32
    first_offset: float = 0.5      # first cut-off distance fraction / unit


@dataclass(frozen=True)
class ImproperResult:
    value: float          # finite estimate, or +inf
    finite: bool
    shells: int
    status: str           # 'converged' | 'divergent' | 'extrapolated'


def _shell_edges(c, endpoint, k, cfg):
    """Geometric cut-off sequence c_k approaching the endpoint."""
    if np.isinf(endpoint):
        d = max(abs(c), 1.0) * cfg.first_offset
        return c + d * 2.0 ** k
    d0 = abs(endpoint - c) * cfg.first_offset
    return endpoint + np.sign(c - endpoint) * d0 * 0.5 ** k


def improper_quad(f, c, endpoint, cfg=QuadConfig()):
    """Integrate |∫_c^endpoint f| where the only trouble spot is `endpoint`
    (which may be ±inf).  f must be eventually nonnegative near the
    endpoint for the divergence logic to be meaningful.

    Returns ImproperResult; raises InconclusiveDivergence if the shell
    increments neither converge nor pass a divergence test in budget.
    """
    increments = []
    partials = []
    prev_edge = c
    overflow_hit = False
    for k in range(cfg.max_shells):
        edge = _shell_edges(c, endpoint, k, cfg)
        lo, hi = (prev_edge, edge) if edge > prev_edge else (edge, prev_edge)
        sign = 1.0 if edge > prev_edge else -1.0
        u, w = gl_nodes(cfg.shell_nodes)
        xs = lo + (hi - lo) * u
        with np.errstate(all="ignore"):
            vals = np.asarray(f(xs), dtype=float)
        if not np.all(np.isfinite(vals)):
            overflow_hit = True
            break
        inc = sign * (hi - lo) * float(np.dot(w, vals))
        increments.append(inc)
        partials.append((partials[-1] if partials else 0.0) + inc)
        prev_edge = edge
        verdict = _classify_shells(increments, partials, cfg)
        if verdict is not None:
            return verdict
    # budget or overflow exhausted: decide from the trend so far
    verdict = _classify_shells(increments, partials, cfg, final=True)
    if verdict is not None:
        return verdict
    if overflow_hit and increments:
        # nonnegative integrand overflowing while increments grow
        if len(increments) < 2 or increments[-1] >= increments[0]:
            return ImproperResult(np.inf, False, len(increments), "divergent")
    raise errors.InconclusiveDivergence(
        "improper integral toward %r undecided after %d shells"
        % (endpoint, len(increments)))


def _classify_shells(increments, partials, cfg, final=False):
    n = len(increments)
    if n < 2:
        return None
    total = partials[-1]
    scale = max(abs(total), 1e-300)
    # early convergence: negligible increment
    if abs(increments[-1]) <= cfg.rel_tol * scale and \
            abs(increments[-2]) <= 10 * cfg.rel_tol * scale:
        return ImproperResult(total, True, n, "converged")
    # divergence by partial-value growth
    if n > cfg.growth_runs:
        grow = all(
            abs(partials[i]) >= cfg.growth_factor * abs(partials[i - 1])
            and abs(partials[i - 1]) > 0
            for i in range(n - cfg.growth_runs, n))
        if grow:
            return ImproperResult(np.inf, False, n, "divergent")
    ratios = [abs(increments[i]) / max(abs(increments[i - 1]), 1e-300)
              for i in range(1, n)]
    # divergence by non-decaying increments (catches log divergence)
    if n - 1 >= cfg.flat_runs:
        tail = ratios[-cfg.flat_runs:]
        if all(rho >= cfg.flat_ratio for rho in tail) and \
                abs(increments[-1]) > cfg.rel_tol * scale:
            return ImproperResult(np.inf, False, n, "divergent")
    # geometric decay: extrapolate the tail once the pattern is stable
    if final and n - 1 >= min(cfg.decay_runs, 3):
        tail = ratios[-min(cfg.decay_runs, n - 1):]
        if all(rho < cfg.flat_ratio for rho in tail):
            rho = tail[-1]
            est = total + increments[-1] * rho / (1.0 - rho)
            return ImproperResult(est, True, n, "extrapolated")
    return None
