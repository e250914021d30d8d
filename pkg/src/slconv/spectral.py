"""Generalized integral transform against the eigenfunction kernel:
forward transform of functions and finite measures, and inverse transform
by quadrature against a family-supplied spectral measure."""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import errors, kernel

__all__ = ["SpectralMeasure", "SpectralFn", "forward_transform",
           "measure_transform", "inverse_transform"]

_GL_N, _GL_W = leggauss(12)


@dataclass(frozen=True)
class SpectralMeasure:
    """Plancherel measure of a transform pair, parameterized by tau with
    lambda = tau^2 + lam_shift; tau_density is the density w.r.t. d(tau)
    on tau > 0.  atoms are (lambda_i, mass_i) pairs."""
    tau_density: object
    lam_shift: float = 0.0
    atoms: tuple = ()
    support_note: str = ""
    status: str = "validated"      # or "experimental"

    def density(self, lam):
        """Density w.r.t. d(lambda) on lam > lam_shift."""
        lam = np.asarray(lam, dtype=float)
        tau = np.sqrt(np.maximum(lam - self.lam_shift, 0.0))
        with np.errstate(all="ignore"):
            out = np.where(tau > 0.0, self.tau_density(tau) / (2.0 * tau),
                           0.0)
        return out


@dataclass(frozen=True)
class SpectralFn:
    eval: object               # callable lam -> value
    grid: object = None        # optional cached (lam, value) samples

    def __call__(self, lam):
        return self.eval(lam)


def _panel_nodes(lo, hi):
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid + half * _GL_N, half * _GL_W


def _kernel_at(problem, lam, xs, closed_kernel=None):
    if closed_kernel is not None:
        return np.asarray(closed_kernel(lam, xs), dtype=float)
    return kernel.eval_kernel_many(problem, lam, xs)


def forward_transform(problem, h, lam, x_support=None, tol=1e-11,
                      max_doublings=24, closed_kernel=None):
    """Integral of h(x) w_lam(x) r(x) dx over [a, b).  h is a callable;
    the integration window grows until the tail contribution is below
    tol (TailNotDecaying if it never is).  Oscillation-aware: panel
    lengths resolve the local kernel wavelength pi / (tau sqrt(r/p))."""
    a, b = problem.a, problem.b
    tau = math.sqrt(max(float(lam), 0.0))

    def window_value(lo, hi):
        # panel sizing: resolve oscillation and keep enough panels
        pieces = []
        n_base = 24
        edges = [lo]
        x = lo
        span = hi - lo
        while x < hi:
            dx = span / n_base
            if tau > 0.0:
                pr = float(problem.p_val(max(x, lo + 1e-12 * span)))
                rr = float(problem.r_val(max(x, lo + 1e-12 * span)))
                if pr > 0 and rr > 0 and np.isfinite(pr) and np.isfinite(rr):
                    dx = min(dx, 0.5 * math.pi / tau * math.sqrt(pr / rr))
            dx = max(dx, 1e-6 * span)
            x = min(x + dx, hi)
            edges.append(x)
        edges = np.asarray(edges)
        nodes = []
        wts = []
        for k in range(len(edges) - 1):
            n, w = _panel_nodes(edges[k], edges[k + 1])
            nodes.append(n)
            wts.append(w)
        nodes = np.concatenate(nodes)
        wts = np.concatenate(wts)
        wvals = _kernel_at(problem, lam, nodes, closed_kernel)
        with np.errstate(all="ignore"):
            rv = problem.r_val(nodes) * np.ones_like(nodes)
            hv = np.asarray(h(nodes), dtype=float) * np.ones_like(nodes)
            contrib = np.where(np.isfinite(rv), hv * wvals * rv, 0.0)
        return math.fsum((contrib * wts).tolist())

    if x_support is not None:
        lo, hi = x_support
        return window_value(max(lo, a), min(hi, b if np.isfinite(b) else hi))

    hi = a + 1.0 if np.isinf(b) else b
    total = window_value(a, hi)
    if not np.isinf(b):
        return total
    scale = max(abs(total), 1e-12)
    for _ in range(max_doublings):
        new_hi = a + 2.0 * (hi - a)
        tail = window_value(hi, new_hi)
        total += tail
        hi = new_hi
        scale = max(scale, abs(total))
        if abs(tail) < tol * scale:
            # one confirming extra octave
            tail2 = window_value(hi, a + 2.0 * (hi - a))
            total += tail2
            if abs(tail2) < tol * scale:
                return total
            hi = a + 2.0 * (hi - a)
    raise errors.TailNotDecaying(
        "integrand tail did not fall below tolerance")


def measure_transform(problem, mu, lam, closed_kernel=None):
    """Transform of a finite measure: sum of mass * w_lam(loc) over atoms
    plus the integral of w_lam against each density segment (trapezoid on
    the segment's own grid, matching the measure's mass convention)."""
    locs = [loc for loc, _ in mu.atoms]
    masses = np.asarray([m for _, m in mu.atoms])
    parts = []
    if locs:
        wv = _kernel_at(problem, lam, np.asarray(locs, float), closed_kernel)
        parts.extend((masses * wv).tolist())
    gl3_n, gl3_w = leggauss(3)
    for seg in mu.segments:
        g, d = seg.grid, seg.density
        mid = 0.5 * (g[:-1] + g[1:])
        half = 0.5 * (g[1:] - g[:-1])
        nodes = (mid[:, None] + half[:, None] * gl3_n).ravel()
        dens = (d[:-1][:, None]
                + (d[1:] - d[:-1])[:, None] * 0.5 * (gl3_n + 1.0)).ravel()
        wts = (half[:, None] * gl3_w).ravel()
        wv = _kernel_at(problem, lam, nodes, closed_kernel)
        parts.append(float(np.sum(wts * dens * wv)))
    return math.fsum(parts)


def inverse_transform(family, phi, x, tol=1e-9, tau_max0=8.0,
                      max_doublings=8, nodes_per_unit=4.0,
                      use_closed_kernel=None):
    """Inverse transform: integral of phi(lambda) w_lambda(x) against the
    family's spectral measure, plus its atoms.  phi decay is probed by
    doubling the tau window (SlowDecay if it never settles)."""
    sm = family.spectral
    if sm is None:
        raise errors.SpectralMeasureUnavailable(
            "family %r supplies no spectral measure" % (family.id,))
    if use_closed_kernel is None:
        use_closed_kernel = family.prefer_closed_kernel
    ck = family.closed_kernel if use_closed_kernel else None
    problem = family.problem
    shift = sm.lam_shift
    phi_f = phi if callable(phi) else phi.eval

    def window(t_lo, t_hi):
        n_panels = max(4, int(math.ceil((t_hi - t_lo) * nodes_per_unit
                                        * max(1.0, abs(x)))))
        edges = np.linspace(t_lo, t_hi, n_panels + 1)
        total = []
        for k in range(n_panels):
            tn, tw = _panel_nodes(edges[k], edges[k + 1])
            dens = np.asarray(sm.tau_density(tn), dtype=float)
            lam_n = tn * tn + shift
            for t, wq, d, lamv in zip(tn, tw, dens, lam_n):
                wval = (float(np.real(ck(lamv, x))) if ck is not None
                        else kernel.eval_kernel(problem, lamv, x).w)
                total.append(wq * d * float(np.real(phi_f(lamv))) * wval)
        return math.fsum(total)

    total = sum(m * float(np.real(phi_f(lamv))) for lamv, m in sm.atoms)
    t_hi = tau_max0
    total += window(0.0, t_hi)
    scale = max(abs(total), 1e-12)
    for _ in range(max_doublings):
        tail = window(t_hi, 2.0 * t_hi)
        total += tail
        t_hi *= 2.0
        scale = max(scale, abs(total))
        if abs(tail) < tol * scale:
            return total
    raise errors.SlowDecay("spectral integrand tail did not settle")
