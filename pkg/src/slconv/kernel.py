"""Kernel engine: the eigenfunction w_lambda(x) with w(a)=1, w^[1](a)=0,
its quasi-derivative w^[1] = p w', truncated kernels, and the moment
functions phi1, phi2.

Construction: the alternating series w = sum (-lam)^j eta_j with

    eta_j(x)  = int_a^x q(y) F_j(y) dy,      q = 1/p,
    F_j(y)    = int_a^y eta_{j-1}(xi) r(xi) dxi,   eta_0 = 1,

computed on a shared panel grid by cumulative Gauss-Legendre rules, then
ODE continuation of (w, w^[1]) once |lam| * eta_1 exceeds the switch
bound (alternating-series cancellation would otherwise eat precision).

Two features make this robust for entrance boundaries with steep
coefficient layers (r ~ exp(-1/x) type):

* inner integrals F_j are accumulated in log space with per-panel
  rescaling by exp(log r - ref), so r may under/overflow freely;
* below the resolvable layer the F_j are evaluated by a Watson-type
  asymptotic expansion driven by the symbolic logarithmic derivatives of
  r, accurate where |d2(log r)| / (d(log r))^2 is tiny.
"""

import bisect
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.integrate import solve_ivp

from . import errors
from .slmodel import SLProblem

__all__ = [
    "KernelCfg", "KernelValue", "EtaTable", "MomentFns",
    "eval_kernel", "eval_kernel_many", "eval_kernel_many_full",
    "eval_kernel_truncated",
    "eta_sequence", "moment_functions", "get_engine", "clear_engine_cache",
]


# ---------------------------------------------------------------------------
# Gauss-Legendre panel machinery (12 nodes per panel, Legendre partials)

_M = 12
_U, _W = npleg.leggauss(_M)
_U = (_U + 1.0) / 2.0          # nodes on [0,1]
_W = _W / 2.0
# coefficients of the degree-11 interpolant in the shifted Legendre basis
_LVINV = np.linalg.inv(npleg.legvander(2.0 * _U - 1.0, _M - 1))
# partial-integral matrix: node_partials = vals @ _NODE_PART.T
_NODE_PART = 0.5 * npleg.legval(
    2.0 * _U - 1.0, npleg.legint(_LVINV, lbnd=-1.0), tensor=True).T
# _NODE_PART[k, j] = int_0^{u_k} L_j(u) du for the Lagrange basis L_j


def _leg_partial(coeffs, t):
    """Partial integrals int_0^t of interpolants with Legendre coefficient
    rows `coeffs` (m, 12), evaluated at matching points t (m,)."""
    ci = npleg.legint(coeffs.T, lbnd=-1.0)            # (13, m)
    return 0.5 * npleg.legval(2.0 * np.asarray(t) - 1.0, ci, tensor=False)


class CumField:
    """Cumulative integral of a panelized integrand sampled at GL nodes."""

    __slots__ = ("bp", "widths", "node_x", "vals", "cum_bounds", "cum_nodes")

    def __init__(self, bp, node_x, vals, start=0.0):
        self.bp = bp
        self.widths = np.diff(bp)
        self.node_x = node_x
        self.vals = vals
        fulls = self.widths * (vals @ _W)
        self.cum_bounds = start + np.concatenate([[0.0], np.cumsum(fulls)])
        self.cum_nodes = (self.cum_bounds[:-1, None]
                          + self.widths[:, None] * (vals @ _NODE_PART.T))

    def at(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x)
        idx = np.clip(np.searchsorted(self.bp, xf, side="right") - 1,
                      0, len(self.widths) - 1)
        t = np.clip((xf - self.bp[idx]) / self.widths[idx], 0.0, 1.0)
        coeffs = self.vals[idx] @ _LVINV.T
        out = self.cum_bounds[idx] + self.widths[idx] * _leg_partial(coeffs, t)
        return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelCfg:
    series_switch_bound: float = 10.0   # switch series -> ODE at |lam|*eta1
    j_cap: int = 80                     # hard cap on series terms
    term_tol: float = 1e-18             # series truncation threshold
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-13
    x_min_rel: float = 1e-13            # grid start offset relative to span
    hmax_frac: float = 0.02             # max panel width / span
    dphi_cap: float = 1.2               # max |d log coeff| variation / panel
    step_frac: float = 0.2              # max panel width / distance to a
    max_main_panels: int = 9000
    deep_panels: int = 240              # asymptotic-region panels
    watson_chi: float = 3e-4            # asymptotic validity threshold


@dataclass(frozen=True)
class KernelValue:
    w: float
    w1: float
    err_est: float


@dataclass(frozen=True)
class EtaTable:
    x_grid: np.ndarray
    values: np.ndarray      # shape (j_max+1, len(x_grid)); row j = eta_j


@dataclass(frozen=True)
class MomentFns:
    kappa: float
    phi1: object            # callable x -> kappa * eta1(x)
    phi2: object            # callable x -> 2*(kappa*eta2(x) + eta1(x))


class _Level:
    __slots__ = ("cf", "logF_bounds")

    def __init__(self, cf, logF_bounds):
        self.cf = cf
        self.logF_bounds = logF_bounds


class KernelEngine:
    """Shared eta/F tabulation for one problem on (a, x_max]."""

    def __init__(self, problem, x_max, cfg=KernelCfg()):
        self.problem = problem
        self.cfg = cfg
        self.x_max = float(x_max)
        a = problem.a
        if not self.x_max > a:
            raise errors.ParamOutOfRange("x_max must exceed the left endpoint")
        self.phi_r = problem.r.log()
        self.phi_p = problem.p.log()
        self.dphi_r = problem.r.dlog()
        self.dphi_p = problem.p.dlog()
        self.d2phi_r = self.dphi_r.diff()
        self.d3phi_r = self.d2phi_r.diff()
        self._build_grid()
        n = len(self.widths)
        self._phir_nodes = self._safe(self.phi_r, self.node_x)
        self._phip_nodes = self._safe(self.phi_p, self.node_x)
        nd = self.n_deep
        self._refs = np.max(self._phir_nodes[nd:], axis=1)  # main panels only
        self.levels = [None]        # levels[j] for j >= 1
        self._ensure_levels(1)

    # -- helpers ----------------------------------------------------------
    @staticmethod
    def _safe(fn, x):
        with np.errstate(all="ignore"):
            return np.asarray(fn(x, check=False), float) * np.ones_like(x)

    def _watson_ok(self, x):
        with np.errstate(all="ignore"):
            s1 = float(self.dphi_r(x, check=False))
            s2 = float(self.d2phi_r(x, check=False))
            s3 = float(self.d3phi_r(x, check=False))
        if not (np.isfinite(s1) and s1 > 0.0):
            return False
        return (abs(s2) <= self.cfg.watson_chi * s1 * s1
                and abs(s3) <= self.cfg.watson_chi * s1 ** 3)

    def _watson_logF(self, x, eta, etap):
        """log F_j(x) = log int_a^x eta_{j-1} r by the asymptotic expansion
        around the right limit (valid where _watson_ok holds)."""
        x = np.asarray(x, float)
        s1 = self._safe(self.dphi_r, x)
        s2 = self._safe(self.d2phi_r, x)
        s3 = self._safe(self.d3phi_r, x)
        t0 = 1.0 / s1 + s2 / s1 ** 3 - s3 / s1 ** 4 + 3.0 * s2 ** 2 / s1 ** 5
        val = np.maximum(eta * t0 - etap / s1 ** 2, 1e-300)
        return self._safe(self.phi_r, x) + np.log(val)

    # -- grid construction -------------------------------------------------
    def _cons(self, x):
        a = self.problem.a
        with np.errstate(all="ignore"):
            d1 = abs(float(self.dphi_r(x, check=False)))
            d2 = abs(float(self.dphi_p(x, check=False)))
        cap = self.cfg.dphi_cap
        dx = min(self.cfg.hmax_frac * (self.x_max - a),
                 self.cfg.step_frac * (x - a))
        if np.isfinite(d1) and d1 > 0:
            dx = min(dx, cap / d1)
        if np.isfinite(d2) and d2 > 0:
            dx = min(dx, cap / d2)
        return dx

    def _build_grid(self):
        a = self.problem.a
        cfg = self.cfg
        span = self.x_max - a
        x_min = a + cfg.x_min_rel * span
        # backward greedy panel construction from x_max toward a; stop when
        # the Watson asymptotics take over (steep layer) or x_min is reached
        bp_rev = [self.x_max]
        x = self.x_max
        x_w = None
        while x > x_min:
            dx = self._cons(x)
            dx = min(dx, self._cons(max(x - dx, x_min)))
            if not np.isfinite(dx) or dx <= 0:
                raise errors.SingularCoefficient(
                    "cannot construct kernel grid near x=%g" % x)
            nxt = max(x - dx, x_min)
            if nxt > x_min and self._watson_ok(nxt) and dx < \
                    cfg.step_frac * (nxt - a):
                # commit to the asymptotic layer only if it covers the
                # whole remaining range down to x_min (hyperbolic-type
                # coefficients satisfy the ratio test at large x without
                # having a steep layer near a)
                probe = a + np.geomspace(x_min - a, nxt - a, 64)[:-1]
                if all(self._watson_ok(px) for px in probe):
                    x_w = nxt
                    bp_rev.append(nxt)
                    break
            bp_rev.append(nxt)
            x = nxt
            if len(bp_rev) > cfg.max_main_panels:
                raise errors.SingularCoefficient(
                    "kernel grid exceeded %d panels; coefficient layer too "
                    "steep and outside the asymptotic regime"
                    % cfg.max_main_panels)
        bp_main = np.array(bp_rev[::-1])
        if x_w is not None:
            bp_deep = a + np.geomspace(x_min - a, x_w - a, cfg.deep_panels + 1)
            self.bp = np.concatenate([bp_deep[:-1], bp_main])
            self.n_deep = cfg.deep_panels
            self.x_w = x_w
        else:
            self.bp = bp_main
            self.n_deep = 0
            self.x_w = bp_main[0]
        self.widths = np.diff(self.bp)
        self.node_x = self.bp[:-1, None] + self.widths[:, None] * _U[None, :]
        self.n_main = len(self.widths) - self.n_deep

    # -- level construction -------------------------------------------------
    def _ensure_levels(self, j_need):
        while len(self.levels) <= j_need:
            self._build_level(len(self.levels))

    def _build_level(self, j):
        nd = self.n_deep
        if j == 1:
            eta_prev = np.ones_like(self.node_x)
            gprev_deep = np.zeros((nd, _M))
            eta_prev_xw = 1.0
            gprev_xw = 0.0
        else:
            prev = self.levels[j - 1]
            eta_prev = prev.cf.cum_nodes
            gprev_deep = prev.cf.vals[:nd]
            eta_prev_xw = prev.cf.cum_bounds[nd]
            gprev_xw = prev.cf.vals[nd - 1, -1] if nd else 0.0
        with np.errstate(all="ignore"):
            if nd:
                logF_deep = self._watson_logF(
                    self.node_x[:nd], eta_prev[:nd], gprev_deep)
                g_deep = np.exp(logF_deep - self._phip_nodes[:nd])
                logF0 = float(self._watson_logF(
                    np.asarray(self.x_w), eta_prev_xw, gprev_xw))
            else:
                g_deep = np.zeros((0, _M))
                logF0 = -np.inf
            sv = eta_prev[nd:] * np.exp(
                self._phir_nodes[nd:] - self._refs[:, None])
            raw_full = self.widths[nd:] * (sv @ _W)
            raw_node = self.widths[nd:, None] * (sv @ _NODE_PART.T)
            logc = self._refs + np.log(np.maximum(raw_full, 1e-300))
            logF_bounds = np.logaddexp.accumulate(
                np.concatenate([[logF0], logc]))
            logF_nodes = np.logaddexp(
                logF_bounds[:-1, None],
                self._refs[:, None] + np.log(np.maximum(raw_node, 1e-300)))
            g_main = np.exp(logF_nodes - self._phip_nodes[nd:])
        vals = np.vstack([g_deep, g_main])
        if not np.all(np.isfinite(vals)):
            raise errors.SingularCoefficient(
                "non-finite eta integrand at level %d" % j)
        cf = CumField(self.bp, self.node_x, vals, start=0.0)
        self.levels.append(_Level(cf, logF_bounds))

    # -- evaluation ---------------------------------------------------------
    def eta_at(self, j, x):
        if j == 0:
            return np.ones_like(np.asarray(x, dtype=float))
        self._ensure_levels(j)
        return self.levels[j].cf.at(x)

    def F_log_at(self, j, x):
        """log F_j at points x (array), vectorized over the main region."""
        self._ensure_levels(max(j, 1))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, -np.inf)
        nd = self.n_deep
        deep = x <= self.x_w if nd else np.zeros(x.shape, bool)
        if np.any(deep):
            xd = x[deep]
            eta = self.eta_at(j - 1, xd)
            if j >= 2:
                with np.errstate(all="ignore"):
                    gp = np.exp(self.F_log_at(j - 1, xd)
                                - self._safe(self.phi_p, xd))
            else:
                gp = np.zeros_like(xd)
            out[deep] = self._watson_logF(xd, eta, gp)
        main = ~deep
        if np.any(main):
            xm = x[main]
            idx = np.clip(np.searchsorted(self.bp, xm, side="right") - 1,
                          nd, len(self.widths) - 1)
            t = np.clip((xm - self.bp[idx]) / self.widths[idx], 0.0, 1.0)
            if j == 1:
                eta_prev = np.ones((len(xm), _M))
            else:
                eta_prev = self.levels[j - 1].cf.cum_nodes[idx]
            ref = self._refs[idx - nd]
            with np.errstate(all="ignore"):
                sv = eta_prev * np.exp(self._phir_nodes[idx] - ref[:, None])
                coeffs = sv @ _LVINV.T
                raw = self.widths[idx] * _leg_partial(coeffs, t)
                lf = self.levels[j].logF_bounds[idx - nd]
                out[main] = np.logaddexp(
                    lf, ref + np.log(np.maximum(raw, 1e-300)))
        return out

    def switch_x(self, lam):
        """Largest grid point where |lam| * eta_1 <= series_switch_bound."""
        self._ensure_levels(1)
        if lam == 0:
            return self.x_max
        cb = self.levels[1].cf.cum_bounds
        thr = self.cfg.series_switch_bound / abs(lam)
        idx = int(np.searchsorted(cb, thr, side="right")) - 1
        idx = max(idx, 1)
        return self.bp[min(idx, len(self.bp) - 1)]

    def series_eval(self, lam, xs):
        """Alternating-series evaluation; valid where |lam|*eta1 is within
        the switch bound.  Returns (w, w1, err)."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        w = np.ones_like(xs)
        acc = np.abs(w).copy()
        # w1 = -lam * sum_j (-lam)^j F_{j+1}
        s1 = np.exp(self.F_log_at(1, xs))
        w1sum = s1.copy()
        term = np.ones_like(xs)
        tail = np.zeros_like(xs)
        j = 0
        while True:
            j += 1
            if j > self.cfg.j_cap:
                raise errors.QuadratureBudgetExceeded(
                    "kernel series did not converge within %d terms"
                    % self.cfg.j_cap)
            term = ((-lam) ** j) * self.eta_at(j, xs)
            f_term = ((-lam) ** j) * np.exp(self.F_log_at(j + 1, xs))
            w += term
            acc += np.abs(term)
            w1sum += f_term
            tail = np.abs(term)
            if np.all(tail <= self.cfg.term_tol * np.maximum(acc, 1.0)) \
                    and j >= 2:
                break
        w1 = -lam * w1sum
        err = tail + 1e-13 * acc + 5e-12
        return w, w1, err

    def eval_many(self, lam, xs):
        """Kernel w, w1, err at points xs in (a, x_max]."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if lam == 0.0:
            z = np.zeros_like(xs)
            return np.ones_like(xs), z, z + 1e-15
        xsw = self.switch_x(lam)
        w = np.empty_like(xs)
        w1 = np.empty_like(xs)
        err = np.empty_like(xs)
        m = xs <= xsw
        if np.any(m):
            w[m], w1[m], err[m] = self.series_eval(lam, xs[m])
        if np.any(~m):
            ws, w1s, es = self.series_eval(lam, np.asarray([xsw]))
            y0 = [float(ws[0]), float(w1s[0])]
            xb = xs[~m]
            order = np.argsort(xb)
            t_eval = xb[order]
            p, r = self.problem.p_val, self.problem.r_val

            def rhs(t, y):
                return [y[1] / float(p(t)), -lam * float(r(t)) * y[0]]

            sol = solve_ivp(rhs, (xsw, float(t_eval[-1])), y0,
                            t_eval=t_eval, rtol=self.cfg.ode_rtol,
                            atol=self.cfg.ode_atol, method="RK45")
            if not sol.success:
                raise errors.StepSizeUnderflow(
                    "ODE continuation failed: %s" % sol.message)
            wb = np.empty_like(xb)
            w1b = np.empty_like(xb)
            wb[order] = sol.y[0]
            w1b[order] = sol.y[1]
            w[~m] = wb
            w1[~m] = w1b
            err[~m] = float(es[0]) + 1e-10 * (1.0 + np.abs(xb - xsw))
        return w, w1, err


# ---------------------------------------------------------------------------
# engine cache and module-level operations

_ENGINE_CACHE = {}


def clear_engine_cache():
    _ENGINE_CACHE.clear()


def get_engine(problem, x_need, cfg=KernelCfg()):
    a, b = problem.a, problem.b
    if np.isinf(b):
        x_max = a + 2.0 ** math.ceil(math.log2(max(x_need - a, 1.0) * 1.0001))
    else:
        x_max = min(b - (b - x_need) * 0.5 if x_need < b else b,
                    x_need + (b - x_need) * 0.99) if x_need < b else b
        x_max = max(x_max, x_need)
    key = (problem.fingerprint(), float(x_max), cfg)
    eng = _ENGINE_CACHE.get(key)
    if eng is None:
        eng = KernelEngine(problem, x_max, cfg)
        _ENGINE_CACHE[key] = eng
    return eng


def eval_kernel(problem, lam, x, cfg=KernelCfg()):
    """w_lambda(x) with w(a) = 1, w^[1](a) = 0 (KernelValue)."""
    if lam < 0:
        raise errors.ParamOutOfRange("lambda must be >= 0")
    x = float(x)
    if x == problem.a:
        return KernelValue(1.0, 0.0, 0.0)
    if not (problem.a < x < problem.b):
        raise errors.ParamOutOfRange("x=%g outside (a, b)" % x)
    eng = get_engine(problem, x, cfg)
    w, w1, err = eng.eval_many(float(lam), np.asarray([x]))
    return KernelValue(float(w[0]), float(w1[0]), float(err[0]))


def eval_kernel_many(problem, lam, xs, cfg=KernelCfg()):
    """Vectorized kernel w values over an array of x (single lambda)."""
    xs = np.asarray(xs, dtype=float)
    eng = get_engine(problem, float(np.max(xs)), cfg)
    return eng.eval_many(float(lam), xs)[0]


def eval_kernel_many_full(problem, lam, xs, cfg=KernelCfg()):
    """Vectorized kernel evaluation returning (w, w1, err_est) arrays."""
    xs = np.asarray(xs, dtype=float)
    eng = get_engine(problem, float(np.max(xs)), cfg)
    return eng.eval_many(float(lam), xs)


def eval_kernel_truncated(problem, lam, x, a_m, cfg=KernelCfg()):
    """Kernel of the truncated problem on (a_m, b) with w(a_m) = 1,
    w^[1](a_m) = 0 (the a_m -> a limit recovers eval_kernel)."""
    if not (problem.a < a_m < x):
        raise errors.ParamOutOfRange("need a < a_m < x")
    c_new = problem.c if problem.c > a_m else a_m
    sub = SLProblem(a=float(a_m), b=problem.b, p=problem.p, r=problem.r,
                    c=c_new, name=problem.name + "_trunc")
    return eval_kernel(sub, lam, x, cfg)


def eta_sequence(problem, x_grid, j_max, cfg=KernelCfg()):
    x_grid = np.asarray(x_grid, dtype=float)
    eng = get_engine(problem, float(np.max(x_grid)), cfg)
    rows = [np.ones_like(x_grid)]
    for j in range(1, j_max + 1):
        rows.append(eng.eta_at(j, x_grid))
    return EtaTable(x_grid=x_grid, values=np.vstack(rows))


def moment_functions(problem, cfg=KernelCfg(), rel_tol=1e-4, max_probe=60):
    """kappa = lim A'(xi)/A(xi) at the right end plus the moment functions
    phi1 = kappa*eta1, phi2 = 2*(kappa*eta2 + eta1)."""
    a, b, c = problem.a, problem.b, problem.c
    phi_p, phi_r = problem.p.log(), problem.r.log()
    dphi_p, dphi_r = problem.p.dlog(), problem.r.dlog()

    def quotient(x):
        with np.errstate(all="ignore"):
            amp = np.exp(0.5 * (float(phi_p(x, check=False))
                                - float(phi_r(x, check=False))))
            return amp * 0.5 * (float(dphi_p(x, check=False))
                                + float(dphi_r(x, check=False)))

    x0 = c if c > a else a + 1.0
    vals = []
    kappa = None
    for k in range(max_probe):
        if np.isinf(b):
            xk = a + (x0 - a) * 2.0 ** k
        else:
            xk = b - (b - x0) * 0.5 ** k
        v = quotient(xk)
        if not np.isfinite(v):
            break
        vals.append(v)
        if len(vals) >= 3:
            f1, f2, f3 = vals[-3], vals[-2], vals[-1]
            sc = max(abs(f3), 1.0)
            if abs(f1 - f2) <= rel_tol * sc and abs(f2 - f3) <= rel_tol * sc:
                kappa = f3
                d1, d2 = f2 - f1, f3 - f2
                if abs(d1) > 0 and abs(d2) < abs(d1):
                    # geometric-tail extrapolation of the probe sequence
                    rho = d2 / d1
                    kappa = f3 + d2 * rho / (1.0 - rho)
                break
    if kappa is None:
        raise errors.KappaNotConverged(
            "A'/A quotient did not stabilize toward the right endpoint")
    if abs(kappa) < 1e-10:
        kappa = 0.0

    def phi1(x):
        x = np.asarray(x, dtype=float)
        if kappa == 0.0:
            return np.zeros_like(x)
        eng = get_engine(problem, float(np.max(x)), cfg)
        return kappa * eng.eta_at(1, x)

    def phi2(x):
        x = np.asarray(x, dtype=float)
        eng = get_engine(problem, float(np.max(x)), cfg)
        e1 = eng.eta_at(1, x)
        e2 = eng.eta_at(2, x) if kappa != 0.0 else 0.0
        return 2.0 * (kappa * e2 + e1)

    return MomentFns(kappa=float(kappa), phi1=phi1, phi2=phi2)
