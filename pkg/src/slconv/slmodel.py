"""Sturm-Liouville problem definitions, Feller boundary classification,
standard-form change of variables, and the monotonicity assumption check
used by the maximum-principle machinery.

The operator is l = -(1/r) d/dx (p d/dx) on (a, b) with p, r > 0.  The
scale function is s(x) = int_c^x dxi/p(xi) for an interior reference
point c.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import errors
from .expr import CoeffExpr
from .quadrature import QuadConfig, gl_nodes, improper_quad, panel_integrate


@dataclass(frozen=True)
class GridConfig:
    n: int = 600
    x_max: Optional[float] = None   # right edge of tabulation (default c + 20)
    eps_rel: float = 1e-8           # relative offset from singular endpoints


def graded_grid(lo, hi, n, eps_rel=1e-8):
    """Grid on (lo, hi] geometrically refined toward lo."""
    span = hi - lo
    t = np.geomspace(eps_rel, 1.0, n)
    return lo + span * t


@dataclass(frozen=True)
class SLProblem:
    """Coefficients p, r on (a, b) with reference point c in (a, b]."""
    a: float
    b: float                 # may be np.inf
    p: CoeffExpr
    r: CoeffExpr
    c: float
    name: str = "custom"

    def __post_init__(self):
        if not (self.a < self.c < self.b) and self.c != self.a:
            raise errors.ParamOutOfRange(
                "reference point c=%r outside [a, b)" % (self.c,))
        hi = self.c + 3.0 if np.isinf(self.b) else self.b
        probe = graded_grid(self.a, hi, 64, 1e-6)
        with np.errstate(all="ignore"):
            pv = np.asarray(self.p(probe, check=False), float) * np.ones_like(probe)
            rv = np.asarray(self.r(probe, check=False), float) * np.ones_like(probe)
        # allow underflow-to-0 / overflow-to-inf near singular endpoints,
        # but reject NaN, negative values, or identically nonpositive data
        for tag, v in (("p", pv), ("r", rv)):
            if np.any(np.isnan(v)) or np.any(v[np.isfinite(v)] < 0) \
                    or not np.any(v > 0):
                raise errors.ParamOutOfRange(
                    "%s must be positive on (a,b)" % tag)

    # vectorized coefficient access
    def p_val(self, x):
        return self.p(x, check=False)

    def r_val(self, x):
        return self.r(x, check=False)

    def q_val(self, x):
        return 1.0 / self.p(x, check=False)

    def pr_nondecreasing(self, grid=None):
        """Sampled check of the Lemma-2.3 hypothesis that p*r is
        nondecreasing (grants the kernel bound |w| <= 1)."""
        if grid is None:
            hi = self.c + 20.0 if np.isinf(self.b) else self.b
            grid = graded_grid(self.a, hi, 400, 1e-6)
        vals = self.p_val(grid) * self.r_val(grid)
        return bool(np.all(np.diff(vals) >= -1e-12 * np.abs(vals[:-1])))

    def fingerprint(self):
        return (self.a, self.b, self.c, self.p.printed(), self.r.printed())


def custom_problem_from_dict(d):
    """Build an SLProblem from the 'custom' problem-JSON dictionary."""
    try:
        p = CoeffExpr(d["p"])
        r = CoeffExpr(d["r"])
        a = float(d["a"])
        b = np.inf if d["b"] in ("inf", "Infinity") else float(d["b"])
        c = float(d["c"])
    except KeyError as ex:
        raise errors.ParamOutOfRange("custom problem missing key %s" % ex)
    return SLProblem(a=a, b=b, p=p, r=r, c=c, name="custom")


# ---------------------------------------------------------------------------
# Feller boundary classification

@dataclass(frozen=True)
class BoundaryClass:
    endpoint: str            # 'left' | 'right'
    kind: str                # 'regular' | 'exit' | 'entrance' | 'natural'
    I_value: float
    J_value: float


def _inner_mass(f, lo, hi, n_panels=24, n_gl=8):
    """Proper integral with panels graded toward lo (possible integrable
    singularity at the moving limit)."""
    if hi <= lo:
        return 0.0
    t = np.concatenate([[0.0], np.geomspace(1e-10, 1.0, n_panels)])
    bp = lo + (hi - lo) * t
    return panel_integrate(f, bp, n_gl)


def classify_boundary(problem, endpoint, quad_cfg=QuadConfig()):
    """Feller classification of one endpoint via the iterated integrals

        I = int int (scale-to-endpoint) r dy,   J = the transposed one,

    each reduced by Fubini to a single improper integral with an inner
    proper companion.  Divergence is decided by the geometric cut-off
    detector in quadrature.improper_quad.
    """
    c = problem.c if problem.c != problem.a else \
        (problem.a + 1.0 if np.isinf(problem.b)
         else 0.5 * (problem.a + problem.b))
    q = problem.q_val
    r = problem.r_val
    if endpoint == "left":
        e = problem.a

        def gI(xs):
            return q(xs) * np.array([_inner_mass(r, x, c) for x in np.atleast_1d(xs)])

        def gJ(ys):
            return r(ys) * np.array([_inner_mass(q, y, c) for y in np.atleast_1d(ys)])
    elif endpoint == "right":
        e = problem.b

        def gI(xs):
            return q(xs) * np.array([_inner_mass(r, c, x) for x in np.atleast_1d(xs)])

        def gJ(ys):
            return r(ys) * np.array([_inner_mass(q, c, y) for y in np.atleast_1d(ys)])
    else:
        raise errors.ParamOutOfRange("endpoint must be 'left' or 'right'")

    res_I = improper_quad(gI, c, e, quad_cfg)
    res_J = improper_quad(gJ, c, e, quad_cfg)
    if res_I.finite and res_J.finite:
        kind = "regular"
    elif res_I.finite:
        kind = "exit"
    elif res_J.finite:
        kind = "entrance"
    else:
        kind = "natural"
    return BoundaryClass(endpoint=endpoint, kind=kind,
                         I_value=abs(res_I.value), J_value=abs(res_J.value))


def validate_left_endpoint(problem, quad_cfg=QuadConfig()):
    """Reject problems whose left endpoint is exit or natural (the kernel
    construction requires a regular or entrance left endpoint)."""
    bc = classify_boundary(problem, "left", quad_cfg)
    if bc.kind not in ("regular", "entrance"):
        raise errors.ParamOutOfRange(
            "left endpoint is %s; the kernel requires regular or entrance"
            % bc.kind)
    return bc


# ---------------------------------------------------------------------------
# Standard form

@dataclass(frozen=True)
class StandardForm:
    """Change of variables xi = gamma(x) = int_c^x sqrt(r/p); the operator
    becomes -d2/dxi2 - (A'/A) d/dxi with A(xi) = sqrt(p r)(gamma^{-1}(xi))."""
    gamma: object            # PchipInterpolator x -> xi
    inverse: object          # PchipInterpolator xi -> x
    gamma_a: float           # gamma at the left endpoint (may be -inf)
    x_grid: np.ndarray
    xi_grid: np.ndarray
    problem: SLProblem = field(repr=False)

    def A(self, xi):
        x = self.inverse(xi)
        return np.sqrt(self.problem.p_val(x) * self.problem.r_val(x))

    def aprime_over_a_at_x(self, x):
        """A'(xi)/A(xi) expressed through x = gamma^{-1}(xi), computed
        symbolically: (d/dx log sqrt(pr)) * dx/dxi."""
        pr = self.problem
        pv = pr.p_val(x)
        rv = pr.r_val(x)
        dp = pr.p.diff()(x, check=False)
        dr = pr.r.diff()(x, check=False)
        return np.sqrt(pv / rv) * (dp * rv + pv * dr) / (2.0 * pv * rv)

    def aprime_over_a(self, xi):
        return self.aprime_over_a_at_x(self.inverse(xi))


def to_standard_form(problem, grid_cfg=GridConfig()):
    a, b, c = problem.a, problem.b, problem.c
    x_max = grid_cfg.x_max
    if x_max is None:
        x_max = (c + 20.0) if np.isinf(b) else b - (b - a) * grid_cfg.eps_rel
    n = grid_cfg.n

    log_r, log_p = problem.r.log(), problem.p.log()

    def sq(x):
        # sqrt(r/p) via structural logs: immune to separate over/underflow
        # of r and p near singular endpoints
        with np.errstate(all="ignore"):
            return np.exp(0.5 * (log_r(x, check=False) - log_p(x, check=False)))

    left = graded_grid(a, c, n // 2, grid_cfg.eps_rel)
    right = np.linspace(c, x_max, n - n // 2 + 1)[1:]
    grid = np.unique(np.concatenate([left, [c], right]))
    # cumulative gamma over the grid, 8-point GL per cell
    u, w = gl_nodes(8)
    lo = grid[:-1]
    widths = np.diff(grid)
    xs = lo[:, None] + widths[:, None] * u[None, :]
    vals = sq(xs.ravel()).reshape(xs.shape)
    cell = widths * (vals @ w)
    gamma_vals = np.concatenate([[0.0], np.cumsum(cell)])
    # shift so gamma(c) = 0
    ic = int(np.searchsorted(grid, c))
    gamma_vals = gamma_vals - gamma_vals[ic]
    if np.any(np.diff(gamma_vals) <= 0):
        raise errors.NonMonotone("gamma not strictly increasing on the grid")
    res = improper_quad(sq, c, a)
    gamma_a = res.value if res.finite else -np.inf
    gamma = PchipInterpolator(grid, gamma_vals, extrapolate=True)
    inverse = PchipInterpolator(gamma_vals, grid, extrapolate=True)
    return StandardForm(gamma=gamma, inverse=inverse, gamma_a=gamma_a,
                        x_grid=grid, xi_grid=gamma_vals, problem=problem)


# ---------------------------------------------------------------------------
# Assumption MP check

@dataclass(frozen=True)
class MPReport:
    eta: CoeffExpr
    grid: np.ndarray          # standard-form coordinates xi
    phi_eta: np.ndarray
    psi_eta: np.ndarray
    admissible: bool
    violations: tuple


MP_TOL = 1e-12


def check_mp_assumption(problem, eta, grid=None, standard_form=None):
    """Check Assumption MP for the candidate eta (a CoeffExpr in the
    standard-form coordinate): eta >= 0, phi = A'/A - eta >= 0, and both
    phi and psi = eta'/2 - eta^2/4 + (A'/2A) eta nonincreasing on the grid."""
    sf = standard_form if standard_form is not None else to_standard_form(problem)
    if grid is None:
        lo = max(sf.xi_grid[0], sf.gamma_a if np.isfinite(sf.gamma_a)
                 else sf.xi_grid[0])
        grid = np.linspace(lo + 1e-6 * (sf.xi_grid[-1] - lo),
                           sf.xi_grid[-1], 200)
    grid = np.asarray(grid, dtype=float)
    eta = CoeffExpr(eta)
    eta_v = np.asarray(eta(grid, check=False), dtype=float) * np.ones_like(grid)
    deta_v = np.asarray(eta.diff()(grid, check=False), dtype=float) * np.ones_like(grid)
    aoa = sf.aprime_over_a(grid)
    phi = aoa - eta_v
    psi = 0.5 * deta_v - 0.25 * eta_v ** 2 + 0.5 * aoa * eta_v
    scale = np.maximum(1.0, np.abs(phi).max() if phi.size else 1.0)
    bad = []
    if np.any(eta_v < -MP_TOL):
        bad.extend(grid[eta_v < -MP_TOL][:5])
    if np.any(phi < -MP_TOL * scale):
        bad.extend(grid[phi < -MP_TOL * scale][:5])
    dphi = np.diff(phi)
    dpsi = np.diff(psi)
    tol = MP_TOL * max(1.0, np.abs(phi).max(), np.abs(psi).max())
    if np.any(dphi > tol):
        bad.extend(grid[1:][dphi > tol][:5])
    if np.any(dpsi > tol):
        bad.extend(grid[1:][dpsi > tol][:5])
    return MPReport(eta=eta, grid=grid, phi_eta=phi, psi_eta=psi,
                    admissible=(len(bad) == 0),
                    violations=tuple(float(v) for v in bad))


# ---------------------------------------------------------------------------
# Problem JSON loading (family references resolved in families.py)

def load_problem_dict(path_or_dict):
    if isinstance(path_or_dict, dict):
        return path_or_dict
    with open(path_or_dict) as fh:
        return json.load(fh)
