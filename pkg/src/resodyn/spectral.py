"""Form factors and reservoir correlation integrals.

The reservoir enters the dynamics only through a handful of integrals of the
coupling function g(k), k in R^d with omega(k) = |k|:

* the thermal spectral function

      xi(eta) = |S^{d-1}| g1^2 eta^{d-1} coth(beta eta / 2) |g(eta)|^2,

  the delta-concentration limit of a Lorentzian-smeared integral; xi(0) is
  defined as the eta -> 0 limit (zero for infrared exponent p > (2-d)/2,
  finite exactly at the threshold, infinite below it),

* <g, omega^{-1} g>, the static reservoir susceptibility,

* principal-value and Sokhotski-Plemelj boundary values of resolvent
  integrals over the thermally extended line density

      sigma(u) = |S^{d-1}| g1^2 |u|^{d-1} |g(|u|)|^2 / |1 - e^{-beta u}|,

  which obeys sigma(u) + sigma(-u) = |S^{d-1}| g1^2 u^{d-1} |g|^2 coth(beta|u|/2).

All radial integrals are truncated where the exponential envelope drops below
1e-18 of its peak and evaluated by adaptive Gauss-Kronrod quadrature with a
break point at the integrable r = 0 endpoint behaviour.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import quad

from ._special import coth
from .errors import DivergentIntegralError, QuadratureError, ValidationError

ENVELOPE_FLOOR = 1e-18
DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-13

_SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def sphere_area(d: int) -> float:
    """Surface area of S^{d-1}; d = 1 counts both half-lines."""
    if d in _SPHERE_AREA:
        return _SPHERE_AREA[d]
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class FormFactor:
    """Reservoir coupling function g(r, sigma) = radial(r) * g1 (isotropic).

    Two families:

    * ``power_exp``:  radial(r) = amplitude * r**p * exp(-r**m), m in {1, 2};
      p controls the infrared behaviour (|g(k)| ~ C |k|^p near 0).
    * ``tabulated``:  radial profile interpolated linearly on a finite grid.
    """

    family: str = "power_exp"
    p: float = 0.5
    m: int = 1
    amplitude: float = 1.0
    angular: float = 1.0
    dimension: int = 3
    phase: float = 0.0
    radial_grid: np.ndarray | None = None
    radial_values: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in ("power_exp", "tabulated"):
            raise ValidationError(f"unknown form factor family {self.family!r}")
        if self.dimension < 1:
            raise ValidationError("reservoir dimension must be >= 1")
        if self.family == "power_exp":
            if self.m not in (1, 2):
                raise ValidationError("UV exponent m must be 1 or 2")
            if not self.amplitude > 0:
                raise ValidationError("amplitude must be positive")
        else:
            r = np.asarray(self.radial_grid, dtype=float)
            v = np.asarray(self.radial_values, dtype=float)
            if r is None or v is None or r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise ValidationError("tabulated form factor needs matching 1-d grids")
            if not (np.all(np.diff(r) > 0) and r[0] >= 0):
                raise ValidationError("tabulated radial grid must be increasing and >= 0")
            if not np.all(np.isfinite(v)):
                raise ValidationError("tabulated values must be finite")
            r.setflags(write=False)
            v.setflags(write=False)
            object.__setattr__(self, "radial_grid", r)
            object.__setattr__(self, "radial_values", v)

    @classmethod
    def power_exp(cls, p: float, m: int = 1, amplitude: float = 1.0,
                  angular: float = 1.0, dimension: int = 3, phase: float = 0.0) -> "FormFactor":
        return cls(family="power_exp", p=p, m=m, amplitude=amplitude,
                   angular=angular, dimension=dimension, phase=phase)

    @classmethod
    def tabulated(cls, radial_grid, radial_values, angular: float = 1.0,
                  dimension: int = 3, phase: float = 0.0) -> "FormFactor":
        return cls(family="tabulated", radial_grid=np.asarray(radial_grid, float),
                   radial_values=np.asarray(radial_values, float),
                   angular=angular, dimension=dimension, phase=phase)

    # -- evaluation -------------------------------------------------------

    def radial(self, r):
        """|g(r)| radial profile (angular part excluded)."""
        r = np.asarray(r, dtype=float)
        if self.family == "power_exp":
            with np.errstate(divide="ignore"):
                out = self.amplitude * np.where(
                    r > 0, np.power(np.where(r > 0, r, 1.0), self.p), np.inf if self.p < 0 else (0.0 if self.p > 0 else 1.0)
                ) * np.exp(-np.power(r, self.m))
        else:
            out = np.interp(r, self.radial_grid, self.radial_values, left=self.radial_values[0], right=0.0)
        return out if out.ndim else float(out)

    def radial_sq(self, r):
        r = np.asarray(r, dtype=float)
        if self.family == "power_exp":
            rp = np.where(r > 0, r, 1.0)
            out = self.amplitude**2 * np.power(rp, 2 * self.p) * np.exp(-2 * np.power(r, self.m))
            if np.any(r <= 0):
                edge = np.inf if self.p < 0 else (0.0 if self.p > 0 else self.amplitude**2)
                out = np.where(r > 0, out, edge)
        else:
            g = self.radial(r)
            out = np.asarray(g) ** 2
        return out if out.ndim else float(out)

    # -- structural properties --------------------------------------------

    @property
    def angular_weight(self) -> float:
        """|S^{d-1}| * g1^2, the full angular integral of |g1|^2."""
        return sphere_area(self.dimension) * self.angular**2

    @property
    def infrared_exponent(self) -> float:
        """Exponent p with |g(r)| ~ C r^p as r -> 0 (fitted for tabulated)."""
        if self.family == "power_exp":
            return self.p
        r, v = self.radial_grid, self.radial_values
        pos = np.nonzero((r > 0) & (v != 0))[0]
        if len(pos) < 2:
            return 0.0
        i, j = pos[0], pos[1]
        return float(np.log(abs(v[j] / v[i])) / np.log(r[j] / r[i]))

    @property
    def infrared_amplitude_sq(self) -> float:
        """C^2 with |g(r)|^2 ~ C^2 r^{2p} near the origin."""
        if self.family == "power_exp":
            return self.amplitude**2
        r = self.radial_grid
        i = np.nonzero(r > 0)[0][0]
        return float(self.radial_values[i] ** 2 / r[i] ** (2 * self.infrared_exponent))

    @property
    def support_radius(self) -> float:
        """Radius beyond which the profile is below 1e-18 of its scale."""
        if self.family == "tabulated":
            return float(self.radial_grid[-1])
        return float(math.log(1.0 / ENVELOPE_FLOOR) ** (1.0 / self.m)) + 1.0

    @property
    def zero_exponent(self) -> float:
        """q0 = d - 2 + 2p, the small-r power of r^{d-1}|g|^2 coth(beta r/2)."""
        return self.dimension - 2.0 + 2.0 * self.infrared_exponent

    def scaled(self, s: float) -> "FormFactor":
        """Form factor with radial profile multiplied by s."""
        if self.family == "power_exp":
            return FormFactor(family="power_exp", p=self.p, m=self.m,
                              amplitude=self.amplitude * s, angular=self.angular,
                              dimension=self.dimension, phase=self.phase)
        return FormFactor.tabulated(self.radial_grid, self.radial_values * s,
                                    angular=self.angular, dimension=self.dimension,
                                    phase=self.phase)

    # -- config round trip --------------------------------------------------

    def to_config(self) -> dict:
        if self.family == "power_exp":
            return {"family": "power_exp", "p": self.p, "m": self.m,
                    "amplitude": self.amplitude, "angular": self.angular,
                    "dimension": self.dimension, "phase": self.phase}
        return {"family": "tabulated", "r": list(map(float, self.radial_grid)),
                "g": list(map(float, self.radial_values)), "angular": self.angular,
                "dimension": self.dimension, "phase": self.phase}

    @classmethod
    def from_config(cls, cfg: dict) -> "FormFactor":
        family = cfg.get("family", "power_exp")
        common = {"angular": float(cfg.get("angular", 1.0)),
                  "dimension": int(cfg.get("dimension", 3)),
                  "phase": float(cfg.get("phase", 0.0))}
        if family == "power_exp":
            return cls.power_exp(p=float(cfg.get("p", 0.5)), m=int(cfg.get("m", 1)),
                                 amplitude=float(cfg.get("amplitude", 1.0)), **common)
        if family == "tabulated":
            return cls.tabulated(cfg["r"], cfg["g"], **common)
        raise ValidationError(f"unknown form factor family {family!r}", field="form_factor.family")


# ---------------------------------------------------------------------------
# quadrature engine
# ---------------------------------------------------------------------------

def _quad(f, a, b, *, points=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, limit=400) -> float:
    """Adaptive Gauss-Kronrod quadrature; raises on non-convergence."""
    if a >= b:
        return 0.0
    pts = None
    if points:
        pts = sorted(x for x in points if a < x < b)
        pts = pts or None
    out = quad(f, a, b, points=pts, epsabs=atol, epsrel=rtol, limit=limit, full_output=1)
    val, abserr = out[0], out[1]
    if len(out) > 3:
        # message present: accept benign roundoff-limited results, reject the rest
        if abserr > max(100 * atol, 1e-8 * abs(val)):
            raise QuadratureError(f"quadrature failed on [{a:g}, {b:g}]: {out[3]}", estimate=abserr)
    return float(val)


def _quad_osc(f, a, b, omega, kind, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> float:
    """Integral of f(r)*cos(omega r) or f(r)*sin(omega r) on finite [a, b]."""
    if a >= b:
        return 0.0
    if abs(omega) * (b - a) < 8.0:
        trig = np.cos if kind == "cos" else np.sin
        return _quad(lambda r: f(r) * trig(omega * r), a, b, rtol=rtol, atol=atol)
    out = quad(f, a, b, weight=kind, wvar=omega, epsabs=atol, epsrel=rtol,
               limit=400, maxp1=200, full_output=1)
    val, abserr = out[0], out[1]
    if len(out) > 3 and abserr > max(100 * atol, 1e-8 * abs(val)):
        raise QuadratureError(f"oscillatory quadrature failed: {out[3]}", estimate=abserr)
    return float(val)


# ---------------------------------------------------------------------------
# thermal extension and line density
# ---------------------------------------------------------------------------

def thermal_form_factor(g: FormFactor, beta: float, u: float, phi: float | None = None) -> complex:
    """Thermally extended coupling function g_beta(u) on the frequency line.

    g_beta(u) = sqrt(u / (1 - e^{-beta u})) |u|^{1/2} * (g(u) for u >= 0,
    -e^{i phi} conj(g(-u)) for u < 0), evaluated at the radial profile times
    the isotropic angular constant.  At u = 0 the continuous limit is
    returned: 0 for p > -1/2 and the finite thermal value C/sqrt(beta) at
    p = -1/2.
    """
    if not beta > 0:
        raise ValidationError("beta must be positive")
    phi = g.phase if phi is None else phi
    if u == 0.0:
        p = g.infrared_exponent
        if p > -0.5:
            return 0.0 + 0.0j
        if abs(p + 0.5) < 1e-12:
            return complex(math.sqrt(g.infrared_amplitude_sq / beta) * g.angular)
        return complex(math.inf)
    planck_root = math.sqrt(u / -math.expm1(-beta * u)) * math.sqrt(abs(u))
    if u >= 0:
        base = complex(g.radial(u))
    else:
        base = -np.exp(1j * phi) * np.conj(g.radial(-u))
    return planck_root * base * g.angular


def line_density(g: FormFactor, beta: float, u) -> float:
    """Angular-integrated |g_beta(u)|^2:

    sigma(u) = |S^{d-1}| g1^2 |u|^{d-1} |g(|u|)|^2 / |1 - e^{-beta u}|.

    sigma(u) + sigma(-u) equals the coth-weighted density entering xi.
    """
    uu = np.asarray(u, dtype=float)
    au = np.abs(uu)
    out = np.empty_like(au)
    nz = au > 0
    if np.any(nz):
        denom = np.abs(np.expm1(-beta * uu[nz] if uu.ndim else -beta * uu))
        out_nz = g.angular_weight * au[nz] ** (g.dimension - 1) * np.asarray(g.radial_sq(au[nz])) / denom
        out[nz] = out_nz
    if np.any(~nz):
        q1 = g.dimension - 1 + 2 * g.infrared_exponent
        if q1 > 1 + 1e-12:
            lim = 0.0
        elif abs(q1 - 1) <= 1e-12:
            lim = g.angular_weight * g.infrared_amplitude_sq / beta
        else:
            lim = math.inf
        out[~nz] = lim
    return out if out.ndim else float(out)


def coth_line_density(g: FormFactor, beta: float, u) -> float:
    """|S^{d-1}| g1^2 |u|^{d-1} |g(|u|)|^2 coth(beta |u| / 2) (even in u)."""
    uu = np.abs(np.asarray(u, dtype=float))
    out = np.empty_like(uu)
    nz = uu > 0
    if np.any(nz):
        out[nz] = (g.angular_weight * uu[nz] ** (g.dimension - 1)
                   * np.asarray(g.radial_sq(uu[nz])) * coth(beta * uu[nz] / 2.0))
    if np.any(~nz):
        q0 = g.zero_exponent
        if q0 > 1e-12:
            out[~nz] = 0.0
        elif abs(q0) <= 1e-12:
            out[~nz] = 2.0 * g.angular_weight * g.infrared_amplitude_sq / beta
        else:
            out[~nz] = math.inf
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# xi and its Lorentzian pre-limit
# ---------------------------------------------------------------------------

def xi(g: FormFactor, beta: float, eta: float) -> float:
    """Thermal spectral function xi(eta) >= 0 (delta-concentration limit).

    For eta > 0:  |S^{d-1}| g1^2 eta^{d-1} coth(beta eta/2) |g(eta)|^2.
    At eta = 0 the continuous eta -> 0 limit: 0 above the infrared
    threshold p = (2-d)/2, the finite thermal value
    2 |S^{d-1}| g1^2 C^2 / beta exactly at it, +inf below it.
    """
    if eta < 0:
        raise ValidationError("xi is defined for eta >= 0")
    if not beta > 0:
        raise ValidationError("beta must be positive")
    return coth_line_density(g, beta, eta)


def xi_lorentzian(g: FormFactor, beta: float, eta: float, epsilon: float,
                  *, rtol: float = DEFAULT_RTOL) -> float:
    """Lorentzian-smeared xi at finite width epsilon (pre-limit of xi).

    (1/pi) * int_0^inf dr f(r) * epsilon / ((r - eta)^2 + epsilon^2) with
    f the coth-weighted radial density; converges to xi(eta) as
    epsilon -> 0 for eta > 0.
    """
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    if eta < 0:
        raise ValidationError("eta must be >= 0")
    if g.zero_exponent <= -1 + 1e-12:
        raise DivergentIntegralError(
            "Lorentzian-smeared xi diverges at the origin for p <= (1-d)/2", term="xi_lorentzian")
    rmax = g.support_radius + eta

    def f(r):
        return float(coth_line_density(g, beta, r)) * epsilon / ((r - eta) ** 2 + epsilon**2)

    cuts = sorted({0.0, max(0.0, eta - 50 * epsilon), min(eta + 50 * epsilon, rmax), rmax})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        total += _quad(f, a, b, points=[eta], rtol=rtol)
    return total / math.pi


def xi_lorentzian_richardson(g: FormFactor, beta: float, eta: float,
                             epsilon: float = 1e-4) -> float:
    """Richardson extrapolation of xi_lorentzian over widths {4e, 2e, e}."""
    v1 = xi_lorentzian(g, beta, eta, epsilon)
    v2 = xi_lorentzian(g, beta, eta, 2 * epsilon)
    v4 = xi_lorentzian(g, beta, eta, 4 * epsilon)
    r1a = 2 * v1 - v2
    r1b = 2 * v2 - v4
    return (4 * r1a - r1b) / 3.0


def g_omega_inverse(g: FormFactor, *, rtol: float = DEFAULT_RTOL) -> float:
    """<g, omega^{-1} g> = int_{R^d} |g(k)|^2 / |k| d^dk by radial quadrature."""
    if g.zero_exponent <= -1 + 1e-12:
        raise DivergentIntegralError(
            "<g, omega^{-1} g> diverges at the origin for p <= (1-d)/2",
            term="g_omega_inverse")
    d = g.dimension

    def f(r):
        return r ** (d - 2) * float(g.radial_sq(r))

    rmax = g.support_radius
    val = g.angular_weight * (_quad(f, 0.0, min(1.0, rmax), rtol=rtol)
                              + _quad(f, min(1.0, rmax), rmax, rtol=rtol))
    return val


# ---------------------------------------------------------------------------
# principal values and Sokhotski-Plemelj boundary values
# ---------------------------------------------------------------------------

def _pv_against(density, x: float, lo: float, hi: float, *, kinks=(0.0,),
                rtol: float = DEFAULT_RTOL) -> float:
    """PV int_lo^hi density(u) / (u - x) du by singularity subtraction.

    Splits off a window symmetric about x on which the odd kernel integrates
    to zero exactly; the subtracted integrand (density(u) - density(x))/(u - x)
    is regular there.
    """
    if not lo < x < hi:
        return _quad(lambda u: density(u) / (u - x), lo, hi, points=list(kinks), rtol=rtol)
    half = min(1.0, x - lo, hi - x)
    fx = float(density(x))

    def sub(u):
        du = u - x
        if du == 0.0:
            h = 1e-7 * max(1.0, abs(x))
            return (float(density(x + h)) - float(density(x - h))) / (2 * h)
        return (float(density(u)) - fx) / du

    total = _quad(sub, x - half, x + half, points=list(kinks), rtol=rtol)
    total += _quad(lambda u: density(u) / (u - x), lo, x - half, points=list(kinks), rtol=rtol)
    total += _quad(lambda u: density(u) / (u - x), x + half, hi, points=list(kinks), rtol=rtol)
    return total


def pv_line_density(g: FormFactor, beta: float, x: float, *, rtol: float = DEFAULT_RTOL) -> float:
    """PV int sigma(u) / (u - x) du over the thermal line density sigma."""
    r = g.support_radius

    def density(u):
        return float(line_density(g, beta, u))

    return _pv_against(density, x, -r, r, rtol=rtol)


def pv_coth(g: FormFactor, beta: float, delta: float, *, rtol: float = DEFAULT_RTOL) -> float:
    """PV int u^{d-1} |g(|u|)|^2 coth(beta|u|/2) / (u - delta) du (angular included).

    The integrand's even density makes the delta = 0 value vanish identically.
    """
    if delta == 0.0:
        return 0.0
    r = g.support_radius

    def density(u):
        return float(coth_line_density(g, beta, u))

    return _pv_against(density, delta, -r, r, rtol=rtol)


def sokhotski(g: FormFactor, beta: float, theta: float, *, rtol: float = DEFAULT_RTOL) -> complex:
    """Boundary value lim_{eps->0} int sigma(u) / (u + theta + i eps) du.

    Equals PV - i*pi*sigma(-theta); the imaginary part is always <= 0.
    """
    return complex(pv_line_density(g, beta, -theta, rtol=rtol),
                   -math.pi * float(line_density(g, beta, -theta)))


def sokhotski_minus(g: FormFactor, beta: float, theta: float, *, rtol: float = DEFAULT_RTOL) -> complex:
    """Boundary value of the reflected density: int sigma(-u)/(u + theta + i eps) du.

    Identically equal to -conj(sokhotski(-theta)).
    """
    return complex(-pv_line_density(g, beta, theta, rtol=rtol),
                   -math.pi * float(line_density(g, beta, theta)))


# ---------------------------------------------------------------------------
# admissibility report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticityReport:
    """Outcome of the translation-strip admissibility checks."""

    status: str                 # "pass" | "fail" | "unverified"
    reasons: tuple[str, ...] = ()

    @property
    def ok(self) -> bool | None:
        return {"pass": True, "fail": False}.get(self.status)


def analyticity_check(g: FormFactor, cfg) -> AnalyticityReport:
    """Check the strip width and that g is in the admissible analytic class.

    Power-exponential profiles must have p in {-1/2 + n} and m in {1, 2};
    tabulated profiles cannot be verified and report "unverified".
    """
    reasons = []
    bound = 2 * math.pi / cfg.beta
    if not 0 < cfg.omega_prime < bound:
        reasons.append(f"omega_prime = {cfg.omega_prime:g} outside (0, 2*pi/beta) = (0, {bound:g})")
    if g.family == "tabulated":
        return AnalyticityReport(status="unverified",
                                 reasons=tuple(reasons + ["tabulated profile: analytic class unknown"]))
    n = g.p + 0.5
    if abs(n - round(n)) > 1e-9 or round(n) < 0:
        reasons.append(f"infrared exponent p = {g.p:g} not in {{-1/2 + n, n >= 0}}")
    if g.m not in (1, 2):
        reasons.append(f"UV exponent m = {g.m} not in {{1, 2}}")
    return AnalyticityReport(status="fail" if reasons else "pass", reasons=tuple(reasons))


# ---------------------------------------------------------------------------
# memoized correlation bundle
# ---------------------------------------------------------------------------

class CorrelationSet:
    """Cached reservoir integrals for one (form factor, beta) pair.

    All underlying functions are pure; concurrent lookups may race and
    recompute, which is harmless because results are identical.
    """

    def __init__(self, form_factor: FormFactor, beta: float):
        if not beta > 0:
            raise ValidationError("beta must be positive")
        self.form_factor = form_factor
        self.beta = float(beta)
        self._xi_at: dict[float, float] = {}
        self._pv_cache: dict[float, float] = {}
        self._sokhotski_cache: dict[float, complex] = {}
        self._pv_line_cache: dict[float, float] = {}
        self._lock = threading.Lock()

    def xi(self, eta: float) -> float:
        eta = float(eta)
        if eta not in self._xi_at:
            self._xi_at[eta] = xi(self.form_factor, self.beta, eta)
        return self._xi_at[eta]

    @cached_property
    def g_omega_inv(self) -> float:
        return g_omega_inverse(self.form_factor)

    def coth_delta_zero(self) -> float:
        """eps -> 0 limit of <g, coth(beta omega/2) eps/(omega^2+eps^2) g>.

        Equals (pi/2) * xi(0); +inf below the infrared threshold.
        """
        x0 = self.xi(0.0)
        return math.inf if math.isinf(x0) else 0.5 * math.pi * x0

    def pv_line(self, x: float) -> float:
        x = float(x)
        if x not in self._pv_line_cache:
            val = pv_line_density(self.form_factor, self.beta, x)
            with self._lock:
                self._pv_line_cache[x] = val
        return self._pv_line_cache[x]

    def pv_coth(self, delta: float) -> float:
        delta = float(delta)
        if delta not in self._pv_cache:
            val = pv_coth(self.form_factor, self.beta, delta)
            with self._lock:
                self._pv_cache[delta] = val
        return self._pv_cache[delta]

    def density(self, u: float) -> float:
        return float(line_density(self.form_factor, self.beta, u))

    def sokhotski(self, theta: float) -> complex:
        theta = float(theta)
        if theta not in self._sokhotski_cache:
            val = complex(self.pv_line(-theta), -math.pi * self.density(-theta))
            with self._lock:
                self._sokhotski_cache[theta] = val
        return self._sokhotski_cache[theta]

    def sokhotski_minus(self, theta: float) -> complex:
        return complex(-self.pv_line(theta), -math.pi * self.density(theta))
