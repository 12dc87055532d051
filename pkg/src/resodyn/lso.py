"""Level shift operators, their spectra, and resonance energies.

For each Bohr frequency e (a difference of system energies) the second-order
effective operator Lambda_e acts on span{phi_m (x) phi_n : E_m - E_n = e}.
With G = G_d + G_o the diagonal/off-diagonal split of the coupling matrix,
W = <g, omega^{-1} g>, F0 the thermal zero-limit
lim <g, coth(beta omega/2) eps/(omega^2+eps^2) g> = (pi/2) xi(0), and

    Jp(theta) = lim int sigma(u)  / (u + theta + i 0) du
    Jm(theta) = lim int sigma(-u) / (u + theta + i 0) du = -conj(Jp(-theta))

the three parts are assembled as (twice the operator, in pair-basis matrix
elements between (m, n) and (m', n')):

diagonal
    2 L_d = delta_{(mn),(m'n')} [ (gamma_m^2 - gamma_n^2) W
                                  - i (gamma_m - gamma_n)^2 F0 ]

off-diagonal
    2 L_o = delta_{nn'} sum_k (G_o)_{mk} (G_o)_{km'}  Jp(E_k - E_{n'} - e)
          + delta_{mm'} sum_k w (Gb_o)_{nk} (Gb_o)_{kn'} Jm(E_{m'} - E_k - e)
          - (G_o)_{mm'} (Gb_o)_{nn'} w Jp(E_{m'} - E_n - e)
          - (G_o)_{mm'} (Gb_o)_{nn'} w Jm(E_m - E_{n'} - e)

mixed
    2 L_m = {X_plus, Y} W - i {X_minus, Y} F0

with gamma the (real) diagonal of G, Gb_o the entrywise conjugate of G_o,
w = e^{beta (E_{n'} - E_n)/2}, X_pm the pair-diagonal matrices
gamma_m +- gamma_n, and Y = (G_o)_{mm'} delta_{nn'} - delta_{mm'}
(Gb_o)_{nn'} w.  The thermal weights w reduce to 1 on simple Bohr
frequencies.  Resonance energies follow as eps = e - lambda^2 * delta with
delta the eigenvalues of Lambda_e; Im eps >= 0 and the zero resonance is
pinned exactly.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneracyError,
    InfiniteRateError,
    NonSemisimpleError,
    SignViolationError,
    ValidationError,
)
from .model import SystemSpec, coupling_split
from .spectral import CorrelationSet, FormFactor

RESIDUAL_TOL = 1e-10
PAIRING_COND_THRESHOLD = 1e-6
ZERO_PIN_TOL = 1e-10
IM_SIGN_TOL = 1e-10


@dataclass(frozen=True)
class BohrFrequency:
    """One cluster of energy differences E_m - E_n (0-based index pairs)."""

    e: float
    pairs: tuple[tuple[int, int], ...]

    @property
    def multiplicity(self) -> int:
        return len(self.pairs)


def bohr_frequencies(sys: SystemSpec, tol: float | None = None) -> list[BohrFrequency]:
    """Cluster all differences E_m - E_n into distinct Bohr frequencies.

    ``tol`` defaults to 1e-9 times the energy spread.  Clustering that would
    place two representatives closer than 2*tol apart is ambiguous and raises
    ``DegeneracyError`` asking for an explicit tolerance.
    """
    e = np.asarray(sys.energies)
    spread = float(e[-1] - e[0])
    if tol is None:
        tol = 1e-9 * max(spread, 1.0)
    if not tol > 0:
        raise ValidationError("clustering tolerance must be positive")
    n = sys.dim
    diffs = [(float(e[m] - e[k]), (m, k)) for m in range(n) for k in range(n)]
    diffs.sort(key=lambda t: t[0])
    clusters: list[list] = []
    for val, pair in diffs:
        if clusters and val - clusters[-1][0][0] <= tol:
            clusters[-1].append((val, pair))
        else:
            clusters.append([(val, pair)])
    reps = [float(np.mean([v for v, _ in c])) for c in clusters]
    for a, b in zip(reps, reps[1:]):
        if b - a < 2 * tol:
            raise DegeneracyError(
                f"Bohr frequencies {a:.12g} and {b:.12g} are separated by less than "
                f"2*tol = {2 * tol:.3g}; pass an explicit clustering tolerance"
            )
    out = []
    for rep, cluster in zip(reps, clusters):
        pairs = tuple(sorted(p for _, p in cluster))
        if abs(rep) <= tol:
            rep = 0.0
        out.append(BohrFrequency(e=rep, pairs=pairs))
    return out


@dataclass(frozen=True)
class LevelShiftOperator:
    """Lambda_e on the pair basis of one Bohr frequency, with its three parts."""

    bohr: BohrFrequency
    part_diagonal: np.ndarray
    part_offdiagonal: np.ndarray
    part_mixed: np.ndarray

    @property
    def e(self) -> float:
        return self.bohr.e

    @property
    def matrix(self) -> np.ndarray:
        return self.part_diagonal + self.part_offdiagonal + self.part_mixed

    @property
    def dim(self) -> int:
        return self.bohr.multiplicity


def _require_finite_zero_limit(f0: float, coeffs: np.ndarray, term: str) -> float:
    """0 * inf is a legitimate dropped term; anything else is an infinite rate."""
    if math.isinf(f0) and np.any(np.abs(coeffs) > 0):
        raise InfiniteRateError(
            f"infinite thermal zero-limit multiplies a nonzero {term} coefficient "
            "(infrared exponent below threshold)"
        )
    return 0.0 if math.isinf(f0) else f0


def level_shift(sys: SystemSpec, g: FormFactor, beta: float, bohr: BohrFrequency,
                correlations: CorrelationSet | None = None) -> LevelShiftOperator:
    """Assemble Lambda_e from the reservoir correlation integrals."""
    corr = correlations if correlations is not None else CorrelationSet(g, beta)
    energies = np.asarray(sys.energies)
    gd, go = coupling_split(sys.coupling)
    gammas = np.real(np.diag(gd))
    gob = go.conj()
    pairs = bohr.pairs
    k = len(pairs)
    e = bohr.e
    w_inv = corr.g_omega_inv

    # diagonal part
    gm = np.array([gammas[m] for m, _ in pairs])
    gn = np.array([gammas[n] for _, n in pairs])
    dcoef = (gm - gn) ** 2
    f0 = _require_finite_zero_limit(corr.coth_delta_zero(), dcoef, "diagonal-difference")
    lam_d = 0.5 * np.diag((gm**2 - gn**2) * w_inv - 1j * dcoef * f0)

    # off-diagonal part
    lam_o = np.zeros((k, k), dtype=complex)
    if np.any(np.abs(go) > 0):
        for col, (mp, np_) in enumerate(pairs):
            for row, (m, n) in enumerate(pairs):
                w = math.exp(beta * (energies[np_] - energies[n]) / 2.0)
                acc = 0.0 + 0.0j
                if n == np_:
                    for kk in range(sys.dim):
                        c = go[m, kk] * go[kk, mp]
                        if c != 0:
                            acc += c * corr.sokhotski(energies[kk] - energies[np_] - e)
                if m == mp:
                    for kk in range(sys.dim):
                        c = gob[n, kk] * gob[kk, np_]
                        if c != 0:
                            acc += w * c * corr.sokhotski_minus(energies[mp] - energies[kk] - e)
                cross = go[m, mp] * gob[n, np_]
                if cross != 0:
                    acc -= cross * w * corr.sokhotski(energies[mp] - energies[n] - e)
                    acc -= cross * w * corr.sokhotski_minus(energies[m] - energies[np_] - e)
                lam_o[row, col] = 0.5 * acc

    # mixed part
    lam_m = np.zeros((k, k), dtype=complex)
    if np.any(np.abs(go) > 0) and np.any(np.abs(gammas) > 0):
        y = np.zeros((k, k), dtype=complex)
        for col, (mp, np_) in enumerate(pairs):
            for row, (m, n) in enumerate(pairs):
                val = 0.0 + 0.0j
                if n == np_:
                    val += go[m, mp]
                if m == mp:
                    val -= gob[n, np_] * math.exp(beta * (energies[np_] - energies[n]) / 2.0)
                y[row, col] = val
        if np.any(np.abs(y) > 0):
            x_plus = gm + gn
            x_minus = gm - gn
            anti_plus = x_plus[:, None] * y + y * x_plus[None, :]
            anti_minus = x_minus[:, None] * y + y * x_minus[None, :]
            f0m = _require_finite_zero_limit(corr.coth_delta_zero(), anti_minus, "mixed")
            lam_m = 0.5 * (anti_plus * w_inv - 1j * anti_minus * f0m)

    return LevelShiftOperator(bohr=bohr, part_diagonal=lam_d,
                              part_offdiagonal=lam_o, part_mixed=lam_m)


def level_shift_qubit_closed(sys: SystemSpec, g: FormFactor, beta: float, which: float,
                             correlations: CorrelationSet | None = None) -> LevelShiftOperator:
    """Closed-form qubit level shift operators.

    For a qubit with gap D and coupling [[a, c], [conj(c), b]]:

        Lambda_0 = -(i pi / 2) |c|^2 xi(D) / cosh(beta D / 2)
                   * [[e^{-beta D/2}, -1], [-1, e^{beta D/2}]],

        Lambda_D = (1/2) [ (b^2 - a^2) W + |c|^2 PV_coth(D) ]
                   - (i/2) [ pi |c|^2 xi(D) + (b - a)^2 F0 ],

        Lambda_{-D} = -conj(Lambda_D),

    with F0 = (pi/2) xi(0).  The kernel of Lambda_0 is spanned by the Gibbs
    vector coordinates (1, e^{-beta D/2}) and its nonzero eigenvalue is
    -i pi |c|^2 xi(D).
    """
    if sys.dim != 2:
        raise ValidationError(f"closed-form qubit level shifts need N = 2, got N = {sys.dim}")
    corr = correlations if correlations is not None else CorrelationSet(g, beta)
    e1, e2 = sys.energies
    gap = e2 - e1
    a = float(np.real(sys.coupling[0, 0]))
    b = float(np.real(sys.coupling[1, 1]))
    c = complex(sys.coupling[0, 1])
    zero = np.zeros((1, 1), dtype=complex)

    if which == 0:
        pairs = BohrFrequency(0.0, ((0, 0), (1, 1)))
        kappa = -0.5j * math.pi * abs(c) ** 2 * corr.xi(gap) / math.cosh(beta * gap / 2.0)
        mat = kappa * np.array([[math.exp(-beta * gap / 2.0), -1.0],
                                [-1.0, math.exp(beta * gap / 2.0)]], dtype=complex)
        z2 = np.zeros((2, 2), dtype=complex)
        return LevelShiftOperator(bohr=pairs, part_diagonal=z2, part_offdiagonal=mat,
                                  part_mixed=z2)

    if which not in (gap, -gap):
        raise ValidationError(f"which must be one of 0, {gap:g}, {-gap:g}")

    f0 = _require_finite_zero_limit(corr.coth_delta_zero(),
                                    np.array([(b - a) ** 2]), "diagonal-difference")
    diag = 0.5 * ((b**2 - a**2) * corr.g_omega_inv - 1j * (b - a) ** 2 * f0)
    offd = 0.5 * (abs(c) ** 2 * corr.pv_coth(gap) - 1j * math.pi * abs(c) ** 2 * corr.xi(gap))
    if which == gap:
        pairs = BohrFrequency(gap, ((1, 0),))
        return LevelShiftOperator(bohr=pairs, part_diagonal=np.array([[diag]]),
                                  part_offdiagonal=np.array([[offd]]), part_mixed=zero)
    pairs = BohrFrequency(-gap, ((0, 1),))
    return LevelShiftOperator(bohr=pairs, part_diagonal=np.array([[-np.conj(diag)]]),
                              part_offdiagonal=np.array([[-np.conj(offd)]]), part_mixed=zero)


# ---------------------------------------------------------------------------
# eigensystems
# ---------------------------------------------------------------------------

def _eig2(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenpairs of a 2x2 complex matrix (values, column vectors)."""
    a11, a12 = a[0]
    a21, a22 = a[1]
    half_tr = 0.5 * (a11 + a22)
    s = np.sqrt(complex(0.25 * (a11 - a22) ** 2 + a12 * a21))
    vals = np.array([half_tr + s, half_tr - s])
    scale = max(1.0, float(np.max(np.abs(a))))
    if abs(vals[0] - vals[1]) <= 1e-14 * scale and max(abs(a12), abs(a21)) > 1e-14 * scale:
        raise NonSemisimpleError("2x2 level shift operator is defective (Jordan block)")
    vecs = np.zeros((2, 2), dtype=complex)
    for i, lam in enumerate(vals):
        c1 = np.array([a12, lam - a11])
        c2 = np.array([lam - a22, a21])
        v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
        if np.linalg.norm(v) <= 1e-300:
            v = np.zeros(2, dtype=complex)
            v[i] = 1.0
        vecs[:, i] = v / np.linalg.norm(v)
    return vals, vecs


def lso_eigensystem(op: LevelShiftOperator) -> list[tuple[complex, np.ndarray, np.ndarray]]:
    """Complete biorthogonal eigensystem of a level shift operator.

    Returns ``(delta, eta, eta_tilde)`` triples on the pair basis with
    Lambda eta = delta eta, Lambda^dagger eta_tilde = conj(delta) eta_tilde,
    and <eta_tilde_s, eta_r> = delta_{sr} (left vectors are the conjugated
    rows of the inverse eigenvector matrix).  A pairing condition below
    1e-6 signals a (numerically) defective operator.
    """
    a = op.matrix
    n = a.shape[0]
    if n == 1:
        one = np.ones(1, dtype=complex)
        return [(complex(a[0, 0]), one.copy(), one.copy())]
    if n == 2:
        vals, right = _eig2(a)
    else:
        vals, right = np.linalg.eig(a)
    sv = np.linalg.svd(right, compute_uv=False)
    if sv[-1] / sv[0] < PAIRING_COND_THRESHOLD:
        raise NonSemisimpleError(
            f"eigenvector pairing condition {sv[-1] / sv[0]:.2e} below "
            f"{PAIRING_COND_THRESHOLD:g}; operator treated as defective"
        )
    left = np.linalg.inv(right).conj()
    scale = max(1.0, float(np.max(np.abs(a))))
    out = []
    for s in range(n):
        eta = right[:, s].copy()
        eta_t = left[s, :].copy()
        if np.linalg.norm(a @ eta - vals[s] * eta) > 1e-8 * scale:
            raise NonSemisimpleError("eigen residual too large; treating operator as defective")
        out.append((complex(vals[s]), eta, eta_t))
    out.sort(key=lambda t: (abs(t[0]), t[0].real, t[0].imag))
    return out


# ---------------------------------------------------------------------------
# resonance energies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceMode:
    """One resonance: eps = e - lambda^2 delta with its biorthogonal pair.

    ``eta``/``eta_tilde`` are embedded in the full product basis (length N^2,
    coordinate (m, n) at m*N + n).
    """

    e: float
    s: int
    delta: complex
    epsilon: complex
    eta: np.ndarray
    eta_tilde: np.ndarray
    pinned_zero: bool = False


@dataclass(frozen=True)
class ResonanceSet:
    """All resonance modes of a system at a fixed coupling constant."""

    modes: tuple[ResonanceMode, ...]
    lam: float
    dim: int

    def at_frequency(self, e: float, tol: float = 1e-12) -> list[ResonanceMode]:
        return [m for m in self.modes if abs(m.e - e) <= tol * max(1.0, abs(e))]

    @property
    def max_im_epsilon(self) -> float:
        return max((m.epsilon.imag for m in self.modes), default=0.0)

    def to_json_obj(self) -> list[dict]:
        def cvec(v):
            return [[float(x.real), float(x.imag)] for x in v]

        return [
            {"e": float(m.e), "s": m.s,
             "delta": [m.delta.real, m.delta.imag],
             "epsilon": [m.epsilon.real, m.epsilon.imag],
             "eta": cvec(m.eta), "eta_tilde": cvec(m.eta_tilde)}
            for m in self.modes
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)


def _embed(vec: np.ndarray, pairs, dim: int) -> np.ndarray:
    full = np.zeros(dim * dim, dtype=complex)
    for coeff, (m, n) in zip(vec, pairs):
        full[m * dim + n] = coeff
    return full


def resonance_energies(eigensystems, lam: float, *, dim: int,
                       beta: float | None = None, smallness_c0: float = 1.0) -> ResonanceSet:
    """Resonance energies eps_e^(s) = e - lambda^2 delta_e^(s).

    ``eigensystems`` is an iterable of (LevelShiftOperator, eigensystem)
    pairs as produced by :func:`lso_eigensystem`.  The zero resonance is
    pinned to exactly 0 when its computed magnitude falls below 1e-10, and
    any resonance with Im eps < -1e-10 (relative to the lambda^2 scale)
    raises ``SignViolationError``.  When beta is supplied and
    |lambda| > smallness_c0 / beta a warning flags the perturbative regime
    boundary.
    """
    if beta is not None and abs(lam) > smallness_c0 / beta:
        warnings.warn(
            f"|lambda| = {abs(lam):g} exceeds c0/beta = {smallness_c0 / beta:g}; "
            "second-order resonance data may be outside its guaranteed regime",
            stacklevel=2,
        )
    modes = []
    max_abs_delta = max((abs(d) for _, system in eigensystems for d, _, _ in system),
                        default=0.0)
    sign_tol = IM_SIGN_TOL * max(1.0, lam * lam * max_abs_delta)
    for op, system in eigensystems:
        for s, (delta, eta, eta_t) in enumerate(system, start=1):
            eps = complex(op.e - lam * lam * delta)
            pinned = False
            if op.e == 0.0 and s == 1 and abs(eps) < ZERO_PIN_TOL:
                eps = 0.0 + 0.0j
                pinned = True
            if eps.imag < -sign_tol:
                raise SignViolationError(
                    f"resonance at e = {op.e:g} has Im eps = {eps.imag:.3e} < 0; "
                    "assembly inconsistency or inadmissible form factor"
                )
            modes.append(ResonanceMode(
                e=op.e, s=s, delta=delta, epsilon=eps,
                eta=_embed(eta, op.bohr.pairs, dim),
                eta_tilde=_embed(eta_t, op.bohr.pairs, dim),
                pinned_zero=pinned,
            ))
    modes.sort(key=lambda m: (m.e, m.s))
    return ResonanceSet(modes=tuple(modes), lam=lam, dim=dim)
