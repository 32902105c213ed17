"""Special functions and distributions used by the capacity estimators.

Log-domain modified Bessel function of the first kind, integer digamma,
scaled noncentral and central chi-squared distributions, the generalized
Ricean mean, and uniform sampling of the hypersphere.

All Bessel and confluent-hypergeometric work stays in the log domain: the
capacity estimators require ln I_v at arguments of order m*snr, which would
overflow linear doubles beyond snr of a few hundred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln, ndtri

from .streams import draws_per_sample, generator_normals, normal_block, uniform_block

LOG2E = math.log2(math.e)
# Euler-Mascheroni constant, 16 digits.
EULER_GAMMA = 0.5772156649015329

# Relative-term cutoff and term cap for the asymptotic (Hadamard-type) series.
_ASYM_RTOL = 1e-16
_ASYM_MAX_TERMS = 40


def pochhammer_coeff(v: float, k: int) -> float:
    """Coefficient a_k(v) = (1/2+v)_k (1/2-v)_k / k! of the asymptotic series."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    out = 1.0
    for j in range(k):
        out *= (0.5 + v + j) * (0.5 - v + j) / (j + 1)
    return out


def digamma(L: int) -> float:
    """Digamma at a positive integer: psi(L) = -gamma + sum_{j<L} 1/j."""
    if L < 1 or int(L) != L:
        raise ValueError(f"L must be a positive integer, got {L}")
    return -EULER_GAMMA + sum(1.0 / j for j in range(1, int(L)))


def _bessel_crossover(v: float) -> float:
    # Below this the power series is cheap and exact; above it the asymptotic
    # branch has converged well enough that both agree to ~1e-12.
    return max(30.0, 2.0 * v * v)


def _log_bessel_series(v: float, x: np.ndarray) -> np.ndarray:
    """ln I_v(x) by the ascending power series, term-recursive.

    The running sum is renormalized when it grows large, so the branch stays
    valid for any x even though it is only selected below the crossover.
    """
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, -np.inf)
    zero = x == 0.0
    if v == 0.0:
        out[zero] = 0.0
    pos = ~zero
    if not np.any(pos):
        return out
    xp = x[pos]
    q = xp * xp / 4.0
    term = np.ones_like(xp)
    total = np.ones_like(xp)
    shift = np.zeros_like(xp)
    k = 0
    # Terms grow until k ~ x/2; run to convergence past the peak.
    while True:
        term = term * q / ((k + 1.0) * (v + k + 1.0))
        total += term
        k += 1
        big = total > 1e250
        if np.any(big):
            total[big] *= 1e-250
            term[big] *= 1e-250
            shift[big] += 250.0 * math.log(10.0)
        if np.all(term <= 1e-18 * total) or k > 20000:
            break
    out[pos] = v * np.log(xp / 2.0) - gammaln(v + 1.0) + np.log(total) + shift
    return out


def _log_bessel_hadamard(v: float, x: np.ndarray) -> np.ndarray:
    """ln I_v(x) = x - ln sqrt(2 pi x) + ln sum_k a_k(v)/(2x)^k P(1/2+v+k, 2x)."""
    x = np.asarray(x, dtype=float)
    two_x = 2.0 * x
    total = _reg_gamma_p(0.5 + v, two_x)
    term = np.ones_like(x)
    for k in range(1, _ASYM_MAX_TERMS + 1):
        term = term * ((0.5 + v + (k - 1)) * (0.5 - v + (k - 1)) / k) / two_x
        if not np.any(np.abs(term) > _ASYM_RTOL * np.abs(total)):
            break
        total = total + term * _reg_gamma_p(0.5 + v + k, two_x)
    return x - 0.5 * np.log(2.0 * math.pi * x) + np.log(total)


def _reg_gamma_p(mu: float, y: np.ndarray) -> np.ndarray:
    """Regularized lower incomplete gamma P(mu, y), skipping the saturated tail."""
    y = np.asarray(y, dtype=float)
    # For y far above mu, Q(mu, y) ~ y^(mu-1) e^(-y) / Gamma(mu) is below 1e-18.
    saturated = y > mu + 60.0 + 12.0 * math.sqrt(mu)
    out = np.ones_like(y)
    if not np.all(saturated):
        rest = ~saturated
        out[rest] = gammainc(mu, y[rest])
    return out


def log_bessel_i(v: float, x) -> np.ndarray | float:
    """ln I_v(x) for order v >= 0 and argument x >= 0.

    Uses the ascending power series below the crossover and the absolutely
    convergent incomplete-gamma asymptotic form above it.  Safe for x up to
    1e8 and beyond (the result is ~x, never the overflowing I_v itself).
    """
    if v < 0.0:
        raise ValueError(f"order v must be >= 0, got {v}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise ValueError("argument x must be >= 0")
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    out = np.empty_like(x_arr)
    cross = _bessel_crossover(v)
    lo = x_arr < cross
    if np.any(lo):
        out[lo] = _log_bessel_series(v, x_arr[lo])
    if np.any(~lo):
        out[~lo] = _log_bessel_hadamard(v, x_arr[~lo])
    return float(out[0]) if scalar else out


def _log_kummer_hadamard_ratio(a: float, b: float, x: float) -> float:
    """ln of Gamma(a)/Gamma(b) 1F1(a, b; x) via the incomplete-gamma expansion.

    Valid for large x:  x^(a-b) e^x sum_k (1-a)_k (b-a)_k / (k! x^k) P(b-a+k, x).
    The b-a = -1/2 leading term needs P(-1/2, x), obtained from the recurrence
    P(mu, x) = P(mu+1, x) + x^mu e^(-x) / Gamma(mu+1).
    """
    mu0 = b - a
    total = 0.0
    term = 1.0
    prev = math.inf
    for k in range(_ASYM_MAX_TERMS + 1):
        if k > 0:
            term *= (1.0 - a + (k - 1)) * (b - a + (k - 1)) / (k * x)
        mu = mu0 + k
        if mu > 0:
            p = float(_reg_gamma_p(mu, np.asarray(x)))
        else:
            # Analytic continuation through one step of the recurrence.
            p = float(_reg_gamma_p(mu + 1.0, np.asarray(x)))
            p += math.exp(mu * math.log(x) - x - gammaln(mu + 1.0))
        contrib = term * p
        total += contrib
        if abs(contrib) <= _ASYM_RTOL * abs(total) or term == 0.0:
            break
        if abs(term) > prev:  # asymptotic tail started diverging
            break
        prev = abs(term)
    return (a - b) * math.log(x) + x + math.log(total)


def _log_kummer_series_ratio(a: float, b: float, x: float) -> float:
    """ln of Gamma(a)/Gamma(b) 1F1(a, b; x) by the Kummer series, all-positive terms."""
    if x == 0.0:
        return float(gammaln(a) - gammaln(b))
    n_terms = int(x + 40.0 * math.sqrt(x + 1.0) + 60.0)
    k = np.arange(n_terms)
    logs = gammaln(a + k) - gammaln(b + k) - gammaln(k + 1.0) + k * math.log(x)
    peak = np.max(logs)
    return float(peak + math.log(np.sum(np.exp(logs - peak))))


def ricean_mean(m: int, snr: float) -> float:
    """Mean of the generalized Ricean radius R = sqrt(T).

    E[R] = sqrt(2/snr) e^(-m snr/2) Gamma((m+1)/2)/Gamma(m/2)
           1F1((m+1)/2, m/2; m snr/2),
    evaluated through the Kummer series for small argument and the
    incomplete-gamma expansion of the 1F1 ratio for large argument.
    """
    if m < 2 or int(m) != m:
        raise ValueError(f"m must be an integer >= 2, got {m}")
    if snr <= 0.0:
        raise ValueError(f"snr must be > 0, got {snr}")
    a = (m + 1) / 2.0
    b = m / 2.0
    x = m * snr / 2.0
    if x < 30.0:
        log_ratio = _log_kummer_series_ratio(a, b, x)
        return math.sqrt(2.0 / snr) * math.exp(log_ratio - x)
    log_ratio = _log_kummer_hadamard_ratio(a, b, x)
    return math.sqrt(2.0 / snr) * math.exp(log_ratio - x)


@dataclass(frozen=True)
class NoncentralChi2Scaled:
    """T = ||u + Z/sqrt(snr)||^2 with ||u||^2 = m and Z standard normal in R^m.

    Equivalently snr*T is noncentral chi-squared with m degrees of freedom and
    noncentrality m*snr; the density is
    p_T(t) = (snr/2) (t/m)^(m/4-1/2) exp(-snr (t+m)/2) I_(m/2-1)(snr sqrt(m t)).
    """

    m: int
    snr: float

    def __post_init__(self):
        if self.m < 2 or int(self.m) != self.m:
            raise ValueError(f"m must be an integer >= 2, got {self.m}")
        if self.snr <= 0.0:
            raise ValueError(f"snr must be > 0, got {self.snr}")

    @property
    def mean(self) -> float:
        return self.m + self.m / self.snr

    def logpdf(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0):
            raise ValueError("t must be >= 0")
        scalar = t_arr.ndim == 0
        t_arr = np.atleast_1d(t_arr)
        m, snr = self.m, self.snr
        with np.errstate(divide="ignore"):
            out = (
                math.log(snr / 2.0)
                + (m / 4.0 - 0.5) * np.log(t_arr / m)
                - snr * (t_arr + m) / 2.0
                + log_bessel_i(m / 2.0 - 1.0, snr * np.sqrt(m * t_arr))
            )
        return float(out[0]) if scalar else out

    def _from_normals(self, z: np.ndarray) -> np.ndarray:
        first = math.sqrt(self.m) + z[:, 0] / math.sqrt(self.snr)
        rest = z[:, 1:] / math.sqrt(self.snr)
        return first * first + np.sum(rest * rest, axis=1)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray | float:
        n = 1 if size is None else int(size)
        t = self._from_normals(generator_normals(rng, (n, self.m)))
        return float(t[0]) if size is None else t

    def sample_block(self, key, start: int, count: int) -> np.ndarray:
        """Samples ``start .. start+count`` of the counter-based stream ``key``."""
        return self._from_normals(normal_block(key, start, count, self.m))


@dataclass(frozen=True)
class CentralChi2:
    """||Z||^2 with Z standard normal; dof = 2L when modelling Gaussian symbol energy."""

    dof: int

    def __post_init__(self):
        if self.dof < 1 or int(self.dof) != self.dof:
            raise ValueError(f"dof must be an integer >= 1, got {self.dof}")

    def logpdf(self, t) -> np.ndarray | float:
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0):
            raise ValueError("t must be >= 0")
        scalar = t_arr.ndim == 0
        t_arr = np.atleast_1d(t_arr)
        half = self.dof / 2.0
        with np.errstate(divide="ignore"):
            out = -half * math.log(2.0) - gammaln(half) + (half - 1.0) * np.log(t_arr) - t_arr / 2.0
        return float(out[0]) if scalar else out

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray | float:
        n = 1 if size is None else int(size)
        z = generator_normals(rng, (n, self.dof))
        t = np.sum(z * z, axis=1)
        return float(t[0]) if size is None else t

    def sample_block(self, key, start: int, count: int) -> np.ndarray:
        z = normal_block(key, start, count, self.dof)
        return np.sum(z * z, axis=1)


def sample_uniform_sphere(
    m: int, radius: float, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Uniform points on the radius-``radius`` sphere in R^m."""
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    if radius <= 0.0:
        raise ValueError(f"radius must be > 0, got {radius}")
    n = 1 if size is None else int(size)
    z = generator_normals(rng, (n, m))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    out = radius * z
    return out[0] if size is None else out
