"""Beamforming optimization and capacity bounds for the reduced channel.

The phase-pattern optimization is a unit-modulus quadratic program solved by
cyclic coordinate ascent with random restarts.  The returned objective is
always achievable, so rates built from it are certified lower bounds even
when the heuristic misses the global optimum; the Frobenius relaxation
(n+1) ||H||_F^2 brackets the true optimum from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import DegenerateChannelError, EquivalentChannel
from .specfun import LOG2E

DEFAULT_RESTARTS = 16
DEFAULT_MAX_ITER = 500
DEFAULT_TOL = 1e-12
# Fixed seed for restart initializations keeps solve results reproducible.
DEFAULT_UQP_SEED = 0x5155_4150

_GH_NODES = 128


@dataclass(frozen=True)
class UqpSolution:
    """Optimal phase pattern and objective of the beamforming problem."""

    phi_star: np.ndarray
    f_star: float
    iterations: int
    restarts_used: int

    def __post_init__(self):
        object.__setattr__(
            self, "phi_star", np.mod(np.asarray(self.phi_star, dtype=float), 2.0 * math.pi)
        )
        if self.f_star < 0.0:
            raise ValueError("objective must be nonnegative")


def _objective(cols: np.ndarray, phi: np.ndarray) -> float:
    return float(np.linalg.norm(cols @ np.exp(1j * phi)) ** 2)


def _ascend(cols: np.ndarray, phi: np.ndarray, max_iter: int, tol: float):
    """Cyclic coordinate ascent on the phases; the last phase stays gauge-fixed at 0."""
    n_free = cols.shape[1] - 1
    combined = cols @ np.exp(1j * phi)
    obj = float(np.linalg.norm(combined) ** 2)
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        prev = obj
        for k in range(n_free):
            col = cols[:, k]
            rest = combined - col * np.exp(1j * phi[k])
            inner = np.vdot(rest, col)  # rest^H col
            if inner != 0.0:
                phi[k] = -np.angle(inner)
            combined = rest + col * np.exp(1j * phi[k])
        new_obj = float(np.linalg.norm(combined) ** 2)
        if new_obj < obj * (1.0 - 1e-12) - 1e-300:
            raise AssertionError("coordinate ascent objective decreased")
        obj = new_obj
        if obj - prev <= tol * max(obj, 1.0):
            break
    return phi, obj, sweeps


def solve_uqp(
    eq: EquivalentChannel,
    restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    seed: int = DEFAULT_UQP_SEED,
) -> UqpSolution:
    """Maximize ||hcheck exp(j phi)||^2 over per-element unit-modulus phases.

    Keeps the best outcome over ``restarts`` random initializations plus one
    matched-to-strongest-direction initialization.  Restart streams derive
    from (seed, restart index), so the result does not depend on scheduling.
    """
    cols = eq.hcheck
    if not np.any(cols):
        raise DegenerateChannelError("cannot beamform an all-zero channel")
    n_cols = eq.n_cols

    inits = []
    u1 = np.linalg.svd(cols, full_matrices=False)[0][:, 0]
    mrt = -np.angle(u1.conj() @ cols)
    inits.append(np.mod(mrt - mrt[-1], 2.0 * math.pi))
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        phi = rng.uniform(0.0, 2.0 * math.pi, size=n_cols)
        phi[-1] = 0.0
        inits.append(phi)

    best_phi, best_obj, best_sweeps = None, -1.0, 0
    for phi0 in inits:
        phi, obj, sweeps = _ascend(cols, phi0.copy(), max_iter, tol)
        if obj > best_obj:
            best_phi, best_obj, best_sweeps = phi, obj, sweeps
    return UqpSolution(
        phi_star=best_phi,
        f_star=best_obj,
        iterations=best_sweeps,
        restarts_used=len(inits),
    )


def beamforming_rate(f_star: float, power: float) -> float:
    """Achievable rate of the pure beamforming mode, log2(1 + F* E) bpcu."""
    return math.log2(1.0 + f_star * power)


def ub_max_trace(tau: int, f_star: float, power: float) -> float:
    """Maximum-trace capacity upper bound, tau log2(1 + E F* / tau)."""
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    return tau * math.log2(1.0 + power * f_star / tau)


def ub_frobenius(eq: EquivalentChannel, power: float) -> float:
    """Frobenius-norm capacity upper bound, tau log2(1 + (n+1) E ||H||_F^2 / tau)."""
    tau = eq.tau
    return tau * math.log2(1.0 + eq.n_cols * power * eq.frobenius_sq / tau)


@dataclass(frozen=True)
class LowSnrMiApprox:
    """Second-order mutual-information expansion data: covariance traces and power."""

    trace_cov: float
    trace_cov_sq: float
    power: float

    def __post_init__(self):
        if self.trace_cov < 0.0 or self.trace_cov_sq < 0.0 or self.power < 0.0:
            raise ValueError("fields must be nonnegative")
        if self.trace_cov_sq > self.trace_cov**2 * (1.0 + 1e-12):
            raise ValueError("tr(cov^2) cannot exceed tr(cov)^2 for a PSD covariance")


def mi_low_snr(approx: LowSnrMiApprox) -> float:
    """Two-term low-power mutual information in bpcu:
    log2(e) tr(cov) E - (log2(e)/2) tr(cov^2) E^2."""
    e = approx.power
    return LOG2E * approx.trace_cov * e - 0.5 * LOG2E * approx.trace_cov_sq * e * e


def _softplus(u: np.ndarray) -> np.ndarray:
    out = np.empty_like(u)
    neg = u <= 0.0
    out[neg] = np.log1p(np.exp(u[neg]))
    out[~neg] = u[~neg] + np.log1p(np.exp(-u[~neg]))
    return out


def bipolar_input_mi(f_star: float, power: float) -> float:
    """Mutual information of the phase-matched bipolar input in bpcu.

    Y = sqrt(F* E) B + N with B uniform on +-1 and N real Gaussian of
    variance 1/2; evaluated by Gauss-Hermite quadrature of the exact
    binary-input AWGN integral.
    """
    if f_star < 0.0 or power < 0.0:
        raise ValueError("f_star and power must be nonnegative")
    a_sq = f_star * power
    if a_sq == 0.0:
        return 0.0
    a = math.sqrt(a_sq)
    nodes, weights = np.polynomial.hermite.hermgauss(_GH_NODES)
    # With y = a + z/sqrt(2), z = sqrt(2) x:  I = 1 - E_z log2(1 + exp(-4a^2 - 4a x)).
    u = -4.0 * a_sq - 4.0 * a * nodes
    expectation = float(np.sum(weights * _softplus(u))) / math.sqrt(math.pi)
    return 1.0 - expectation * LOG2E


def rank_one_capacity(h: np.ndarray, power: float) -> float:
    """Exact capacity of a rank-one channel, log2(1 + ||h||_1^2 E)."""
    h = np.asarray(h, dtype=complex).reshape(-1)
    l1 = float(np.sum(np.abs(h)))
    if l1 == 0.0:
        raise DegenerateChannelError("rank-one capacity needs a nonzero channel vector")
    return math.log2(1.0 + l1 * l1 * power)
