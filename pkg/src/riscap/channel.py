"""RIS-aided SIMO channel model and its lossless reductions.

A raw channel (H, g, d) is merged into an augmented matrix with the direct
path acting as one extra reflective element, then reduced by SVD to the
full-row-rank purely-reflective form used by every rate computation.  Both
steps preserve the receive-side norm of the reflected signal for every phase
pattern, which is the only channel quantity the rates depend on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidChannelError(ValueError):
    """Inconsistent dimensions or malformed channel input."""


class DegenerateChannelError(ValueError):
    """Channel carries no signal (all-zero or rank-deficient where full rank is required)."""


class ChannelFormatError(ValueError):
    """Malformed channel matrix file."""


DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ChannelSpec:
    """Raw physical channel: RIS-to-receiver gains ``h`` (n_R x n),
    transmitter-to-RIS gains ``g`` (n,), direct path ``d`` (n_R,), and the
    symbol-rate to reconfiguration-rate ratio ``l``."""

    h: np.ndarray
    g: np.ndarray
    d: np.ndarray
    l: int = 1

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h, dtype=complex))
        g = np.asarray(self.g, dtype=complex).reshape(-1)
        d = np.asarray(self.d, dtype=complex).reshape(-1)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "d", d)
        n_r, n = h.shape
        if n < 1 or n_r < 1:
            raise InvalidChannelError(f"need n_R >= 1 and n >= 1, got h of shape {h.shape}")
        if g.shape != (n,):
            raise InvalidChannelError(f"g must have length n={n}, got {g.shape}")
        if d.shape != (n_r,):
            raise InvalidChannelError(f"d must have length n_R={n_r}, got {d.shape}")
        if self.l < 1 or int(self.l) != self.l:
            raise InvalidChannelError(f"l must be a positive integer, got {self.l}")

    @property
    def n_r(self) -> int:
        return self.h.shape[0]

    @property
    def n(self) -> int:
        return self.h.shape[1]


def merge_direct_path(spec: ChannelSpec) -> np.ndarray:
    """Augmented matrix [H, d] diag(g, 1): column j is H[:, j] g_j, last column is d."""
    g_aug = np.concatenate([spec.g, [1.0 + 0.0j]])
    return np.hstack([spec.h, spec.d[:, None]]) * g_aug[None, :]


@dataclass(frozen=True)
class EquivalentChannel:
    """Full-row-rank purely-reflective channel: hcheck = diag(singular_values) v1^H."""

    hcheck: np.ndarray
    singular_values: np.ndarray
    v1: np.ndarray

    def __post_init__(self):
        hcheck = np.atleast_2d(np.asarray(self.hcheck, dtype=complex))
        sv = np.asarray(self.singular_values, dtype=float).reshape(-1)
        v1 = np.asarray(self.v1, dtype=complex)
        object.__setattr__(self, "hcheck", hcheck)
        object.__setattr__(self, "singular_values", sv)
        object.__setattr__(self, "v1", v1)
        tau, cols = hcheck.shape
        if sv.shape != (tau,):
            raise InvalidChannelError("one singular value per row is required")
        if np.any(sv <= 0.0) or np.any(np.diff(sv) > 0.0):
            raise InvalidChannelError("singular values must be positive and nonincreasing")
        if tau > cols:
            raise InvalidChannelError(f"rank {tau} exceeds column count {cols}")
        if v1.shape != (cols, tau):
            raise InvalidChannelError(f"v1 must be {cols} x {tau}, got {v1.shape}")
        recon = sv[:, None] * v1.conj().T
        scale = sv[0]
        if not np.allclose(recon, hcheck, atol=1e-10 * scale, rtol=0.0):
            raise InvalidChannelError("hcheck does not match diag(singular_values) v1^H")

    @property
    def tau(self) -> int:
        return self.hcheck.shape[0]

    @property
    def n_cols(self) -> int:
        """Number of reflective elements including the virtual direct-path element."""
        return self.hcheck.shape[1]

    @property
    def frobenius_sq(self) -> float:
        return float(np.sum(self.singular_values**2))


def reduce_matrix(h_aug: np.ndarray, tol_rel: float = DEFAULT_RANK_TOL) -> EquivalentChannel:
    """SVD reduction of an augmented matrix to the equivalent full-row-rank form.

    Exactly-zero columns (an absent direct path) contribute nothing to any
    norm or rate and are dropped before the SVD.
    """
    h_aug = np.atleast_2d(np.asarray(h_aug, dtype=complex))
    col_norms = np.linalg.norm(h_aug, axis=0)
    keep = col_norms > 0.0
    if not np.any(keep):
        raise DegenerateChannelError("all-zero channel matrix")
    h_kept = h_aug[:, keep]
    _, sv, vh = np.linalg.svd(h_kept, full_matrices=False)
    tau = int(np.count_nonzero(sv > tol_rel * sv[0]))
    sv = sv[:tau]
    v1 = vh[:tau, :].conj().T
    hcheck = sv[:, None] * vh[:tau, :]
    return EquivalentChannel(hcheck=hcheck, singular_values=sv, v1=v1)


def reduce(spec: ChannelSpec, tol_rel: float = DEFAULT_RANK_TOL) -> EquivalentChannel:
    """Merge the direct path and reduce to the equivalent full-row-rank form."""
    return reduce_matrix(merge_direct_path(spec), tol_rel)


def permute(eq: EquivalentChannel, perm) -> EquivalentChannel:
    """Reorder the reflective elements (columns); rank and singular values are unchanged."""
    perm = np.asarray(perm, dtype=int).reshape(-1)
    cols = eq.n_cols
    if perm.shape != (cols,) or not np.array_equal(np.sort(perm), np.arange(cols)):
        raise InvalidChannelError(f"perm must be a permutation of 0..{cols - 1}")
    return EquivalentChannel(
        hcheck=eq.hcheck[:, perm],
        singular_values=eq.singular_values,
        v1=eq.v1[perm, :],
    )


@dataclass(frozen=True)
class ChannelEnsembleSpec:
    """Random-channel generation recipe: i.i.d. CN(0,1) entries, optional
    line-of-sight boost of the direct-path column, optional Gram-trace
    normalization."""

    n_r: int
    n: int
    l: int = 1
    los_gain_db: float = 0.0
    seed: int = 0
    normalization: str = "gram_trace_one"

    def __post_init__(self):
        if self.n_r < 1 or self.n < 1 or self.l < 1:
            raise InvalidChannelError("n_r, n and l must be positive")
        if self.normalization not in ("gram_trace_one", "none"):
            raise InvalidChannelError(
                f"normalization must be 'gram_trace_one' or 'none', got {self.normalization!r}"
            )


def draw_ensemble_matrix(spec: ChannelEnsembleSpec, index: int) -> np.ndarray:
    """Realization ``index`` of the augmented matrix, before reduction.

    Streams are derived from (seed, index), so generation may be split across
    workers without changing any realization.
    """
    rng = np.random.default_rng([spec.seed & 0xFFFFFFFFFFFFFFFF, index])
    shape = (spec.n_r, spec.n + 1)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    g[:, -1] *= 10.0 ** (spec.los_gain_db / 20.0)
    if spec.normalization == "gram_trace_one":
        g /= np.linalg.norm(g)
    return g


def generate_ensemble(spec: ChannelEnsembleSpec, count: int) -> list[EquivalentChannel]:
    if count < 1:
        raise InvalidChannelError(f"count must be >= 1, got {count}")
    return [reduce_matrix(draw_ensemble_matrix(spec, i)) for i in range(count)]


def _format_complex(z: complex) -> str:
    re, im = z.real, z.imag
    sign = "+" if im >= 0 or math.isnan(im) else "-"
    return f"{re:.16e}{sign}{abs(im):.16e}i"


def _parse_complex(token: str) -> complex:
    if not token.endswith("i"):
        raise ChannelFormatError(f"complex entry must end with 'i': {token!r}")
    try:
        return complex(token[:-1].replace("i", "j") + "j")
    except ValueError as exc:
        raise ChannelFormatError(f"cannot parse complex entry {token!r}") from exc


def write_channel_matrix(path, h_aug: np.ndarray) -> None:
    """Write an augmented matrix as text: header "n_R n", then one row per line.

    The last column is the direct path; an all-zero column is permitted.
    """
    h_aug = np.atleast_2d(np.asarray(h_aug, dtype=complex))
    n_r, cols = h_aug.shape
    lines = [f"{n_r} {cols - 1}"]
    for row in h_aug:
        lines.append(" ".join(_format_complex(z) for z in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_channel_matrix(path) -> np.ndarray:
    """Parse a channel matrix file; returns the augmented n_R x (n+1) matrix."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.strip() for line in fh]
    lines = [line for line in raw if line]
    if not lines:
        raise ChannelFormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 2:
        raise ChannelFormatError(f"{path}: first line must be 'n_R n', got {lines[0]!r}")
    try:
        n_r, n = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ChannelFormatError(f"{path}: first line must hold two integers") from exc
    if n_r < 1 or n < 1:
        raise ChannelFormatError(f"{path}: n_R and n must be positive, got {n_r}, {n}")
    if len(lines) != 1 + n_r:
        raise ChannelFormatError(f"{path}: expected {n_r} matrix rows, found {len(lines) - 1}")
    out = np.empty((n_r, n + 1), dtype=complex)
    for i, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != n + 1:
            raise ChannelFormatError(
                f"{path}: row {i + 1} has {len(tokens)} entries, expected {n + 1}"
            )
        out[i] = [_parse_complex(tok) for tok in tokens]
    return out
