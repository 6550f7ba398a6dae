"""Receivers: two-symbol differential detection, diversity combining,
and the multiple-symbol / multiple-codeword sphere decoders.

Both sphere decoders run Schnorr-Euchner ordered depth-first search
with branch-and-bound pruning and return exactly the exhaustive-search
minimizer; metric ties resolve to the lexicographically smallest
candidate index tuple so decisions are bit-reproducible.
"""

import math

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from .channel import FadingSpec, jakes_autocorr
from .modem import PskConstellation, UnitaryCodebook
from .relaylink import LinkBudget, amp_factor


class ModelError(ValueError):
    """A statistical model that cannot be realized numerically."""


@dataclass(frozen=True)
class CombinerWeights:
    """Non-negative weights: b0 for the direct link, b_i per relay."""
    b0: float
    b_i: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "b_i", tuple(float(b) for b in self.b_i))
        values = (self.b0, *self.b_i)
        if not all(math.isfinite(b) and b >= 0 for b in values):
            raise ValueError(f"weights must be finite and >= 0, got {values}")


@dataclass(frozen=True)
class CovarianceModel:
    """Hermitian PD observation covariance with C^-1 = U^H U factor."""
    dimension: int
    matrix: np.ndarray
    cholesky_upper: np.ndarray

    def __post_init__(self):
        c, u = self.matrix, self.cholesky_upper
        n = self.dimension
        if c.shape != (n, n) or u.shape != (n, n):
            raise ModelError("covariance shape mismatch")
        if np.linalg.norm(c - c.conj().T) > 1e-10 * np.linalg.norm(c):
            raise ModelError("covariance must be Hermitian")
        residual = np.linalg.norm(u.conj().T @ u @ c - np.eye(n))
        if residual >= 1e-8:
            raise ModelError(f"inverse factor residual {residual:.2e}")

    @classmethod
    def from_matrix(cls, c: np.ndarray) -> "CovarianceModel":
        c = np.asarray(c, dtype=complex)
        c = 0.5 * (c + c.conj().T)
        n = c.shape[0]
        # Factor C = U~ U~^H (U~ upper) via Cholesky of the index-reversed
        # matrix, then invert the triangle.  Avoids np.linalg.inv, which
        # loses several digits on near-singular complex matrices.
        try:
            l_rev = np.linalg.cholesky(c[::-1, ::-1])
        except np.linalg.LinAlgError as exc:
            raise ModelError(f"covariance not positive definite: {exc}")
        u_tilde = l_rev[::-1, ::-1]
        upper = solve_triangular(u_tilde, np.eye(n), lower=False)
        return cls(dimension=n, matrix=c, cholesky_upper=upper)


@dataclass(frozen=True)
class DetectionWindow:
    """N consecutive received samples (scalars or R-vectors)."""
    received: np.ndarray
    window_size: int

    def __post_init__(self):
        if self.window_size < 2:
            raise ValueError("window_size must be >= 2")
        if len(self.received) != self.window_size:
            raise ValueError(f"{len(self.received)} samples but "
                             f"window_size={self.window_size}")


# === two-symbol detection and combining ===

def cdd_detect(y_prev: complex, y_curr: complex,
               constellation: PskConstellation) -> complex:
    """Conventional differential detection argmin_v |y_curr - v y_prev|."""
    if not (np.isfinite(y_prev) and np.isfinite(y_curr)):
        raise ValueError("received samples must be finite")
    metrics = np.abs(y_curr - constellation.points * y_prev)
    return complex(constellation.points[int(np.argmin(metrics))])


def semi_mrc_weights(amp_factors: Sequence[float],
                     sigma_rd_sq: Sequence[float] = None,
                     noise_density: float = 1.0) -> CombinerWeights:
    """Slow-fading combining weights b0 = 1/(2 N0),
    b_i = 1/(2 N0 (1 + A_i^2 sigma_rd_i^2))."""
    if sigma_rd_sq is None:
        sigma_rd_sq = [1.0] * len(amp_factors)
    if len(sigma_rd_sq) != len(amp_factors):
        raise ValueError("need one RD variance per amplification factor")
    b0 = 1.0 / (2.0 * noise_density)
    b_i = tuple(1.0 / (2.0 * noise_density * (1.0 + a * a * s))
                for a, s in zip(amp_factors, sigma_rd_sq))
    return CombinerWeights(b0=b0, b_i=b_i)


def tvd_weights(alpha0: float, alphas: Sequence[float],
                amp_factors: Sequence[float],
                source_power: float) -> CombinerWeights:
    """Fast-fading combining weights; reduce to semi_mrc_weights at
    alpha = 1 (unit variances)."""
    for a in (alpha0, *alphas):
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"autocorrelation {a} outside [0, 1]")
    if len(alphas) != len(amp_factors):
        raise ValueError("need one alpha per amplification factor")
    p0 = source_power
    b0 = alpha0 / (1.0 + alpha0 ** 2 + (1.0 - alpha0 ** 2) * p0)
    b_i = tuple(
        al / ((1.0 + al ** 2) * (1.0 + a * a) + (1.0 - al ** 2) * a * a * p0)
        for al, a in zip(alphas, amp_factors))
    return CombinerWeights(b0=b0, b_i=b_i)


def linear_combine(decision_vars: Sequence[complex],
                   weights: CombinerWeights) -> complex:
    """zeta = b0 zeta_0 + sum_i b_i zeta_i."""
    if len(decision_vars) != 1 + len(weights.b_i):
        raise ValueError(f"{len(decision_vars)} decision variables for "
                         f"{1 + len(weights.b_i)} weights")
    zeta = weights.b0 * decision_vars[0]
    for b, z in zip(weights.b_i, decision_vars[1:]):
        zeta += b * z
    return zeta


def select_combine(zeta0, zeta2):
    """Keep the decision variable with the larger magnitude; ties keep
    the direct link."""
    return zeta2 if abs(zeta2) > abs(zeta0) else zeta0


def select_combine_dbpsk(zeta0: complex, zeta2: complex) -> float:
    """Binary variant: compare the real parts, decide by sign later."""
    return float(select_combine(zeta0.real if np.iscomplexobj(zeta0)
                                or isinstance(zeta0, complex) else zeta0,
                                zeta2.real if np.iscomplexobj(zeta2)
                                or isinstance(zeta2, complex) else zeta2))


def dbpsk_decision(zeta: float) -> complex:
    """Sign slicer for real decision variables; zero maps to +1."""
    return -1.0 + 0j if zeta < 0 else 1.0 + 0j


# === covariance construction ===

def build_msdsd_covariance(spec_sr: FadingSpec, spec_rd: FadingSpec,
                           budget: LinkBudget, n: int) -> CovarianceModel:
    """Observation covariance for dual-hop windows:
    C = A^2 P0 toeplitz{phi_sr(k) phi_rd(k)} + (1 + A^2 sigma_rd^2) N0 I."""
    if n < 2:
        raise ValueError("window length must be >= 2")
    a = amp_factor(budget, spec_sr.variance)
    lags = np.arange(n)
    corr = np.array([jakes_autocorr(k, spec_sr) * jakes_autocorr(k, spec_rd)
                     for k in lags])
    sigma_h = _toeplitz(corr)
    noise = (1.0 + a * a * spec_rd.variance) * budget.noise_density
    c = a * a * budget.source_power * sigma_h + noise * np.eye(n)
    return CovarianceModel.from_matrix(c)


def build_mcdsd_covariance(spec_sr: FadingSpec, spec_rd: FadingSpec,
                           budget: LinkBudget, n: int,
                           n_relays: int) -> CovarianceModel:
    """Block-level covariance for DSTC windows:
    C = c^2 P0 R toeplitz{phi_sr(k) phi_rd(k)} + (1 + c^2 sigma_rd^2 R) N0 I.

    The specs' lag multiplier must equal R so phi is sampled at block
    spacing.
    """
    if n < 2:
        raise ValueError("window length must be >= 2")
    c_amp = amp_factor(budget, spec_sr.variance)
    lags = np.arange(n)
    corr = np.array([jakes_autocorr(k, spec_sr) * jakes_autocorr(k, spec_rd)
                     for k in lags])
    sigma_h = _toeplitz(corr)
    noise = (1.0 + c_amp ** 2 * spec_rd.variance * n_relays) \
        * budget.noise_density
    c = c_amp ** 2 * budget.source_power * n_relays * sigma_h \
        + noise * np.eye(n)
    return CovarianceModel.from_matrix(c)


def _toeplitz(first_row: np.ndarray) -> np.ndarray:
    n = len(first_row)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return first_row[idx].astype(complex)


# === multiple-symbol differential sphere decoding (scalar dual-hop) ===

def msdsd_dualhop(window: DetectionWindow, cov: CovarianceModel,
                  constellation: PskConstellation) -> np.ndarray:
    """Joint detection of N-1 data symbols from N received samples.

    Minimizes ||U s||^2 over anchored s (s[0] = 1) where
    U = (cholesky_upper diag(y))^*, then maps back to data via
    v[k] = s*[k] s[k+1].
    """
    y = np.asarray(window.received)
    if y.ndim != 1:
        raise ValueError("scalar detector needs a 1-d window")
    if window.window_size != cov.dimension:
        raise ValueError("window and covariance dimensions differ")
    u = (cov.cholesky_upper @ np.diag(y)).conj()
    idx = _sphere_scalar(u, constellation.points)
    s_hat = constellation.points[idx]
    return np.conj(s_hat[:-1]) * s_hat[1:]


def _sphere_scalar(u: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Depth-first search for argmin ||u s||^2, s[0] anchored to index 0.

    u is upper triangular, so levels run from the last entry to the
    first and each level adds the row term
    |u[i,i] s[i] + sum_{j>i} u[i,j] s[j]|^2.
    """
    n = u.shape[0]
    m = len(points)
    best_metric = math.inf
    best_idx = None
    chosen = np.zeros(n, dtype=np.int64)
    s = np.zeros(n, dtype=complex)

    def descend(level, acc):
        nonlocal best_metric, best_idx
        tail = u[level, level + 1:] @ s[level + 1:] if level + 1 < n else 0.0
        cands = range(1) if level == 0 else range(m)
        terms = [(abs(u[level, level] * points[c] + tail) ** 2, c)
                 for c in cands]
        terms.sort(key=lambda t: t[0])
        for term, c in terms:
            g = acc + term
            if g > best_metric:
                return
            chosen[level] = c
            s[level] = points[c]
            if level == 0:
                key = tuple(chosen)
                if g < best_metric or (g == best_metric
                                       and key < best_idx):
                    best_metric, best_idx = g, key
            else:
                descend(level - 1, g)

    descend(n - 1, 0.0)
    return np.array(best_idx)


# === DSTC detection ===

def dstc_two_codeword_detect(y_prev: np.ndarray, y_curr: np.ndarray,
                             codebook: UnitaryCodebook) -> int:
    """Index of argmin_V ||y_curr - V y_prev||; ties to the lowest."""
    if len(y_prev) != codebook.dimension or \
            len(y_curr) != codebook.dimension:
        raise ValueError("received vectors must match codeword dimension")
    metrics = [np.linalg.norm(y_curr - v @ y_prev)
               for v in codebook.codewords]
    return int(np.argmin(metrics))


def mcdsd_dstc(window: DetectionWindow, cov: CovarianceModel,
               codebook: UnitaryCodebook) -> np.ndarray:
    """Joint detection of N-1 codeword indices from N received blocks.

    Anchors the last block matrix to identity and minimizes
    sum_n || sum_{j>=n} u_{n,j} S[j]^H y[j] ||^2 over codeword choices,
    where S[j] = V[j+1]^H S[j+1].
    """
    y = np.asarray(window.received)
    n = window.window_size
    if y.ndim != 2 or y.shape[1] != codebook.dimension:
        raise ValueError("window must hold N received R-vectors")
    if n != cov.dimension:
        raise ValueError("window and covariance dimensions differ")
    u = cov.cholesky_upper
    r = codebook.dimension
    words = codebook.codewords
    best_metric = math.inf
    best_idx = None
    chosen = np.zeros(n - 1, dtype=np.int64)
    # z[j] = S[j]^H y[j] along the current path; anchor S[n-1] = I
    z = np.zeros((n, r), dtype=complex)
    z[n - 1] = y[n - 1]
    s_mats = [None] * n
    s_mats[n - 1] = np.eye(r, dtype=complex)

    root_term = float(np.linalg.norm(u[n - 1, n - 1] * z[n - 1]) ** 2)

    def descend(level, acc):
        # level indexes the block whose codeword V[level+1] is being chosen
        nonlocal best_metric, best_idx
        tail = (u[level, level + 1:] @ z[level + 1:]) \
            if level + 1 < n else np.zeros(r)
        options = []
        for c, v in enumerate(words):
            s_mat = v.conj().T @ s_mats[level + 1]
            z_here = s_mat.conj().T @ y[level]
            term = float(np.linalg.norm(u[level, level] * z_here + tail) ** 2)
            options.append((term, c, s_mat, z_here))
        options.sort(key=lambda t: t[0])
        for term, c, s_mat, z_here in options:
            g = acc + term
            if g > best_metric:
                return
            chosen[level] = c
            s_mats[level] = s_mat
            z[level] = z_here
            if level == 0:
                key = tuple(chosen)
                if g < best_metric or (g == best_metric
                                       and key < best_idx):
                    best_metric, best_idx = g, key
            else:
                descend(level - 1, g)

    descend(n - 2, root_term)
    return np.array(best_idx)
