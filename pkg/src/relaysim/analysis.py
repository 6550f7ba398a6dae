"""Closed-form BER, PEP, outage, and error-floor evaluators for the
differential AF links the simulator models, plus the power-allocation
search they feed.

Every expectation over a channel gain is reduced to either a finite
one-dimensional quadrature or a finite combination of exponentials,
binomials, and the exponential integral; nothing integrates over an
infinite range numerically.  Quadratures run adaptive Gauss-Kronrod
with fixed tolerances, so repeated evaluation is bit-identical.

Conventions shared by all evaluators: channel gains are CN(0, sigma^2)
per link, noise is CN(0, N0), alpha is the lag-one autocorrelation of
the (possibly cascaded) channel seen by the two-sample detector, and
returned probabilities are plain floats in [0, 0.5].
"""

import math

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .detection import CovarianceModel
from .relaylink import ConfigurationError
from .specialfn import bessel_k1, exp_scaled_e1


class NumericalError(ArithmeticError):
    """A numerical procedure failed to meet its accuracy contract."""


_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-9, limit=400)


def _integrate(fn, lo: float, hi: float, label: str) -> float:
    out = quad(fn, lo, hi, full_output=1, **_QUAD_OPTS)
    if len(out) > 3:
        raise NumericalError(f"{label}: {out[3].splitlines()[0]}")
    return out[0]


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigurationError(message)


# === modulation-dependent constants ===

@dataclass(frozen=True)
class UnifiedModParams:
    """Constellation constants (a, b) of the unified differential-PSK
    BER form, with the two integrand factors g and q they induce."""
    m: int
    a: float
    b: float

    def __post_init__(self):
        _require(self.m >= 2, "modulation order must be >= 2")
        _require(0.0 <= self.a < self.b, "requires 0 <= a < b")

    @classmethod
    def from_order(cls, m: int) -> "UnifiedModParams":
        if m == 2:
            return cls(m=2, a=0.0, b=math.sqrt(2.0))
        if m == 4:
            return cls(m=4, a=math.sqrt(2.0 - math.sqrt(2.0)),
                       b=math.sqrt(2.0 + math.sqrt(2.0)))
        raise ConfigurationError(
            f"closed-form constants are available for M in {{2, 4}}, got {m}")

    @property
    def beta(self) -> float:
        return self.a / self.b

    def g(self, theta: float) -> float:
        bt = self.beta
        return (1.0 - bt * bt) / (1.0 + 2.0 * bt * math.sin(theta) + bt * bt)

    def q(self, theta: float) -> float:
        bt = self.beta
        return (self.b * self.b / math.log2(self.m)) * (
            1.0 + 2.0 * bt * math.sin(theta) + bt * bt)


def min_distance_sq(m: int) -> float:
    """Squared distance between nearest PSK constellation points."""
    _require(m >= 2, "modulation order must be >= 2")
    return 4.0 * math.sin(math.pi / m) ** 2


# === dual-hop link, two-symbol detection ===

@dataclass(frozen=True)
class DualHopConstants:
    """Constants of the dual-hop two-symbol-detector BER integrand.

    amp_sq is the squared relay amplification A^2, rho1 the average
    source-relay SNR, alpha the cascade autocorrelation, sigma2_sq the
    relay-destination channel variance.
    """
    amp_sq: float
    p0_over_n0: float
    rho1: float
    alpha: float
    sigma2_sq: float

    def __post_init__(self):
        _require(self.amp_sq > 0 and self.p0_over_n0 > 0 and self.rho1 > 0,
                 "powers must be positive")
        _require(0.0 < self.alpha <= 1.0, "alpha must be in (0, 1]")
        _require(self.sigma2_sq > 0, "channel variance must be positive")

    @classmethod
    def from_link(cls, p0: float, p1: float, n0: float, sigma1_sq: float,
                  sigma2_sq: float, alpha: float) -> "DualHopConstants":
        _require(p0 > 0 and p1 > 0 and n0 > 0 and sigma1_sq > 0,
                 "powers, noise, and variances must be positive")
        return cls(amp_sq=p1 / (p0 * sigma1_sq + n0),
                   p0_over_n0=p0 / n0,
                   rho1=p0 * sigma1_sq / n0,
                   alpha=alpha,
                   sigma2_sq=sigma2_sq)

    def gamma_bar(self, lam2: float) -> float:
        """Effective detector SNR per unit |h1|^2, given |h2|^2."""
        a2 = self.alpha ** 2
        num = a2 * self.amp_sq * self.p0_over_n0 * lam2
        den = 1.0 + a2 + (1.0 + a2 + (1.0 - a2) * self.rho1) * self.amp_sq * lam2
        return num / den

    @property
    def b1(self) -> float:
        a2 = self.alpha ** 2
        return (1.0 + a2) / ((1.0 + a2) * self.amp_sq
                             + (1.0 - a2) * self.amp_sq * self.rho1)

    def b2(self, q_theta: float) -> float:
        a2 = self.alpha ** 2
        return (1.0 + a2) / ((1.0 + a2) / self.b1
                             + a2 * q_theta * self.amp_sq * self.rho1)

    def b3(self, q_theta: float) -> float:
        return self.b2(q_theta) / self.b1


def cdd_ber_dualhop(link: DualHopConstants, mod: UnifiedModParams) -> float:
    """Exact two-symbol-detection BER of a dual-hop link, averaged over
    both hops' Rayleigh gains."""
    b1 = link.b1
    s2 = link.sigma2_sq

    def integrand(theta):
        b2 = link.b2(mod.q(theta))
        x = b2 / s2
        j = (b2 / b1) * (1.0 + ((b1 - b2) / s2) * exp_scaled_e1(x))
        return mod.g(theta) * j

    val = _integrate(integrand, -math.pi, math.pi, "dual-hop BER")
    return val / (4.0 * math.pi)


def cdd_error_floor_dualhop(alpha: float, mod: UnifiedModParams) -> float:
    """High-power BER limit of the dual-hop two-symbol detector."""
    _require(0.0 <= alpha <= 1.0, "alpha must be in [0, 1]")
    if alpha == 1.0:
        return 0.0
    a2 = alpha * alpha

    def integrand(theta):
        return mod.g(theta) * (1.0 - a2) / (a2 * mod.q(theta) + 1.0 - a2)

    val = _integrate(integrand, -math.pi, math.pi, "dual-hop floor")
    return val / (4.0 * math.pi)


# === multiple-symbol detection union bound ===

def msd_pep(s: Sequence[complex], s_hat: Sequence[complex],
            cov: CovarianceModel) -> float:
    """Pairwise probability that the window metric prefers s_hat over
    the transmitted s.

    The decision-metric difference is a Hermitian quadratic form of the
    received window, so its one-sided tail follows from the residues of
    the characteristic function; that inversion is done with the
    64-angle tangent rule, with the contour through half the smallest
    positive pole.
    """
    s = np.asarray(s, dtype=complex)
    sh = np.asarray(s_hat, dtype=complex)
    _require(s.shape == sh.shape == (cov.dimension,),
             "candidate vectors must match the covariance dimension")
    if np.allclose(s, sh, rtol=0.0, atol=1e-12):
        raise ConfigurationError("candidate sequences must differ")

    c_inv = cov.cholesky_upper.conj().T @ cov.cholesky_upper
    d_hat = np.diag(sh) @ c_inv @ np.diag(sh.conj())
    d_ref = np.diag(s) @ c_inv @ np.diag(s.conj())
    sigma_y = np.diag(s) @ cov.matrix @ np.diag(s.conj())
    low = np.linalg.cholesky(sigma_y)
    lams = np.linalg.eigvalsh(low.conj().T @ (d_hat - d_ref) @ low)

    scale = float(np.max(np.abs(lams)))
    lams = lams[np.abs(lams) > 1e-12 * scale]
    negs = lams[lams < 0]
    if negs.size == 0:
        raise NumericalError("quadratic form has no negative pole; "
                             "the error event has vanishing probability")
    c_shift = 0.5 / float(np.max(np.abs(negs)))

    n_angles = 64
    total = 0.0
    for k in range(1, n_angles // 2 + 1):
        tau = math.tan((2 * k - 1) * math.pi / (2 * n_angles))
        t = c_shift * (1.0 + 1j * tau)
        phi = complex(np.prod(1.0 / (1.0 + t * lams)))
        total += phi.real + tau * phi.imag
    return max(total / n_angles, 0.0)


def msd_ber_union(pep: float, n: int, m: int) -> float:
    """Union-bound BER from the dominant-event PEP of an N-symbol
    window of M-PSK."""
    _require(n >= 2, "window length must be >= 2")
    _require(pep >= 0.0, "pep must be non-negative")
    w = 2 * (n - 1) if m == 2 else 4 * (n - 1)
    return w * pep / (math.log2(m) * (n - 1))


# === multi-relay network with a direct link ===

@dataclass(frozen=True)
class MultiNodeConstants:
    """Constants of the multi-relay PEP integrand (unit channel
    variances, unit noise).

    alphas and amps_sq hold the cascade autocorrelation and squared
    amplification of each relay path; d_min_sq is the squared minimum
    constellation distance.
    """
    p0: float
    alpha0: float
    alphas: Tuple[float, ...]
    amps_sq: Tuple[float, ...]
    d_min_sq: float

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "amps_sq",
                           tuple(float(a) for a in self.amps_sq))
        _require(self.p0 > 0, "source power must be positive")
        _require(len(self.alphas) == len(self.amps_sq),
                 "one amplification per relay path")
        ok = all(0.0 <= a <= 1.0 for a in (self.alpha0, *self.alphas))
        _require(ok, "autocorrelations must be in [0, 1]")
        _require(all(a > 0 for a in self.amps_sq),
                 "amplification must be positive")
        _require(self.d_min_sq > 0, "d_min_sq must be positive")

    @property
    def relay_count(self) -> int:
        return len(self.alphas)

    @property
    def gamma0(self) -> float:
        a2 = self.alpha0 ** 2
        p0 = self.p0
        return a2 * p0 / (2.0 * p0 * (1.0 - a2) + 4.0 + 2.0 / p0)

    @property
    def gamma_bar_0(self) -> float:
        return autocorr_snr_ceiling(self.alpha0)

    @property
    def gamma_bar_i(self) -> Tuple[float, ...]:
        return tuple(autocorr_snr_ceiling(a) for a in self.alphas)

    def gamma_i(self, i: int, eta: float) -> float:
        """Relay-path effective SNR given the squared RD gain eta."""
        a2 = self.alphas[i] ** 2
        sig = self.amps_sq[i] * eta + 1.0
        rho = self.amps_sq[i] * self.p0 * eta / sig
        if rho == 0.0:
            return 0.0
        return a2 * rho / (2.0 * rho * (1.0 - a2) + 4.0 + 2.0 / rho)

    def beta_i(self, i: int) -> float:
        a2 = self.alphas[i] ** 2
        amp = self.amps_sq[i]
        return 4.0 / (2.0 * (1.0 - a2) * amp * self.p0 + 4.0 * amp)

    def _relay_denominator(self, i: int, theta: float) -> float:
        a2 = self.alphas[i] ** 2
        amp = self.amps_sq[i]
        return (a2 * amp * self.p0 * self.d_min_sq / math.sin(theta) ** 2
                + 4.0 * (1.0 - a2) * amp * self.p0 + 8.0 * amp)

    def eps_i(self, i: int, theta: float) -> float:
        a2 = self.alphas[i] ** 2
        amp = self.amps_sq[i]
        return (4.0 * (1.0 - a2) * amp * self.p0 + 8.0 * amp) \
            / self._relay_denominator(i, theta)

    def eps_small_i(self, i: int, theta: float) -> float:
        return 8.0 / self._relay_denominator(i, theta)

    def relay_term(self, i: int, theta: float) -> float:
        """RD-gain average of the relay-path MGF factor.

        Uses the high-power form of the path SNR (the 2/rho term of
        gamma_i drops), which keeps the average a single
        exponential-integral expression and errs on the low side, so
        the lower-bound property of the PEP is preserved.
        """
        eps = self.eps_i(i, theta)
        eps_s = self.eps_small_i(i, theta)
        return eps * (1.0 + (self.beta_i(i) - eps_s) * exp_scaled_e1(eps_s))


def autocorr_snr_ceiling(alpha: float) -> float:
    """High-power limit of a link's effective SNR, alpha^2/(2(1-alpha^2))."""
    _require(0.0 <= alpha <= 1.0, "alpha must be in [0, 1]")
    if alpha == 1.0:
        return math.inf
    return alpha * alpha / (2.0 * (1.0 - alpha * alpha))


def multinode_pep_lowerbound(net: MultiNodeConstants) -> float:
    """PEP of the multi-relay combiner with optimum weights; a lower
    bound for the realizable detector, which only knows average noise
    statistics."""
    g0d = net.gamma0 * net.d_min_sq

    def integrand(theta):
        s2 = math.sin(theta) ** 2
        val = 1.0 / (1.0 + g0d / (2.0 * s2))
        for i in range(net.relay_count):
            val *= net.relay_term(i, theta)
        return val

    return _integrate(integrand, 0.0, math.pi / 2, "multi-relay PEP") / math.pi


def _floor_integral(gamma_bars, d_min_sq):
    def integrand(theta):
        s2 = math.sin(theta) ** 2
        val = 1.0
        for g in gamma_bars:
            val /= 1.0 + g * d_min_sq / (2.0 * s2)
        return val

    return _integrate(integrand, 0.0, math.pi / 2, "floor integral") / math.pi


def _floor_all_distinct(gamma_bars, d_min_sq):
    r = len(gamma_bars) - 1
    total = 0.0
    for k, gk in enumerate(gamma_bars):
        prod = 1.0
        for j, gj in enumerate(gamma_bars):
            if j != k:
                prod *= gk - gj
        total += gk ** r / prod * (
            1.0 - math.sqrt(gk * d_min_sq / (2.0 + gk * d_min_sq)))
    return 0.5 * total


def _floor_all_equal(gbar, r, d_min_sq):
    gd = gbar * d_min_sq
    s = sum(math.comb(2 * el, el) * (1.0 / (4.0 + 2.0 * gd)) ** el
            for el in range(r + 1))
    return 0.5 * (1.0 - math.sqrt(gd / (gd + 2.0)) * s)


def _floor_direct_vs_equal_relays(g0, gbar, r, d_min_sq):
    g0d = g0 * d_min_sq
    gd = gbar * d_min_sq
    total = g0 ** r / (2.0 * (g0 - gbar) ** r) * (
        1.0 - math.sqrt(g0d / (g0d + 2.0)))
    for k in range(1, r + 1):
        s = sum(math.comb(2 * el, el) * (1.0 / (4.0 + 2.0 * gd)) ** el
                for el in range(k))
        total -= g0 ** (r - k) * gbar / (2.0 * (g0 - gbar) ** (r - k + 1)) * (
            1.0 - math.sqrt(gd / (gd + 2.0)) * s)
    return total


def multinode_error_floor(relay_count: int, gamma_bars: Sequence[float],
                          d_min_sq: float) -> float:
    """High-power PEP limit of the multi-relay network.

    gamma_bars lists the direct link's SNR ceiling first, then one per
    relay path.  The matching closed form (all distinct, all equal, or
    direct distinct from equal relays) is selected by comparing values
    at relative tolerance 1e-9; configurations the closed forms do not
    cover, or whose near-equal values would make them ill-conditioned,
    fall back to the defining quadrature.
    """
    gb = [float(g) for g in gamma_bars]
    _require(len(gb) == relay_count + 1,
             "need one SNR ceiling for the direct link plus one per relay")
    _require(all(g >= 0 for g in gb), "SNR ceilings must be non-negative")
    _require(d_min_sq > 0, "d_min_sq must be positive")
    if any(math.isinf(g) for g in gb):
        # a non-fading link forces its MGF factor, hence the floor, to zero
        return 0.0
    if relay_count == 0:
        g0d = gb[0] * d_min_sq
        return 0.5 * (1.0 - math.sqrt(g0d / (g0d + 2.0)))

    def close(x, y):
        return math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-12)

    def well_separated(x, y):
        return abs(x - y) > 1e-3 * max(abs(x), abs(y))

    g0, rest = gb[0], gb[1:]
    if all(g > 0 for g in gb):
        if all(close(g0, g) for g in gb):
            return _floor_all_equal(sum(gb) / len(gb), relay_count, d_min_sq)
        pairs = [(x, y) for i, x in enumerate(gb) for y in gb[i + 1:]]
        if all(well_separated(x, y) for x, y in pairs):
            return _floor_all_distinct(gb, d_min_sq)
        relays_equal = all(close(rest[0], g) for g in rest)
        if relays_equal and well_separated(g0, rest[0]):
            return _floor_direct_vs_equal_relays(
                g0, sum(rest) / len(rest), relay_count, d_min_sq)
    return _floor_integral(gb, d_min_sq)


# === selection combining, slow fading ===

def sc_slowfading_ber(p0: float, amp: float, sigma_rd_sq: float,
                      mod: UnifiedModParams, n0: float = 1.0) -> float:
    """Exact BER of two-branch selection combining between the direct
    link and a dual-hop relay link, all channels static over a window."""
    _require(p0 > 0 and amp > 0 and sigma_rd_sq > 0 and n0 > 0,
             "powers, amplification, and variances must be positive")
    a2 = amp * amp * sigma_rd_sq / n0

    def integrand(theta):
        al = 0.5 * mod.q(theta)
        rho = p0 * al / n0
        j1 = 1.0 / (rho + 1.0)
        b1 = 1.0 / a2
        b2 = 1.0 / (a2 * (1.0 + rho))
        j2 = (1.0 / (rho + 1.0)) * (1.0 + (b1 - b2) * exp_scaled_e1(b2))
        d1 = 1.0 / (2.0 * a2)
        d2 = 1.0 / (a2 * (2.0 + rho))
        j3 = (2.0 / (rho + 2.0)) * (1.0 + (d1 - d2) * exp_scaled_e1(d2))
        return mod.g(theta) * (j1 + j2 - j3)

    val = _integrate(integrand, -math.pi, math.pi, "selection-combining BER")
    return val / (4.0 * math.pi)


def sc_outage(gamma_th: float, p0: float, amp: float) -> float:
    """Probability that both selection branches drop below gamma_th."""
    _require(gamma_th > 0, "threshold must be positive")
    _require(p0 > 0 and amp > 0, "power and amplification must be positive")
    x = math.sqrt(4.0 * gamma_th / (amp * amp * p0))
    direct_cdf = 1.0 - math.exp(-gamma_th / p0)
    relayed_cdf = 1.0 - math.exp(-gamma_th / p0) * x * bessel_k1(x)
    return direct_cdf * relayed_cdf


# === selection combining, time-varying channels (binary only) ===

@dataclass(frozen=True)
class ScTvConstants:
    """Constants of the time-varying selection-combining BER terms.

    The direct branch contributes (b0, c0, d0); the relay branch,
    conditioned on the squared RD gain, contributes (b2, c2, d2); the
    remaining fields are the RD-averaged combinations entering the
    three closed-form terms.
    """
    alpha0: float
    alpha: float
    rho0: float
    rho1: float
    amp_sq: float
    sigma2_sq: float
    n0: float = 1.0

    def __post_init__(self):
        _require(0.0 <= self.alpha0 <= 1.0 and 0.0 <= self.alpha <= 1.0,
                 "autocorrelations must be in [0, 1]")
        _require(self.rho0 > 0 and self.rho1 > 0 and self.amp_sq > 0,
                 "SNRs and amplification must be positive")
        _require(self.sigma2_sq > 0 and self.n0 > 0,
                 "variances must be positive")

    @classmethod
    def from_powers(cls, p0: float, p1: float, n0: float, sigma0_sq: float,
                    sigma1_sq: float, sigma2_sq: float, alpha0: float,
                    alpha: float) -> "ScTvConstants":
        return cls(alpha0=alpha0, alpha=alpha,
                   rho0=p0 * sigma0_sq / n0, rho1=p0 * sigma1_sq / n0,
                   amp_sq=p1 / (p0 * sigma1_sq + n0),
                   sigma2_sq=sigma2_sq, n0=n0)

    # direct branch
    @property
    def b0(self) -> float:
        return 1.0 / (self.n0 * (1.0 + self.rho0))

    @property
    def c0(self) -> float:
        return 2.0 / (self.n0 * (1.0 + (1.0 - self.alpha0) * self.rho0))

    @property
    def d0(self) -> float:
        return -2.0 / (self.n0 * (1.0 + (1.0 + self.alpha0) * self.rho0))

    # relay branch, conditioned on lam = |h_rd|^2
    def _relay_noise(self, lam: float) -> Tuple[float, float]:
        sw2 = self.n0 * (1.0 + self.amp_sq * lam)
        rho2 = self.amp_sq * self.rho1 * lam / (1.0 + self.amp_sq * lam)
        return sw2, rho2

    def b2(self, lam: float) -> float:
        sw2, rho2 = self._relay_noise(lam)
        return 1.0 / (sw2 * (rho2 + 1.0))

    def c2(self, lam: float) -> float:
        sw2, rho2 = self._relay_noise(lam)
        return 2.0 / (sw2 * (1.0 + (1.0 - self.alpha) * rho2))

    def d2(self, lam: float) -> float:
        sw2, rho2 = self._relay_noise(lam)
        return -2.0 / (sw2 * (1.0 + (1.0 + self.alpha) * rho2))

    # RD-averaged combinations
    @property
    def cap_b1(self) -> float:
        return 1.0 / (self.amp_sq * (1.0 + (1.0 - self.alpha) * self.rho1))

    @property
    def cap_b2(self) -> float:
        return 1.0 / (self.amp_sq * (1.0 + self.rho1))

    @property
    def _mid_den(self) -> float:
        a, r1 = self.alpha, self.rho1
        return self.amp_sq * (1.0 + (2.0 + a) * r1 + (1.0 + a) * r1 * r1)

    @property
    def tilde_b2(self) -> float:
        a0, a, r0, r1 = self.alpha0, self.alpha, self.rho0, self.rho1
        return ((3.0 + a + (1.0 - a0) * r0) * r1 + 3.0
                + (1.0 - a0) * r0) / self._mid_den

    @property
    def tilde_b3(self) -> float:
        a0, a, r0, r1 = self.alpha0, self.alpha, self.rho0, self.rho1
        return ((1.0 + (1.0 + a) * r1) * (1.0 + (1.0 - a0) * r0)) \
            / (2.0 * self._mid_den)

    @property
    def _last_den(self) -> float:
        a, r1 = self.alpha, self.rho1
        return 1.0 + (2.0 - a) * r1 + (1.0 - a) * r1 * r1

    @property
    def breve_b1(self) -> float:
        return 2.0 / (self.amp_sq * (1.0 + (1.0 - self.alpha) * self.rho1))

    @property
    def breve_b2(self) -> float:
        a0, a, r0, r1 = self.alpha0, self.alpha, self.rho0, self.rho1
        return ((3.0 - a + (1.0 + a0) * r0) * r1 + 3.0
                + (1.0 + a0) * r0) / (self.amp_sq * self._last_den)

    @property
    def breve_b3(self) -> float:
        a0, a, r0, r1 = self.alpha0, self.alpha, self.rho0, self.rho1
        return ((1.0 + (1.0 - a) * r1) ** 2 * (1.0 + (1.0 + a0) * r0)) \
            / (4.0 * (1.0 + r0) * self._last_den)


def sc_timevarying_ber_dbpsk(link: ScTvConstants) -> float:
    """Binary BER of selection combining over time-varying channels,
    as the three-term closed form (direct-error, relay-error, overlap)."""
    s2 = link.sigma2_sq
    b0, c0 = link.b0, link.c0

    x1 = link.cap_b2 / s2
    i1 = (b0 * link.cap_b2 / (2.0 * c0 * link.cap_b1)) * (
        1.0 + ((link.cap_b1 - link.cap_b2) / s2) * exp_scaled_e1(x1))

    x2 = link.tilde_b2 / s2
    i2 = (b0 / c0) * link.tilde_b3 * (1.0 / s2) * exp_scaled_e1(x2)

    x3 = link.breve_b2 / s2
    i3 = link.breve_b3 * (
        1.0 + ((link.breve_b1 - link.breve_b2) / s2) * exp_scaled_e1(x3))

    return i1 + i2 + i3


def sc_tv_error_floor(alpha0: float, alpha: float, q_alloc: float,
                      sigma0_sq: float, sigma2_sq: float) -> float:
    """High-power limit of the time-varying selection-combining BER for
    a source power fraction q_alloc of the total."""
    _require(0.0 <= alpha0 <= 1.0 and 0.0 <= alpha <= 1.0,
             "autocorrelations must be in [0, 1]")
    _require(0.0 < q_alloc < 1.0, "power fraction must be in (0, 1)")
    _require(sigma0_sq > 0 and sigma2_sq > 0, "variances must be positive")

    ratio = q_alloc * sigma0_sq / (1.0 - q_alloc)
    i1 = 0.25 * (1.0 - alpha0) * (1.0 - alpha)

    if alpha0 < 1.0:
        bt2 = ratio * (1.0 - alpha0) / (1.0 + alpha)
        bt3 = 0.5 * ratio * (1.0 - alpha0)
        i2 = ((1.0 - alpha0) / (2.0 * sigma2_sq)) * bt3 \
            * exp_scaled_e1(bt2 / sigma2_sq)
    else:
        i2 = 0.0

    if alpha < 1.0:
        bb2 = ratio * (1.0 + alpha0) / (1.0 - alpha)
        bb3 = 0.25 * (1.0 - alpha) * (1.0 + alpha0)
        x = bb2 / sigma2_sq
        i3 = bb3 * (1.0 - x * exp_scaled_e1(x))
    else:
        i3 = 0.0

    return i1 + i2 + i3


# === distributed space-time coding ===

def dstc_effective_snr(rho: float, alpha: float) -> float:
    """Effective detector SNR gamma = alpha^2 rho/(1+alpha^2+rho(1-alpha^2))."""
    _require(rho >= 0, "rho must be non-negative")
    _require(0.0 <= alpha <= 1.0, "alpha must be in [0, 1]")
    a2 = alpha * alpha
    return a2 * rho / (1.0 + a2 + rho * (1.0 - a2))


@dataclass(frozen=True)
class DstcPepConstants:
    """Constants of the distributed space-time PEP upper bound.

    delta is the smallest eigenvalue of the codeword-difference Gram
    matrix (2 for the binary rotation pair, 1 for the quaternary);
    amp_sq is the squared relay scaling c^2.
    """
    relay_count: int
    alpha: float
    amp_sq: float
    p0_over_n0: float
    sigma_sr_sq: float
    delta: float

    def __post_init__(self):
        _require(self.relay_count >= 1, "need at least one relay")
        _require(0.0 <= self.alpha <= 1.0, "alpha must be in [0, 1]")
        _require(self.amp_sq > 0 and self.p0_over_n0 > 0
                 and self.sigma_sr_sq > 0, "powers must be positive")
        _require(self.delta > 0, "delta must be positive")

    @property
    def _source_gain(self) -> float:
        return self.amp_sq * self.p0_over_n0 * self.sigma_sr_sq

    @property
    def beta1(self) -> float:
        a2 = self.alpha ** 2
        return 8.0 / (4.0 * (1.0 - a2) * self._source_gain + 8.0 * self.amp_sq)

    @property
    def beta2(self) -> float:
        a2 = self.alpha ** 2
        return 8.0 / (a2 * self._source_gain * self.delta
                      + 4.0 * (1.0 - a2) * self._source_gain
                      + 8.0 * self.amp_sq)

    @property
    def gamma_bar(self) -> float:
        """High-power ceiling of the effective SNR, alpha^2/(1-alpha^2)."""
        a2 = self.alpha ** 2
        if a2 == 1.0:
            return math.inf
        return a2 / (1.0 - a2)

    def rho_given_eta(self, eta: float) -> float:
        """Received SNR for a total squared relay-destination gain eta."""
        _require(eta >= 0, "eta must be non-negative")
        return self._source_gain * eta / (1.0 + self.amp_sq * eta)

    def conditional_bound(self, eta: float) -> float:
        """PEP bound conditioned on the relay-destination gains."""
        gamma = dstc_effective_snr(self.rho_given_eta(eta), self.alpha)
        return 0.5 * (4.0 / (4.0 + gamma * self.delta)) ** self.relay_count


def _upper_incomplete_power_scaled(n: int, b: float) -> float:
    # e^b int_b^inf u^n e^-u du for integer n (negative n via E1)
    if n >= 0:
        return sum(math.factorial(n) / math.factorial(m) * b ** m
                   for m in range(n + 1))
    k = -n
    total = (-1.0) ** (k - 1) * exp_scaled_e1(b) / math.factorial(k - 1)
    if k >= 2:
        total += (1.0 / b ** (k - 1)) * sum(
            (-1.0) ** m * b ** m * math.factorial(k - 2 - m)
            / math.factorial(k - 1) for m in range(k - 1))
    return total


def dstc_pep_upperbound(net: DstcPepConstants) -> float:
    """Chernoff-style PEP upper bound for distributed space-time
    relaying, averaged over the Gamma-distributed sum of squared
    relay-destination gains."""
    r = net.relay_count
    b1, b2 = net.beta1, net.beta2
    total = 0.0
    for k in range(r + 1):
        inner = sum(
            math.comb(r - 1, j) * (-b2) ** (r - 1 - j)
            * _upper_incomplete_power_scaled(j - k, b2)
            for j in range(r)) / math.factorial(r - 1)
        total += math.comb(r, k) * (b1 - b2) ** k * inner
    return 0.5 * (b2 / b1) ** r * total


def dstc_error_floor(relay_count: int, alpha: float, delta: float) -> float:
    """High-power limit of the distributed space-time PEP bound."""
    _require(relay_count >= 1, "need at least one relay")
    _require(0.0 <= alpha <= 1.0, "alpha must be in [0, 1]")
    _require(delta > 0, "delta must be positive")
    a2 = alpha * alpha
    if a2 == 1.0:
        return 0.0
    return 0.5 * (4.0 * (1.0 - a2)
                  / (4.0 * (1.0 - a2) + a2 * delta)) ** relay_count


# === power allocation ===

def dualhop_alloc_seed(p_total: float, n0: float, sigma1_sq: float,
                       sigma2_sq: float, mod: UnifiedModParams) -> float:
    """Cheap analytic estimate of the optimum source-power fraction for
    a dual-hop link, from the log-approximated high-SNR BER factor."""
    _require(p_total > 0 and n0 > 0, "powers must be positive")
    q_max = mod.q(math.pi / 2)

    def approx_cost(frac):
        p0 = frac * p_total
        amp_sq = (1.0 - frac) * p_total / (p0 * sigma1_sq + n0)
        bt1 = 1.0 / amp_sq
        bt2 = 2.0 / (2.0 * amp_sq + q_max * amp_sq * (p0 / n0) * sigma1_sq)
        return bt2 / bt1 + (bt2 / sigma2_sq) * math.log(sigma2_sq / bt2)

    grid = [k / 100.0 for k in range(1, 100)]
    return min(grid, key=lambda f: (approx_cost(f), f))


def optimize_power_allocation(ber_of_alloc: Callable[[float], float],
                              seed_guess: Optional[float] = None) -> float:
    """Source-power fraction minimizing a BER functional on (0.01, 0.99).

    Exhaustive 0.01-step grid search (optionally fed one extra seed
    candidate) followed by golden-section refinement of the winning
    cell to width 1e-3; the exhaustive result is authoritative.
    """
    candidates = [k / 100.0 for k in range(1, 100)]
    if seed_guess is not None and 0.01 < seed_guess < 0.99:
        candidates.append(float(seed_guess))

    evaluated = []
    for frac in candidates:
        val = ber_of_alloc(frac)
        if not math.isfinite(val):
            raise NumericalError(
                f"allocation objective is not finite at {frac:.3f}: {val!r}")
        evaluated.append((val, frac))
    best_val, best = min(evaluated)

    lo = max(0.01, best - 0.01)
    hi = min(0.99, best + 0.01)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = ber_of_alloc(x1), ber_of_alloc(x2)
    while hi - lo > 1e-3:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = ber_of_alloc(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = ber_of_alloc(x2)
    mid = 0.5 * (lo + hi)
    return mid if ber_of_alloc(mid) <= best_val else best


def doppler_to_speed(f_norm: float, carrier_hz: float,
                     symbol_s: float) -> float:
    """Mobile speed in km/h matching a normalized Doppler rate at the
    given carrier frequency and symbol duration."""
    _require(carrier_hz > 0 and symbol_s > 0,
             "carrier frequency and symbol time must be positive")
    _require(f_norm >= 0, "normalized Doppler must be non-negative")
    speed_mps = 3.0e8 * (f_norm / symbol_s) / carrier_hz
    return speed_mps * 3.6
