"""Time-correlated Rayleigh fading traces and cascaded-channel statistics.

Traces come from a sum-of-sinusoids generator: each quadrature is a sum
of N1 cosines whose arrival angles a_n = (2 pi n - pi + theta)/(4 N1)
and phases are drawn once per trace, so a trace is a deterministic
function of (spec, seed, sample index). Autocorrelation follows the
Jakes model sigma^2 J0(2 pi f n).

RNG policy (project-wide): numpy Philox keyed through SeedSequence with
tuple spawn paths, `split_stream(seed, *path)`. Philox is counter-based,
so distinct paths give independent streams by construction and
regeneration is bit-reproducible.
"""

import csv
import math

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .specialfn import bessel_j0, bessel_k0


def split_stream(seed: int, *path: int) -> np.random.Generator:
    """Independent substream for (seed, path).

    Every random draw in the package comes from a stream named this
    way; path elements are small integers identifying the consumer
    (link index, SNR index, frame index, ...).
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class FadingSpec:
    """Per-link fading parameters.

    variance: channel power sigma^2.
    normalized_doppler: f = f_D * T_s per channel use.
    sinusoid_count: N1 cosines per quadrature.
    lag_multiplier: channel uses between consecutive symbols of one
        link (1 for symbol-spaced transmission, R for R-symbol blocks).
    """
    variance: float
    normalized_doppler: float
    sinusoid_count: int = 8
    lag_multiplier: int = 1

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"variance must be > 0, got {self.variance}")
        if not 0 <= self.normalized_doppler < 0.5:
            raise ValueError("normalized_doppler must be in [0, 0.5), "
                             f"got {self.normalized_doppler}")
        if self.sinusoid_count < 8:
            raise ValueError("sinusoid_count must be >= 8, "
                             f"got {self.sinusoid_count}")
        if self.lag_multiplier < 1:
            raise ValueError("lag_multiplier must be >= 1")

    @property
    def alpha(self) -> float:
        """Normalized lag-1 autocorrelation J0(2 pi f L)."""
        return bessel_j0(2.0 * math.pi * self.normalized_doppler
                         * self.lag_multiplier)


@dataclass(frozen=True)
class CascadedStats:
    """Second-order statistics of a product (double-Rayleigh) channel."""
    alpha_equiv: float    # alpha1 * alpha2, lag-1 product autocorrelation
    variance: float       # sigma1^2 * sigma2^2

    def __post_init__(self):
        if not abs(self.alpha_equiv) <= 1:
            raise ValueError("alpha_equiv must satisfy |alpha| <= 1, "
                             f"got {self.alpha_equiv}")
        if not self.variance > 0:
            raise ValueError(f"variance must be > 0, got {self.variance}")


@dataclass(frozen=True)
class ChannelTrace:
    """A realized complex-gain sequence plus its provenance.

    Regenerating with the same (spec, seed) reproduces `samples`
    bit-for-bit. Cascaded traces carry `stats` instead of a spec.
    """
    samples: np.ndarray
    spec: Optional[FadingSpec]
    seed: int
    stats: Optional[CascadedStats] = None

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("trace must be non-empty")
        self.samples.setflags(write=False)

    def __len__(self):
        return len(self.samples)

    def to_csv(self, path) -> None:
        """Export as CSV with columns index, re, im."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "re", "im"])
            for i, s in enumerate(self.samples):
                writer.writerow([i, repr(float(s.real)), repr(float(s.imag))])


def jakes_autocorr(lag: int, spec: FadingSpec) -> float:
    """Autocorrelation sigma^2 J0(2 pi f n L) at symbol lag n >= 0."""
    if lag < 0:
        raise ValueError(f"lag must be >= 0, got {lag}")
    return spec.variance * bessel_j0(
        2.0 * math.pi * spec.normalized_doppler * lag * spec.lag_multiplier)


def trace_phases(spec: FadingSpec, seed: int):
    """The per-trace random draws: angle offset theta and phase vectors.

    Split out so chunked generation can evaluate any index range of the
    same trace (the trace is deterministic given these phases).
    """
    rng = split_stream(seed)
    n1 = spec.sinusoid_count
    theta = rng.uniform(-math.pi, math.pi)
    phi = rng.uniform(-math.pi, math.pi, n1)
    psi = rng.uniform(-math.pi, math.pi, n1)
    return theta, phi, psi


def _evaluate(spec: FadingSpec, theta, phi, psi, start: int, length: int):
    n1 = spec.sinusoid_count
    n = np.arange(1, n1 + 1)
    a = (2.0 * math.pi * n - math.pi + theta) / (4.0 * n1)
    k = (np.arange(start, start + length) * spec.lag_multiplier)[:, None]
    w = 2.0 * math.pi * spec.normalized_doppler
    re = np.cos(w * k * np.cos(a)[None, :] + phi[None, :]).sum(axis=1)
    im = np.cos(w * k * np.sin(a)[None, :] + psi[None, :]).sum(axis=1)
    # each quadrature sums to unit variance under sqrt(2/N1); rescale the
    # complex sample to E|h|^2 = spec.variance
    scale = math.sqrt(2.0 / n1) * math.sqrt(spec.variance / 2.0)
    return scale * (re + 1j * im)


def generate_trace(spec: FadingSpec, length: int, seed: int,
                   start: int = 0) -> ChannelTrace:
    """Generate `length` correlated complex gains for one link.

    `start` shifts the absolute sample index without redrawing phases,
    so generate(..., start=0, length=2F) equals the concatenation of
    starts 0 and F - frames can be produced independently.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    theta, phi, psi = trace_phases(spec, seed)
    samples = _evaluate(spec, theta, phi, psi, start, length)
    return ChannelTrace(samples=samples, spec=spec, seed=seed)


def cascade(h1: ChannelTrace, h2: ChannelTrace) -> ChannelTrace:
    """Elementwise product channel h[k] = h1[k] h2[k].

    The product's lag-1 autocorrelation factorizes as alpha1 * alpha2;
    the result carries those CascadedStats.
    """
    if len(h1) != len(h2):
        raise ValueError(f"length mismatch: {len(h1)} vs {len(h2)}")
    if h1.spec is None or h2.spec is None:
        raise ValueError("cascade requires single-hop input traces")
    stats = CascadedStats(alpha_equiv=h1.spec.alpha * h2.spec.alpha,
                          variance=h1.spec.variance * h2.spec.variance)
    return ChannelTrace(samples=h1.samples * h2.samples, spec=None,
                        seed=h1.seed, stats=stats)


def double_rayleigh_envelope_pdf(lam: float, sigma1_sq: float,
                                 sigma2_sq: float) -> float:
    """Envelope density of a product of two independent Rayleigh gains.

    f(lam) = (4 lam/(sigma1^2 sigma2^2)) K0(2 lam/(sigma1 sigma2));
    the lam -> 0 limit is 0.
    """
    if not (sigma1_sq > 0 and sigma2_sq > 0):
        raise ValueError("variances must be positive")
    if lam < 0:
        raise ValueError(f"envelope must be >= 0, got {lam}")
    if lam == 0.0:
        return 0.0
    s12 = math.sqrt(sigma1_sq * sigma2_sq)
    return (4.0 * lam / (sigma1_sq * sigma2_sq)) * bessel_k0(2.0 * lam / s12)


def ar1_step(prev: complex, alpha: float, innovation: complex) -> complex:
    """One step of the first-order autoregressive fading model."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * prev + math.sqrt(1.0 - alpha * alpha) * innovation
