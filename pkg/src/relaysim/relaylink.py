"""Signal-path simulators for amplify-and-forward relay topologies.

Three topologies share one convention: the source spends P0, relay i
spends its entry of relay_powers, and every receiver adds CN(0, N0)
noise. Relays are fixed-gain: the amplification factor depends only on
the source-relay channel variance, never on the instantaneous gain.

Noise streams split per link from the caller's seed so that adding a
link never changes the noise another link sees:
  (seed, 0)        direct-phase destination noise
  (seed, 2i + 1)   relay i input noise
  (seed, 2i + 2)   destination noise in relay i's retransmission slot
                   (DSTC uses slot 2: all relays share one phase).
"""

import math

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelTrace, split_stream


class ConfigurationError(ValueError):
    """A structurally invalid simulation setup."""


@dataclass(frozen=True)
class LinkBudget:
    """Power split P = P0 + sum(P_i) plus the noise density N0."""
    source_power: float
    relay_powers: Tuple[float, ...]
    noise_density: float

    def __post_init__(self):
        object.__setattr__(self, "relay_powers",
                           tuple(float(p) for p in self.relay_powers))
        if not self.source_power > 0:
            raise ValueError("source_power must be > 0")
        if not self.relay_powers or any(p <= 0 for p in self.relay_powers):
            raise ValueError("every relay power must be > 0")
        if not self.noise_density > 0:
            raise ValueError("noise_density must be > 0")

    @property
    def total_power(self) -> float:
        return self.source_power + sum(self.relay_powers)

    @property
    def alloc_factor(self) -> float:
        """Source share q = P0/P, in (0, 1)."""
        return self.source_power / self.total_power

    @classmethod
    def split(cls, total_power: float, alloc_factor: float,
              n_relays: int = 1, noise_density: float = 1.0) -> "LinkBudget":
        """Allocate q P to the source and share the rest equally."""
        if not 0.0 < alloc_factor < 1.0:
            raise ValueError("alloc_factor must be in (0, 1)")
        p0 = alloc_factor * total_power
        pr = (total_power - p0) / n_relays
        return cls(source_power=p0, relay_powers=(pr,) * n_relays,
                   noise_density=noise_density)


@dataclass(frozen=True)
class SnrSummary:
    """Average received SNRs per symbol at each stage of the network."""
    rho0: float                # direct link, P0 sigma0^2 / N0
    rho1: float                # source-relay, P0 sigma_sr^2 / N0
    rho2_given_h2: float       # cascaded link conditioned on |h2|
    rho_dstc_given_g: float    # DSTC conditioned on the RD gains

    def __post_init__(self):
        for name in ("rho0", "rho1", "rho2_given_h2", "rho_dstc_given_g"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def amp_factor(budget: LinkBudget, sigma_sr_sq: float,
               relay_index: int = 0) -> float:
    """Fixed relay gain A = sqrt(P_i / (P0 sigma_sr^2 + N0)).

    The same formula gives the DSTC scale c when relay powers carry the
    per-relay share P/(2R).
    """
    p_i = budget.relay_powers[relay_index]
    return math.sqrt(p_i / (budget.source_power * sigma_sr_sq
                            + budget.noise_density))


def snr_summary(budget: LinkBudget, sigma_sd_sq: float, sigma_sr_sq: float,
                h2_gain_sq: float = 0.0,
                g_gain_sq_sum: float = 0.0) -> SnrSummary:
    """Evaluate the per-stage SNRs for one channel state."""
    p0, n0 = budget.source_power, budget.noise_density
    rho0 = p0 * sigma_sd_sq / n0
    rho1 = p0 * sigma_sr_sq / n0
    a_sq = amp_factor(budget, sigma_sr_sq) ** 2
    rho2 = a_sq * rho1 * h2_gain_sq / (1.0 + a_sq * h2_gain_sq)
    rho_dstc = (p0 * sigma_sr_sq * a_sq * g_gain_sq_sum
                / (n0 * (1.0 + a_sq * g_gain_sq_sum)))
    return SnrSummary(rho0=rho0, rho1=rho1, rho2_given_h2=rho2,
                      rho_dstc_given_g=rho_dstc)


def _noise(seed: int, stream: int, shape) -> np.ndarray:
    rng = split_stream(seed, stream)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / math.sqrt(2.0)


def _relayed_sequence(trace_sr, trace_rd, tx, budget, noise_seed,
                      relay_index):
    """One amplified branch: y = A sqrt(P0) h1 h2 s + A h2 w1 + w2."""
    h1, h2 = trace_sr.samples, trace_rd.samples
    a = amp_factor(budget, trace_sr.spec.variance, relay_index)
    n0 = budget.noise_density
    w1 = math.sqrt(n0) * _noise(noise_seed, 2 * relay_index + 1, len(tx))
    w2 = math.sqrt(n0) * _noise(noise_seed, 2 * relay_index + 2, len(tx))
    return (a * math.sqrt(budget.source_power) * h1 * h2 * np.asarray(tx)
            + a * h2 * w1 + w2)


def simulate_dualhop(trace_sr: ChannelTrace, trace_rd: ChannelTrace,
                     tx: Sequence[complex], budget: LinkBudget,
                     noise_seed: int) -> np.ndarray:
    """Source -> relay -> destination with no direct link."""
    if not len(trace_sr) == len(trace_rd) == len(tx):
        raise ValueError("traces and tx must have equal length")
    return _relayed_sequence(trace_sr, trace_rd, tx, budget, noise_seed, 0)


def simulate_threenode(trace_sd: ChannelTrace, trace_sr: ChannelTrace,
                       trace_rd: ChannelTrace, tx: Sequence[complex],
                       budget: LinkBudget, noise_seed: int):
    """Direct link plus one relayed branch, independent noises."""
    y0, relayed = simulate_multinode(trace_sd, [trace_sr], [trace_rd], tx,
                                     budget, noise_seed)
    return y0, relayed[0]


def simulate_multinode(trace_sd: ChannelTrace,
                       traces_sr: Sequence[ChannelTrace],
                       traces_rd: Sequence[ChannelTrace],
                       tx: Sequence[complex], budget: LinkBudget,
                       noise_seed: int):
    """Direct link plus R relayed branches, one retransmission slot each."""
    if len(traces_sr) != len(traces_rd):
        raise ValueError("need one RD trace per SR trace")
    if len(traces_sr) != len(budget.relay_powers):
        raise ConfigurationError(
            f"{len(traces_sr)} relay traces but "
            f"{len(budget.relay_powers)} relay powers")
    lengths = {len(t) for t in [trace_sd, *traces_sr, *traces_rd]}
    if lengths != {len(tx)}:
        raise ValueError("traces and tx must have equal length")
    tx = np.asarray(tx)
    n0 = budget.noise_density
    w0 = math.sqrt(n0) * _noise(noise_seed, 0, len(tx))
    y0 = math.sqrt(budget.source_power) * trace_sd.samples * tx + w0
    relayed = [
        _relayed_sequence(traces_sr[i], traces_rd[i], tx, budget,
                          noise_seed, i)
        for i in range(len(traces_sr))
    ]
    return y0, relayed


def validate_combiners(combiners, dimension: int) -> list:
    """Check the relay matrix pairs (A_i, B_i).

    Exactly one of each pair must be unitary and the other zero; the
    unitary one decides whether the relay forwards r or r*.
    """
    eye = np.eye(dimension)
    parsed = []
    for i, (a_mat, b_mat) in enumerate(combiners):
        a_mat, b_mat = np.asarray(a_mat), np.asarray(b_mat)
        if a_mat.shape != (dimension, dimension) or \
                b_mat.shape != (dimension, dimension):
            raise ConfigurationError(f"combiner {i} has wrong dimensions")
        a_unitary = np.linalg.norm(a_mat.conj().T @ a_mat - eye) < 1e-10
        b_unitary = np.linalg.norm(b_mat.conj().T @ b_mat - eye) < 1e-10
        a_zero = not a_mat.any()
        b_zero = not b_mat.any()
        if a_unitary and b_zero:
            parsed.append((a_mat, False))
        elif a_zero and b_unitary:
            parsed.append((b_mat, True))
        else:
            raise ConfigurationError(
                f"combiner {i}: need A unitary with B zero, or A zero "
                "with B unitary")
    return parsed


def dstc_codeword_matrix(s: np.ndarray, parsed_combiners) -> np.ndarray:
    """Space-time matrix with column i = A_i s (or B_i s* for
    conjugating relays)."""
    cols = [mat @ (np.conj(s) if conj else s)
            for mat, conj in parsed_combiners]
    return np.stack(cols, axis=1)


def effective_dstc_channel(f: np.ndarray, g: np.ndarray,
                           parsed_combiners) -> np.ndarray:
    """Entry i is f_i g_i, with f conjugated for conjugating relays."""
    out = np.empty(len(parsed_combiners), dtype=complex)
    for i, (_, conj) in enumerate(parsed_combiners):
        out[i] = (np.conj(f[i]) if conj else f[i]) * g[i]
    return out


def simulate_dstc(traces_sr: Sequence[ChannelTrace],
                  traces_rd: Sequence[ChannelTrace],
                  tx_vectors: Sequence[np.ndarray], budget: LinkBudget,
                  combiners, noise_seed: int) -> np.ndarray:
    """Distributed space-time transmission, quasi-static per block.

    Block k sees y[k] = c sqrt(P0 R) S[k] h[k] + w[k] where column i of
    S[k] is relay i's combiner applied to s[k], h[k] stacks the
    cascaded gains, and w[k] has conditional variance
    N0 (1 + c^2 sum |g_i|^2) per entry.
    """
    r = len(traces_sr)
    if len(traces_rd) != r or len(budget.relay_powers) != r:
        raise ConfigurationError("need matching SR/RD traces and powers")
    parsed = validate_combiners(combiners, r)
    if len(parsed) != r:
        raise ConfigurationError(f"need {r} combiner pairs")
    n_blocks = len(tx_vectors)
    if any(len(t) < n_blocks for t in [*traces_sr, *traces_rd]):
        raise ValueError("traces shorter than the block sequence")
    c = amp_factor(budget, traces_sr[0].spec.variance, 0)
    n0 = budget.noise_density
    scale = c * math.sqrt(budget.source_power * r)
    w_relay = [math.sqrt(n0) * _noise(noise_seed, 2 * i + 1, (n_blocks, r))
               for i in range(r)]
    w_dest = math.sqrt(n0) * _noise(noise_seed, 2, (n_blocks, r))
    y = np.empty((n_blocks, r), dtype=complex)
    for k, s in enumerate(tx_vectors):
        f = np.array([t.samples[k] for t in traces_sr])
        g = np.array([t.samples[k] for t in traces_rd])
        s_mat = dstc_codeword_matrix(np.asarray(s), parsed)
        h = effective_dstc_channel(f, g, parsed)
        w = w_dest[k].copy()
        for i, (mat, conj) in enumerate(parsed):
            wi = np.conj(w_relay[i][k]) if conj else w_relay[i][k]
            w += c * g[i] * (mat @ wi)
        y[k] = scale * (s_mat @ h) + w
    return y
