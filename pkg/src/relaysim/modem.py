"""M-PSK alphabets with Gray labeling, unitary codebooks, differential
encoding, and minimum-distance slicing.

Scalar transmission uses s[k] = v[k] s[k-1] with reference s[0] = 1;
matrix transmission uses s[k] = V[k] s[k-1] with reference s[0] = e1.
Gray labels are the binary-reflected code, MSB first, so adjacent
constellation points differ in exactly one bit.
"""

import math

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# how close a complex value must be to an alphabet point to count as a member
MEMBERSHIP_TOL = 1e-9


def _gray(m: int) -> int:
    return m ^ (m >> 1)


def _gray_inverse(g: int) -> int:
    m = 0
    while g:
        m ^= g
        g >>= 1
    return m


@dataclass(frozen=True)
class PskConstellation:
    """M-PSK alphabet e^{j 2 pi m / M} with binary-reflected Gray labels."""
    order: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = self.order
        if m < 2 or (m & (m - 1)) != 0:
            raise ValueError(f"order must be a power of two >= 2, got {m}")
        pts = np.exp(2j * math.pi * np.arange(m) / m)
        # snap values that are exactly representable (0, +-1) so BPSK and
        # QPSK algebra is exact
        re, im = pts.real.copy(), pts.imag.copy()
        for arr in (re, im):
            arr[np.abs(arr) < 1e-12] = 0.0
            arr[np.abs(arr - 1.0) < 1e-12] = 1.0
            arr[np.abs(arr + 1.0) < 1e-12] = -1.0
        pts = re + 1j * im
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @property
    def min_distance_sq(self) -> float:
        """Squared distance between adjacent points, 4 sin^2(pi/M)."""
        return 4.0 * math.sin(math.pi / self.order) ** 2

    def index_of(self, symbol: complex) -> int:
        """Index of `symbol` in the alphabet; rejects non-members."""
        idx = int(np.argmin(np.abs(self.points - symbol)))
        if abs(self.points[idx] - symbol) > MEMBERSHIP_TOL:
            raise ValueError(f"{symbol} is not a point of {self.order}-PSK")
        return idx

    def gray_label(self, index: int) -> int:
        return _gray(index % self.order)

    def index_from_label(self, label: int) -> int:
        return _gray_inverse(label)


@dataclass(frozen=True)
class UnitaryCodebook:
    """Finite set of R x R unitary codewords indexed by enumeration order."""
    dimension: int
    codewords: tuple
    source_constellation: PskConstellation

    def __post_init__(self):
        eye = np.eye(self.dimension)
        for i, v in enumerate(self.codewords):
            if v.shape != (self.dimension, self.dimension):
                raise ValueError(f"codeword {i} has shape {v.shape}")
            if np.linalg.norm(v.conj().T @ v - eye) >= 1e-10:
                raise ValueError(f"codeword {i} is not unitary")

    def __len__(self):
        return len(self.codewords)


def min_distance_detect(decision_var: complex,
                        constellation: PskConstellation) -> complex:
    """Nearest alphabet point to zeta; ties go to the lowest index."""
    if not np.isfinite(decision_var):
        raise ValueError("decision variable must be finite")
    idx = int(np.argmin(np.abs(decision_var - constellation.points)))
    return complex(constellation.points[idx])


def diff_encode(symbols: Sequence[complex],
                constellation: PskConstellation) -> np.ndarray:
    """Differentially encode data symbols: s[0]=1, s[k]=v[k] s[k-1]."""
    out = np.empty(len(symbols) + 1, dtype=complex)
    out[0] = 1.0
    for k, v in enumerate(symbols):
        constellation.index_of(v)
        out[k + 1] = v * out[k]
    return out


def diff_encode_matrix(codewords: Sequence[np.ndarray],
                       dimension: int) -> list:
    """Matrix-differential encoding: s[0]=e1, s[k]=V[k] s[k-1]."""
    s = np.zeros(dimension, dtype=complex)
    s[0] = 1.0
    out = [s]
    for k, v in enumerate(codewords):
        v = np.asarray(v)
        if v.shape != (dimension, dimension):
            raise ValueError(f"codeword {k} has shape {v.shape}, "
                             f"expected ({dimension}, {dimension})")
        out.append(v @ out[-1])
    return out


def alamouti_codeword(u1: complex, u2: complex) -> np.ndarray:
    """Unitary Alamouti matrix (1/sqrt(2)) [[u1, -u2*], [u2, u1*]]."""
    return np.array([[u1, -np.conj(u2)],
                     [u2, np.conj(u1)]]) / math.sqrt(2.0)


def alamouti_codebook(constellation: PskConstellation) -> UnitaryCodebook:
    """All M^2 Alamouti codewords over the constellation, enumerated
    with u1 as the outer index."""
    words = tuple(alamouti_codeword(u1, u2)
                  for u1 in constellation.points
                  for u2 in constellation.points)
    return UnitaryCodebook(dimension=2, codewords=words,
                           source_constellation=constellation)


def map_bits(bits: Sequence[int],
             constellation: PskConstellation) -> np.ndarray:
    """Gray-map a bit stream (MSB first per symbol) to alphabet points."""
    bps = constellation.bits_per_symbol
    bits = np.asarray(bits, dtype=np.int64)
    if len(bits) % bps != 0:
        raise ValueError(f"bit count {len(bits)} is not a multiple of {bps}")
    weights = 1 << np.arange(bps - 1, -1, -1)
    labels = bits.reshape(-1, bps) @ weights
    # vectorized inverse Gray code: prefix xor
    idx = labels.copy()
    shift = 1
    while shift < bps:
        idx ^= idx >> shift
        shift <<= 1
    return constellation.points[idx]


def demap_symbols(symbols: Sequence[complex],
                  constellation: PskConstellation) -> np.ndarray:
    """Slice to the nearest point and emit its Gray label, MSB first."""
    m = constellation.order
    bps = constellation.bits_per_symbol
    z = np.asarray(symbols)
    idx = np.round(np.angle(z) * m / (2.0 * math.pi)).astype(np.int64) % m
    labels = idx ^ (idx >> 1)
    shifts = np.arange(bps - 1, -1, -1)
    return ((labels[:, None] >> shifts[None, :]) & 1).astype(
        np.uint8).reshape(-1)


def gray_bits_roundtrip(bits: Sequence[int],
                        constellation: PskConstellation) -> np.ndarray:
    """Map bits to symbols and demap back; identity on valid input."""
    return demap_symbols(map_bits(bits, constellation), constellation)
