"""Monte Carlo BER sweep engine, experiment configuration, and result
persistence.

A sweep point simulates fixed-size frames until the stop rule fires
(min_bit_errors collected, or max_frames reached) and pairs the
simulated BER with the matching closed form from the analysis module
when one exists for the configuration.

Reproducibility contract: a (config, seed) pair produces bit-identical
BerCurves and output files regardless of the worker-thread count. All
randomness derives from named Philox substreams:
  (seed, 1, snr_index, link_id)      fading phases of one link (drawn
                                     once per point; frame chunks
                                     evaluate the same trace at
                                     absolute sample indices)
  (seed, 2, snr_index, frame_index)  noise streams of one frame
  (seed, 3, snr_index, frame_index)  data bits of one frame
Frames are merged in index order and contribute integer counts, so the
aggregate is independent of evaluation order. RELAYSIM_THREADS caps
how many frames of a batch run concurrently.
"""

import hashlib
import json
import math
import os

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .analysis import (DstcPepConstants, DualHopConstants,
                       MultiNodeConstants, ScTvConstants, UnifiedModParams,
                       autocorr_snr_ceiling, cdd_ber_dualhop,
                       cdd_error_floor_dualhop, dstc_error_floor,
                       dstc_pep_upperbound, min_distance_sq,
                       multinode_error_floor, multinode_pep_lowerbound,
                       sc_slowfading_ber, sc_timevarying_ber_dbpsk,
                       sc_tv_error_floor)
from .channel import FadingSpec, generate_trace, split_stream
from .detection import (DetectionWindow, build_mcdsd_covariance,
                        build_msdsd_covariance, mcdsd_dstc, msdsd_dualhop,
                        semi_mrc_weights, tvd_weights)
from .modem import (PskConstellation, alamouti_codebook, demap_symbols,
                    diff_encode, diff_encode_matrix, map_bits)
from .relaylink import (ConfigurationError, LinkBudget, amp_factor,
                        simulate_dstc, simulate_dualhop, simulate_multinode)

CSV_VERSION = "relaysim-csv v1"
JSON_VERSION = "relaysim-json v1"
CSV_COLUMNS = ("snr_db", "bits", "bit_errors", "ber_sim", "ber_analytic",
               "floor_analytic", "seed", "config_digest")

TOPOLOGIES = ("dualhop", "threenode", "multinode", "dstc")
DETECTORS = ("cdd", "semi_mrc", "tvd_mrc", "sc", "msdsd", "two_codeword",
             "mcdsd")
# which topologies each detector can drive
COMPATIBLE = {
    "cdd": ("dualhop",),
    "msdsd": ("dualhop",),
    "semi_mrc": ("threenode", "multinode"),
    "tvd_mrc": ("threenode", "multinode"),
    "sc": ("threenode",),
    "two_codeword": ("dstc",),
    "mcdsd": ("dstc",),
}
# how the attached analytic value relates to the simulated BER
ANALYTIC_LABEL = {
    ("dualhop", "cdd"): "exact",
    ("threenode", "semi_mrc"): "lower bound",
    ("threenode", "tvd_mrc"): "lower bound",
    ("multinode", "semi_mrc"): "lower bound",
    ("multinode", "tvd_mrc"): "lower bound",
    ("threenode", "sc"): "approximation",
    ("dstc", "two_codeword"): "upper bound",
}

# data symbols (or codeword blocks) per frame; window detectors round up
# to a whole number of windows
FRAME_SYMBOLS = 512
FRAME_BLOCKS = 256
# frames per stop-rule check; fixed so the set of simulated frames never
# depends on the thread count
FRAME_BATCH = 8


class SchemaError(ConfigurationError):
    """A config document that does not match the published schema."""


@dataclass(frozen=True)
class StopRule:
    """Per-point termination: enough bit errors, or a frame cap."""
    min_bit_errors: int = 100
    max_frames: int = 10_000_000

    def __post_init__(self):
        if self.min_bit_errors < 1:
            raise ConfigurationError("min_bit_errors must be >= 1")
        if self.max_frames < 1:
            raise ConfigurationError("max_frames must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    """One experiment: topology, detector, modulation, fading, and sweep.

    fading maps link names to FadingSpec values: dualhop uses {sr, rd},
    threenode {sd, sr, rd}, multinode {sd, sr, rd} with sr/rd either a
    single spec (shared by all relays) or one per relay, dstc {sr, rd}
    likewise. For dstc the specs are re-created at block spacing
    (lag_multiplier = relay_count), since relays transmit one block per
    relay_count channel uses.

    sweep_db lists total-power-to-noise ratios P/N0 in dB, strictly
    increasing; alloc_factor is the source share q = P0/P, the rest
    split equally over the relays.
    """
    topology: str
    detector: str
    modulation_order: int
    fading: Mapping
    sweep_db: Tuple[float, ...]
    alloc_factor: float = 0.5
    noise_density: float = 1.0
    relay_count: int = 1
    window_size: Optional[int] = None
    stop: StopRule = field(default_factory=StopRule)
    seed: int = 1

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigurationError(f"unknown topology {self.topology!r}")
        if self.detector not in DETECTORS:
            raise ConfigurationError(f"unknown detector {self.detector!r}")
        if self.topology not in COMPATIBLE[self.detector]:
            raise ConfigurationError(
                f"detector {self.detector!r} cannot drive topology "
                f"{self.topology!r}")
        if self.modulation_order not in (2, 4):
            raise ConfigurationError(
                f"modulation_order must be 2 or 4, got {self.modulation_order}")
        sweep = tuple(float(s) for s in self.sweep_db)
        object.__setattr__(self, "sweep_db", sweep)
        if not sweep:
            raise ConfigurationError("sweep_db must not be empty")
        if not all(math.isfinite(s) for s in sweep):
            raise ConfigurationError("sweep_db entries must be finite")
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise ConfigurationError("sweep_db must be strictly increasing")
        if not 0.0 < self.alloc_factor < 1.0:
            raise ConfigurationError("alloc_factor must be in (0, 1)")
        if not self.noise_density > 0:
            raise ConfigurationError("noise_density must be > 0")
        if self.topology in ("dualhop", "threenode") and self.relay_count != 1:
            raise ConfigurationError(
                f"{self.topology} topology has exactly one relay")
        if self.topology == "multinode" and self.relay_count < 1:
            raise ConfigurationError("multinode needs relay_count >= 1")
        if self.topology == "dstc" and self.relay_count != 2:
            raise ConfigurationError(
                "dstc topology needs relay_count = 2 (one relay per "
                "codeword column)")
        if self.detector in ("msdsd", "mcdsd"):
            if self.window_size is None or self.window_size < 2:
                raise ConfigurationError(
                    f"{self.detector} needs window_size >= 2")
        elif self.window_size is not None:
            raise ConfigurationError(
                f"detector {self.detector!r} takes no window_size")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "fading", self._canonical_fading())

    def _canonical_fading(self) -> dict:
        required = {"dualhop": ("sr", "rd"), "threenode": ("sd", "sr", "rd"),
                    "multinode": ("sd", "sr", "rd"), "dstc": ("sr", "rd")}
        keys = required[self.topology]
        if set(self.fading) != set(keys):
            raise ConfigurationError(
                f"{self.topology} fading needs exactly the links "
                f"{sorted(keys)}, got {sorted(self.fading)}")
        out = {}
        for key in keys:
            value = self.fading[key]
            per_relay = (key in ("sr", "rd")
                         and self.topology in ("multinode", "dstc"))
            if per_relay:
                specs = (value,) * self.relay_count \
                    if isinstance(value, FadingSpec) else tuple(value)
                if len(specs) != self.relay_count:
                    raise ConfigurationError(
                        f"fading[{key!r}] needs {self.relay_count} specs, "
                        f"got {len(specs)}")
            else:
                specs = (value,)
            if not all(isinstance(s, FadingSpec) for s in specs):
                raise ConfigurationError(
                    f"fading[{key!r}] must hold FadingSpec values")
            if self.topology == "dstc":
                specs = tuple(replace(s, lag_multiplier=self.relay_count)
                              for s in specs)
            elif any(s.lag_multiplier != 1 for s in specs):
                raise ConfigurationError(
                    "lag_multiplier is derived from the topology; leave it 1")
            out[key] = specs if per_relay else specs[0]
        return out

    def to_json_dict(self) -> dict:
        """Plain-dict form matching the published config schema."""
        def spec_dict(s: FadingSpec) -> dict:
            return {"variance": s.variance,
                    "normalized_doppler": s.normalized_doppler,
                    "sinusoid_count": s.sinusoid_count}

        fading = {}
        for key, value in self.fading.items():
            fading[key] = [spec_dict(s) for s in value] \
                if isinstance(value, tuple) else spec_dict(value)
        out = {
            "topology": self.topology,
            "detector": self.detector,
            "modulation_order": self.modulation_order,
            "relay_count": self.relay_count,
            "fading": fading,
            "budget": {"total_power_db": list(self.sweep_db),
                       "alloc_factor": self.alloc_factor,
                       "noise_density": self.noise_density},
            "stop": {"min_bit_errors": self.stop.min_bit_errors,
                     "max_frames": self.stop.max_frames},
            "seed": self.seed,
        }
        if self.window_size is not None:
            out["window_size"] = self.window_size
        return out

    def digest(self) -> str:
        """16-hex-digit hash of the canonical config document."""
        blob = json.dumps(self.to_json_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _schema_require(cond: bool, message: str):
    if not cond:
        raise SchemaError(message)


def _parse_spec(obj, where: str) -> FadingSpec:
    _schema_require(isinstance(obj, dict), f"{where} must be an object")
    allowed = {"variance", "normalized_doppler", "sinusoid_count"}
    unknown = set(obj) - allowed
    _schema_require(not unknown, f"{where} has unknown keys {sorted(unknown)}")
    _schema_require("variance" in obj and "normalized_doppler" in obj,
                    f"{where} needs variance and normalized_doppler")
    for key in obj:
        want = int if key == "sinusoid_count" else (int, float)
        _schema_require(isinstance(obj[key], want) and
                        not isinstance(obj[key], bool),
                        f"{where}.{key} must be a number")
    try:
        return FadingSpec(variance=float(obj["variance"]),
                          normalized_doppler=float(obj["normalized_doppler"]),
                          sinusoid_count=int(obj.get("sinusoid_count", 8)))
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}")


def config_from_json(obj) -> SimConfig:
    """Validate a config document and build the SimConfig it describes."""
    _schema_require(isinstance(obj, dict), "config must be a JSON object")
    allowed = {"topology", "detector", "modulation_order", "relay_count",
               "window_size", "fading", "budget", "stop", "seed"}
    unknown = set(obj) - allowed
    _schema_require(not unknown, f"unknown config keys {sorted(unknown)}")
    for key in ("topology", "detector", "fading", "budget"):
        _schema_require(key in obj, f"config needs the {key!r} key")
    _schema_require(isinstance(obj["topology"], str), "topology must be a string")
    _schema_require(isinstance(obj["detector"], str), "detector must be a string")

    fading_obj = obj["fading"]
    _schema_require(isinstance(fading_obj, dict), "fading must be an object")
    fading = {}
    for key, value in fading_obj.items():
        if isinstance(value, list):
            fading[key] = tuple(_parse_spec(v, f"fading.{key}[{i}]")
                                for i, v in enumerate(value))
        else:
            fading[key] = _parse_spec(value, f"fading.{key}")

    budget = obj["budget"]
    _schema_require(isinstance(budget, dict), "budget must be an object")
    unknown = set(budget) - {"total_power_db", "alloc_factor", "noise_density"}
    _schema_require(not unknown, f"unknown budget keys {sorted(unknown)}")
    sweep = budget.get("total_power_db")
    _schema_require(isinstance(sweep, list) and
                    all(isinstance(s, (int, float)) and
                        not isinstance(s, bool) for s in sweep),
                    "budget.total_power_db must be a list of numbers")

    stop_obj = obj.get("stop", {})
    _schema_require(isinstance(stop_obj, dict), "stop must be an object")
    unknown = set(stop_obj) - {"min_bit_errors", "max_frames"}
    _schema_require(not unknown, f"unknown stop keys {sorted(unknown)}")
    for key in stop_obj:
        _schema_require(isinstance(stop_obj[key], int) and
                        not isinstance(stop_obj[key], bool),
                        f"stop.{key} must be an integer")

    for key, want in (("modulation_order", int), ("relay_count", int),
                      ("window_size", int), ("seed", int),
                      ("alloc_factor", (int, float)),
                      ("noise_density", (int, float))):
        holder = budget if key in ("alloc_factor", "noise_density") else obj
        if key in holder and holder[key] is not None:
            _schema_require(isinstance(holder[key], want) and
                            not isinstance(holder[key], bool),
                            f"{key} must be of type {want}")

    try:
        return SimConfig(
            topology=obj["topology"],
            detector=obj["detector"],
            modulation_order=obj.get("modulation_order", 2),
            fading=fading,
            sweep_db=tuple(float(s) for s in sweep),
            alloc_factor=float(budget.get("alloc_factor", 0.5)),
            noise_density=float(budget.get("noise_density", 1.0)),
            relay_count=obj.get("relay_count",
                                2 if obj["topology"] == "dstc" else 1),
            window_size=obj.get("window_size"),
            stop=StopRule(**stop_obj),
            seed=obj.get("seed", 1),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(str(exc))


@dataclass(frozen=True)
class BerPoint:
    """One sweep point: simulated counts plus any matching closed forms."""
    snr_db: float
    bits: int
    bit_errors: int
    ber_sim: float
    ber_analytic: Optional[float] = None
    floor_analytic: Optional[float] = None
    stop_rule: str = "min_bit_errors"

    def __post_init__(self):
        if self.bits <= 0:
            raise ConfigurationError("bits must be > 0")
        if not 0 <= self.bit_errors <= self.bits:
            raise ConfigurationError("bit_errors must be in [0, bits]")
        if self.ber_sim != self.bit_errors / self.bits:
            raise ConfigurationError("ber_sim must equal bit_errors/bits")
        if self.stop_rule not in ("min_bit_errors", "max_frames"):
            raise ConfigurationError(f"unknown stop rule {self.stop_rule!r}")


@dataclass(frozen=True)
class BerCurve:
    """Swept points plus the identity of the run that produced them."""
    points: Tuple[BerPoint, ...]
    config_digest: str
    seed: int
    analytic_label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))


def _derived_seed(seed: int, *path: int) -> int:
    """64-bit child seed for a named substream."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2 ** 64 - 1),
                                spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def _thread_count() -> int:
    raw = os.environ.get("RELAYSIM_THREADS", "")
    if not raw:
        return 1
    try:
        return max(1, min(int(raw), FRAME_BATCH))
    except ValueError:
        raise ConfigurationError(
            f"RELAYSIM_THREADS must be an integer, got {raw!r}")


def _point_indices(points: np.ndarray, order: int) -> np.ndarray:
    # constellation points are snapped, so angle rounding is exact
    idx = np.round(np.angle(points) * order / (2.0 * math.pi))
    return idx.astype(np.int64) % order


class _Runner:
    """Per-config state shared by every sweep point."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.constellation = PskConstellation(config.modulation_order)
        self.bps = self.constellation.bits_per_symbol
        if config.topology == "dstc":
            self.codebook = alamouti_codebook(self.constellation)
            eye = np.eye(2)
            zero = np.zeros((2, 2))
            rot = np.array([[0.0, -1.0], [1.0, 0.0]])
            # relay 0 forwards its reception, relay 1 a rotated conjugate,
            # which makes the codeword matrix orthogonal by design
            self.combiners = ((eye, zero), (zero, rot))
        self.analytic_label = ANALYTIC_LABEL.get(
            (config.topology, config.detector))
        n = config.window_size
        if config.detector == "msdsd":
            self.windows_per_frame = -(-FRAME_SYMBOLS // (n - 1))
        elif config.detector == "mcdsd":
            self.windows_per_frame = -(-FRAME_BLOCKS // (n - 1))

    # --- link bookkeeping -------------------------------------------------

    def _link_specs(self):
        """Ordered (link_id, spec) pairs; ids key the fading substreams."""
        fading = self.config.fading
        if self.config.topology == "dualhop":
            return [(0, fading["sr"]), (1, fading["rd"])]
        if self.config.topology == "dstc":
            out = []
            for i in range(self.config.relay_count):
                out.append((2 * i, fading["sr"][i]))
                out.append((2 * i + 1, fading["rd"][i]))
            return out
        out = [(0, fading["sd"])]
        for i in range(self.config.relay_count):
            sr = fading["sr"][i] if self.config.topology == "multinode" \
                else fading["sr"]
            rd = fading["rd"][i] if self.config.topology == "multinode" \
                else fading["rd"]
            out.append((2 * i + 1, sr))
            out.append((2 * i + 2, rd))
        return out

    def _traces(self, snr_index: int, frame_index: int, length: int) -> dict:
        seed = self.config.seed
        return {
            link_id: generate_trace(spec, length,
                                    _derived_seed(seed, 1, snr_index, link_id),
                                    start=frame_index * length)
            for link_id, spec in self._link_specs()
        }

    def _frame_rng(self, snr_index: int, frame_index: int):
        return split_stream(self.config.seed, 3, snr_index, frame_index)

    def _noise_seed(self, snr_index: int, frame_index: int) -> int:
        return _derived_seed(self.config.seed, 2, snr_index, frame_index)

    def _budget(self, snr_db: float) -> LinkBudget:
        n_relays = self.config.relay_count
        total = self.config.noise_density * 10.0 ** (snr_db / 10.0)
        return LinkBudget.split(total, self.config.alloc_factor,
                                n_relays=n_relays,
                                noise_density=self.config.noise_density)

    # --- frame simulators ---------------------------------------------------

    def _scalar_frame(self, budget, snr_index, frame_index, point):
        """One frame of the scalar detectors; returns (bits, errors)."""
        cfg = self.config
        n_data = FRAME_SYMBOLS
        if cfg.detector == "msdsd":
            n_data = self.windows_per_frame * (cfg.window_size - 1)
        length = n_data + 1
        bits = self._frame_rng(snr_index, frame_index).integers(
            0, 2, n_data * self.bps, dtype=np.uint8)
        tx = diff_encode(map_bits(bits, self.constellation),
                         self.constellation)
        traces = self._traces(snr_index, frame_index, length)
        noise_seed = self._noise_seed(snr_index, frame_index)

        if cfg.topology == "dualhop":
            y = simulate_dualhop(traces[0], traces[1], tx, budget, noise_seed)
            if cfg.detector == "cdd":
                # argmin_v |y[k] - v y[k-1]| is angle slicing of the
                # product statistic
                zeta = np.conj(y[:-1]) * y[1:]
                bits_hat = demap_symbols(zeta, self.constellation)
            else:
                n = cfg.window_size
                v_hat = np.empty(n_data, dtype=complex)
                for w in range(self.windows_per_frame):
                    lo = w * (n - 1)
                    window = DetectionWindow(y[lo:lo + n], n)
                    v_hat[lo:lo + n - 1] = msdsd_dualhop(
                        window, point["cov"], self.constellation)
                bits_hat = demap_symbols(v_hat, self.constellation)
        else:
            r = cfg.relay_count
            y0, relayed = simulate_multinode(
                traces[0], [traces[2 * i + 1] for i in range(r)],
                [traces[2 * i + 2] for i in range(r)], tx, budget, noise_seed)
            zeta0 = np.conj(y0[:-1]) * y0[1:]
            zetas = [np.conj(y[:-1]) * y[1:] for y in relayed]
            if cfg.detector == "sc":
                z2 = zetas[0]
                if cfg.modulation_order == 2:
                    sel = np.where(np.abs(z2.real) > np.abs(zeta0.real),
                                   z2.real, zeta0.real)
                else:
                    sel = np.where(np.abs(z2) > np.abs(zeta0), z2, zeta0)
            else:
                weights = point["weights"]
                sel = weights.b0 * zeta0
                for b, z in zip(weights.b_i, zetas):
                    sel = sel + b * z
            bits_hat = demap_symbols(sel, self.constellation)

        return len(bits), int(np.count_nonzero(bits_hat != bits))

    def _dstc_frame(self, budget, snr_index, frame_index, point):
        """One frame of DSTC blocks; returns (bits, errors)."""
        cfg = self.config
        m = cfg.modulation_order
        n_data = FRAME_BLOCKS
        if cfg.detector == "mcdsd":
            n_data = self.windows_per_frame * (cfg.window_size - 1)
        n_blocks = n_data + 1
        bits = self._frame_rng(snr_index, frame_index).integers(
            0, 2, n_data * 2 * self.bps, dtype=np.uint8)
        idx = _point_indices(map_bits(bits, self.constellation), m)
        word_idx = idx[0::2] * m + idx[1::2]
        codewords = [self.codebook.codewords[j] for j in word_idx]
        tx_vectors = diff_encode_matrix(codewords, 2)
        traces = self._traces(snr_index, frame_index, n_blocks)
        r = cfg.relay_count
        y = simulate_dstc([traces[2 * i] for i in range(r)],
                          [traces[2 * i + 1] for i in range(r)],
                          tx_vectors, budget, self.combiners,
                          self._noise_seed(snr_index, frame_index))

        idx_hat = np.empty(n_data, dtype=np.int64)
        if cfg.detector == "two_codeword":
            # argmin_V ||y[k] - V y[k-1]|| maximizes Re(y_k^H V y_{k-1}),
            # evaluated for all codewords at once
            stack = np.stack(self.codebook.codewords)
            cross = np.einsum("wij,ki,kj->kw", stack, np.conj(y[1:]), y[:-1])
            idx_hat[:] = np.argmax(cross.real, axis=1)
        else:
            n = cfg.window_size
            for w in range(self.windows_per_frame):
                lo = w * (n - 1)
                window = DetectionWindow(y[lo:lo + n], n)
                idx_hat[lo:lo + n - 1] = mcdsd_dstc(window, point["cov"],
                                                    self.codebook)
        sym_hat = np.empty(2 * n_data, dtype=np.int64)
        sym_hat[0::2] = idx_hat // m
        sym_hat[1::2] = idx_hat % m
        bits_hat = demap_symbols(self.constellation.points[sym_hat],
                                 self.constellation)
        return len(bits), int(np.count_nonzero(bits_hat != bits))

    # --- closed forms -------------------------------------------------------

    def _cascade_alpha(self, relay: int = 0) -> float:
        fading = self.config.fading
        if self.config.topology in ("dualhop", "threenode"):
            return fading["sr"].alpha * fading["rd"].alpha
        return fading["sr"][relay].alpha * fading["rd"][relay].alpha

    def _analytic(self, budget: LinkBudget):
        """(ber_analytic, floor_analytic) for this point, or Nones."""
        cfg = self.config
        fading = cfg.fading
        mod = UnifiedModParams.from_order(cfg.modulation_order)
        n0 = budget.noise_density
        p0 = budget.source_power

        if (cfg.topology, cfg.detector) == ("dualhop", "cdd"):
            alpha = self._cascade_alpha()
            link = DualHopConstants.from_link(
                p0, budget.relay_powers[0], n0, fading["sr"].variance,
                fading["rd"].variance, alpha)
            return (cdd_ber_dualhop(link, mod),
                    cdd_error_floor_dualhop(alpha, mod))

        if cfg.detector in ("semi_mrc", "tvd_mrc"):
            specs = self._link_specs()
            if any(s.variance != 1.0 for _, s in specs) or n0 != 1.0:
                return None, None
            alphas = [self._cascade_alpha(i) for i in range(cfg.relay_count)]
            amps_sq = [amp_factor(budget, 1.0, i) ** 2
                       for i in range(cfg.relay_count)]
            net = MultiNodeConstants(
                p0=p0, alpha0=fading["sd"].alpha, alphas=tuple(alphas),
                amps_sq=tuple(amps_sq), d_min_sq=min_distance_sq(
                    cfg.modulation_order))
            ber = multinode_pep_lowerbound(net)
            floor = None
            if cfg.detector == "tvd_mrc":
                ceilings = [autocorr_snr_ceiling(fading["sd"].alpha)]
                ceilings += [autocorr_snr_ceiling(a) for a in alphas]
                floor = multinode_error_floor(cfg.relay_count, ceilings,
                                              net.d_min_sq)
            return ber, floor

        if cfg.detector == "sc":
            if cfg.modulation_order == 2:
                link = ScTvConstants.from_powers(
                    p0, budget.relay_powers[0], n0, fading["sd"].variance,
                    fading["sr"].variance, fading["rd"].variance,
                    fading["sd"].alpha, self._cascade_alpha())
                floor = sc_tv_error_floor(
                    fading["sd"].alpha, self._cascade_alpha(),
                    cfg.alloc_factor, fading["sd"].variance,
                    fading["rd"].variance)
                return sc_timevarying_ber_dbpsk(link), floor
            if fading["sd"].variance != fading["sr"].variance:
                return None, None
            amp = amp_factor(budget, fading["sr"].variance)
            return (sc_slowfading_ber(p0 * fading["sd"].variance, amp,
                                      fading["rd"].variance, mod, n0=n0),
                    None)

        if (cfg.topology, cfg.detector) == ("dstc", "two_codeword"):
            if len({s for s in fading["sr"]}) > 1 or \
                    len({s for s in fading["rd"]}) > 1:
                return None, None
            alpha = self._cascade_alpha()
            delta = min_distance_sq(cfg.modulation_order) / 2.0
            c_sq = amp_factor(budget, fading["sr"][0].variance) ** 2
            net = DstcPepConstants(
                relay_count=cfg.relay_count, alpha=alpha,
                amp_sq=c_sq * fading["rd"][0].variance, p0_over_n0=p0 / n0,
                sigma_sr_sq=fading["sr"][0].variance, delta=delta)
            return (dstc_pep_upperbound(net),
                    dstc_error_floor(cfg.relay_count, alpha, delta))

        return None, None

    # --- the sweep ------------------------------------------------------

    def run_point(self, snr_index: int, snr_db: float,
                  pool: Optional[ThreadPoolExecutor]) -> BerPoint:
        cfg = self.config
        budget = self._budget(snr_db)
        point = {}
        if cfg.detector == "msdsd":
            point["cov"] = build_msdsd_covariance(
                cfg.fading["sr"], cfg.fading["rd"], budget, cfg.window_size)
        elif cfg.detector == "mcdsd":
            point["cov"] = build_mcdsd_covariance(
                cfg.fading["sr"][0], cfg.fading["rd"][0], budget,
                cfg.window_size, cfg.relay_count)
        elif cfg.detector == "semi_mrc":
            amps = [amp_factor(budget, cfg.fading["sr"][i].variance
                               if cfg.topology == "multinode"
                               else cfg.fading["sr"].variance, i)
                    for i in range(cfg.relay_count)]
            sig_rd = [cfg.fading["rd"][i].variance
                      if cfg.topology == "multinode"
                      else cfg.fading["rd"].variance
                      for i in range(cfg.relay_count)]
            point["weights"] = semi_mrc_weights(amps, sig_rd,
                                                budget.noise_density)
        elif cfg.detector == "tvd_mrc":
            sd = cfg.fading["sd"]
            amps, alphas = [], []
            for i in range(cfg.relay_count):
                sr = cfg.fading["sr"][i] if cfg.topology == "multinode" \
                    else cfg.fading["sr"]
                rd = cfg.fading["rd"][i] if cfg.topology == "multinode" \
                    else cfg.fading["rd"]
                amps.append(amp_factor(budget, sr.variance, i)
                            * math.sqrt(rd.variance))
                alphas.append(sr.alpha * rd.alpha)
            point["weights"] = tvd_weights(
                sd.alpha, alphas, amps,
                budget.source_power * sd.variance / budget.noise_density)

        frame_fn = self._dstc_frame if cfg.topology == "dstc" \
            else self._scalar_frame

        def one_frame(frame_index):
            return frame_fn(budget, snr_index, frame_index, point)

        bits = errors = frames = 0
        stop = cfg.stop
        while True:
            upto = min(frames + FRAME_BATCH, stop.max_frames)
            batch = range(frames, upto)
            results = pool.map(one_frame, batch) if pool is not None \
                else map(one_frame, batch)
            for b, e in results:
                bits += b
                errors += e
            frames = upto
            if errors >= stop.min_bit_errors:
                rule = "min_bit_errors"
                break
            if frames >= stop.max_frames:
                rule = "max_frames"
                break

        ber_analytic, floor_analytic = self._analytic(budget)
        return BerPoint(snr_db=snr_db, bits=bits, bit_errors=errors,
                        ber_sim=errors / bits, ber_analytic=ber_analytic,
                        floor_analytic=floor_analytic, stop_rule=rule)


def run_ber_sweep(config: SimConfig) -> BerCurve:
    """Simulate every sweep point of the config; deterministic in seed."""
    runner = _Runner(config)
    threads = _thread_count()
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        points = tuple(runner.run_point(i, snr_db, pool)
                       for i, snr_db in enumerate(config.sweep_db))
    finally:
        if pool is not None:
            pool.shutdown()
    return BerCurve(points=points, config_digest=config.digest(),
                    seed=config.seed, analytic_label=runner.analytic_label)


def analytic_sweep(config: SimConfig):
    """(snr_db, ber_analytic, floor_analytic) per point, without simulating.

    Raises a configuration error when no closed form exists for the
    detector/topology pair.
    """
    runner = _Runner(config)
    if runner.analytic_label is None:
        raise ConfigurationError(
            f"no closed-form BER for detector {config.detector!r} on "
            f"topology {config.topology!r}")
    out = []
    for i, snr_db in enumerate(config.sweep_db):
        ber, floor = runner._analytic(runner._budget(snr_db))
        out.append((snr_db, ber, floor))
    return tuple(out)


# --- persistence -----------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def emit_results(curve: BerCurve, path, format: str = "csv") -> None:
    """Write a BerCurve as CSV or JSON with the fixed column contract.

    CSV rows carry exactly the columns snr_db, bits, bit_errors,
    ber_sim, ber_analytic, floor_analytic, seed, config_digest (empty
    analytic fields when absent); the stop rule of each point and the
    meaning of the analytic column are recorded as comment lines. JSON
    mirrors the same fields and round-trips through load_results.
    """
    if format == "csv":
        lines = [f"# {CSV_VERSION}"]
        if curve.analytic_label is not None:
            lines.append(f"# analytic: {curve.analytic_label}")
        for p in curve.points:
            lines.append(f"# stop snr_db={_fmt(p.snr_db)} rule={p.stop_rule}")
        lines.append(",".join(CSV_COLUMNS))
        for p in curve.points:
            lines.append(",".join([
                _fmt(p.snr_db), _fmt(p.bits), _fmt(p.bit_errors),
                _fmt(p.ber_sim), _fmt(p.ber_analytic),
                _fmt(p.floor_analytic), _fmt(curve.seed),
                curve.config_digest]))
        payload = "\n".join(lines) + "\n"
    elif format == "json":
        doc = {
            "format": JSON_VERSION,
            "config_digest": curve.config_digest,
            "seed": curve.seed,
            "analytic_label": curve.analytic_label,
            "points": [{
                "snr_db": p.snr_db, "bits": p.bits,
                "bit_errors": p.bit_errors, "ber_sim": p.ber_sim,
                "ber_analytic": p.ber_analytic,
                "floor_analytic": p.floor_analytic,
                "stop_rule": p.stop_rule,
            } for p in curve.points],
        }
        payload = json.dumps(doc, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {format!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write(payload)


def load_results(path, format: str = "json") -> BerCurve:
    """Parse an emitted file back into a BerCurve.

    JSON reconstruction is exact; CSV recovers everything the column
    contract carries (an empty CSV has no rows to recover seed and
    digest from).
    """
    if format == "json":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format") != JSON_VERSION:
            raise ValueError(f"unsupported results format "
                             f"{doc.get('format')!r}")
        points = tuple(BerPoint(**p) for p in doc["points"])
        return BerCurve(points=points, config_digest=doc["config_digest"],
                        seed=doc["seed"],
                        analytic_label=doc.get("analytic_label"))
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != f"# {CSV_VERSION}":
        raise ValueError("unsupported results format")
    label = None
    rules = []
    rows = []
    header_seen = False
    for ln in lines[1:]:
        if ln.startswith("# analytic: "):
            label = ln[len("# analytic: "):]
        elif ln.startswith("# stop "):
            rules.append(ln.split("rule=")[1])
        elif not header_seen:
            if ln != ",".join(CSV_COLUMNS):
                raise ValueError(f"unexpected CSV header {ln!r}")
            header_seen = True
        elif ln:
            rows.append(ln.split(","))
    points = tuple(
        BerPoint(snr_db=float(r[0]), bits=int(r[1]), bit_errors=int(r[2]),
                 ber_sim=float(r[3]),
                 ber_analytic=float(r[4]) if r[4] else None,
                 floor_analytic=float(r[5]) if r[5] else None,
                 stop_rule=rule)
        for r, rule in zip(rows, rules))
    seed = int(rows[0][6]) if rows else 0
    digest = rows[0][7] if rows else ""
    return BerCurve(points=points, config_digest=digest, seed=seed,
                    analytic_label=label)
