"""Command-line front end: Monte Carlo sweeps, closed-form curves,
error-floor and power-allocation tables, and channel-generator
validation, all emitted as data files.

Every command takes a JSON config document (see config_from_json for
the schema). Exit codes: 0 success, 1 runtime or validation failure,
2 usage error, 3 config schema violation.
"""

import json
import sys

from dataclasses import replace
from pathlib import Path

import click
import numpy as np
from scipy.stats import chi2 as _chi2

from .analysis import (NumericalError, UnifiedModParams, dualhop_alloc_seed,
                       optimize_power_allocation)
from .channel import FadingSpec, generate_trace
from .harness import (ANALYTIC_LABEL, CSV_COLUMNS, CSV_VERSION, SimConfig,
                      analytic_sweep, config_from_json, emit_results,
                      run_ber_sweep)
from .relaylink import ConfigurationError
from .specialfn import bessel_k1

FLOORS_VERSION = "relaysim-floors v1"
POWER_VERSION = "relaysim-popt v1"

# decimation stride for the envelope test: far beyond the coherence
# time of every supported Doppler, so the retained samples are close
# to independent draws of the marginal law
ENVELOPE_STRIDE = 499
AUTOCORR_TOL = 0.01
GOF_BINS = 40
GOF_SIGNIFICANCE = 0.01


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(path: str) -> SimConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        _fail(str(exc), 1)
    except json.JSONDecodeError as exc:
        _fail(f"config is not valid JSON: {exc}", 3)
    try:
        return config_from_json(doc)
    except ConfigurationError as exc:
        _fail(str(exc), 3)


def _out_path(output, config_path: str, suffix: str) -> Path:
    return Path(output) if output else Path(config_path).with_suffix(suffix)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _write_lines(path: Path, lines):
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        _fail(str(exc), 1)
    click.echo(f"wrote {path}")


@click.group()
def main():
    """Differential amplify-and-forward relay network simulator."""


@main.command()
@click.argument("config_path", metavar="CONFIG")
@click.option("-o", "--output", help="Results file (default: CONFIG stem).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
def simulate(config_path, output, fmt):
    """Run the Monte Carlo BER sweep of CONFIG and persist the curve."""
    config = _load_config(config_path)
    curve = run_ber_sweep(config)
    out = _out_path(output, config_path, f".results.{fmt}")
    try:
        emit_results(curve, out, fmt)
    except OSError as exc:
        _fail(str(exc), 1)
    click.echo(f"wrote {out}")


@main.command()
@click.argument("config_path", metavar="CONFIG")
@click.option("-o", "--output", help="CSV file (default: CONFIG stem).")
def analyze(config_path, output):
    """Evaluate the closed-form BER curve of CONFIG without simulating."""
    config = _load_config(config_path)
    try:
        rows = analytic_sweep(config)
    except ConfigurationError as exc:
        _fail(str(exc), 3)
    except NumericalError as exc:
        _fail(str(exc), 1)
    digest = config.digest()
    lines = [f"# {CSV_VERSION}"]
    label = ANALYTIC_LABEL.get((config.topology, config.detector))
    if label is not None:
        lines.append(f"# analytic: {label}")
    lines.append(",".join(CSV_COLUMNS))
    for snr_db, ber, floor in rows:
        lines.append(",".join([_fmt(snr_db), "", "", "", _fmt(ber),
                               _fmt(floor), _fmt(config.seed), digest]))
    _write_lines(_out_path(output, config_path, ".analytic.csv"), lines)


def _floor_of(config: SimConfig) -> float:
    snr = config.sweep_db[0]
    floor = analytic_sweep(replace(config, sweep_db=(snr,)))[0][2]
    if floor is None:
        raise ConfigurationError(
            f"no closed-form error floor for detector {config.detector!r} "
            f"with this configuration")
    return floor


def _with_doppler(config: SimConfig, f: float) -> SimConfig:
    fading = {}
    for key, value in config.fading.items():
        if isinstance(value, tuple):
            fading[key] = tuple(replace(s, normalized_doppler=f,
                                        lag_multiplier=1) for s in value)
        else:
            fading[key] = replace(value, normalized_doppler=f)
    return replace(config, fading=fading)


@main.command()
@click.argument("config_path", metavar="CONFIG")
@click.option("-o", "--output", help="CSV file (default: CONFIG stem).")
@click.option("--doppler-min", type=float, default=1e-3, show_default=True)
@click.option("--doppler-max", type=float, default=1e-1, show_default=True)
@click.option("--points", "n_points", type=int, default=25, show_default=True)
def floors(config_path, output, doppler_min, doppler_max, n_points):
    """Analytic error floor of CONFIG on a normalized-Doppler grid.

    All links sweep the same Doppler value; variances, allocation, and
    modulation come from CONFIG.
    """
    if not 0.0 < doppler_min < doppler_max:
        raise click.BadParameter("need 0 < doppler-min < doppler-max")
    if not doppler_max < 0.5:
        raise click.BadParameter("doppler-max must be below 0.5")
    if n_points < 2:
        raise click.BadParameter("need at least 2 grid points")
    config = _load_config(config_path)
    digest = config.digest()
    lines = [f"# {FLOORS_VERSION}",
             "normalized_doppler,floor_analytic,config_digest"]
    try:
        for f in np.geomspace(doppler_min, doppler_max, n_points):
            floor = _floor_of(_with_doppler(config, float(f)))
            lines.append(f"{_fmt(float(f))},{_fmt(floor)},{digest}")
    except ConfigurationError as exc:
        _fail(str(exc), 3)
    except NumericalError as exc:
        _fail(str(exc), 1)
    _write_lines(_out_path(output, config_path, ".floors.csv"), lines)


@main.command("power-opt")
@click.argument("config_path", metavar="CONFIG")
@click.option("-o", "--output", help="CSV file (default: CONFIG stem).")
def power_opt(config_path, output):
    """Optimum source-power fraction per sweep point of CONFIG.

    Minimizes the closed-form BER of the configuration over the
    allocation factor; the rest of the budget splits equally over the
    relays.
    """
    config = _load_config(config_path)
    digest = config.digest()
    lines = [f"# {POWER_VERSION}",
             "snr_db,alloc_opt,ber_analytic,config_digest"]
    try:
        for snr_db in config.sweep_db:
            def objective(q):
                ber = analytic_sweep(replace(config, sweep_db=(snr_db,),
                                             alloc_factor=q))[0][1]
                if ber is None:
                    raise ConfigurationError(
                        "no closed-form BER for this configuration")
                return ber

            seed_guess = None
            if (config.topology, config.detector) == ("dualhop", "cdd"):
                total = config.noise_density * 10.0 ** (snr_db / 10.0)
                seed_guess = dualhop_alloc_seed(
                    total, config.noise_density,
                    config.fading["sr"].variance,
                    config.fading["rd"].variance,
                    UnifiedModParams.from_order(config.modulation_order))
            q_opt = optimize_power_allocation(objective, seed_guess)
            lines.append(f"{_fmt(snr_db)},{_fmt(q_opt)},"
                         f"{_fmt(objective(q_opt))},{digest}")
    except ConfigurationError as exc:
        _fail(str(exc), 3)
    except NumericalError as exc:
        _fail(str(exc), 1)
    _write_lines(_out_path(output, config_path, ".power.csv"), lines)


def _product_envelope_cdf(sorted_env: np.ndarray, var_product: float):
    scale = 2.0 / np.sqrt(var_product)
    out = np.empty(len(sorted_env))
    for i, lam in enumerate(sorted_env):
        x = scale * float(lam)
        out[i] = 0.0 if x <= 0.0 else 1.0 - x * bessel_k1(x)
    return out


def _gof_statistic(env: np.ndarray, var_product: float):
    u = _product_envelope_cdf(np.sort(env), var_product)
    edges = np.linspace(0.0, 1.0, GOF_BINS + 1)
    counts = np.diff(np.searchsorted(u, edges, side="right"))
    expected = len(env) / GOF_BINS
    stat = float(np.sum((counts - expected) ** 2) / expected)
    dof = GOF_BINS - 1
    return stat, float(_chi2.ppf(1.0 - GOF_SIGNIFICANCE, dof)), dof


def _lag1(h: np.ndarray) -> float:
    return float(np.mean(np.conj(h[:-1]) * h[1:]).real
                 / np.mean(np.abs(h) ** 2))


def channel_report(spec_sr: FadingSpec, spec_rd: FadingSpec, seed: int,
                   trace_length: int, trace_pairs: int) -> dict:
    """Statistical checks of the fading generator for one link pair.

    Compares single-trace lag-1 autocorrelations against the Jakes
    prediction and the decimated product-envelope distribution against
    the double-Rayleigh law.
    """
    h_sr = generate_trace(spec_sr, trace_length, seed=seed).samples
    h_rd = generate_trace(spec_rd, trace_length, seed=seed + 1).samples
    checks = {}
    for name, h, predicted in (
            ("sr", h_sr, spec_sr.alpha),
            ("rd", h_rd, spec_rd.alpha),
            ("cascade", h_sr * h_rd, spec_sr.alpha * spec_rd.alpha)):
        empirical = _lag1(h)
        checks[f"autocorrelation {name}"] = {
            "empirical": empirical, "predicted": predicted,
            "pass": abs(empirical - predicted) <= AUTOCORR_TOL,
        }
    env = [np.abs(h_sr[::ENVELOPE_STRIDE] * h_rd[::ENVELOPE_STRIDE])]
    for t in range(1, trace_pairs):
        h1 = generate_trace(spec_sr, trace_length, seed=seed + 2 * t).samples
        h2 = generate_trace(spec_rd, trace_length,
                            seed=seed + 2 * t + 1).samples
        env.append(np.abs(h1[::ENVELOPE_STRIDE] * h2[::ENVELOPE_STRIDE]))
    stat, crit, dof = _gof_statistic(
        np.concatenate(env), spec_sr.variance * spec_rd.variance)
    checks["envelope"] = {"chi_square": stat, "critical": crit, "dof": dof,
                          "pass": stat < crit}
    return checks


@main.command("validate-channel")
@click.argument("config_path", metavar="CONFIG")
@click.option("--trace-length", type=int, default=1_000_000,
              show_default=True)
@click.option("--trace-pairs", type=int, default=10, show_default=True)
def validate_channel(config_path, trace_length, trace_pairs):
    """Goodness-of-fit report for CONFIG's source-relay/relay-destination
    fading pair."""
    if trace_length < 10 * ENVELOPE_STRIDE:
        raise click.BadParameter(
            f"trace-length must be at least {10 * ENVELOPE_STRIDE}")
    if trace_pairs < 1:
        raise click.BadParameter("trace-pairs must be at least 1")
    config = _load_config(config_path)
    sr, rd = config.fading["sr"], config.fading["rd"]
    if isinstance(sr, tuple):
        sr, rd = sr[0], rd[0]
    checks = channel_report(sr, rd, config.seed, trace_length, trace_pairs)
    ok = True
    for name, c in checks.items():
        verdict = "PASS" if c["pass"] else "FAIL"
        ok = ok and c["pass"]
        if "chi_square" in c:
            click.echo(f"{name}: {verdict} (chi-square {c['chi_square']:.1f}"
                       f" vs critical {c['critical']:.1f}, dof {c['dof']})")
        else:
            click.echo(f"{name}: {verdict} (empirical {c['empirical']:.6f}, "
                       f"predicted {c['predicted']:.6f})")
    click.echo(f"overall: {'PASS' if ok else 'FAIL'}")
    if not ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
