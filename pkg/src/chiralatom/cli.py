"""Scenario runner and file I/O.

Scenarios are described by a YAML config with explicit unit suffixes on
every dimensioned key (``_mhz``, ``_ghz``, ``_hz``, ``_khz``, ``_mk``,
``_deg``, ``_rad``, ``_mm``, ``_ns``, ``_us``, ``_dbm``, ``_w``, ``_fw``);
unknown keys are rejected.  Rates given in frequency units follow the /2pi
convention and are converted to angular frequencies at this boundary.

Artifacts are plain CSV with fixed headers plus a JSON manifest recording
the config hash, tool version, and wall time (the wall-time field is the
only non-deterministic output).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .core import (
    AtomRates,
    ChiralCoupling,
    ThermalBath,
    decay_rates,
    thermal_occupation,
)
from .cmt import SidebandModel, cmt_transmission
from .dynamics import (
    DriveSpec,
    MollowParams,
    ThreeLevelPorts,
    mollow_psd,
    rabi_trace,
    transmission_strong,
    two_tone_trace,
)
from .fit import circle_fit, fit_fano, phase_noise_bound
from .slh import phase_winding, weak_transmission
from .spectra import SpectrumTrace
from .thermal import DecoherenceBudget, beta_factor, purcell_factor, thermal_gamma_prime

TWO_PI = 2.0 * math.pi

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2

OUTDIR_ENV = "CHIRALATOM_OUTDIR"

TRACE_HEADER = "freq_hz,re_t,im_t,abs_t,arg_t_rad"
PSD_HEADER = TRACE_HEADER + ",psd_w_per_hz"

SCENARIO_KINDS = (
    "sweep-weak",
    "sweep-strong",
    "mollow",
    "rabi",
    "cmt",
    "two-tone",
    "fit",
    "bound",
    "budget",
)


class ConfigError(ValueError):
    """Raised for malformed or out-of-schema configuration."""


# unit suffix -> conversion to internal units (rates/frequencies to rad/s,
# temperatures to K, angles to rad, lengths to m, times to s, powers to W)
_ANGULAR = {
    "_ghz": TWO_PI * 1e9,
    "_mhz": TWO_PI * 1e6,
    "_khz": TWO_PI * 1e3,
}
_PLAIN = {
    "_hz": 1.0,
    "_mk": 1e-3,
    "_k": 1.0,
    "_deg": math.pi / 180.0,
    "_rad": 1.0,
    "_rad2": 1.0,
    "_mm": 1e-3,
    "_m": 1.0,
    "_ns": 1e-9,
    "_us": 1e-6,
    "_s": 1.0,
    "_w": 1.0,
    "_fw": 1e-15,
}


def _convert(key: str, value) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"field '{key}': expected a number, got {value!r}")
    for suffix, factor in _ANGULAR.items():
        if key.endswith(suffix):
            return float(value) * factor
    for suffix, factor in _PLAIN.items():
        if key.endswith(suffix):
            return float(value) * factor
    if key.endswith("_dbm"):
        return 10.0 ** (float(value) / 10.0) * 1e-3
    raise ConfigError(f"field '{key}': missing or unknown unit suffix")


class _Section:
    """Schema-checked view of one config mapping."""

    def __init__(self, name: str, data: dict):
        if not isinstance(data, dict):
            raise ConfigError(f"section '{name}' must be a mapping")
        self._name = name
        self._data = data
        self._seen: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self._data

    def value(self, key: str, default=None, required: bool = False):
        self._seen.add(key)
        if key not in self._data:
            if required:
                raise ConfigError(f"section '{self._name}': missing required field '{key}'")
            return default
        raw = self._data[key]
        if key.rsplit("_", 1)[-1] in ("points", "seed", "order"):
            if not isinstance(raw, int) or isinstance(raw, bool):
                raise ConfigError(f"field '{self._name}.{key}' must be an integer")
            return raw
        if key.endswith("_sigma"):
            if not isinstance(raw, (int, float)) or isinstance(raw, bool):
                raise ConfigError(f"field '{self._name}.{key}' must be a number")
            return float(raw)
        if isinstance(raw, str):
            return raw
        return _convert(f"{self._name}.{key}", raw)

    def first_of(self, *keys: str, required: bool = False, default=None):
        """Value of the single present key among unit-variant alternatives."""
        present = [key for key in keys if self.has(key)]
        for key in keys:
            self._seen.add(key)
        if len(present) > 1:
            raise ConfigError(
                f"section '{self._name}': fields {present} are mutually exclusive"
            )
        if present:
            return self.value(present[0])
        if required:
            raise ConfigError(
                f"section '{self._name}': one of {list(keys)} is required"
            )
        return default

    def subsection(self, key: str, required: bool = False) -> "_Section | None":
        self._seen.add(key)
        if key not in self._data:
            if required:
                raise ConfigError(f"section '{self._name}': missing section '{key}'")
            return None
        return _Section(f"{self._name}.{key}", self._data[key])

    def finish(self):
        unknown = set(self._data) - self._seen
        if unknown:
            raise ConfigError(
                f"section '{self._name}': unknown field(s) {sorted(unknown)}"
            )


@dataclass(frozen=True)
class Scenario:
    """A parsed, validated scenario ready to run."""

    kind: str
    params: dict
    grid: tuple[float, float, int]
    noise_sigma: float
    seed: int | None
    name: str


def _parse_grid(section: _Section | None, *, time_grid: bool = False) -> tuple[float, float, int]:
    if section is None:
        raise ConfigError("missing 'grid' section")
    if time_grid:
        start = section.first_of("start_us", "start_ns", "start_s", default=0.0)
        stop = section.first_of("stop_us", "stop_ns", "stop_s", required=True)
    else:
        start = section.first_of("start_ghz", "start_mhz", "start_hz", required=True)
        stop = section.first_of("stop_ghz", "stop_mhz", "stop_hz", required=True)
    points = section.value("points", required=True)
    section.finish()
    if points < 2:
        raise ConfigError(f"field 'grid.points' must be >= 2, got {points}")
    if stop <= start:
        raise ConfigError("grid stop must exceed start")
    return float(start), float(stop), int(points)


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario config file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    top = _Section("scenario", raw)
    kind = top.value("kind", required=True)
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"field 'kind': unknown scenario {kind!r}; expected one of {SCENARIO_KINDS}")
    name = top.value("name", kind)
    noise = top.value("noise_sigma", 0.0)
    if isinstance(noise, str):
        raise ConfigError("field 'noise_sigma' must be a number")
    seed = top.value("seed")
    if noise and seed is None:
        raise ConfigError("a seed is required whenever noise_sigma is set")

    params: dict = {}
    grid = (0.0, 1.0, 2)

    if kind in ("sweep-weak", "sweep-strong"):
        dev = top.subsection("device", required=True)
        params["coupling"] = ChiralCoupling(
            dev.value("kappa_em_mhz", required=True),
            dev.first_of("phi_c_deg", "phi_c_rad", required=True),
            dev.first_of("phi_wg_deg", "phi_wg_rad", required=True),
        )
        params["gamma_prime"] = dev.value("gamma_prime_mhz", 0.0)
        params["gamma_phi"] = dev.value("gamma_phi_mhz", 0.0)
        params["f_ge"] = dev.value("f_ge_ghz", required=True) / TWO_PI
        if kind == "sweep-strong":
            params["omega_r"] = dev.value("omega_r_mhz", required=True)
        dev.finish()
        grid = _parse_grid(top.subsection("grid", required=True))
    elif kind == "mollow":
        dev = top.subsection("device", required=True)
        params["gamma1"] = dev.value("gamma1_mhz", required=True)
        params["gamma2"] = dev.value("gamma2_mhz", required=True)
        params["gamma_f"] = dev.value("gamma_f_mhz", required=True)
        params["omega_r"] = dev.value("omega_r_mhz", required=True)
        params["f_ge"] = dev.value("f_ge_ghz", required=True) / TWO_PI
        dev.finish()
        grid = _parse_grid(top.subsection("grid", required=True))
    elif kind == "rabi":
        dev = top.subsection("device", required=True)
        params["gamma1"] = dev.value("gamma1_mhz", required=True)
        params["gamma2"] = dev.value("gamma2_mhz", required=True)
        params["omega_r"] = dev.value("omega_r_mhz", required=True)
        dev.finish()
        grid = _parse_grid(top.subsection("grid", required=True), time_grid=True)
    elif kind == "cmt":
        dev = top.subsection("device", required=True)
        params["model"] = SidebandModel(
            omega_e=dev.value("f_e_ghz", required=True),
            omega_c=dev.value("f_c_ghz", required=True),
            omega_r=dev.value("f_r_ghz", required=True),
            g_ec=dev.value("g_ec_mhz", required=True),
            g_cr=dev.value("g_cr_mhz", required=True),
            kappa_e=dev.value("kappa_e_mhz", required=True),
            kappa_t=dev.value("kappa_t_mhz", required=True),
            gamma_e=dev.value("gamma_e_mhz", 0.0),
            gamma_c=dev.value("gamma_c_mhz", 0.0),
            epsilon=dev.value("epsilon_mhz", 0.0),
            delta_mod=dev.value("delta_mod_mhz", required=True),
            n_trunc=dev.value("n_trunc_order", None),
        )
        dev.finish()
        grid = _parse_grid(top.subsection("grid", required=True))
    elif kind == "two-tone":
        dev = top.subsection("device", required=True)
        ge = AtomRates(
            dev.value("ge_gamma_f_mhz", required=True),
            dev.value("ge_gamma_b_mhz", 0.0),
            dev.value("ge_gamma_prime_mhz", 0.0),
            dev.value("ge_gamma_phi_mhz", 0.0),
        )
        params["ports"] = ThreeLevelPorts(
            dev.value("kappa_l_mhz", required=True),
            dev.value("kappa_r_mhz", required=True),
            dev.value("anharmonicity_mhz", required=True),
            ge,
        )
        params["phi_c"] = dev.first_of("phi_c_deg", "phi_c_rad", default=math.pi / 2.0)
        params["phi_wg"] = dev.first_of("phi_wg_deg", "phi_wg_rad", default=math.pi / 2.0)
        params["omega_ge_drive"] = dev.value("ge_drive_mhz", required=True)
        params["f_ef"] = dev.value("f_ef_ghz", 0.0) / TWO_PI
        dev.finish()
        grid = _parse_grid(top.subsection("grid", required=True))
    elif kind == "fit":
        fit = top.subsection("fit", required=True)
        params["trace_path"] = fit.value("trace_path", required=True)
        method = fit.value("method", "fano")
        if method not in ("fano", "circle"):
            raise ConfigError(f"field 'fit.method': expected 'fano' or 'circle', got {method!r}")
        params["method"] = method
        fit.finish()
    elif kind == "bound":
        bound = top.subsection("bound", required=True)
        params["variance"] = bound.value("phase_variance_rad2", required=True)
        source = bound.value("source", "single")
        if source not in ("single", "relative"):
            raise ConfigError("field 'bound.source': expected 'single' or 'relative'")
        params["source"] = source
        bound.finish()
    elif kind == "budget":
        budget = top.subsection("budget", required=True)
        params["gamma_prime0"] = budget.value("gamma_prime0_mhz", required=True)
        params["temperature"] = budget.value("temperature_mk", required=True)
        params["f_ge"] = budget.value("f_ge_ghz", required=True) / TWO_PI
        params["hybridization"] = budget.value("hybridization_mhz", 0.0)
        params["gamma_1d_start"] = budget.value("gamma_1d_start_mhz", required=True)
        params["gamma_1d_stop"] = budget.value("gamma_1d_stop_mhz", required=True)
        params["points"] = budget.value("points", required=True)
        budget.finish()

    top.finish()
    return Scenario(kind, params, grid, float(noise), seed, str(name))


def synthesize_noisy(trace: SpectrumTrace, sigma: float, seed: int) -> SpectrumTrace:
    """Add i.i.d. complex Gaussian noise with E[|n|^2] = sigma^2, reproducibly."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return trace
    rng = np.random.default_rng(seed)
    noise = sigma * (
        rng.standard_normal(len(trace)) + 1j * rng.standard_normal(len(trace))
    ) / math.sqrt(2.0)
    return SpectrumTrace(trace.freqs, trace.t + noise, sigma)


def _format_float(x: float) -> str:
    return f"{x:.17g}"


def write_trace_csv(path: Path, trace: SpectrumTrace, psd: np.ndarray | None = None):
    """Write a trace (optionally with a PSD column); arg is unwrapped."""
    arg = np.unwrap(np.angle(trace.t))
    lines = [PSD_HEADER if psd is not None else TRACE_HEADER]
    for i in range(len(trace)):
        row = [
            _format_float(trace.freqs[i]),
            _format_float(trace.t[i].real),
            _format_float(trace.t[i].imag),
            _format_float(abs(trace.t[i])),
            _format_float(arg[i]),
        ]
        if psd is not None:
            row.append(_format_float(psd[i]))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path: str | Path) -> SpectrumTrace:
    """Read a trace written by :func:`write_trace_csv` (PSD column ignored)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    if header[:5] != TRACE_HEADER.split(","):
        raise ConfigError(f"{path}: unexpected trace header {lines[0]!r}")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return SpectrumTrace(data[:, 0], data[:, 1] + 1j * data[:, 2])


def _write_report(path: Path, title: str, fields: dict):
    width = max(len(k) for k in fields)
    lines = [title, "=" * len(title)]
    for key, value in fields.items():
        lines.append(f"{key.ljust(width)} : {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fit_report_fields(result) -> dict:
    return {
        "gamma_1d/2pi [MHz]": f"{result.gamma_1d / TWO_PI / 1e6:.6f} +- {result.gamma_1d_sigma / TWO_PI / 1e6:.6f}",
        "gamma_tot/2pi [MHz]": f"{result.gamma_tot / TWO_PI / 1e6:.6f} +- {result.gamma_tot_sigma / TWO_PI / 1e6:.6f}",
        "f0 [GHz]": f"{result.f0 / 1e9:.9f} +- {result.f0_sigma / 1e9:.9f}",
        "phi_fano [rad]": f"{result.phi_fano:.6f} +- {result.phi_fano_sigma:.6f}",
        "residual_rms": f"{result.residual_rms:.3e}",
        "physical": str(result.physical),
    }


def run(scenario: Scenario, outdir: str | Path, config_text: str = "") -> list[Path]:
    """Execute a scenario, writing its artifacts into ``outdir``.

    Returns the list of written artifact paths (manifest last).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    written: list[Path] = []
    p = scenario.params

    def emit_trace(trace: SpectrumTrace, stem: str, psd=None):
        if scenario.noise_sigma > 0:
            trace = synthesize_noisy(trace, scenario.noise_sigma, scenario.seed)
        path = outdir / f"{scenario.name}_{stem}.csv"
        write_trace_csv(path, trace, psd)
        written.append(path)
        return trace

    if scenario.kind in ("sweep-weak", "sweep-strong"):
        f_lo, f_hi, n = scenario.grid
        freqs = np.linspace(f_lo, f_hi, n) / TWO_PI
        deltas = TWO_PI * (freqs - p["f_ge"])
        coupling: ChiralCoupling = p["coupling"]
        gamma_f, gamma_b = decay_rates(coupling)
        rates = AtomRates(gamma_f, gamma_b, p["gamma_prime"], p["gamma_phi"])
        if scenario.kind == "sweep-weak":
            t = weak_transmission(coupling, rates, deltas)
        else:
            t = np.array(
                [
                    transmission_strong(
                        DriveSpec(p["omega_r"], d), rates.gamma_f, rates.gamma_1, rates.gamma_2
                    )
                    for d in deltas
                ]
            )
        trace = emit_trace(SpectrumTrace(freqs, t), "trace")
        winding = None
        try:
            winding = phase_winding(trace)
        except ValueError:
            pass
        fields = {"points": str(n)}
        if winding is not None:
            fields["phase_winding [rad]"] = f"{winding:.6f}"
        _write_report(outdir / f"{scenario.name}_summary.txt", f"{scenario.kind} summary", fields)
        written.append(outdir / f"{scenario.name}_summary.txt")

    elif scenario.kind == "mollow":
        f_lo, f_hi, n = scenario.grid
        freqs = np.linspace(f_lo, f_hi, n) / TWO_PI
        deltas = TWO_PI * (freqs - p["f_ge"])
        params = MollowParams(p["gamma1"], p["gamma2"], TWO_PI * p["f_ge"])
        psd = mollow_psd(params, p["gamma_f"], p["omega_r"], deltas)
        t = np.array(
            [
                transmission_strong(
                    DriveSpec(p["omega_r"], d), p["gamma_f"], p["gamma1"], p["gamma2"]
                )
                for d in deltas
            ]
        )
        # psd per ordinary frequency: S_f = 2*pi * S_omega
        emit_trace(SpectrumTrace(freqs, t), "psd", psd=TWO_PI * psd.psd)

    elif scenario.kind == "rabi":
        t_lo, t_hi, n = scenario.grid
        taus = np.linspace(t_lo, t_hi, n)
        sx, sz = rabi_trace(taus, DriveSpec(p["omega_r"]), p["gamma1"], p["gamma2"])
        path = outdir / f"{scenario.name}_rabi.csv"
        lines = ["tau_s,sx,sz"]
        for i in range(n):
            lines.append(
                ",".join([_format_float(taus[i]), _format_float(sx[i]), _format_float(sz[i])])
            )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    elif scenario.kind == "cmt":
        f_lo, f_hi, n = scenario.grid
        omegas = np.linspace(f_lo, f_hi, n)
        emit_trace(cmt_transmission(p["model"], omegas), "trace")

    elif scenario.kind == "two-tone":
        f_lo, f_hi, n = scenario.grid
        freqs = np.linspace(f_lo, f_hi, n) / TWO_PI
        deltas = TWO_PI * (freqs - p["f_ef"])
        trace = two_tone_trace(
            p["ports"],
            DriveSpec(p["omega_ge_drive"]),
            deltas,
            phi_c=p["phi_c"],
            phi_wg=p["phi_wg"],
            f_ef_hz=p["f_ef"],
        )
        emit_trace(trace, "trace")

    elif scenario.kind == "fit":
        trace = read_trace_csv(p["trace_path"])
        result = fit_fano(trace) if p["method"] == "fano" else circle_fit(trace)
        path = outdir / f"{scenario.name}_fit.txt"
        _write_report(path, f"{p['method']} fit report", _fit_report_fields(result))
        written.append(path)

    elif scenario.kind == "bound":
        eta = phase_noise_bound(p["variance"], p["source"])
        path = outdir / f"{scenario.name}_bound.txt"
        _write_report(
            path,
            "phase-noise directionality bound",
            {
                "phase_variance [rad^2]": _format_float(p["variance"]),
                "source": p["source"],
                "eta_d bound": f"{eta:.6g}",
            },
        )
        written.append(path)

    elif scenario.kind == "budget":
        n_th = thermal_occupation(ThermalBath(p["temperature"], p["f_ge"]))
        g1ds = np.linspace(p["gamma_1d_start"], p["gamma_1d_stop"], p["points"])
        path = outdir / f"{scenario.name}_budget.csv"
        lines = ["gamma_1d_hz,gamma_prime_hz,beta,purcell"]
        for g1d in g1ds:
            gp = thermal_gamma_prime(
                DecoherenceBudget(p["gamma_prime0"], n_th, g1d, p["hybridization"])
            )
            rates = AtomRates(g1d, 0.0, gp)
            lines.append(
                ",".join(
                    [
                        _format_float(g1d / TWO_PI),
                        _format_float(gp / TWO_PI),
                        _format_float(beta_factor(rates)),
                        _format_float(purcell_factor(rates)),
                    ]
                )
            )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    manifest = {
        "config_sha256": hashlib.sha256(config_text.encode("utf-8")).hexdigest(),
        "version": __version__,
        "scenario": scenario.kind,
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    manifest_path = outdir / f"{scenario.name}_manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True) + "\n", encoding="utf-8")
    written.append(manifest_path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chiralatom",
        description="Chiral-atom waveguide simulation and analysis runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--outdir", default=None)

    p_validate = sub.add_parser("validate", help="validate a scenario config")
    p_validate.add_argument("config")

    p_fit = sub.add_parser("fit", help="fit a trace CSV")
    p_fit.add_argument("trace")
    p_fit.add_argument("--fano", action="store_true")
    p_fit.add_argument("--circle", action="store_true")
    p_fit.add_argument("--outdir", default=None)

    p_bound = sub.add_parser("bound", help="phase-noise directionality bound")
    p_bound.add_argument("--phase-var", type=float, required=True, help="variance in rad^2")
    p_bound.add_argument("--relative", action="store_true", help="variance is of the relative phase")

    args = parser.parse_args(argv)
    outdir = getattr(args, "outdir", None) or os.environ.get(OUTDIR_ENV, "out")

    try:
        if args.command == "validate":
            load_scenario(args.config)
            print(f"{args.config}: OK")
            return EXIT_OK
        if args.command == "run":
            config_text = Path(args.config).read_text(encoding="utf-8")
            scenario = load_scenario(args.config)
            written = run(scenario, outdir, config_text)
            for path in written:
                print(path)
            return EXIT_OK
        if args.command == "fit":
            if args.fano and args.circle:
                raise ConfigError("choose one of --fano / --circle")
            trace = read_trace_csv(args.trace)
            result = circle_fit(trace) if args.circle else fit_fano(trace)
            method = "circle" if args.circle else "fano"
            for key, value in _fit_report_fields(result).items():
                print(f"{key} : {value}")
            out = Path(outdir)
            out.mkdir(parents=True, exist_ok=True)
            report = out / (Path(args.trace).stem + f"_{method}_fit.txt")
            _write_report(report, f"{method} fit report", _fit_report_fields(result))
            print(report)
            return EXIT_OK
        if args.command == "bound":
            eta = phase_noise_bound(args.phase_var, "relative" if args.relative else "single")
            print(f"eta_d bound: {eta:.6g}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error [{type(exc).__module__}.{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
