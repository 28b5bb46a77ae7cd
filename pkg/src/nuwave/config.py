"""Experiment configuration: flat INI sections, defaults, validation.

Grammar (all sections and keys optional; defaults in parentheses):

    [domain]
    length = 1.0            # interval length L > 0
    modes = 32              # retained sine modes N >= 1
    nodes = 64              # dealiased grid size M (default 2N)

    [noise]
    spectrum = power:4.0    # power:p  ->  b_k = k^-p
                            # coeffs:b1,b2,...  ->  explicit list
    amplitude = 1.0         # overall scale on b_k, >= 0

    [model]
    nonlinearity = cubic_default      # or poly:c0,c1,c2,c3 (degree <= 3)
    u0 = decay:2.0,1.0      # zero | mode:k[,amp] | decay:p[,amp] | coeffs:...
    u1 = decay:3.0,1.0
    alpha = 0.0             # noise exponent, >= 0 and != 1
    nu = 0.1, 0.01, 0.001, 0.0001     # grid of nu values in (0, 1]

    [run]
    kind = full_vs_heat     # full_vs_heat | full_vs_detwave | split_audit
                            # | component_scaling | oracle_suite
    horizon = 1.0           # final time T > 0
    steps = 2048            # uniform steps J; dt = T/J
    output_times = auto:16  # auto:S -> S evenly spaced times j*T/S,
                            # or an explicit comma list on the step grid
    replicas = 16           # Monte Carlo replicas M >= 2
    seed = 12345            # base seed; replicas derive their own streams

    [audit]                 # test function for split_audit
    phi = coeffs:1.0,0.5,0.3333333333333333
    g = poly:1.0,0.5        # or trig:a,b,omega

Unknown sections or keys are rejected. parse_config collects every
violation and raises one ConfigurationError listing all of them,
each prefixed with its section.key path.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .analysis import TestFunction
from .errors import ConfigurationError
from .noise import CovarianceSpectrum, power_law_spectrum
from .spectral import Nonlinearity, SpectralBasis, SpectralField, make_basis

__all__ = ["ExperimentConfig", "parse_config", "load_config"]

KINDS = ("full_vs_heat", "full_vs_detwave", "split_audit",
         "component_scaling", "oracle_suite")

_DEFAULTS = {
    "domain": {"length": "1.0", "modes": "32", "nodes": ""},
    "noise": {"spectrum": "power:4.0", "amplitude": "1.0"},
    "model": {"nonlinearity": "cubic_default", "u0": "decay:2.0,1.0",
              "u1": "decay:3.0,1.0", "alpha": "0.0",
              "nu": "0.1, 0.01, 0.001, 0.0001"},
    "run": {"kind": "full_vs_heat", "horizon": "1.0", "steps": "2048",
            "output_times": "auto:16", "replicas": "16", "seed": "12345"},
    "audit": {"phi": "coeffs:1.0,0.5,0.3333333333333333", "g": "poly:1.0,0.5"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated experiment description."""

    length: float
    modes: int
    nodes: Optional[int]
    spectrum_spec: str
    amplitude: float
    nonlinearity_spec: str
    u0_spec: str
    u1_spec: str
    alpha: float
    nus: Tuple[float, ...]
    kind: str
    horizon: float
    steps: int
    output_times_spec: str
    replicas: int
    seed: int
    audit_phi_spec: str
    audit_g_spec: str

    def with_overrides(self, replicas: Optional[int] = None,
                       seed: Optional[int] = None) -> "ExperimentConfig":
        cfg = self
        if replicas is not None:
            if replicas < 2:
                raise ConfigurationError(["run.replicas: must be >= 2, got %d"
                                          % replicas])
            cfg = replace(cfg, replicas=replicas)
        if seed is not None:
            if seed < 0:
                raise ConfigurationError(["run.seed: must be >= 0"])
            cfg = replace(cfg, seed=seed)
        return cfg

    # builders -----------------------------------------------------------

    def build_basis(self) -> SpectralBasis:
        return make_basis(self.length, self.modes, self.nodes)

    def build_spectrum(self) -> CovarianceSpectrum:
        return _parse_spectrum(self.spectrum_spec, self.amplitude, self.modes)

    def build_nonlinearity(self) -> Nonlinearity:
        return _parse_nonlinearity(self.nonlinearity_spec)

    def initial_conditions(self, basis: SpectralBasis):
        u0 = SpectralField(_parse_field(self.u0_spec, basis.n_modes), basis)
        u1 = SpectralField(_parse_field(self.u1_spec, basis.n_modes), basis)
        return u0, u1

    def resolve_output_times(self) -> np.ndarray:
        return _parse_output_times(self.output_times_spec, self.horizon,
                                   self.steps)

    def build_test_function(self, basis: SpectralBasis) -> TestFunction:
        coeffs = _parse_field(self.audit_phi_spec, basis.n_modes)
        tag, tcoeffs = _parse_time_factor(self.audit_g_spec)
        return TestFunction(SpectralField(coeffs, basis), tag, tcoeffs)

    def to_dict(self) -> dict:
        """Echo for summaries; enough to re-run the experiment exactly."""
        return {
            "domain": {"length": self.length, "modes": self.modes,
                       "nodes": self.nodes},
            "noise": {"spectrum": self.spectrum_spec,
                      "amplitude": self.amplitude},
            "model": {"nonlinearity": self.nonlinearity_spec,
                      "u0": self.u0_spec, "u1": self.u1_spec,
                      "alpha": self.alpha, "nu": list(self.nus)},
            "run": {"kind": self.kind, "horizon": self.horizon,
                    "steps": self.steps,
                    "output_times": self.output_times_spec,
                    "replicas": self.replicas, "seed": self.seed},
            "audit": {"phi": self.audit_phi_spec, "g": self.audit_g_spec},
        }


# --- value parsers (raise ValueError; paths added by parse_config) -------

def _parse_field(spec: str, n_modes: int) -> np.ndarray:
    spec = spec.strip()
    if spec == "zero":
        return np.zeros(n_modes)
    head, sep, rest = spec.partition(":")
    if not sep:
        raise ValueError("unknown field spec %r" % (spec,))
    if head == "mode":
        parts = [p.strip() for p in rest.split(",")]
        k = int(parts[0])
        amp = float(parts[1]) if len(parts) > 1 else 1.0
        if not 1 <= k <= n_modes:
            raise ValueError("mode %d out of range 1..%d" % (k, n_modes))
        out = np.zeros(n_modes)
        out[k - 1] = amp
        return out
    if head == "decay":
        parts = [p.strip() for p in rest.split(",")]
        p = float(parts[0])
        amp = float(parts[1]) if len(parts) > 1 else 1.0
        k = np.arange(1, n_modes + 1, dtype=np.float64)
        return amp * k ** (-p)
    if head == "coeffs":
        vals = [float(p) for p in rest.split(",")]
        if len(vals) > n_modes:
            raise ValueError("%d coefficients exceed %d modes"
                             % (len(vals), n_modes))
        out = np.zeros(n_modes)
        out[:len(vals)] = vals
        return out
    raise ValueError("unknown field spec %r" % (spec,))


def _parse_spectrum(spec: str, amplitude: float,
                    n_modes: int) -> CovarianceSpectrum:
    spec = spec.strip()
    head, sep, rest = spec.partition(":")
    if head == "power" and sep:
        return power_law_spectrum(n_modes, float(rest), amplitude)
    if head == "coeffs" and sep:
        vals = np.array([float(p) for p in rest.split(",")])
        if len(vals) != n_modes:
            raise ValueError("spectrum has %d entries, need %d"
                             % (len(vals), n_modes))
        return CovarianceSpectrum(amplitude * vals)
    raise ValueError("unknown spectrum spec %r" % (spec,))


def _parse_nonlinearity(spec: str) -> Nonlinearity:
    spec = spec.strip()
    if spec == "cubic_default":
        return Nonlinearity.cubic_default()
    head, sep, rest = spec.partition(":")
    if head == "poly" and sep:
        return Nonlinearity.polynomial([float(p) for p in rest.split(",")])
    raise ValueError("unknown nonlinearity spec %r" % (spec,))


def _parse_time_factor(spec: str):
    spec = spec.strip()
    head, sep, rest = spec.partition(":")
    if head == "poly" and sep:
        return "poly", tuple(float(p) for p in rest.split(","))
    if head == "trig" and sep:
        vals = tuple(float(p) for p in rest.split(","))
        if len(vals) != 3:
            raise ValueError("trig factor needs a,b,omega")
        return "trig", vals
    raise ValueError("unknown time factor %r" % (spec,))


def _parse_output_times(spec: str, horizon: float, steps: int) -> np.ndarray:
    spec = spec.strip()
    head, sep, rest = spec.partition(":")
    if head == "auto" and sep:
        count = int(rest)
        if count < 1:
            raise ValueError("auto count must be >= 1")
        if steps % count != 0:
            raise ValueError("auto:%d does not divide %d steps" % (count, steps))
        return np.arange(1, count + 1) * (horizon / count)
    times = np.array([float(p) for p in spec.split(",")])
    if np.any(times < 0) or np.any(times > horizon * (1 + 1e-12)):
        raise ValueError("output times must lie in [0, horizon]")
    dt = horizon / steps
    idx = np.rint(times / dt)
    if np.any(np.abs(idx * dt - times) > 1e-9 * max(1.0, horizon)):
        raise ValueError("output times must lie on the step grid T/steps")
    if np.any(np.diff(idx) <= 0):
        raise ValueError("output times must be strictly increasing")
    return times


# --- main entry -----------------------------------------------------------

def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text, collecting every violation."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(["config syntax: %s" % exc]) from exc

    problems = []
    values = {s: dict(kv) for s, kv in _DEFAULTS.items()}
    for section in parser.sections():
        if section not in _DEFAULTS:
            problems.append("%s: unknown section" % section)
            continue
        for key, val in parser.items(section):
            if key not in _DEFAULTS[section]:
                problems.append("%s.%s: unknown key" % (section, key))
            else:
                values[section][key] = val

    def grab(section, key, conv, check=None):
        raw = values[section][key]
        try:
            out = conv(raw)
        except ValueError as exc:
            problems.append("%s.%s: %s" % (section, key, exc))
            return None
        if check is not None:
            msg = check(out)
            if msg:
                problems.append("%s.%s: %s" % (section, key, msg))
                return None
        return out

    length = grab("domain", "length", float,
                  lambda v: None if 0 < v < float("inf") else
                  "must be positive and finite, got %r" % v)
    modes = grab("domain", "modes", int,
                 lambda v: None if v >= 1 else "must be >= 1, got %d" % v)
    nodes_raw = values["domain"]["nodes"].strip()
    nodes = None
    if nodes_raw:
        nodes = grab("domain", "nodes", int, lambda v: None if modes is None
                     or v >= modes else "must be >= modes, got %d" % v)

    amplitude = grab("noise", "amplitude", float,
                     lambda v: None if v >= 0 else "must be >= 0, got %r" % v)
    alpha = grab("model", "alpha", float, lambda v: (
        None if v >= 0 and v != 1.0 else
        "must be >= 0, got %r" % v if v < 0 else
        "alpha = 1 is unsupported: it sits on the boundary between the two "
        "limit regimes and neither reduced model applies"))

    def conv_nus(raw):
        vals = tuple(float(p) for p in raw.split(","))
        if not vals:
            raise ValueError("need at least one nu value")
        return vals

    nus = grab("model", "nu", conv_nus, lambda vs: (
        None if all(0 < v <= 1 for v in vs) and len(set(vs)) == len(vs)
        else "nu values must be distinct and lie in (0, 1]"))

    kind = grab("run", "kind", str.strip, lambda v: (
        None if v in KINDS else
        "unknown kind %r; choose from %s" % (v, ", ".join(KINDS))))
    horizon = grab("run", "horizon", float,
                   lambda v: None if v > 0 else "must be positive, got %r" % v)
    steps = grab("run", "steps", int,
                 lambda v: None if v >= 1 else "must be >= 1, got %d" % v)
    replicas = grab("run", "replicas", int,
                    lambda v: None if v >= 2 else "must be >= 2, got %d" % v)
    seed = grab("run", "seed", int,
                lambda v: None if 0 <= v < 2 ** 64 else
                "must fit in an unsigned 64-bit integer")

    # specs whose full validation needs the resolved sizes
    spectrum_spec = values["noise"]["spectrum"].strip()
    nonlinearity_spec = values["model"]["nonlinearity"].strip()
    u0_spec = values["model"]["u0"].strip()
    u1_spec = values["model"]["u1"].strip()
    output_times_spec = values["run"]["output_times"].strip()
    audit_phi_spec = values["audit"]["phi"].strip()
    audit_g_spec = values["audit"]["g"].strip()

    if modes is not None and amplitude is not None:
        try:
            _parse_spectrum(spectrum_spec, amplitude, modes)
        except (ValueError, ConfigurationError) as exc:
            problems.append("noise.spectrum: %s" % exc)
    try:
        _parse_nonlinearity(nonlinearity_spec)
    except (ValueError, ConfigurationError) as exc:
        problems.append("model.nonlinearity: %s" % exc)
    if modes is not None:
        for name, spec in (("model.u0", u0_spec), ("model.u1", u1_spec),
                           ("audit.phi", audit_phi_spec)):
            try:
                _parse_field(spec, modes)
            except ValueError as exc:
                problems.append("%s: %s" % (name, exc))
    try:
        _parse_time_factor(audit_g_spec)
    except ValueError as exc:
        problems.append("audit.g: %s" % exc)
    if horizon is not None and steps is not None:
        try:
            _parse_output_times(output_times_spec, horizon, steps)
        except ValueError as exc:
            problems.append("run.output_times: %s" % exc)

    if alpha is not None and kind is not None:
        if kind == "full_vs_heat" and not alpha < 1:
            problems.append("run.kind: full_vs_heat requires alpha < 1 "
                            "(the diffusive limit regime), got alpha = %r"
                            % alpha)
        if kind == "full_vs_detwave" and not alpha > 1:
            problems.append("run.kind: full_vs_detwave requires alpha > 1 "
                            "(the weak-noise wave regime), got alpha = %r"
                            % alpha)

    if problems:
        raise ConfigurationError(sorted(problems))

    return ExperimentConfig(
        length=length, modes=modes, nodes=nodes,
        spectrum_spec=spectrum_spec, amplitude=amplitude,
        nonlinearity_spec=nonlinearity_spec, u0_spec=u0_spec, u1_spec=u1_spec,
        alpha=alpha, nus=nus, kind=kind, horizon=horizon, steps=steps,
        output_times_spec=output_times_spec, replicas=replicas, seed=seed,
        audit_phi_spec=audit_phi_spec, audit_g_spec=audit_g_spec)


def load_config(path) -> ExperimentConfig:
    with io.open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
