"""Batch runner: INI configuration, experiment suites, a content-addressed
binary cache and CSV output.

Usage:  cuspwave [--config PATH] [--out DIR] [--workers N] [--no-cache]
                 [--suite NAME | COMMAND]

Exit status is 0 on success, 2 for an invalid configuration (including an
empty ladder) and 3 when a computation fails; in that case the partial
artifacts are kept and the summary is marked FAILED.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import csv
import json
import math
import os
import struct
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

CACHE_ENV = "CUSPWAVE_CACHE_DIR"
SUITES = {"airy-selftest": "selftest", "scaling-r6": "ladder"}
COMMANDS = ("selftest", "modes", "billiard", "eikonal", "cusp", "trace", "norms", "ladder",
            "quotient")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration

def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


# section -> key -> (parser, default)
SCHEMA = {
    "experiment": {"suite": (str, ""), "out": (str, "out"), "cache": (str, "true"),
                   "workers": (int, 1)},
    "scale": {"h": (float, 1e-4), "eps": (float, 0.1), "Y": (float, 1024.0), "C0": (float, 1.0),
              "c0": (float, 0.375), "M": (float, 4.0), "n_constant": (float, 1.0)},
    "ladder": {"h_max": (float, 2.0 ** -10), "h_min": (float, 2.0 ** -17), "count": (int, 8)},
    "norms": {"r": (_ints, (6, 8, 64))},
    "cusp": {"n": (int, 0), "n_max": (int, 2), "psi_halfwidth": (float, 1 / 16),
             "kappa_halfwidth": (float, 0.25), "times": (_floats, (-1.0, -0.5, 0.0, 0.5, 1.0))},
    "eikonal": {"a": (float, 0.05), "order": (int, 3), "b_slope": (float, 0.0), "window": (_floats, (-1.0, 1.0)),
                "samples": (int, 9)},
    "billiard": {"a": (_floats, (1e-2, 1e-3))},
    "modes": {"count": (int, 10)},
}

SUITE_DEFAULTS = {
    "scaling-r6": {("norms", "r"): (6,)},
}


@dataclass
class ExperimentConfig:
    """Typed view of the INI file; ``values`` maps (section, key) to values."""
    values: dict = field(default_factory=dict)

    def __getitem__(self, item):
        return self.values[item]

    def get(self, section, key):
        return self.values[(section, key)]

    @classmethod
    def defaults(cls):
        return cls({(s, k): d for s, keys in SCHEMA.items() for k, (_, d) in keys.items()})

    @classmethod
    def from_text(cls, text, suite=None):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        cfg = cls.defaults()
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in cp.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                parser = SCHEMA[section][key][0]
                try:
                    cfg.values[(section, key)] = parser(raw.strip())
                except ValueError as exc:
                    raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
        name = suite or cfg.get("experiment", "suite")
        if name:
            if name not in SUITES:
                raise ConfigError(f"unknown suite {name!r}")
            for k, v in SUITE_DEFAULTS.get(name, {}).items():
                if not cp.has_option(*k):
                    cfg.values[k] = v
            cfg.values[("experiment", "suite")] = name
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path=None, suite=None):
        if path is None:
            return cls.from_text("", suite)
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_text(text, suite)

    def scale(self, h=None):
        from .billiard_maps import ScaleParams
        s = {k: self.get("scale", k) for k in ("eps", "Y", "C0", "c0", "M", "n_constant")}
        return ScaleParams(self.get("scale", "h") if h is None else h, **s)

    def ladder(self):
        from .norm_lab import h_ladder
        return h_ladder(self.get("ladder", "h_max"), self.get("ladder", "h_min"),
                        self.get("ladder", "count"))

    def validate(self):
        from .billiard_maps import ScaleError
        from .norm_lab import DegenerateLadderError
        try:
            self.scale()
            hs = self.ladder()
            for h in (hs[0], hs[-1]):
                self.scale(h)
        except (ScaleError, DegenerateLadderError) as exc:
            raise ConfigError(str(exc)) from exc
        if not self.get("norms", "r") or any(r < 2 or r % 2 for r in self.get("norms", "r")):
            raise ConfigError("norms.r must be a list of even integers >= 2")
        if self.get("experiment", "cache").lower() not in ("true", "false"):
            raise ConfigError("experiment.cache must be true or false")
        if self.get("experiment", "workers") < 1:
            raise ConfigError("experiment.workers must be >= 1")
        if not 0 < self.get("cusp", "psi_halfwidth") <= 0.125:
            raise ConfigError("cusp.psi_halfwidth must lie in (0, 1/8]")

    def canonical(self, sections):
        """Stable JSON of the listed sections, independent of key order."""
        sub = {f"{s}.{k}": (list(v) if isinstance(v, tuple) else v)
               for (s, k), v in self.values.items() if s in sections}
        return json.dumps(sub, sort_keys=True, separators=(",", ":"), default=repr)

    def digest(self, command):
        sections = ("scale", "ladder", "norms", "cusp", "eikonal", "billiard", "modes")
        from . import __version__
        text = f"{command}|{__version__}|{CACHE_VERSION}|" + self.canonical(sections)
        return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- tables

KEY_COLUMNS = {"h", "a", "lambda", "N", "n", "r", "t", "Z", "x", "y", "eps", "k", "sign", "check",
               "label", "passed", "tolerance"}


@dataclass
class Table:
    """Named columns of floats or strings, in insertion order."""
    columns: dict = field(default_factory=dict)

    def add(self, name, values):
        vals = list(values)
        if self.columns and len(vals) != self.nrows:
            raise ValueError("columns must have equal length")
        self.columns[name] = vals

    @property
    def nrows(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def check_errors(self):
        """Every value column needs a companion ``<name>_err`` column."""
        for name in self.columns:
            if name in KEY_COLUMNS or name.endswith("_err"):
                continue
            if name + "_err" not in self.columns:
                raise ValueError(f"column {name!r} has no error column")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        w.writerow(names)
        for i in range(self.nrows):
            w.writerow([_fmt(self.columns[c][i]) for c in names])
        return buf.getvalue()

    MAGIC = b"CWTABLE\0"

    def to_bytes(self):
        out = [struct.pack("<II", len(self.columns), self.nrows)]
        for name, vals in self.columns.items():
            nm = name.encode()
            is_str = any(isinstance(v, str) for v in vals)
            out.append(struct.pack("<I", len(nm)) + nm + (b"s" if is_str else b"f"))
            if is_str:
                for v in vals:
                    b = str(v).encode()
                    out.append(struct.pack("<I", len(b)) + b)
            else:
                out.append(np.asarray(vals, "<f8").tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data):
        ncol, nrow = struct.unpack_from("<II", data, 0)
        pos = 8
        t = cls()
        for _ in range(ncol):
            (ln,) = struct.unpack_from("<I", data, pos)
            pos += 4
            name = data[pos:pos + ln].decode()
            kind = data[pos + ln:pos + ln + 1]
            pos += ln + 1
            if kind == b"s":
                vals = []
                for _ in range(nrow):
                    (lb,) = struct.unpack_from("<I", data, pos)
                    vals.append(data[pos + 4:pos + 4 + lb].decode())
                    pos += 4 + lb
            elif kind == b"f":
                if pos + 8 * nrow > len(data):
                    raise ValueError("truncated table")
                vals = [float(v) for v in np.frombuffer(data, "<f8", nrow, pos)]
                pos += 8 * nrow
            else:
                raise ValueError("unknown column kind")
            t.columns[name] = vals
        if pos != len(data):
            raise ValueError("trailing bytes in table")
        return t


def _fmt(v):
    if isinstance(v, str):
        return v
    return repr(float(v))


# ---------------------------------------------------------------- cache

CACHE_MAGIC = b"CWCACHE\0"
CACHE_VERSION = 1


def default_cache_dir():
    return os.environ.get(CACHE_ENV) or os.path.join(os.path.expanduser("~"), ".cache", "cuspwave")


class Cache:
    """Content-addressed entries: magic, version byte, SHA-256 of the
    payload, then the payload (little-endian throughout)."""

    def __init__(self, root, enabled=True):
        self.root = root
        self.enabled = enabled

    def path(self, key):
        return os.path.join(self.root, key + ".bin")

    def read(self, key):
        if not self.enabled:
            return None
        p = self.path(key)
        if not os.path.exists(p):
            return None
        with open(p, "rb") as fh:
            data = fh.read()
        if len(data) < 41 or data[:8] != CACHE_MAGIC:
            self._quarantine(p)
            return None
        if data[8] != CACHE_VERSION:
            return None
        payload = data[41:]
        if hashlib.sha256(payload).digest() != data[9:41]:
            self._quarantine(p)
            return None
        try:
            return Table.from_bytes(payload)
        except (ValueError, struct.error, UnicodeDecodeError):
            self._quarantine(p)
            return None

    def write(self, key, table: Table):
        if not self.enabled:
            return
        os.makedirs(self.root, exist_ok=True)
        payload = table.to_bytes()
        blob = CACHE_MAGIC + bytes([CACHE_VERSION]) + hashlib.sha256(payload).digest() + payload
        tmp = self.path(key) + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, self.path(key))

    def _quarantine(self, p):
        q = os.path.join(self.root, "quarantine")
        os.makedirs(q, exist_ok=True)
        os.replace(p, os.path.join(q, os.path.basename(p)))


# ---------------------------------------------------------------- commands

def cmd_selftest(cfg, workers):
    """Airy zeros, Ai(0), Ai'(0) and the branch identity against oracles."""
    from scipy.optimize import brentq
    from scipy.special import gamma
    from .special_airy import ai, airy_ai, airy_branch, airy_zero
    t = Table()
    names, vals, errs, tols = [], [], [], []
    zs = airy_zero(np.arange(1, 11))
    for k, z in enumerate(zs, 1):
        ref = brentq(lambda x: float(ai(-x)), z - 0.05, z + 0.05, xtol=1e-15, rtol=1e-15)
        names.append(f"zero_{k}")
        vals.append(float(z))
        errs.append(abs(z - ref))
        tols.append(1e-10)
    v0 = airy_ai(0.0)
    for name, got, ref in (("ai_0", float(v0.ai), 3 ** (-2 / 3) / gamma(2 / 3)),
                           ("aip_0", float(v0.ai_prime), -(3 ** (-1 / 3)) / gamma(1 / 3))):
        names.append(name)
        vals.append(got)
        errs.append(abs(got - ref))
        tols.append(1e-10)
    # 40 x 25 complex grid on the square |Re z|, |Im z| <= 3
    re, im = np.meshgrid(np.linspace(-3, 3, 40), np.linspace(-3, 3, 25))
    z = (re + 1j * im).ravel()
    d = np.max(np.abs(airy_branch("+", z) + airy_branch("-", z) - airy_ai(z).ai))
    names.append("branch_identity")
    vals.append(float(d))
    errs.append(float(d))
    tols.append(1e-12)
    t.add("check", names)
    t.add("value", vals)
    t.add("value_err", errs)
    t.add("tolerance", tols)
    t.add("passed", ["pass" if e <= tol else "fail" for e, tol in zip(errs, tols)])
    return t


def cmd_modes(cfg, workers):
    """Gallery eigenvalues μ_k(1/h) = h⁻² + ω_k h^{-4/3} with Ai(-ω_k) as error."""
    from .model_spectrum import eigenvalue
    from .special_airy import ai, airy_zero
    h = cfg.get("scale", "h")
    k = np.arange(1, cfg.get("modes", "count") + 1)
    w = airy_zero(k)
    t = Table()
    t.add("k", k.astype(float))
    t.add("omega", w)
    t.add("omega_err", np.abs(ai(-w)))
    t.add("mu", eigenvalue(1 / h, k))
    t.add("mu_err", np.abs(ai(-w)) * (1 / h) ** (4 / 3))
    return t


def cmd_billiard(cfg, workers):
    """δ± against the Hamiltonian flow of (-ζ₀)^{3/2} at the configured a."""
    from .billiard_maps import PhasePoint, delta, hamiltonian_flow_check
    t = Table()
    rows = {c: [] for c in ("a", "sign", "dy", "dy_err", "dt", "dt_err")}
    for a in cfg.get("billiard", "a"):
        p = PhasePoint(0.0, 0.0, 1.0, -math.sqrt(1 + a))
        for sign, s in (("+", 4 / 3), ("-", -4 / 3)):
            q = delta(sign, p)
            f = hamiltonian_flow_check(p, s)
            rows["a"].append(a)
            rows["sign"].append(sign)
            rows["dy"].append(q.y)
            rows["dy_err"].append(abs(q.y - f.y))
            rows["dt"].append(q.t)
            rows["dt_err"].append(abs(q.t - f.t))
    for c, v in rows.items():
        t.add(c, v)
    return t


def cmd_eikonal(cfg, workers):
    """θ, ζ of the jet at (1, -(1+a)^{1/2}) and the caustic; errors compare
    with the jet one order higher."""
    from .eikonal_jets import caustic, jet_recursion
    J = cfg.get("eikonal", "order")
    slope = cfg.get("eikonal", "b_slope")
    win = tuple(cfg.get("eikonal", "window"))
    b = (lambda y: 1 + slope * y) if slope else None
    tau = -math.sqrt(1 + cfg.get("eikonal", "a"))
    jets = [jet_recursion(b, j, 1.0, tau, window=win) for j in (J, J + 1)]
    y = np.linspace(win[0], win[1], cfg.get("eikonal", "samples"))
    xc = [caustic(y, 1.0, tau, jt) for jt in jets]
    x = 0.5 * xc[0]
    th = [jt.theta(x, y) for jt in jets]
    ze = [jt.zeta(x, y) for jt in jets]
    t = Table()
    t.add("y", y)
    t.add("x", x)
    t.add("theta", th[0])
    t.add("theta_err", np.abs(th[0] - th[1]))
    t.add("zeta", ze[0])
    t.add("zeta_err", np.abs(ze[0] - ze[1]))
    t.add("caustic", xc[0])
    t.add("caustic_err", np.abs(xc[0] - xc[1]))
    return t


def _spec(cfg, n=None, h=None):
    from .cusp_parametrix import CuspSpec
    from .symbol_calculus import SymbolSettings
    kw = cfg.get("cusp", "kappa_halfwidth")
    settings = SymbolSettings(kappa_halfwidth=kw, kappa_plateau=0.6 * kw)
    n = cfg.get("cusp", "n") if n is None else n
    return CuspSpec(n, cfg.scale(h), cfg.get("cusp", "psi_halfwidth"), settings)


def cmd_cusp(cfg, workers):
    """‖uⁿ(·, t)‖_{L²} and max|uⁿ| at the configured profile times."""
    from .cusp_parametrix import eval_cusp
    from .norm_lab import cusp_norms
    spec = _spec(cfg)
    cols = {c: [] for c in ("n", "Z", "t", "l2", "l2_err", "peak", "peak_err")}
    for Z in cfg.get("cusp", "times"):
        tt = spec.time(Z)
        cn = cusp_norms(spec, t=tt, rs=(2,))
        f = eval_cusp(spec, t=tt, error=True, r_max=2)
        i = np.unravel_index(np.argmax(np.abs(f.values)), f.values.shape)
        for c, v in zip(cols, (spec.n, Z, tt, cn.l2, cn.l2_err, abs(f.values[i]), f.err[i])):
            cols[c].append(float(v))
    t = Table()
    for c, v in cols.items():
        t.add(c, v)
    return t


def cmd_trace(cfg, workers):
    """‖Tr₋(uⁿ) + Tr₊(uⁿ⁺¹)‖/‖Tr₋(uⁿ)‖ for n = 0..n_max; the error is the
    change when the y period is enlarged by half."""
    from .cusp_parametrix import blur_width, trace_pairing
    cols = {c: [] for c in ("n", "lambda", "pairing", "pairing_err")}
    for n in range(cfg.get("cusp", "n_max") + 1):
        spec = _spec(cfg, n)
        P = 2 * (4 / 3 * spec.a ** 1.5 + 2 * blur_width(spec))
        r1, r2 = trace_pairing(spec, P), trace_pairing(spec, 1.5 * P)
        for c, v in zip(cols, (n, spec.lam, r1, abs(r1 - r2))):
            cols[c].append(float(v))
    t = Table()
    for c, v in cols.items():
        t.add(c, v)
    return t


def cmd_norms(cfg, workers):
    """L² and L^r norms of u⁰ at the centre of J₀ with the regime split."""
    from .norm_lab import cusp_norms
    spec = _spec(cfg, 0)
    rs = tuple(r for r in cfg.get("norms", "r") if r != 2)
    cn = cusp_norms(spec, rs=rs, M=cfg.get("scale", "M"))
    t = Table()
    t.add("r", [2.0] + [float(r) for r in rs])
    t.add("norm", [cn.l2] + [cn.lr[r] for r in rs])
    t.add("norm_err", [cn.l2_err] + [cn.lr_err[r] for r in rs])
    for j, name in enumerate(("gallery", "inner", "outer")):
        t.add(f"{name}_fraction", [math.nan] + [cn.regime[r][j] for r in rs])
        # fractions are ratios of the same streamed sums; no separate estimate
        t.add(f"{name}_fraction_err", [math.nan] + [0.0 for _ in rs])
    return t


def _ladder_point(args):
    cfg_values, h = args
    from .norm_lab import cusp_norms
    cfg = ExperimentConfig(cfg_values)
    spec = _spec(cfg, 0, h)
    rs = tuple(r for r in cfg.get("norms", "r") if r != 2)
    cn = cusp_norms(spec, rs=rs, M=cfg.get("scale", "M"))
    return cn.l2, cn.l2_err, [cn.lr[r] for r in rs], [cn.lr_err[r] for r in rs]


def _ladder_rows(cfg, workers):
    hs = cfg.ladder()
    jobs = [(cfg.values, float(h)) for h in hs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_ladder_point, jobs))
    else:
        res = [_ladder_point(j) for j in jobs]
    return hs, res


def cmd_ladder(cfg, workers):
    """Norm ladder of u⁰ with fitted slopes (repeated on every row)."""
    from .norm_lab import DegenerateLadderError, fit_exponent
    hs, res = _ladder_rows(cfg, workers)
    rs = tuple(r for r in cfg.get("norms", "r") if r != 2)
    scales = [cfg.scale(h) for h in hs]
    t = Table()
    t.add("h", hs)
    t.add("a", [s.a for s in scales])
    t.add("lambda", [s.lam for s in scales])
    t.add("N", [float(s.N) for s in scales])
    series = {"L2": ([r[0] for r in res], [r[1] for r in res])}
    for j, r in enumerate(rs):
        series[f"L{r}"] = ([x[2][j] for x in res], [x[3][j] for x in res])
    for label, (v, e) in series.items():
        t.add(label, v)
        t.add(label + "_err", e)
    for label, (v, e) in series.items():
        try:
            slope, se = fit_exponent(hs, v, e)
        except DegenerateLadderError:
            slope, se = math.nan, math.nan
        t.add(f"slope_{label}", [slope] * len(hs))
        t.add(f"slope_{label}_err", [se] * len(hs))
    return t


def cmd_quotient(cfg, workers):
    """Slope of ‖u⁰‖_{L^r}/‖u⁰(0)‖_{L²} against -β(r) + ε/8 and the
    free-space exponent."""
    from .norm_lab import (beta_loss, fit_exponent, free_space_exponent,
                           quotient_slope_prediction)
    hs, res = _ladder_rows(cfg, workers)
    rs = tuple(r for r in cfg.get("norms", "r") if r > 4)
    all_rs = tuple(r for r in cfg.get("norms", "r") if r != 2)
    eps = cfg.get("scale", "eps")
    cols = {c: [] for c in ("r", "eps", "slope", "slope_err", "prediction", "prediction_err",
                            "free_space", "free_space_err", "beta", "beta_err")}
    for r in rs:
        j = all_rs.index(r)
        q = np.array([x[2][j] / x[0] for x in res])
        qe = q * np.array([x[3][j] / x[2][j] + x[1] / x[0] for x in res])
        slope, se = fit_exponent(hs, q, qe)
        for c, v in zip(cols, (r, eps, slope, se, quotient_slope_prediction(r, eps), 0.0,
                               -free_space_exponent(r), 0.0, beta_loss(r), 0.0)):
            cols[c].append(float(v))
    t = Table()
    for c, v in cols.items():
        t.add(c, v)
    return t


COMMAND_FUNCS = {name: globals()["cmd_" + name] for name in COMMANDS}


# ---------------------------------------------------------------- driver

def run(command, cfg: ExperimentConfig, out_dir, cache: Cache, workers=1):
    """Run one command, going through the cache; returns (table, cached)."""
    key = cfg.digest(command)
    table = cache.read(key)
    cached = table is not None
    if table is None:
        table = COMMAND_FUNCS[command](cfg, workers)
        table.check_errors()
        cache.write(key, table)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, command + ".csv"), "w", newline="") as fh:
        fh.write(table.to_csv())
    return table, cached


def _write_summary(out_dir, rows):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["command", "status", "rows", "cached", "message"])
        for r in rows:
            w.writerow(r)


def build_parser():
    p = argparse.ArgumentParser(prog="cuspwave", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--workers", type=int, metavar="N")
    p.add_argument("--no-cache", action="store_true")
    p.add_argument("--suite", metavar="NAME")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.suite and args.command:
            raise ConfigError("give either --suite or a command, not both")
        cfg = ExperimentConfig.load(args.config, args.suite)
        command = args.command or SUITES.get(cfg.get("experiment", "suite"))
        if command is None:
            raise ConfigError("no command or suite given")
        workers = args.workers if args.workers is not None else cfg.get("experiment", "workers")
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
    except ConfigError as exc:
        print(f"cuspwave: invalid configuration: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg.get("experiment", "out")
    use_cache = not args.no_cache and cfg.get("experiment", "cache").lower() == "true"
    cache = Cache(default_cache_dir(), use_cache)
    try:
        table, cached = run(command, cfg, out_dir, cache, workers)
    except Exception as exc:  # noqa: BLE001 - reported through the exit status
        _write_summary(out_dir, [[command, "FAILED", 0, "false", f"{type(exc).__name__}: {exc}"]])
        print(f"cuspwave: {command} failed: {exc}", file=sys.stderr)
        return 3
    status = "ok"
    if "passed" in table.columns and "fail" in table.columns["passed"]:
        status = "checks failed"
    _write_summary(out_dir, [[command, status, table.nrows, str(cached).lower(), ""]])
    print(table.to_csv(), end="")
    return 0 if status == "ok" else 3


if __name__ == "__main__":
    sys.exit(main())
