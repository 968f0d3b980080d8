"""Command-line front end: parameter sweeps, state export, phase-space grids and the verification suite.

Configuration is resolved in increasing order of precedence: built-in
defaults, the file named by ``$THERMOFOCK_CONFIG``, the file given with
``--config``, then individual flags.  Config files hold one ``key = value``
per line; ``#`` starts a comment.  Keys are the :class:`RunConfig` field
names, plus ``tolerance.<name>`` for tolerance-profile overrides.

Exit status: 0 success, 1 verification failure or error rows, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .fock import (
    CutoffNotConverged,
    ModelParams,
    TruncationPolicy,
    choose_cutoff,
    gibbs_density,
    reduced_density,
)
from .linalg import matrix_distance
from .phase_space import (
    WIGNER_CONVENTION,
    QuadratureFrame,
    covering_halfwidth,
    radon_numeric,
    tomogram_closed_candidate,
    tomogram_fock,
    wigner_closed_grid,
)
from .states import (
    bogoliubov_thermo_state,
    generalized_thermo_state,
    spectral_thermo_state,
    thermo_observables,
    thermo_vacuum_free,
)
from .su11 import thermal_params
from .tolerances import DEFAULT_TOLERANCES, ToleranceProfile, use_tolerances
from .verify import ACCEPTANCE_GRID, GridPoint, VerifySettings, run_verify

CONFIG_ENV = "THERMOFOCK_CONFIG"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

CONSTRUCTIONS = ("generalized", "spectral", "free", "bogoliubov-unitary", "bogoliubov-closed")

# fields that control execution only; they never appear in output files so
# that identical physics gives identical bytes
EXECUTION_ONLY = ("threads", "out", "timings")

MODEL_KEYS = ("omega", "kappa_abs", "kappa_arg", "beta", "beta_sweep")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    omega: float = 1.0
    kappa_abs: float = 0.25
    kappa_arg: float = 0.0
    beta: float = 1.0
    beta_sweep: tuple | None = None
    cutoff: int | None = None
    tol: float = 1e-10
    initial_cutoff: int = 16
    max_cutoff: int = 512
    grid: tuple = (-6.0, 6.0, 0.1)
    radon_step: float = 0.02
    frames: tuple = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0))
    construction: str = "generalized"
    format: str = "csv"
    out: str | None = None
    timings: str | None = None
    threads: int = 1
    tolerance_overrides: dict = field(default_factory=dict)
    explicit: frozenset = frozenset()

    # -- derived ------------------------------------------------------------

    def betas(self) -> list[float]:
        if self.beta_sweep is None:
            return [self.beta]
        start, stop, count = self.beta_sweep
        if count == 1:
            return [start]
        return [start + (stop - start) * i / (count - 1) for i in range(count)]

    def params(self, beta: float) -> ModelParams:
        return ModelParams.from_polar(self.omega, self.kappa_abs, self.kappa_arg, beta)

    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(initial=min(self.initial_cutoff, self.max_cutoff), tol=self.tol,
                                max_cutoff=self.max_cutoff)

    def tolerance_profile(self) -> ToleranceProfile:
        return DEFAULT_TOLERANCES.replace(**self.tolerance_overrides)

    def axis(self) -> np.ndarray:
        lo, hi, step = self.grid
        count = int(round((hi - lo) / step))
        return lo + step * np.arange(count + 1)

    def resolved(self) -> dict:
        d = dataclasses.asdict(self)
        for key in EXECUTION_ONLY + ("explicit",):
            d.pop(key)
        d["frames"] = [list(f) for f in self.frames]
        d["grid"] = list(self.grid)
        d["beta_sweep"] = list(self.beta_sweep) if self.beta_sweep else None
        return d


# -- parsing ----------------------------------------------------------------


def _float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"value must be finite: {text!r}")
    return value


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"not an integer: {text!r}") from exc


def parse_sweep(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"sweep must be start:stop:count, got {text!r}")
    start, stop, count = _float(parts[0]), _float(parts[1]), _int(parts[2])
    if count < 1:
        raise ConfigError("sweep count must be at least 1")
    if count > 1 and not stop > start:
        raise ConfigError("sweep must be strictly increasing (stop > start)")
    return start, stop, count


def parse_grid(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be qmin:qmax:step, got {text!r}")
    lo, hi, step = (_float(x) for x in parts)
    if not hi > lo:
        raise ConfigError("grid needs qmax > qmin")
    if not step > 0:
        raise ConfigError("grid step must be positive")
    if abs((hi - lo) / step - round((hi - lo) / step)) > 1e-9 * max(1.0, (hi - lo) / step):
        raise ConfigError("grid step must divide qmax - qmin")
    return lo, hi, step


def parse_frame(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"frame must be f,g, got {text!r}")
    f, g = _float(parts[0]), _float(parts[1])
    if f == 0 and g == 0:
        raise ConfigError("frame (0, 0) does not define a quadrature")
    return f, g


def _bool_cutoff(text: str) -> int | None:
    return None if text.strip().lower() in ("auto", "none", "") else _int(text)


_PARSERS = {
    "omega": _float,
    "kappa_abs": _float,
    "kappa_arg": _float,
    "beta": _float,
    "beta_sweep": parse_sweep,
    "cutoff": _bool_cutoff,
    "tol": _float,
    "initial_cutoff": _int,
    "max_cutoff": _int,
    "grid": parse_grid,
    "radon_step": _float,
    "frames": lambda t: tuple(parse_frame(x) for x in t.split(";") if x.strip()),
    "construction": str,
    "format": str,
    "out": str,
    "timings": str,
    "threads": _int,
}


def read_config_file(path: str | os.PathLike) -> dict:
    """Parse a flat ``key = value`` file into typed overrides."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out: dict = {}
    tolerances: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key.startswith("tolerance."):
            tolerances[key.split(".", 1)[1]] = value
        elif key in _PARSERS:
            try:
                out[key] = _PARSERS[key](value)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    if tolerances:
        out["tolerance_overrides"] = _tolerances(tolerances)
    return out


def _tolerances(raw: dict) -> dict:
    known = {f.name for f in dataclasses.fields(ToleranceProfile)}
    out = {}
    for name, value in raw.items():
        if name not in known:
            raise ConfigError(f"unknown tolerance {name!r}; known: {', '.join(sorted(known))}")
        out[name] = _float(value) if isinstance(value, str) else float(value)
        if not out[name] > 0:
            raise ConfigError(f"tolerance {name} must be positive")
    return out


def validate(cfg: RunConfig) -> RunConfig:
    if not cfg.omega > 0:
        raise ConfigError("omega must be positive")
    if cfg.kappa_abs < 0:
        raise ConfigError("kappa_abs must be nonnegative")
    if cfg.beta_sweep is None and not cfg.beta > 0:
        raise ConfigError("beta must be positive")
    if cfg.beta_sweep is not None and not cfg.beta_sweep[0] > 0:
        raise ConfigError("beta sweep must start above zero")
    if cfg.cutoff is not None and cfg.cutoff < 2:
        raise ConfigError("cutoff must be at least 2")
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    if cfg.max_cutoff < 8 or cfg.initial_cutoff < 8:
        raise ConfigError("initial and maximum cutoffs must be at least 8")
    if not cfg.radon_step > 0:
        raise ConfigError("radon_step must be positive")
    if not cfg.frames:
        raise ConfigError("at least one frame is required")
    if cfg.construction not in CONSTRUCTIONS:
        raise ConfigError(f"construction must be one of {', '.join(CONSTRUCTIONS)}")
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    for path in (cfg.out, cfg.timings):
        if path is not None:
            parent = Path(path).resolve().parent
            if not parent.is_dir() or not os.access(parent, os.W_OK):
                raise ConfigError(f"output location {path} is not writable")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--omega", help="oscillator frequency (default 1)")
    g.add_argument("--kappa-abs", dest="kappa_abs", help="|kappa| (default 0.25)")
    g.add_argument("--kappa-arg", dest="kappa_arg", help="arg kappa in radians (default 0)")
    beta = g.add_mutually_exclusive_group()
    beta.add_argument("--beta", help="inverse temperature (default 1)")
    beta.add_argument("--beta-sweep", dest="beta_sweep", metavar="START:STOP:COUNT",
                      help="evenly spaced inverse temperatures")
    t = common.add_argument_group("truncation")
    cut = t.add_mutually_exclusive_group()
    cut.add_argument("--cutoff", help="fixed Fock cutoff")
    cut.add_argument("--auto-cutoff", dest="auto_cutoff", action="store_true",
                     help="choose the cutoff from the convergence witness (default)")
    t.add_argument("--tol", help="cutoff convergence tolerance (default 1e-10)")
    t.add_argument("--max-cutoff", dest="max_cutoff", help="largest cutoff tried (default 512)")
    t.add_argument("--initial-cutoff", dest="initial_cutoff", help="first cutoff tried (default 16)")
    t.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                   help="override one entry of the tolerance profile (repeatable)")
    ph = common.add_argument_group("phase space")
    ph.add_argument("--grid", metavar="QMIN:QMAX:STEP", help="q and p axis (default -6:6:0.1)")
    ph.add_argument("--radon-step", dest="radon_step", help="step of the internal Radon grid (default 0.02)")
    ph.add_argument("--frame", action="append", default=[], metavar="F,G",
                    help="quadrature frame (repeatable; default 1,0 0,1 1,1)")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=("csv", "json"))
    o.add_argument("--out", metavar="PATH", help="output file, or directory for phase-space CSV")
    o.add_argument("--config", metavar="PATH", help="flat key = value config file")
    o.add_argument("--threads", help="worker threads (default 1); never affects output")

    parser = argparse.ArgumentParser(prog="thermofock", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("thermal", parents=[common], help="closed-form thermodynamics per beta")
    sub.add_parser("phase-space", parents=[common], help="Wigner grid and tomogram profiles")
    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("--timings", metavar="PATH", help="write wall times to this JSON sidecar")
    s = sub.add_parser("state", parents=[common], help="doubled-state amplitudes and reduced density")
    s.add_argument("--construction", choices=CONSTRUCTIONS)
    return parser


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    values: dict = {}
    explicit: set = set()
    for path in (environ.get(CONFIG_ENV), args.config):
        if path:
            layer = read_config_file(path)
            explicit |= set(layer) & set(MODEL_KEYS)
            tol = {**values.get("tolerance_overrides", {}), **layer.pop("tolerance_overrides", {})}
            values.update(layer)
            if tol:
                values["tolerance_overrides"] = tol
    flags = {}
    for key, parser in _PARSERS.items():
        raw = getattr(args, key, None)
        if raw is not None and key not in ("frames",):
            flags[key] = parser(raw) if isinstance(raw, str) else raw
    if args.frame:
        flags["frames"] = tuple(parse_frame(x) for x in args.frame)
    if args.auto_cutoff:
        flags["cutoff"] = None
    # a flag for one temperature form replaces the other from lower layers
    if "beta" in flags:
        values["beta_sweep"] = None
    if "beta_sweep" in flags:
        values.pop("beta", None)
    explicit |= set(flags) & set(MODEL_KEYS)
    values.update(flags)
    if args.tolerance:
        raw = {}
        for item in args.tolerance:
            if "=" not in item:
                raise ConfigError(f"--tolerance expects NAME=VALUE, got {item!r}")
            name, value = item.split("=", 1)
            raw[name.strip()] = value.strip()
        values["tolerance_overrides"] = {**values.get("tolerance_overrides", {}), **_tolerances(raw)}
    return validate(RunConfig(**values, explicit=frozenset(explicit)))


# -- output -------------------------------------------------------------------


def fmt(x) -> str:
    """Round-trip text for a CSV cell."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x) + 0.0)  # no signed zeros
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _provenance(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "config": cfg.resolved(),
            "tolerances": cfg.tolerance_profile().as_dict()}


def csv_table(columns: list[str], rows: list[dict], provenance: dict, comments=()) -> str:
    buf = io.StringIO()
    buf.write(f"# provenance: {json.dumps(_jsonable(provenance), sort_keys=True)}\n")
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def json_doc(payload: dict) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _map(cfg: RunConfig, fn, items):
    items = list(items)
    if cfg.threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(fn, items))


def _cutoff(cfg: RunConfig, p: ModelParams) -> int:
    return cfg.cutoff if cfg.cutoff is not None else choose_cutoff(p, cfg.policy())


# -- subcommands ----------------------------------------------------------------

THERMAL_COLUMNS = ["beta", "D", "lambda", "E_re", "E_im", "Z", "internal_energy", "entropy",
                   "term_number", "term_raise", "term_lower", "sum_rule_residual", "error"]


def thermal_row(cfg: RunConfig, beta: float) -> dict:
    try:
        p = cfg.params(beta)
    except ValueError as exc:
        return {"beta": beta, "error": f"{type(exc).__name__}: {exc}"}
    dp = thermal_params(p)
    obs = thermo_observables(p)
    return {
        "beta": beta, "D": dp.D, "lambda": dp.lam, "E_re": dp.E.real, "E_im": dp.E.imag,
        "Z": obs.Z, "internal_energy": obs.internal_energy, "entropy": obs.entropy,
        "term_number": obs.term_number, "term_raise": obs.term_raise, "term_lower": obs.term_lower,
        "sum_rule_residual": obs.sum_rule_residual, "error": None,
    }


def run_thermal(cfg: RunConfig) -> tuple[str, int]:
    rows = _map(cfg, lambda b: thermal_row(cfg, b), cfg.betas())
    prov = _provenance(cfg, "thermal")
    failed = any(r.get("error") for r in rows)
    if cfg.format == "json":
        text = json_doc({**prov, "columns": THERMAL_COLUMNS, "rows": rows})
    else:
        text = csv_table(THERMAL_COLUMNS, rows, prov, [
            "columns: beta, D=sqrt(omega^2-4|kappa|^2), lambda, E (re, im), Z, <H>, S,",
            "  the three energy terms, relative sum-rule residual, error message (empty if none)",
        ])
    return text, EXIT_FAIL if failed else EXIT_OK


def _state(cfg: RunConfig, p: ModelParams, n: int):
    tol = cfg.tol
    builders = {
        "generalized": lambda: generalized_thermo_state(p, n, tail_tol=tol),
        "spectral": lambda: spectral_thermo_state(p, n),
        "free": lambda: thermo_vacuum_free(p, n),
        "bogoliubov-unitary": lambda: bogoliubov_thermo_state(p, n, route="unitary", tail_tol=tol),
        "bogoliubov-closed": lambda: bogoliubov_thermo_state(p, n, route="closed", tail_tol=tol),
    }
    return builders[cfg.construction]()


def run_state(cfg: RunConfig) -> tuple[str, int]:
    out_rows, meta = [], []
    code = EXIT_OK
    for beta in cfg.betas():
        try:
            p = cfg.params(beta)
            n = _cutoff(cfg, p)
            s = _state(cfg, p, n)
            rho = reduced_density(s)
            gap = matrix_distance(rho.matrix, gibbs_density(p, n).matrix, norm="trace")
        except (ValueError, CutoffNotConverged) as exc:
            meta.append({"beta": beta, "error": f"{type(exc).__name__}: {exc}"})
            code = EXIT_FAIL
            continue
        meta.append({"beta": beta, "cutoff": n, "tail_mass": s.tail_mass,
                     "norm_factor": s.norm_factor, "gibbs_trace_distance": gap, "error": None})
        for table, mat in (("amplitude", s.amplitudes), ("reduced_density", rho.matrix)):
            for (m, k), v in np.ndenumerate(mat):
                out_rows.append({"beta": beta, "table": table, "m": m, "n": k,
                                 "re": float(v.real), "im": float(v.imag)})
    prov = {**_provenance(cfg, "state"), "states": meta}
    columns = ["beta", "table", "m", "n", "re", "im"]
    if cfg.format == "json":
        text = json_doc({**prov, "columns": columns, "rows": out_rows})
    else:
        text = csv_table(columns, out_rows, prov, [
            "table=amplitude: C[m, n] with m the system and n the tilde index;",
            "table=reduced_density: C C^+ normalized to unit trace",
        ])
    return text, code


TOMO_COLUMNS = ["f", "g", "q", "R_fock", "R_radon", "R_candidate", "dev_fock_radon",
                "abs_dev_candidate_fock", "rel_dev_candidate_fock", "abs_dev_candidate_radon",
                "rel_dev_candidate_radon"]


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else (0.0 if a == b else math.inf)


def phase_space_tables(cfg: RunConfig, p: ModelParams) -> tuple[list, list, dict]:
    errors = []
    n = _cutoff(cfg, p)
    rho = gibbs_density(p, n)
    axis = cfg.axis()
    wig = wigner_closed_grid(p, axis, axis)
    w_rows = [{"q": float(q), "p": float(pp), "W": float(wig.values[i, j])}
              for i, q in enumerate(axis) for j, pp in enumerate(axis)]
    half = max(6.0, covering_halfwidth(p, step=cfg.radon_step))
    count = int(round(2 * half / cfg.radon_step))
    cover_axis = -half + cfg.radon_step * np.arange(count + 1)
    cover = wigner_closed_grid(p, cover_axis, cover_axis)

    def frame_rows(fg):
        fr = QuadratureFrame(*fg)
        fock = tomogram_fock(rho, fr, axis)
        candidate = tomogram_closed_candidate(p, fr, axis)
        try:
            radon = radon_numeric(cover, fr, axis)
            err = None
        except ValueError as exc:
            radon = np.full(axis.size, math.nan)
            err = {"frame": list(fg), "error": f"{type(exc).__name__}: {exc}"}
        rows = []
        for q, r_f, r_r, r_p in zip(axis, fock, radon, candidate):
            rows.append({
                "f": fr.f, "g": fr.g, "q": float(q), "R_fock": r_f,
                "R_radon": None if math.isnan(r_r) else r_r, "R_candidate": r_p,
                "dev_fock_radon": None if math.isnan(r_r) else abs(r_f - r_r),
                "abs_dev_candidate_fock": abs(r_p - r_f), "rel_dev_candidate_fock": _rel(r_p, r_f),
                "abs_dev_candidate_radon": None if math.isnan(r_r) else abs(r_p - r_r),
                "rel_dev_candidate_radon": None if math.isnan(r_r) else _rel(r_p, r_r),
            })
        return rows, err

    t_rows = []
    for rows, err in _map(cfg, frame_rows, cfg.frames):
        t_rows.extend(rows)
        if err:
            errors.append(err)
    meta = {"beta": p.beta, "cutoff": n, "convention": WIGNER_CONVENTION,
            "radon_grid_halfwidth": half, "radon_grid_edge_max": cover.edge_max(), "errors": errors}
    return w_rows, t_rows, meta


def run_phase_space(cfg: RunConfig) -> tuple[dict[str, str], int]:
    """Return ``{file name: text}``; the names are used when ``--out`` is a directory."""
    sections = []
    code = EXIT_OK
    for beta in cfg.betas():
        try:
            p = cfg.params(beta)
            w_rows, t_rows, meta = phase_space_tables(cfg, p)
        except (ValueError, CutoffNotConverged) as exc:
            sections.append(([], [], {"beta": beta, "errors": [f"{type(exc).__name__}: {exc}"]}))
            code = EXIT_FAIL
            continue
        if meta["errors"]:
            code = EXIT_FAIL
        sections.append((w_rows, t_rows, meta))
    metas = [m for _, _, m in sections]
    prov = {**_provenance(cfg, "phase-space"), "metadata": metas}
    if cfg.format == "json":
        doc = {**prov, "grids": [{"metadata": m, "wigner": w, "tomogram": t} for w, t, m in sections]}
        return {"phase_space.json": json_doc(doc)}, code
    w_all = [{"beta": m["beta"], **r} for w, _, m in sections for r in w]
    t_all = [{"beta": m["beta"], **r} for _, t, m in sections for r in t]
    return {
        "wigner.csv": csv_table(["beta", "q", "p", "W"], w_all, prov,
                                [f"convention: {WIGNER_CONVENTION}"]),
        "tomogram.csv": csv_table(["beta"] + TOMO_COLUMNS, t_all, prov,
                                  ["R_fock: Fock projection; R_radon: line integral of the Wigner grid;",
                                   "R_candidate: candidate closed form, reported for comparison only"]),
    }, code


def verify_settings(cfg: RunConfig) -> VerifySettings:
    grid = ACCEPTANCE_GRID
    if cfg.explicit:
        grid = tuple(GridPoint(cfg.omega, cfg.kappa_abs, cfg.kappa_arg, b) for b in cfg.betas())
    return VerifySettings(grid=grid, tol=cfg.tol, initial_cutoff=cfg.initial_cutoff,
                          max_cutoff=cfg.max_cutoff, frames=tuple(cfg.frames))


def run_verify_command(cfg: RunConfig) -> tuple[str, int, object]:
    report = run_verify(verify_settings(cfg), threads=cfg.threads,
                        config=_provenance(cfg, "verify"))
    if cfg.format == "json":
        text = report.to_json()
    else:
        rows = [{"criterion": c.criterion, "name": c.name, "residual": c.residual,
                 "tolerance": c.tolerance, "passed": c.passed, "cutoff": c.cutoff}
                for c in report.checks]
        text = csv_table(["criterion", "name", "residual", "tolerance", "passed", "cutoff"], rows,
                         report.config, [f"overall: {'pass' if report.passed else 'fail'}"])
    return text, EXIT_OK if report.passed else EXIT_FAIL, report


def main(argv: list[str] | None = None, environ=os.environ) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args, environ)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with threadpool_limits(limits=1), use_tolerances(cfg.tolerance_profile()):
        if args.command == "thermal":
            text, code = run_thermal(cfg)
            _emit(text, cfg.out)
        elif args.command == "state":
            text, code = run_state(cfg)
            _emit(text, cfg.out)
        elif args.command == "phase-space":
            files, code = run_phase_space(cfg)
            if cfg.out is None:
                sys.stdout.write("".join(files.values()))
            elif cfg.format == "json":
                Path(cfg.out).write_text(files["phase_space.json"])
            else:
                target = Path(cfg.out)
                target.mkdir(exist_ok=True)
                for name, text in files.items():
                    (target / name).write_text(text)
        else:
            text, code, report = run_verify_command(cfg)
            _emit(text, cfg.out)
            for line in report.summary_lines():
                print(line, file=sys.stderr)
            if cfg.timings:
                Path(cfg.timings).write_text(json.dumps(report.timings(), sort_keys=True, indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
