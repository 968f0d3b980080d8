"""Acceptance suite: every closed form checked against an independent numerical route.

Each criterion is split into per-point tasks that return :class:`Measure`
records; tasks may run on a thread pool, but results are gathered in task
order, so the serialized report does not depend on the thread count.
Wall times are kept out of the canonical report and exposed separately.
"""

from __future__ import annotations

import functools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg as sla
from scipy import integrate
from threadpoolctl import threadpool_limits

from .fock import (
    CutoffNotConverged,
    ModelParams,
    TruncationPolicy,
    UnstableHamiltonianError,
    build_hamiltonian,
    choose_cutoff,
    fock_operators,
    gibbs_density,
    reduced_density,
    von_neumann_entropy,
)
from .linalg import expm_hermitian, matrix_distance
from .phase_space import (
    QuadratureFrame,
    audit_candidate_tomogram,
    covering_halfwidth,
    radon_numeric,
    tomogram_fock,
    wigner_closed,
    wigner_closed_grid,
    wigner_free,
    wigner_numeric_grid,
)
from .states import (
    bogoliubov_thermo_state,
    diagonalization_check,
    generalized_thermo_state,
    spectral_thermo_state,
    thermo_observables,
    thermo_vacuum_free,
)
from .su11 import (
    GaussianIntegralParams,
    PoleError,
    QuadraticExponent,
    disentangle,
    exponent_matrix,
    factored_gibbs,
    gaussian_integral,
    gaussian_integral_quadrature,
    partition_function,
    partition_function_coherent_trace,
)
from .tolerances import tolerances, use_tolerances

__all__ = [
    "GridPoint",
    "ACCEPTANCE_GRID",
    "CRITERIA",
    "VerifySettings",
    "Measure",
    "Check",
    "VerifyReport",
    "run_verify",
]


class GridPoint(NamedTuple):
    omega: float
    kappa_abs: float
    kappa_arg: float
    beta: float

    def label(self) -> str:
        return (f"omega={self.omega!r},kappa_abs={self.kappa_abs!r},"
                f"kappa_arg={self.kappa_arg!r},beta={self.beta!r}")

    def params(self) -> ModelParams:
        return ModelParams.from_polar(self.omega, self.kappa_abs, self.kappa_arg, self.beta)


ACCEPTANCE_GRID = tuple(
    GridPoint(1.0, k, a, b)
    for k in (0.0, 0.1, 0.25, 0.4)
    for a in (0.0, math.pi / 3)
    for b in (0.3, 1.0, 3.0)
)

CRITERIA = {
    0: "parameter validity",
    1: "partial-trace identity",
    2: "partition function",
    3: "thermodynamics",
    4: "disentangling identity",
    5: "gaussian integral",
    6: "wigner agreement",
    7: "tomogram routes",
    8: "candidate tomogram audit",
    9: "bogoliubov diagonalization",
    10: "free-oscillator limit",
    11: "determinism",
}


@dataclass(frozen=True)
class VerifySettings:
    grid: tuple = ACCEPTANCE_GRID
    tol: float = 1e-10
    initial_cutoff: int = 16
    partial_trace_cap: int = 128
    max_cutoff: int = 512
    seed: int = 2024
    samples: int = 50
    disentangle_cutoff: int = 24
    wigner_cutoff: int = 80
    wigner_padding: int = 40
    wigner_halfwidth: float = 3.0
    wigner_points: int = 21
    diag_cutoff: int = 80
    grid_step: float = 0.02
    grid_halfwidth: float = 6.0
    profile_step: float = 0.1
    tomo_q: tuple = tuple(-5.0 + 0.25 * i for i in range(41))
    frames: tuple = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0))

    def policy(self, cap: int | None = None) -> TruncationPolicy:
        cap = self.max_cutoff if cap is None else cap
        return TruncationPolicy(initial=min(self.initial_cutoff, cap), tol=self.tol, max_cutoff=cap)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [p._asdict() for p in self.grid]
        d["frames"] = [list(f) for f in self.frames]
        d["tomo_q"] = list(self.tomo_q)
        return d


@dataclass(frozen=True)
class Measure:
    criterion: int
    name: str
    residual: float
    tolerance: float
    passed: bool | None = None
    cutoff: int | None = None
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        if self.passed is not None:
            return self.passed
        return bool(self.residual <= self.tolerance)


@dataclass
class Check:
    criterion: int
    name: str
    residual: float
    tolerance: float
    passed: bool
    cutoff: int | None
    detail: dict
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "residual": _num(self.residual),
            "tolerance": _num(self.tolerance),
            "passed": self.passed,
            "cutoff": self.cutoff,
            "detail": _jsonable(self.detail),
        }


def _num(x):
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    return obj


@dataclass
class VerifyReport:
    checks: list
    config: dict
    tolerance_profile: dict
    artifacts: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def criterion_status(self) -> dict:
        out: dict[int, bool] = {}
        for c in self.checks:
            out[c.criterion] = out.get(c.criterion, True) and c.passed
        return dict(sorted(out.items()))

    def summary_lines(self) -> list[str]:
        lines = []
        for crit, ok in self.criterion_status().items():
            worst = [c for c in self.checks if c.criterion == crit and not c.passed]
            note = "" if ok else "  failing: " + ", ".join(
                f"{c.name} (residual {_num(c.residual)}, tol {_num(c.tolerance)})" for c in worst)
            lines.append(f"[{'PASS' if ok else 'FAIL'}] criterion {crit}: {CRITERIA.get(crit, '')}{note}")
        return lines

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "criteria": {str(k): v for k, v in self.criterion_status().items()},
            "checks": [c.as_dict() for c in self.checks],
            "config": _jsonable(self.config),
            "tolerance_profile": _jsonable(self.tolerance_profile),
            "artifacts": _jsonable(self.artifacts),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def timings(self) -> dict:
        return {
            "total": self.wall_time,
            "checks": {f"{c.criterion}:{c.name}": c.wall_time for c in self.checks},
        }


# -- helpers ---------------------------------------------------------------


def _rel(a, b) -> float:
    b_abs = abs(b)
    return abs(a - b) / b_abs if b_abs else abs(a - b)


@functools.lru_cache(maxsize=None)
def _auto_cutoff(p: ModelParams, policy: TruncationPolicy) -> int:
    return choose_cutoff(p, policy)


def _frames(settings: VerifySettings) -> list[QuadratureFrame]:
    return [QuadratureFrame(f, g) for f, g in settings.frames]


def _lower_block(a: np.ndarray, b: np.ndarray) -> float:
    k = a.shape[0] // 2
    return float(np.max(np.abs(a[:k, :k] - b[:k, :k])))


# -- per-point tasks -------------------------------------------------------


def _gate(settings, pt: GridPoint) -> list[Measure]:
    pt.params()
    return [Measure(0, "stability gate", 0.0, 0.0, True)]


def _partial_trace(settings, pt: GridPoint) -> list[Measure]:
    p = pt.params()
    policy = settings.policy(min(settings.partial_trace_cap, settings.max_cutoff))
    try:
        n = _auto_cutoff(p, policy)
        conv = Measure(1, "cutoff converged", 0.0, settings.tol, True, n)
    except UnstableHamiltonianError as exc:
        result = [Measure(crit, "stability gate", math.inf, 0.0, False, info={"error": str(exc)})]
    except CutoffNotConverged as exc:
        n = policy.max_cutoff
        conv = Measure(1, "cutoff converged", exc.residual, settings.tol, False, n,
                       {"best_cutoff": exc.best_cutoff})
    rho = gibbs_density(p, n).matrix
    out = [conv]
    states = {
        "generalized state": lambda: generalized_thermo_state(p, n, tail_tol=None),
        "spectral state": lambda: spectral_thermo_state(p, n),
        "bogoliubov state": lambda: bogoliubov_thermo_state(p, n, tail_tol=None),
    }
    for name, build in states.items():
        s = build()
        dist = matrix_distance(reduced_density(s).matrix, rho, norm="trace")
        out.append(Measure(1, f"trace distance, {name}", dist, 1e-7, cutoff=n,
                           info={"tail_mass": s.tail_mass}))
    return out


def _converged(settings, p: ModelParams) -> int:
    return _auto_cutoff(p, settings.policy())


def _thermo(settings, pt: GridPoint) -> list[Measure]:
    p = pt.params()
    n = _converged(settings, p)
    rho = gibbs_density(p, n)
    obs = thermo_observables(p)
    ops = fock_operators(n)
    h = build_hamiltonian(p, n)
    raise_num = rho.expect(np.conj(p.kappa) * (ops.adag @ ops.adag))
    lower_num = rho.expect(p.kappa * (ops.a @ ops.a))
    step = 1e-5 * p.beta
    lnz = lambda b: math.log(partition_function(p.with_beta(b)))  # noqa: E731
    fd = -(lnz(p.beta + step) - lnz(p.beta - step)) / (2 * step)
    return [
        Measure(2, "closed vs numeric Z", _rel(obs.Z, rho.z_numeric), 1e-8, cutoff=n),
        Measure(3, "internal energy", _rel(obs.internal_energy, rho.expect(h).real), 1e-8, cutoff=n),
        Measure(3, "entropy", abs(obs.entropy - von_neumann_entropy(rho)), 1e-8, cutoff=n),
        Measure(3, "number term", _rel(obs.term_number, rho.expect(p.omega * ops.n).real), 1e-8, cutoff=n),
        Measure(3, "raising pair term", _rel(obs.term_raise, raise_num), 1e-8, cutoff=n),
        Measure(3, "lowering pair term", _rel(obs.term_lower, lower_num), 1e-8, cutoff=n),
        Measure(3, "sum rule", obs.sum_rule_residual, 1e-10),
        Measure(3, "energy from d ln Z / d beta", _rel(fd, obs.internal_energy), 1e-6,
                info={"step": step}),
    ]


def _gibbs_factorization(settings, pt: GridPoint) -> list[Measure]:
    p = pt.params()
    n = _converged(settings, p)
    dense = expm_hermitian(build_hamiltonian(p, n), -p.beta)
    scale = max(1.0, float(np.max(np.abs(dense))))
    general = disentangle(QuadraticExponent.gibbs(p)).matrix(n)
    thermal = factored_gibbs(p, n)
    return [
        Measure(4, "gibbs case, general factorization", _lower_block(general, dense) / scale, 1e-9, cutoff=n),
        Measure(4, "gibbs case, thermal factorization", _lower_block(thermal, dense) / scale, 1e-9, cutoff=n),
    ]


def _wigner(settings, pt: GridPoint) -> list[Measure]:
    p = pt.params()
    n = max(settings.wigner_cutoff, _converged(settings, p))
    rho = gibbs_density(p, n)
    axis = np.linspace(-settings.wigner_halfwidth, settings.wigner_halfwidth, settings.wigner_points)
    # extra empty levels keep the truncated displacement exact near |alpha| = 3
    numeric = wigner_numeric_grid(rho, axis, axis, n_max=n + settings.wigner_padding)
    closed = wigner_closed_grid(p, axis, axis)
    half = max(settings.grid_halfwidth, covering_halfwidth(p, step=settings.grid_step))
    cover = _covering_grid(p, half, settings.grid_step)
    return [
        Measure(6, "closed vs displaced parity", float(np.max(np.abs(numeric.values - closed.values))),
                1e-6, cutoff=n),
        Measure(6, "grid normalization", abs(cover.normalization() - 1.0), 1e-3,
                info={"halfwidth": half, "edge_max": cover.edge_max()}),
    ]


def _covering_grid(p: ModelParams, half: float, step: float):
    count = int(round(2 * half / step))
    axis = -half + step * np.arange(count + 1)
    return wigner_closed_grid(p, axis, axis)


def _simpson_profile(fn: Callable, span: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    count = int(math.ceil(2 * span / step))
    count += count % 2
    qs = np.linspace(-span, span, count + 1)
    return qs, np.asarray(fn(qs))


def _tomography(settings, pt: GridPoint) -> tuple[list[Measure], dict]:
    p = pt.params()
    n = _converged(settings, p)
    rho = gibbs_density(p, n)
    half = max(settings.grid_halfwidth, covering_halfwidth(p, step=settings.grid_step))
    grid = _covering_grid(p, half, settings.grid_step)
    qs = np.array(settings.tomo_q)
    frames = _frames(settings)
    out = []
    dev, neg, norm_fock, norm_radon = 0.0, 0.0, 0.0, 0.0
    per_frame = {}
    for fr in frames:
        fock = tomogram_fock(rho, fr, qs)
        radon = radon_numeric(grid, fr, qs)
        span = half * (abs(fr.f) + abs(fr.g))
        xs, prof_f = _simpson_profile(lambda x: tomogram_fock(rho, fr, x), span, settings.profile_step)
        _, prof_r = _simpson_profile(lambda x: radon_numeric(grid, fr, x), span, settings.profile_step)
        nf = abs(integrate.simpson(prof_f, x=xs) - 1.0)
        nr = abs(integrate.simpson(prof_r, x=xs) - 1.0)
        d = float(np.max(np.abs(fock - radon)))
        lowest = float(min(fock.min(), radon.min(), prof_f.min(), prof_r.min()))
        per_frame[fr.label()] = {"max_dev": d, "min_value": lowest,
                                 "norm_dev_fock": nf, "norm_dev_radon": nr}
        dev, neg = max(dev, d), max(neg, -lowest)
        norm_fock, norm_radon = max(norm_fock, nf), max(norm_radon, nr)
    out += [
        Measure(7, "fock vs radon", dev, 1e-4, cutoff=n, info={"frames": per_frame}),
        Measure(7, "nonnegativity", max(neg, 0.0), 1e-10, cutoff=n),
        Measure(7, "profile normalization, fock", norm_fock, 1e-4, cutoff=n),
        Measure(7, "profile normalization, radon", norm_radon, 1e-4, cutoff=n),
    ]
    if p.kappa == 0:
        fr = QuadratureFrame(1.0, 0.0)
        var = 0.5 / math.tanh(p.beta * p.omega / 2)
        gauss = np.exp(-qs**2 / (2 * var)) / math.sqrt(2 * math.pi * var)
        fock = tomogram_fock(rho, fr, qs)
        xs, prof = _simpson_profile(lambda x: tomogram_fock(rho, fr, x), half, settings.profile_step)
        measured_var = integrate.simpson(prof * xs**2, x=xs)
        out += [
            Measure(7, "free thermal profile", float(np.max(np.abs(fock - gauss))), 1e-4, cutoff=n),
            Measure(7, "free thermal variance", abs(measured_var - var), 1e-4, cutoff=n),
        ]
    audit = audit_candidate_tomogram(p, frames, qs, rho, grid)
    complete = audit.complete(frames, qs)
    out.append(Measure(8, "deviation report complete", 0.0 if complete else 1.0, 0.0, complete,
                       cutoff=n, info={"rows": len(audit.rows)}))
    return out, audit.as_dict()


def _diagonalization(settings, pt: GridPoint) -> list[Measure]:
    p = pt.params()
    if p.kappa_abs > 0.4 * p.omega:
        return []
    rep = diagonalization_check(p, settings.diag_cutoff)
    return [Measure(9, "off-diagonal norm, lower half block", rep.offdiag_norm, 1e-6, cutoff=rep.cutoff,
                    info={"block": rep.block, "const_shift_err": rep.const_shift_err,
                          "unitarity_err": rep.unitarity_err, "intertwining_err": rep.intertwining_err})]


def _free_limit(settings, pt: GridPoint) -> list[Measure]:
    p = pt.params()
    if p.kappa != 0:
        return []
    n = _converged(settings, p)
    gen = generalized_thermo_state(p, n).amplitudes
    free = thermo_vacuum_free(p, n).amplitudes
    axis = np.linspace(-settings.wigner_halfwidth, settings.wigner_halfwidth, settings.wigner_points)
    alpha = (axis[:, None] + 1j * axis[None, :]) / math.sqrt(2)
    w_gap = float(np.max(np.abs(wigner_closed(p, alpha) - wigner_free(p.omega, p.beta, alpha))))
    x = p.beta * p.omega / 2
    energy = 0.5 * p.omega * (1 / math.tanh(x) - 1)
    entropy = x / math.tanh(x) - math.log(2 * math.sinh(x))
    obs = thermo_observables(p)
    return [
        Measure(10, "amplitudes", float(np.max(np.abs(gen - free))), 1e-12, cutoff=n),
        Measure(10, "wigner function", w_gap, 1e-10),
        Measure(10, "internal energy", _rel(obs.internal_energy, energy), 1e-10),
        Measure(10, "entropy", _rel(obs.entropy, entropy), 1e-10),
    ]


def _coherent_trace(settings, pt: GridPoint) -> list[Measure]:
    p = pt.params()
    n = _converged(settings, p)
    z_trace = partition_function_coherent_trace(p)
    z_num = gibbs_density(p, n).z_numeric
    return [Measure(5, "coherent-state trace reproduces Z", _rel(z_trace, z_num), 1e-8, cutoff=n)]


# -- sampled tasks ---------------------------------------------------------


def _disentangle_samples(settings) -> list[Measure]:
    rng = np.random.default_rng(settings.seed)
    n = settings.disentangle_cutoff
    worst, rows = 0.0, []
    while len(rows) < settings.samples:
        f, g, k = (rng.normal(size=3) + 1j * rng.normal(size=3)) * 0.15
        q = QuadraticExponent(f, g, k)
        if not abs(q.script_d) < 1:
            continue
        try:
            factored = disentangle(q).matrix(n)
        except PoleError:
            continue
        ref, ref_cutoff = _dense_reference(q, n)
        res = float(np.max(np.abs(factored - ref)) / np.max(np.abs(ref)))
        worst = max(worst, res)
        rows.append({"f": complex(f), "g": complex(g), "k": complex(k),
                     "residual": res, "reference_cutoff": ref_cutoff})
    return [Measure(4, "random exponents", worst, 1e-9, cutoff=n, info={"samples": rows})]


def _dense_reference(q: QuadraticExponent, n: int, cap: int = 768) -> tuple[np.ndarray, int]:
    # pad the dense exponential until its leading n x n block stops moving
    size = n
    prev = sla.expm(exponent_matrix(q, size))[:n, :n]
    while size < cap:
        size *= 2
        cur = sla.expm(exponent_matrix(q, size))[:n, :n]
        moved = np.max(np.abs(cur - prev)) / np.max(np.abs(cur))
        prev = cur
        if moved <= 1e-13:
            break
    return prev, size


def _gaussian_samples(settings) -> list[Measure]:
    rng = np.random.default_rng(settings.seed + 1)
    worst, rows = 0.0, []
    while len(rows) < settings.samples:
        zeta = -(0.5 + 1.5 * rng.random()) + 1j * rng.uniform(-1, 1)
        f, g, xi, eta = (rng.normal(size=4) + 1j * rng.normal(size=4)) * np.array([0.2, 0.2, 0.3, 0.3])
        gp = GaussianIntegralParams(zeta, xi, eta, f, g)
        if not gp.convergent or np.linalg.eigvalsh(gp.quadratic_form().real)[0] < 0.4:
            continue
        res = abs(gaussian_integral(gp) - gaussian_integral_quadrature(gp))
        worst = max(worst, res)
        rows.append({"zeta": gp.zeta, "xi": gp.xi, "eta": gp.eta, "f": gp.f, "g": gp.g, "residual": res})
    return [Measure(5, "closed form vs quadrature", worst, 1e-6, info={"samples": rows})]


# -- driver ----------------------------------------------------------------


PER_POINT = (
    (1, _partial_trace),
    (2, _thermo),
    (4, _gibbs_factorization),
    (5, _coherent_trace),
    (6, _wigner),
    (7, _tomography),
    (9, _diagonalization),
    (10, _free_limit),
)


def _tasks(settings: VerifySettings):
    points = list(settings.grid)
    for pt in points:
        yield 0, pt, _gate
    for crit, fn in PER_POINT:
        for pt in points:
            yield crit, pt, fn
    yield 4, None, _disentangle_samples
    yield 5, None, _gaussian_samples


def _run_task(settings, profile, crit, pt, fn):
    start = time.perf_counter()
    artifact = None
    try:
        # context variables do not follow work onto pool threads
        with use_tolerances(profile):
            result = fn(settings) if pt is None else fn(settings, pt)
        if isinstance(result, tuple):
            result, artifact = result
    except UnstableHamiltonianError as exc:
        result = [Measure(crit, "stability gate", math.inf, 0.0, False, info={"error": f"{type(exc).__name__}: {exc}"})]
    except CutoffNotConverged as exc:
        result = [Measure(crit, "cutoff converged", exc.residual, exc.tol, False, exc.best_cutoff,
                          {"error": str(exc)})]
    except Exception as exc:  # reported as a failed check, never raised
        result = [Measure(crit, "evaluation", math.inf, 0.0, False,
                          info={"error": f"{type(exc).__name__}: {exc}"})]
    return result, artifact, time.perf_counter() - start


def _aggregate(tasks, results) -> tuple[list[Check], dict]:
    checks: dict[tuple[int, str], Check] = {}
    audits = {}
    for (crit, pt, _), (measures, artifact, elapsed) in zip(tasks, results):
        key_pt = pt.label() if pt is not None else "sampled"
        if artifact is not None:
            audits[key_pt] = artifact
        for m in measures:
            key = (m.criterion, m.name)
            chk = checks.get(key)
            if chk is None:
                chk = checks[key] = Check(m.criterion, m.name, 0.0, m.tolerance, True, None, {})
            res = m.residual if not math.isnan(m.residual) else math.inf
            chk.residual = max(chk.residual, res)
            chk.passed = chk.passed and m.ok
            if m.cutoff is not None:
                chk.cutoff = m.cutoff if chk.cutoff is None else max(chk.cutoff, m.cutoff)
            chk.detail[key_pt] = {"residual": res, "passed": m.ok, "cutoff": m.cutoff, **m.info}
            chk.wall_time += elapsed
    ordered = sorted(checks.values(), key=lambda c: c.criterion)
    return ordered, audits


def run_verify(settings: VerifySettings | None = None, threads: int = 1,
               config: dict | None = None) -> VerifyReport:
    """Run the acceptance suite and return its report.

    ``config`` is embedded verbatim; it should be the fully resolved run
    configuration without execution-only fields such as the thread count.
    """
    settings = settings or VerifySettings()
    start = time.perf_counter()
    tasks = list(_tasks(settings))
    profile = tolerances()
    with threadpool_limits(limits=1):
        if threads <= 1:
            results = [_run_task(settings, profile, *t) for t in tasks]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda t: _run_task(settings, profile, *t), tasks))
    checks, audits = _aggregate(tasks, results)
    return VerifyReport(
        checks=checks,
        config={"settings": settings.as_dict(), **(config or {})},
        tolerance_profile=profile.as_dict(),
        artifacts={"candidate_tomogram_audit": audits},
        wall_time=time.perf_counter() - start,
    )
