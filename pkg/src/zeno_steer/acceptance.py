"""Built-in acceptance suite: nine numbered criteria plus a bound-formula identity check.

Corpus integrity (digests of the shipped scenarios) is checked separately
by ``corpus_problems``. Each criterion returns ``(passed, detail)``; the
runner adds timing and fails any criterion that overruns its time budget.
``format_table`` renders the results one line per check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import bounds
from .ergodic import (
    Exp,
    Polynomial,
    Sin,
    analytic_phase_sum,
    convergence_fit,
    lemma1_limit,
    phase_power_sum,
)
from .errors import ZenoSteerError
from .linalg import dagger, expi_matrix, schatten_inf_norm
from .measure_steer import (
    all_success_probability,
    branch_enumeration,
    final_projection_probability,
    sample_trajectories,
)
from .pulse_steer import ktilde_sequence, pulse_sequence, rotation_frame, run_pulse_study, theorem2_residual, time_ordered
from .scenario import GeneratorSchedule, NoiseModel, SteeringScenario, digest, k_max_norm, load_scenario, pauli_string
from .spectral import decompose_unitary, pinch

__all__ = [
    "CriterionResult",
    "CRITERIA",
    "corpus_dir",
    "corpus_problems",
    "load_corpus",
    "run_suite",
    "format_table",
]

SUMS_FILE = "SHA256SUMS"
_POW2 = lambda lo, hi: [2**k for k in range(lo, hi + 1)]  # noqa: E731


@dataclass(frozen=True)
class CriterionResult:
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float
    budget: float | None

    @property
    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        budget = f"/{self.budget:g}s" if self.budget is not None else ""
        return f"[{mark}] {self.key:>2} {self.title:<34} {self.seconds:6.2f}s{budget:<6} {self.detail}"


# ----------------------------------------------------------------------------
# corpus


def corpus_dir() -> Path:
    return Path(str(resources.files("zeno_steer") / "scenarios"))


def corpus_problems(directory: Path | None = None) -> list[str]:
    """Digest mismatches, missing files and unlisted scenarios in the corpus."""
    d = Path(directory) if directory is not None else corpus_dir()
    sums = d / SUMS_FILE
    if not sums.is_file():
        return [f"{sums}: digest list missing"]
    listed = {}
    for ln in sums.read_text().splitlines():
        if not ln.strip():
            continue
        parts = ln.split()
        if len(parts) != 2:
            return [f"{sums}: malformed line {ln!r}"]
        listed[parts[1].lstrip("*")] = parts[0]
    problems = []
    for name, want in sorted(listed.items()):
        f = d / name
        if not f.is_file():
            problems.append(f"{name}: missing")
        elif digest(f.read_bytes()) != want:
            problems.append(f"{name}: digest mismatch")
    for f in sorted(d.glob("*.json")):
        if f.name not in listed:
            problems.append(f"{f.name}: not in {SUMS_FILE}")
    return problems


def load_corpus(directory: Path | None = None) -> dict[str, SteeringScenario]:
    d = Path(directory) if directory is not None else corpus_dir()
    out = {}
    for f in sorted(d.glob("*.json")):
        s, _ = load_scenario(f)
        out[s.name or f.stem] = s
    return out


# ----------------------------------------------------------------------------
# criteria


def _bound_for(s: SteeringScenario, n: int) -> float:
    eps = bounds.epsilon(bounds.BoundInputs(k_max_norm(s.schedule, s.tau, n), s.noise.norm(True), s.tau, n))
    return bounds.success_bound(eps)


def c1_bound_dominance(corpus: dict[str, SteeringScenario]):
    scen = [s for s in corpus.values() if s.mode == "measure"]
    if len(scen) < 12:
        return False, f"only {len(scen)} measurement scenarios (need 12)"
    worst, where, checked, bad = math.inf, "", 0, []
    for s in scen:
        for n in _POW2(4, 10):
            b = _bound_for(s, n)
            if b < 0:
                continue
            p = final_projection_probability(s, n)
            checked += 1
            if p - b < worst:
                worst, where = p - b, f"{s.name} N={n}"
            if p < b - 1e-9:
                bad.append(f"{s.name} N={n}")
    if bad:
        return False, f"bound violated at {', '.join(bad[:3])}"
    return True, f"{len(scen)} scenarios, {checked} informative points, min margin {worst:.3g} ({where})"


def _pi_rotation() -> SteeringScenario:
    return SteeringScenario(
        sys_dim=2, tau=1.0,
        schedule=GeneratorSchedule.constant(pauli_string(f"{math.pi / 2!r}*Y")),
        initial_projector=np.diag([1.0, 0.0]),
        name="qubit_pi_rotation",
    )


def c2_zeno_convergence(corpus):
    s = _pi_rotation()
    errs = []
    for n in (10, 100):
        exact = math.cos(math.pi / (2 * n)) ** (2 * n)
        errs.append(abs(all_success_probability(s, n) - exact))
    ns = _POW2(4, 12)
    fit = convergence_fit([(n, 1.0 - all_success_probability(s, n)) for n in ns])
    ok = max(errs) <= 1e-9 and -1.1 <= fit.slope <= -0.9
    return ok, f"closed-form error {max(errs):.2g}, slope {fit.slope:.4f}"


def _random_hermitian(rng: np.random.Generator, d: int, norm: float) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = a + dagger(a)
    return h * (norm / schatten_inf_norm(h))


def c3_bath_invariance(corpus):
    scen = [s for s in corpus.values() if s.mode == "measure" and s.bath_dim == 4]
    if not scen:
        return False, "no scenarios with a two-qubit bath"
    rng = np.random.default_rng(20240601)
    worst, where = 0.0, ""
    for s in scen:
        base = {n: (all_success_probability(s, n), final_projection_probability(s, n)) for n in (16, 64)}
        for norm in (1.0, 4.0, 10.0):
            hb = np.kron(np.eye(s.sys_dim), _random_hermitian(rng, s.bath_dim, norm))
            old_b = np.zeros_like(hb) if s.noise.h_b is None else np.array(s.noise.h_b.matrix)
            noise = NoiseModel(np.array(s.noise.h_sb.matrix) + hb, old_b + hb, s.sys_dim)
            t = s.replace(noise=noise)
            for n, (pa, pf) in base.items():
                d = max(abs(all_success_probability(t, n) - pa), abs(final_projection_probability(t, n) - pf))
                if d > worst:
                    worst, where = d, f"{s.name} N={n} |H_B|={norm:g}"
    return worst <= 1e-9, f"{len(scen)} scenarios, max change {worst:.3g}" + (f" ({where})" if where else "")


def c4_rate_round_trip(corpus):
    rng = np.random.default_rng(4)
    worst = -math.inf
    for _ in range(20):
        delta = float(rng.uniform(1e-3, 0.5))
        k, h = float(rng.uniform(0.0, 3.0)), float(rng.uniform(0.0, 2.0))
        tau = float(rng.uniform(0.5, 5.0))
        lam = bounds.required_measurement_rate(delta, k, h, tau)
        n = max(1, math.ceil(lam * tau))
        eps = bounds.epsilon(bounds.BoundInputs(k, h, tau, n))
        worst = max(worst, eps * math.exp(eps) - delta)
    xs = np.logspace(-8, 8, 100)
    w_err = max(abs(w * math.exp(w) - x) / x for x in xs for w in [bounds.lambert_w0(float(x))])
    ok = worst <= 1e-9 and w_err <= 1e-12
    return ok, f"max eps*e^eps - delta {worst:.3g}, W relative residual {w_err:.2g}"


_C5_SCENARIOS = (
    "qubit_pi_rotation", "qubit_bath1_g005", "qubit_mixed_bath_g02",
    "two_qubit_rank2_bath1_g005_tau3", "two_qubit_bath2_g02",
)


def c5_oracle_equivalence(corpus):
    worst, z_worst = 0.0, 0.0
    for name in _C5_SCENARIOS:
        s = corpus[name]
        for n in range(1, 13):
            br = branch_enumeration(s, n)
            last = math.fsum(p for k, p in br.items() if k[-1] == "1")
            worst = max(
                worst,
                abs(math.fsum(br.values()) - 1.0),
                abs(last - final_projection_probability(s, n)),
                abs(br["1" * n] - all_success_probability(s, n)),
            )
        exact = final_projection_probability(s, 12)
        mc = sample_trajectories(s, 12, 10_000, seed=12345)
        gap = abs(mc.estimate - exact)
        z = gap / mc.stderr if mc.stderr > 0 else (0.0 if gap == 0 else math.inf)
        z_worst = max(z_worst, z)
    ok = worst <= 1e-9 and z_worst <= 4.0
    return ok, f"max enumeration gap {worst:.2g}, max MC deviation {z_worst:.2f} stderr"


def _time_independent_zeno_gap(u: np.ndarray, k: np.ndarray, tau: float, n: int) -> float:
    projs = decompose_unitary(u).projector_stack()
    step = u @ expi_matrix(k, -tau / n)
    prod = np.linalg.matrix_power(step, n)
    lhs = dagger(np.linalg.matrix_power(u, n)) @ prod
    return schatten_inf_norm(lhs - expi_matrix(pinch(k, projs), -tau))


def _fit_text(points) -> tuple[float | None, str]:
    pts = [(n, v) for n, v in points if v > 1e-11]
    if len(pts) < 3:
        vmax = max(v for _, v in points)
        return None, f"no rate (values <= {vmax:.1g}, roundoff only)"
    fit = convergence_fit(pts)
    return fit.slope, f"slope {fit.slope:.3f}"


def c6_pulse_limit(corpus):
    s = corpus["pulse_qubit_sz_sy"]
    ns = _POW2(4, 12)
    study = run_pulse_study(s, ns)
    w_slope, w_txt = _fit_text([(r.n_steps, r.one_minus_weight) for r in study.rows])
    u = np.array(s.pulse_unitary.matrix)
    k = s.schedule.at(0.0)
    z_slope, z_txt = _fit_text([(n, _time_independent_zeno_gap(u, k, s.tau, n)) for n in ns])
    ok = all(v is not None and -1.2 <= v <= -0.8 for v in (w_slope, z_slope))
    return ok, f"1-weight: {w_txt}; Zeno-limit gap: {z_txt}"


def _cz() -> np.ndarray:
    return np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)


def c7_residual_rate(corpus):
    cases = [
        ("Z", pauli_string("Z").matrix, GeneratorSchedule.polynomial([pauli_string("X"), pauli_string("X")])),
        ("CZ", _cz(), GeneratorSchedule.polynomial([pauli_string("0.5*XI + 0.3*ZZ"), pauli_string("0.5*IX")])),
    ]
    lo, hi = math.inf, -math.inf
    for _, u, h in cases:
        r = [theorem2_residual(u, h, 1.0, n) for n in _POW2(6, 12)]
        ratios = [a / b for a, b in zip(r, r[1:]) if b > 0]
        if len(ratios) != len(r) - 1:
            return False, "residual vanished"
        lo, hi = min(lo, *ratios), max(hi, *ratios)
    fact = max(_factorization_gap(corpus[name], 256) for name in ("pulse_cz_bath1_g005", "pulse_qubit_generic"))
    ok = 1.8 <= lo and hi <= 2.2 and fact <= 1e-8
    return ok, f"halving ratios in [{lo:.4f}, {hi:.4f}], factorization gap {fact:.2g}"


def _factorization_gap(s: SteeringScenario, n: int) -> float:
    """Max entry of ``prod U_l E - V_N prod U exp(-i Kt_l dt)`` on the joint space."""
    h = np.array(s.noise.h_sb.matrix)
    dt = s.tau / n
    e = expi_matrix(h, -dt)
    direct = time_ordered((s.embed(p.matrix) @ e for p in pulse_sequence(s.pulse_unitary, s.schedule, s.tau, n)),
                          s.joint_dim)
    u = s.embed(s.pulse_unitary.matrix)
    inner = time_ordered((u @ expi_matrix(kt, -dt) for kt, _ in ktilde_sequence(s.schedule, h, s.tau, n)),
                         s.joint_dim)
    fact = s.embed(rotation_frame(s.schedule, s.tau, n)) @ inner
    return float(np.max(np.abs(direct - fact)))


def c8_phase_sums(corpus):
    notes = []
    exact_half = all(abs(phase_power_sum(1, math.pi, n)) == 0.5 for n in _POW2(1, 16))
    notes.append("|S_1(pi)| = 1/2 exactly" if exact_half else "|S_1(pi)| != 1/2")
    worst = 0.0
    for k in (1, 2, 3):
        for phi in (math.pi, math.pi / 2, 2 * math.pi / 3):
            lim = lemma1_limit(phi)
            worst = max(worst, abs(abs(phase_power_sum(k, phi, 2**16)) - lim) / lim)
    notes.append(f"max deviation from limit {100 * worst:.3g}%")
    phi = 2 * math.pi / 3
    ns = _POW2(6, 16)
    slope = 0.0
    for f in (Polynomial([0.0, 0.0, 1.0]), Exp(1.0), Sin(3.0, 0.0)):
        mags = [abs(analytic_phase_sum(f, phi, 0, n - 1, n)) for n in ns]
        s_f = float(np.polyfit(np.log(ns), mags, 1)[0])
        slope = max(slope, abs(s_f))
    notes.append(f"max |growth slope| {slope:.3g}")
    ok = exact_half and worst <= 0.02 and slope <= 0.05
    return ok, ", ".join(notes)


def c9_uninformative_marker(corpus):
    w1 = bounds.lambert_w0(1.0)
    b = bounds.success_bound(w1)
    ok = abs(b) <= 1e-10 and abs(w1 - bounds.OMEGA) <= 1e-12 and bounds.success_bound(0.58) < 0
    return ok, f"W(1) = {w1:.12f}, success_bound(W(1)) = {b:.2g}"


def formula_identity(corpus):
    """``eps`` through the rate form ``(4 a^2 tau / lam) e^{2a/lam}``, ``lam = N / tau``."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        k, h = float(rng.uniform(0, 5)), float(rng.uniform(0, 5))
        tau, n = float(rng.uniform(0.1, 10)), int(rng.integers(1, 100_000))
        a, lam = k + h, n / tau
        other = 4 * a * a * tau / lam * math.exp(2 * a / lam)
        eps = bounds.epsilon(bounds.BoundInputs(k, h, tau, n))
        worst = max(worst, abs(eps - other) / other)
    return worst <= 1e-12, f"max relative gap {worst:.2g}"


CRITERIA: tuple[tuple[str, str, float | None, Callable], ...] = (
    ("1", "bound dominance over corpus", 30.0, c1_bound_dominance),
    ("2", "Zeno steering convergence", 5.0, c2_zeno_convergence),
    ("3", "bath-term invariance", 5.0, c3_bath_invariance),
    ("4", "rate formula round trip", 1.0, c4_rate_round_trip),
    ("5", "oracle equivalence", 60.0, c5_oracle_equivalence),
    ("6", "pulse steering limit", 20.0, c6_pulse_limit),
    ("7", "pinched-product residual rate", 30.0, c7_residual_rate),
    ("8", "ergodic sum suite", 10.0, c8_phase_sums),
    ("9", "uninformative-regime marker", 1.0, c9_uninformative_marker),
    ("E", "bound formula identity", None, formula_identity),
)


def _run_one(key, title, budget, fn, corpus) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        passed, detail = fn(corpus)
    except (ZenoSteerError, ArithmeticError, ValueError, KeyError) as exc:
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        passed, detail = False, f"over time budget; {detail}"
    return CriterionResult(key, title, bool(passed), detail, dt, budget)


def run_suite(keys: Iterable[str] | None = None, corpus: dict | None = None) -> list[CriterionResult]:
    """Run the selected checks (all by default) in table order."""
    wanted = None if keys is None else {str(k) for k in keys}
    corpus = load_corpus() if corpus is None else corpus
    return [
        _run_one(key, title, budget, fn, corpus)
        for key, title, budget, fn in CRITERIA
        if wanted is None or key in wanted
    ]


def format_table(results: list[CriterionResult]) -> str:
    n_pass = sum(r.passed for r in results)
    lines = [r.line for r in results]
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)
