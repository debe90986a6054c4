"""Outer placement search: multi-start Nelder-Mead over the attachment angles.

Each candidate is scored by the full pipeline (mass properties, hover
linearization, H2 synthesis, saturation margins); infeasible candidates score
-inf so the search stays total. Angles are wrapped into [0, 2pi) at evaluation
time only; reported layouts are canonicalized by sorting.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import Layout, compose_mass_properties
from .dynamics import LinearModel, linearize_at_hover
from .errors import (
    CodesignError,
    IllConditioned,
    InfeasibleFeedforward,
    NoFeasibleLayout,
    NotHurwitz,
    NotStabilizable,
    NumericalFailure,
    RankDeficientWrenchMap,
    SeparationViolation,
)
from .payload import PayloadSpec
from .robustness import RobustnessScore, layout_cost
from .synthesis import ControlSolution, WeightConfig, synthesize
from .vehicle import QuadSpec, default_min_separation

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi

_INFEASIBLE = (
    SeparationViolation,
    InfeasibleFeedforward,
    RankDeficientWrenchMap,
    NotStabilizable,
    IllConditioned,
    NotHurwitz,
    NumericalFailure,
)


@dataclass(frozen=True)
class CodesignProblem:
    """Fixed problem data: payload, module type, count, rod and separation."""

    payload: PayloadSpec
    quad: QuadSpec
    n_quads: int
    rod_length: float = 0.10
    min_separation: float | None = None
    weights: WeightConfig | None = None

    def __post_init__(self):
        if self.n_quads < 1:
            raise ValueError("n_quads must be >= 1")
        if self.min_separation is None:
            object.__setattr__(self, "min_separation", default_min_separation(self.quad))
        if self.weights is None:
            object.__setattr__(self, "weights", WeightConfig.default(self.n_quads))

    def layout(self, theta) -> Layout:
        return Layout(np.asarray(theta, dtype=float), self.rod_length)

    def solve(self, theta) -> tuple[LinearModel, ControlSolution, RobustnessScore]:
        """Full pipeline for one candidate; raises on infeasibility."""
        mp = compose_mass_properties(
            self.payload, self.quad, self.layout(theta), self.min_separation
        )
        model = linearize_at_hover(mp, self.quad)
        sol = synthesize(model, self.weights)
        return model, sol, layout_cost(model, sol)


def evaluate_candidate(theta: np.ndarray, problem: CodesignProblem) -> float:
    """Scalar placement cost: minimum saturation margin, or -inf when infeasible."""
    try:
        _, _, score = problem.solve(np.mod(theta, TWO_PI))
    except _INFEASIBLE:
        return -np.inf
    return score.d_min


@dataclass(frozen=True)
class OptimizationConfig:
    n_restarts: int = 8
    initial_simplex_scale: float = 0.3
    max_iters: int = 2000
    xatol: float = 1e-4
    fatol: float = 1e-6
    seed: int = 0
    probe_budget: int = 1000
    jobs: int = 1

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        for name in ("initial_simplex_scale", "max_iters", "xatol", "fatol", "probe_budget"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class RestartRecord:
    restart: int
    initial_theta: np.ndarray
    final_theta: np.ndarray
    final_cost: float
    iterations: int


@dataclass(frozen=True)
class OptimizationResult:
    best_layout: Layout
    best_score: RobustnessScore
    controller: ControlSolution
    model: LinearModel
    restart_history: tuple[RestartRecord, ...] = field(default_factory=tuple)
    total_cost_evaluations: int = 0


def nelder_mead(
    fn,
    x0: np.ndarray,
    scale: float,
    max_iters: int,
    xatol: float,
    fatol: float,
    progress=None,
) -> tuple[np.ndarray, float, int, int]:
    """Minimize `fn` with the standard simplex coefficients (1, 2, 0.5, 0.5).

    Returns (best x, best f, iterations, evaluations). Convergence requires the
    simplex diameter below `xatol` and the value spread below `fatol`.
    """
    n = len(x0)
    simplex = np.vstack([x0] + [x0 + scale * np.eye(n)[i] for i in range(n)])
    values = np.array([fn(p) for p in simplex])
    evals = n + 1

    for iteration in range(1, max_iters + 1):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if progress is not None:
            progress(iteration, values[0])
        if (
            np.max(np.abs(simplex[1:] - simplex[0])) <= xatol
            and np.max(np.abs(values[1:] - values[0])) <= fatol
        ):
            return simplex[0], values[0], iteration, evals

        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + (centroid - simplex[-1])
        fr = fn(xr)
        evals += 1
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - simplex[-1])
            fe = fn(xe)
            evals += 1
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (simplex[-1] - centroid)
            fc = fn(xc)
            evals += 1
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                values[1:] = [fn(p) for p in simplex[1:]]
                evals += n

    order = np.argsort(values, kind="stable")
    return simplex[order[0]], values[order[0]], max_iters, evals


def _sample_feasible_starts(
    problem: CodesignProblem, cfg: OptimizationConfig
) -> tuple[list[np.ndarray], int]:
    """Rejection-sample one feasible initial angle vector per restart."""
    rng = np.random.default_rng(cfg.seed)
    starts: list[np.ndarray] = []
    probes = 0
    while len(starts) < cfg.n_restarts:
        if probes >= cfg.probe_budget:
            raise NoFeasibleLayout(
                f"no feasible placement in {cfg.probe_budget} random probes"
            )
        theta = rng.uniform(0.0, TWO_PI, size=problem.n_quads)
        probes += 1
        if np.isfinite(evaluate_candidate(theta, problem)):
            starts.append(theta)
    return starts, probes


def _run_restart(problem: CodesignProblem, cfg: OptimizationConfig, idx: int, x0: np.ndarray):
    def progress(iteration, best):
        if iteration % 100 == 0:
            log.info("restart=%d iter=%d best=%.6f", idx, iteration, -best)

    x, f, iters, evals = nelder_mead(
        lambda t: -evaluate_candidate(t, problem),
        x0,
        cfg.initial_simplex_scale,
        cfg.max_iters,
        cfg.xatol,
        cfg.fatol,
        progress=progress,
    )
    # Record the canonical representative and its cost so the reported optimum
    # is bit-for-bit re-derivable from the sorted angles.
    theta = np.sort(np.mod(x, TWO_PI))
    cost = evaluate_candidate(theta, problem)
    log.info("restart=%d done iters=%d cost=%.6f", idx, iters, cost)
    return RestartRecord(idx, x0, theta, cost, iters), evals + 1


def optimize(problem: CodesignProblem, cfg: OptimizationConfig | None = None) -> OptimizationResult:
    """Multi-start placement optimization (seeded, deterministic).

    Restarts are merged by cost, ties broken by the lexicographically smaller
    sorted angle vector. Raises NoFeasibleLayout when random probing cannot
    find a single finite-cost candidate.
    """
    if cfg is None:
        cfg = OptimizationConfig()
    starts, probes = _sample_feasible_starts(problem, cfg)

    records: list[RestartRecord] = []
    total_evals = probes
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [
                pool.submit(_run_restart, problem, cfg, i, x0)
                for i, x0 in enumerate(starts)
            ]
            for fut in futures:
                rec, evals = fut.result()
                records.append(rec)
                total_evals += evals
    else:
        for i, x0 in enumerate(starts):
            rec, evals = _run_restart(problem, cfg, i, x0)
            records.append(rec)
            total_evals += evals

    best = records[0]
    for rec in records[1:]:
        if rec.final_cost > best.final_cost or (
            rec.final_cost == best.final_cost
            and tuple(rec.final_theta) < tuple(best.final_theta)
        ):
            best = rec
    if not np.isfinite(best.final_cost):
        raise NoFeasibleLayout("all restarts ended infeasible")

    layout = problem.layout(best.final_theta)
    model, sol, score = problem.solve(layout.theta)
    return OptimizationResult(
        best_layout=layout,
        best_score=score,
        controller=sol,
        model=model,
        restart_history=tuple(records),
        total_cost_evaluations=total_evals,
    )
