"""Parareal iteration with automatic time-window partitioning.

The first iteration runs one adaptive coarse pass over the whole interval;
its accepted time steps both seed the initial boundary values and define
the windows (equal step-count split via the floor formula).  Later
iterations alternate a sequential fixed-grid coarse sweep with the
standard correction

    U_j  <-  fine(U_{j-1}, previous iteration) + coarse(U_{j-1}, new) - coarse(U_{j-1}, previous)

and a concurrent fine solve on every window.  Convergence is declared when
the max-temperature jump across all window boundaries drops below the
requested tolerance.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .diagnostics import PararealReport
from .problem import Problem, State, Trajectory
from .stepper import (
    IntegrationFailed,
    StepCounters,
    StepperTolerances,
    adaptive_integrate,
    fixed_integrate,
)

__all__ = [
    "PararealConfig",
    "PartitionError",
    "window_boundary_indices",
    "partition_windows",
    "coarse_window_grid",
    "parareal_update",
    "pr_error",
    "run_parareal",
]


class PartitionError(Exception):
    """The adaptive coarse pass produced fewer steps than windows."""


@dataclass(frozen=True)
class PararealConfig:
    """Run parameters: window count, convergence tolerance, propagator tolerances."""

    n_windows: int
    tol_pr: float
    fine_tol: StepperTolerances
    coarse_tol: StepperTolerances
    k_max: int = 20

    def __post_init__(self):
        if self.n_windows < 1:
            raise ValueError("n_windows must be >= 1")
        if not self.tol_pr > 0.0:
            raise ValueError("tol_pr must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


def window_boundary_indices(m: int, n: int) -> list[int]:
    """Indices ``floor(m*j/n)`` for ``j = 0..n`` (exact integer floor).

    Splits ``m`` coarse steps into ``n`` windows of ``floor(m/n)`` or
    ``floor(m/n) + 1`` steps each.  Requires ``m >= n``.
    """
    if n < 1:
        raise ValueError("need at least one window")
    if m < n:
        raise PartitionError(
            f"adaptive coarse pass produced only {m} steps for {n} windows; "
            "reduce n_windows or tighten the coarse step tolerance (tol_t)"
        )
    return [(m * j) // n for j in range(n + 1)]


def partition_windows(t_hat, n_windows: int) -> np.ndarray:
    """Window boundary times drawn from the coarse grid ``t_hat``."""
    t_hat = np.asarray(t_hat, dtype=float)
    if t_hat.ndim != 1 or t_hat.size < 2:
        raise ValueError("t_hat must hold at least two times")
    if not np.all(np.diff(t_hat) > 0.0):
        raise ValueError("t_hat must be strictly increasing")
    idx = window_boundary_indices(t_hat.size - 1, n_windows)
    return t_hat[idx]


def coarse_window_grid(t_hat, t_a: float, t_b: float) -> np.ndarray:
    """Contiguous slice of ``t_hat`` from ``t_a`` to ``t_b`` inclusive.

    Both endpoints must be grid members (window boundaries are, by
    construction); anything else is a programming bug.
    """
    t_hat = np.asarray(t_hat, dtype=float)
    ia = int(np.searchsorted(t_hat, t_a))
    ib = int(np.searchsorted(t_hat, t_b))
    if ia >= t_hat.size or t_hat[ia] != t_a or ib >= t_hat.size or t_hat[ib] != t_b:
        raise ValueError("window endpoints must be members of the coarse grid")
    if not ia < ib:
        raise ValueError("need t_a < t_b")
    return t_hat[ia : ib + 1]


def parareal_update(fine_prev: State, coarse_new: State, coarse_prev: State) -> State:
    """Correction ``fine_prev + coarse_new - coarse_prev`` componentwise."""
    if fine_prev.shape != coarse_new.shape or fine_prev.shape != coarse_prev.shape:
        raise ValueError("state dimension mismatch in the correction update")
    out = fine_prev + coarse_new - coarse_prev
    out.setflags(write=False)
    return out


def pr_error(boundary_states, fine_states, problem: Problem) -> float:
    """Worst max-temperature jump at the window boundaries (K).

    ``boundary_states`` are the updated values U_j and ``fine_states`` the
    fine results arriving at the same boundaries, both for j = 1..N (the
    j = 0 boundary is exact by construction and excluded).
    """
    if len(boundary_states) != len(fine_states) or not boundary_states:
        raise ValueError("need one (U_j, fine_j) pair per window")
    return max(
        abs(problem.max_temperature(u) - problem.max_temperature(f))
        for u, f in zip(boundary_states, fine_states)
    )


def _fine_window_task(args):
    """Worker body for one window; returns plain arrays for cheap pickling."""
    problem, t_a, t_b, u_start, tol, j = args
    counters = StepCounters()
    wall0 = time.perf_counter()
    traj = adaptive_integrate(problem, t_a, t_b, u_start, tol, counters)
    wall = time.perf_counter() - wall0
    return j, np.asarray(traj.times), np.asarray(traj.states), counters.nr_iterations, wall


def _run_fine_loop(problem, boundaries, u_bounds, tol, executor, k):
    """Solve every window concurrently; results gathered by window index."""
    n = len(boundaries) - 1
    tasks = [
        (problem, float(boundaries[j - 1]), float(boundaries[j]), u_bounds[j - 1], tol, j)
        for j in range(1, n + 1)
    ]
    trajs: list[Trajectory | None] = [None] * n
    nr = [0] * n
    wall = [0.0] * n
    try:
        if executor is None:
            results = map(_fine_window_task, tasks)
        else:
            results = executor.map(_fine_window_task, tasks)
        for j, times, states, nr_j, wall_j in results:
            trajs[j - 1] = Trajectory(times, states)
            nr[j - 1] = nr_j
            wall[j - 1] = wall_j
    except IntegrationFailed as exc:
        raise IntegrationFailed(f"fine propagator failed during iteration {k}: {exc}") from exc
    return trajs, nr, wall


def _stitch(fine_trajs) -> Trajectory:
    """Concatenate window trajectories, keeping the fine value at shared boundaries."""
    times = [fine_trajs[0].times]
    states = [fine_trajs[0].states]
    for traj in fine_trajs[1:]:
        times.append(traj.times[1:])
        states.append(traj.states[1:])
    return Trajectory(np.concatenate(times), np.vstack(states))


def run_parareal(
    problem: Problem,
    t_0: float,
    t_N: float,
    u_0: State,
    cfg: PararealConfig,
    n_workers: int | None = None,
) -> tuple[Trajectory, PararealReport]:
    """Execute the full algorithm from ``t_0`` to ``t_N``.

    Returns the stitched fine trajectory of the final iteration and the
    run report.  A run that exhausts ``cfg.k_max`` without meeting
    ``cfg.tol_pr`` is NOT an error: it returns normally with
    ``report.converged`` False and ``report.k_converged`` None, so callers
    must check the report.  :class:`PartitionError` and
    :class:`IntegrationFailed` propagate with iteration/window context.
    """
    if not t_0 < t_N:
        raise ValueError("need t_0 < t_N")
    n = cfg.n_windows
    if n_workers is None:
        n_workers = min(n, os.cpu_count() or 1)
    if n_workers < 1:
        raise ValueError("n_workers must be >= 1")

    wall_start = time.perf_counter()

    # Iteration 1: one adaptive coarse solve over the whole interval
    # yields the coarse grid, the windows, and the initial boundary values.
    ghat_counters = StepCounters()
    ghat_start = time.perf_counter()
    try:
        coarse_traj = adaptive_integrate(problem, t_0, t_N, u_0, cfg.coarse_tol, ghat_counters)
    except IntegrationFailed as exc:
        raise IntegrationFailed(f"adaptive coarse pass failed: {exc}") from exc
    time_ghat = time.perf_counter() - ghat_start

    t_hat = coarse_traj.times
    m = t_hat.size - 1
    idx = window_boundary_indices(m, n)
    boundaries = t_hat[idx]

    u_bounds = [coarse_traj.state(i) for i in idx]  # U_j, with U_0 = u_0
    u_coarse_prev = list(u_bounds)  # coarse results of the previous iteration

    err_per_iter: list[float] = []
    time_g: list[list[float]] = []
    nr_g: list[list[int]] = []
    time_f: list[list[float]] = []
    nr_f: list[list[int]] = []

    executor = ProcessPoolExecutor(max_workers=n_workers) if n_workers > 1 else None
    try:
        fine_trajs = None
        u_fine = None
        converged = False
        k = 0
        while k < cfg.k_max:
            k += 1
            if k == 1:
                time_g.append([0.0] * n)
                nr_g.append([0] * n)
            else:
                # Sequential coarse sweep on the frozen grid plus correction.
                g_wall_row = []
                g_nr_row = []
                for j in range(1, n + 1):
                    grid = coarse_window_grid(t_hat, float(boundaries[j - 1]), float(boundaries[j]))
                    win_counters = StepCounters()
                    win_start = time.perf_counter()
                    try:
                        coarse_new = fixed_integrate(
                            problem, grid, u_bounds[j - 1], cfg.coarse_tol, win_counters
                        ).terminal_state
                    except IntegrationFailed as exc:
                        raise IntegrationFailed(
                            f"coarse sweep failed in window {j} during iteration {k}: {exc}"
                        ) from exc
                    g_wall_row.append(time.perf_counter() - win_start)
                    g_nr_row.append(win_counters.nr_iterations)
                    u_bounds[j] = parareal_update(u_fine[j - 1], coarse_new, u_coarse_prev[j])
                    u_coarse_prev[j] = coarse_new
                time_g.append(g_wall_row)
                nr_g.append(g_nr_row)

            fine_trajs, nr_row, wall_row = _run_fine_loop(
                problem, boundaries, u_bounds, cfg.fine_tol, executor, k
            )
            nr_f.append(nr_row)
            time_f.append(wall_row)
            u_fine = [traj.terminal_state for traj in fine_trajs]

            err = pr_error(u_bounds[1:], u_fine, problem)
            err_per_iter.append(err)
            if err < cfg.tol_pr:
                converged = True
                break
    finally:
        if executor is not None:
            executor.shutdown()

    trajectory = _stitch(fine_trajs)
    report = PararealReport(
        n_windows=n,
        m_coarse_steps=m,
        boundaries=boundaries,
        converged=converged,
        k_converged=k if converged else None,
        err_per_iter=err_per_iter,
        time_ghat=time_ghat,
        time_g_per_window_per_iter=time_g,
        time_f_per_window_per_iter=time_f,
        total_wall=time.perf_counter() - wall_start,
        nr_ghat=ghat_counters.nr_iterations,
        nr_g_per_window_per_iter=nr_g,
        nr_f_per_window_per_iter=nr_f,
        boundary_states=list(u_bounds),
    )
    return trajectory, report
