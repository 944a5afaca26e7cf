"""Discretized finite-horizon trajectory planning.

The flight volume is a regular lattice of UAV positions. A move from one
lattice state to another is admissible when it stays in the 3x3 horizontal
neighbourhood and its Euclidean length fits in one time slot at ``v_max``.
The objective is the sum of per-waypoint network sum-rates over the ``N + 1``
waypoints ``r_0 .. r_N``; the start and finish states are pinned.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import radio
from .scenario import Mission, Scenario, generate_scenario, t_min

NEG_INF = -np.inf


class InfeasibleHorizon(ValueError):
    """No admissible path reaches the finish state within the horizon."""


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    """Regular lattice of UAV positions (meters)."""

    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.xs), len(self.ys), len(self.zs)

    @property
    def n_states(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    def index(self, ix: int, iy: int, iz: int) -> int:
        _, ny, nz = self.shape
        return (ix * ny + iy) * nz + iz

    def coords(self, s: int) -> tuple[int, int, int]:
        _, ny, nz = self.shape
        ix, rem = divmod(int(s), ny * nz)
        iy, iz = divmod(rem, nz)
        return ix, iy, iz

    @property
    def positions(self) -> np.ndarray:
        """``(S, 3)`` positions in meters, ordered by linear index."""
        X, Y, Z = np.meshgrid(self.xs, self.ys, self.zs, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def nearest(self, point_m) -> tuple[int, float]:
        """Linear index of the nearest state and the snapping distance (m)."""
        p = np.asarray(point_m, dtype=float)
        ix = int(np.argmin(np.abs(self.xs - p[0])))
        iy = int(np.argmin(np.abs(self.ys - p[1])))
        iz = int(np.argmin(np.abs(self.zs - p[2])))
        s = self.index(ix, iy, iz)
        snap = float(np.linalg.norm(np.array([self.xs[ix], self.ys[iy], self.zs[iz]]) - p))
        return s, snap

    def spec(self) -> dict:
        return {
            "x_m": [float(self.xs[0]), float(self.xs[-1]), len(self.xs)],
            "y_m": [float(self.ys[0]), float(self.ys[-1]), len(self.ys)],
            "z_m": [float(v) for v in self.zs],
        }


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-6)) + 1
    return lo + step * np.arange(n)


def build_grid(scenario: Scenario, xy_step_m: float = 100.0, z_step_m: float = 10.0, heights=None) -> Grid:
    """Lattice over the flight area and the mission height band."""
    x0, y0, x1, y1 = (1000.0 * v for v in scenario.flight_area)
    if x1 - x0 < xy_step_m - 1e-9 or y1 - y0 < xy_step_m - 1e-9:
        raise ValueError("flight area is smaller than one grid step")
    m = scenario.mission
    for p in (m.start, m.finish):
        if not (x0 - 1e-6 <= p[0] * 1000 <= x1 + 1e-6 and y0 - 1e-6 <= p[1] * 1000 <= y1 + 1e-6):
            raise ValueError(f"mission endpoint {p} outside the flight area")
    zs = np.asarray(heights, dtype=float) if heights is not None else _axis(m.h_min, m.h_max, z_step_m)
    if np.any(zs < m.h_min - 1e-9) or np.any(zs > m.h_max + 1e-9):
        raise ValueError("grid heights outside [h_min, h_max]")
    return Grid(_axis(x0, x1, xy_step_m), _axis(y0, y1, xy_step_m), np.sort(zs))


@dataclass(frozen=True)
class ActionSet:
    """Admissible successor table.

    ``successors[s]`` lists reachable states with "stay" first and the rest in
    ascending linear index; rows are padded with ``-1``. The ordering fixes
    tie-breaking in the solvers.
    """

    successors: np.ndarray  # (S, A) int
    delta: float
    max_step_m: float

    @property
    def fan_out(self) -> int:
        return self.successors.shape[1]


def build_actions(grid: Grid, v_max: float, delta: float) -> ActionSet:
    reach = v_max * delta
    nx, ny, nz = grid.shape
    S = grid.n_states
    pos = grid.positions
    ix, rem = np.divmod(np.arange(S), ny * nz)
    iy, iz = np.divmod(rem, nz)
    cols = []
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            jx, jy = ix + dx, iy + dy
            inside = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
            for jz in range(nz):
                t = np.where(inside, (jx * ny + jy) * nz + jz, 0)
                ok = inside & (t != np.arange(S))
                ok &= np.linalg.norm(pos[t] - pos, axis=1) <= reach + 1e-9
                cols.append(np.where(ok, t, S))
    cand = np.sort(np.stack(cols, axis=1), axis=1)
    width = int((cand < S).sum(axis=1).max())
    table = np.column_stack([np.arange(S), cand[:, :width]])
    table[table == S] = -1
    return ActionSet(table.astype(np.int64), float(delta), float(reach))


def horizon_steps(duration_T: float, delta: float) -> int:
    n = duration_T / delta
    return int(round(n)) if abs(n - round(n)) < 1e-9 else int(math.floor(n))


@dataclass(frozen=True)
class ValueTable:
    values: np.ndarray  # (N + 1, S)
    policy: np.ndarray  # (N, S) successor state, -1 where unreachable


@dataclass
class Trajectory:
    states: np.ndarray  # (N + 1,)
    positions_m: np.ndarray  # (N + 1, 3)
    rewards: np.ndarray  # (N + 1,)
    value: float
    delta: float
    backhaul_sir: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1

    @property
    def time_averaged_sum_rate(self) -> float:
        return self.value / len(self.states)

    @property
    def times_s(self) -> np.ndarray:
        return self.delta * np.arange(len(self.states))


def bellman_sweep(
    rewards: np.ndarray,
    actions: ActionSet,
    finish: int,
    n_steps: int,
    interior_mask: np.ndarray | None = None,
) -> ValueTable:
    """Backward induction ``J(i, s) = R(s) + max_succ J(i + 1, succ)``.

    ``J(N, .)`` is ``R(finish)`` at the finish state and ``-inf`` elsewhere.
    ``interior_mask`` restricts which states waypoints ``1 .. N-1`` may occupy.
    """
    S = len(rewards)
    succ = actions.successors
    pad = succ < 0
    safe = np.where(pad, S, succ)
    rows = np.arange(S)
    values = np.full((n_steps + 1, S), NEG_INF)
    policy = np.full((n_steps, S), -1, dtype=np.int64)
    values[n_steps, finish] = rewards[finish]
    nxt = np.empty(S + 1)
    nxt[S] = NEG_INF
    cand = np.empty(safe.shape)  # reused every stage
    a = np.empty(S, dtype=np.int64)
    for i in range(n_steps - 1, -1, -1):
        nxt[:S] = values[i + 1]
        np.take(nxt, safe, out=cand, mode="clip")  # indices are always valid
        np.argmax(cand, axis=1, out=a)
        best = cand[rows, a]
        ok = best > NEG_INF
        if interior_mask is not None and i > 0:
            ok &= interior_mask
        values[i] = np.where(ok, rewards + np.where(ok, best, 0.0), NEG_INF)
        policy[i] = np.where(ok, succ[rows, a], -1)
    return ValueTable(values, policy)


def extract_path(table: ValueTable, start: int) -> np.ndarray:
    n = table.policy.shape[0]
    if not np.isfinite(table.values[0, start]):
        raise InfeasibleHorizon("finish state unreachable from start within the horizon")
    path = np.empty(n + 1, dtype=np.int64)
    path[0] = start
    for i in range(n):
        path[i + 1] = table.policy[i, path[i]]
    return path


def solve_rewards(
    rewards: np.ndarray,
    actions: ActionSet,
    start: int,
    finish: int,
    n_steps: int,
    interior_mask: np.ndarray | None = None,
) -> tuple[ValueTable, np.ndarray, float]:
    """DP on a precomputed reward field. Returns ``(table, path, value)``."""
    if n_steps < 1:
        raise InfeasibleHorizon("horizon must contain at least one step")
    table = bellman_sweep(rewards, actions, finish, n_steps, interior_mask)
    path = extract_path(table, start)
    return table, path, float(table.values[0, start])


@dataclass
class Problem:
    """Everything the solvers need for one scenario on one lattice."""

    scenario: Scenario
    grid: Grid
    actions: ActionSet
    rewards: np.ndarray
    backhaul: np.ndarray
    start: int
    finish: int
    snap_m: tuple[float, float]
    n_steps: int
    field_seconds: float = 0.0


def stage_rewards(scenario: Scenario, grid: Grid, jobs: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Network sum-rate and backhaul SIR with the UAV at every lattice state."""
    scores = radio.score_positions(scenario, grid.positions, jobs=jobs)
    return scores.sum_rate, scores.backhaul_sir


def stage_reward(scenario: Scenario, grid: Grid, state: int) -> float:
    return float(radio.associate_and_score(scenario, grid.positions[state])[1].sum_rate)


def prepare(
    scenario: Scenario,
    xy_step_m: float = 100.0,
    z_step_m: float = 10.0,
    delta: float = 8.0,
    heights=None,
    n_steps: int | None = None,
    jobs: int = 1,
    grid: Grid | None = None,
) -> Problem:
    grid = grid or build_grid(scenario, xy_step_m, z_step_m, heights)
    m = scenario.mission
    actions = build_actions(grid, m.v_max, delta)
    start, snap_s = grid.nearest(np.array(m.start) * 1000.0)
    finish, snap_f = grid.nearest(np.array(m.finish) * 1000.0)
    t0 = time.perf_counter()
    rewards, bh = stage_rewards(scenario, grid, jobs=jobs)
    elapsed = time.perf_counter() - t0
    n = horizon_steps(m.duration_T, delta) if n_steps is None else n_steps
    return Problem(scenario, grid, actions, rewards, bh, start, finish, (snap_s, snap_f), n, elapsed)


def _trajectory(problem: Problem, path: np.ndarray, value: float, mode: str, seconds: float) -> Trajectory:
    g = problem.grid
    return Trajectory(
        states=path,
        positions_m=g.positions[path],
        rewards=problem.rewards[path],
        value=value,
        delta=problem.actions.delta,
        backhaul_sir=problem.backhaul[path],
        meta={
            "mode": mode,
            "grid": g.spec(),
            "n_steps": problem.n_steps,
            "delta_s": problem.actions.delta,
            "value": value,
            "time_averaged_sum_rate": value / len(path),
            "snap_start_m": problem.snap_m[0],
            "snap_finish_m": problem.snap_m[1],
            "dp_seconds": seconds,
        },
    )


def height_mask(grid: Grid, fixed_height: float) -> np.ndarray:
    hits = np.flatnonzero(np.isclose(grid.zs, fixed_height))
    if not len(hits):
        raise ValueError(f"height {fixed_height} m is not a grid level")
    return np.isclose(grid.positions[:, 2], fixed_height)


def solve_dp(problem: Problem, n_steps: int | None = None) -> tuple[ValueTable, Trajectory]:
    n = problem.n_steps if n_steps is None else n_steps
    t0 = time.perf_counter()
    table, path, value = solve_rewards(problem.rewards, problem.actions, problem.start, problem.finish, n)
    dt = time.perf_counter() - t0
    return table, _trajectory(problem, path, value, "3d", dt)


def solve_dp_2d(problem: Problem, fixed_height: float, n_steps: int | None = None) -> Trajectory:
    """Fixed-height variant: waypoints 1..N-1 are pinned to ``fixed_height``.

    The mission endpoints stay where the mission puts them.
    """
    n = problem.n_steps if n_steps is None else n_steps
    mask = height_mask(problem.grid, fixed_height)
    t0 = time.perf_counter()
    _, path, value = solve_rewards(
        problem.rewards, problem.actions, problem.start, problem.finish, n, interior_mask=mask
    )
    dt = time.perf_counter() - t0
    return _trajectory(problem, path, value, f"2d@{fixed_height:g}", dt)


def path_value(rewards: np.ndarray, path) -> float:
    """Sum of rewards along ``path`` folded from the end, the order the DP uses."""
    v = rewards[path[-1]]
    for s in path[-2::-1]:
        v = rewards[s] + v
    return float(v)


def exhaustive_search(
    rewards: np.ndarray,
    actions: ActionSet,
    start: int,
    finish: int,
    n_steps: int,
    budget: int = 5_000_000,
) -> tuple[np.ndarray, float]:
    """Enumerate every admissible action sequence of length ``n_steps``.

    Returns the best path (first in enumeration order among ties) and its value.
    """
    if actions.fan_out**n_steps > budget:
        raise SearchBudgetExceeded(f"{actions.fan_out}^{n_steps} sequences exceed budget {budget}")
    succ = actions.successors
    paths = np.array([[start]], dtype=np.int64)
    for _ in range(n_steps):
        nxt = succ[paths[:, -1]]
        keep = nxt >= 0
        parents = np.repeat(np.arange(len(paths)), keep.sum(axis=1))
        paths = np.column_stack([paths[parents], nxt[keep]])
    paths = paths[paths[:, -1] == finish]
    if not len(paths):
        raise InfeasibleHorizon("no action sequence reaches the finish state")
    vals = rewards[paths[:, -1]]
    for i in range(n_steps - 1, -1, -1):
        vals = rewards[paths[:, i]] + vals
    b = int(np.argmax(vals))
    return paths[b], float(vals[b])


def min_hops(actions: ActionSet, source: int) -> np.ndarray:
    """Breadth-first hop counts from ``source`` over the successor graph."""
    S = actions.successors.shape[0]
    dist = np.full(S, -1, dtype=np.int64)
    dist[source] = 0
    frontier = np.array([source])
    d = 0
    while len(frontier):
        d += 1
        nb = actions.successors[frontier].ravel()
        nb = np.unique(nb[nb >= 0])
        nb = nb[dist[nb] < 0]
        dist[nb] = d
        frontier = nb
    return dist


@dataclass(frozen=True)
class CuboidVerdict:
    bound_s: float
    duration_T: float
    n_steps: int
    peak: int
    lattice_feasible: bool
    visited: bool
    hovers_only_at_peak: bool
    minimal_moves: bool
    moving_steps: int
    required_moves: int

    @property
    def ok(self) -> bool:
        return self.visited and self.hovers_only_at_peak and self.minimal_moves


def cuboid_bound(l: float, w: float, h: float, v_max: float) -> float:
    """Mission time (s) sufficient to detour through the far corner of an l x w x h cuboid (m)."""
    return (math.hypot(w, h) + math.hypot(l, h)) / v_max


def check_single_peak_cuboid(
    l: float,
    w: float,
    h: float,
    v_max: float,
    T: float,
    optimal_point,
    xy_step: float = 100.0,
    z_step: float = 10.0,
    delta: float = 8.0,
) -> CuboidVerdict:
    """Run the DP on a synthetic single-peak reward field over a cuboid.

    The cuboid spans ``[0, l] x [0, w] x [0, h]`` meters; the UAV flies from
    ``(0, 0, h)`` to ``(l, w, h)``. The field is 1 at the lattice point nearest
    ``optimal_point`` and at most ``0.5 / (N + 2)`` elsewhere, so any extra
    waypoint away from the peak costs more than every off-peak reward combined.
    """
    grid = Grid(_axis(0.0, l, xy_step), _axis(0.0, w, xy_step), _axis(0.0, h, z_step))
    actions = build_actions(grid, v_max, delta)
    n = horizon_steps(T, delta)
    start, _ = grid.nearest((0.0, 0.0, h))
    finish, _ = grid.nearest((l, w, h))
    peak, _ = grid.nearest(optimal_point)
    pos = grid.positions
    dist = np.linalg.norm(pos - pos[peak], axis=1)
    rewards = 0.5 / (n + 2) * np.exp(-dist / max(l, w, h))
    rewards[peak] = 1.0

    required = int(min_hops(actions, start)[peak] + min_hops(actions, peak)[finish])
    feasible = required <= n
    try:
        _, path, _ = solve_rewards(rewards, actions, start, finish, n)
    except InfeasibleHorizon:
        return CuboidVerdict(cuboid_bound(l, w, h, v_max), T, n, peak, feasible, False, False, False, 0, required)
    stays = path[1:] == path[:-1]
    moving = int((~stays).sum())
    visited = bool(np.any(path == peak))
    hover_ok = bool(np.all(path[1:][stays] == peak))
    return CuboidVerdict(
        bound_s=cuboid_bound(l, w, h, v_max),
        duration_T=T,
        n_steps=n,
        peak=peak,
        lattice_feasible=feasible,
        visited=visited,
        hovers_only_at_peak=hover_ok,
        minimal_moves=visited and moving == required,
        moving_steps=moving,
        required_moves=required,
    )


def check_constraints(traj: Trajectory, scenario: Scenario, tol: float = 1e-6) -> list[str]:
    """Mechanical check of speed, endpoint and height constraints; returns violations."""
    m = scenario.mission
    problems = []
    p = traj.positions_m
    step = np.linalg.norm(np.diff(p, axis=0), axis=1)
    if np.any(step > m.v_max * traj.delta + tol):
        problems.append(f"speed: max step {step.max():.3f} m > {m.v_max * traj.delta:.3f} m")
    start = np.array(m.start) * 1000.0
    finish = np.array(m.finish) * 1000.0
    if np.linalg.norm(p[0] - start) > tol + traj.meta.get("snap_start_m", 0.0):
        problems.append(f"start {p[0]} != {start}")
    if np.linalg.norm(p[-1] - finish) > tol + traj.meta.get("snap_finish_m", 0.0):
        problems.append(f"finish {p[-1]} != {finish}")
    if np.any(p[:, 2] < m.h_min - tol) or np.any(p[:, 2] > m.h_max + tol):
        problems.append("height band violated")
    return problems


def random_tiny_instance(seed: int, grid_shape=(3, 3, 2), n_steps: int | None = None, max_steps: int = 5) -> Problem:
    """Random reward field and endpoints on a small lattice, for oracle checks.

    Rewards come from a real seeded network scenario evaluated on a lattice of
    ``grid_shape`` points laid out at 100 m / 10 m spacing.
    """
    rng = np.random.default_rng(seed)
    nx, ny, nz = grid_shape
    heights = 40.0 + 10.0 * np.arange(nz)
    ox, oy = rng.integers(0, 8, size=2) * 0.1
    flight = (ox, oy, ox + 0.1 * (nx - 1), oy + 0.1 * (ny - 1))
    pts = list(itertools.product(range(nx), range(ny), range(nz)))
    a, b = rng.choice(len(pts), size=2, replace=True)
    drawn = int(rng.integers(1, max_steps + 1))
    n_steps = drawn if n_steps is None else n_steps
    sx, sy, sz = pts[a]
    fx, fy, fz = pts[b]
    start = (flight[0] + 0.1 * sx, flight[1] + 0.1 * sy, heights[sz] / 1000.0)
    finish = (flight[0] + 0.1 * fx, flight[1] + 0.1 * fy, heights[fz] / 1000.0)
    # the mission must be valid even when the lattice horizon is too short
    T_mission = max(8.0 * n_steps, t_min(start, finish, 18.75))
    mission = Mission(start, finish, T_mission, 18.75, float(heights[0]), float(heights[-1]))
    scen = generate_scenario((0, 0, 1, 1), 2, 20, mission, seed, flight_area=flight)
    grid = Grid(_axis(flight[0] * 1000, flight[2] * 1000, 100.0), _axis(flight[1] * 1000, flight[3] * 1000, 100.0), heights)
    problem = prepare(scen, delta=8.0, grid=grid, n_steps=n_steps)
    return problem


@dataclass(frozen=True)
class OracleOutcome:
    seed: int
    agree: bool
    dp_value: float | None
    es_value: float | None
    same_path: bool
    detail: str = ""


def oracle_compare(problem: Problem, budget: int = 5_000_000) -> tuple[bool, float | None, float | None, bool, str]:
    """Solve one instance by DP and by enumeration and compare exactly."""
    args = (problem.rewards, problem.actions, problem.start, problem.finish, problem.n_steps)
    try:
        _, dp_path, dp_val = solve_rewards(*args)
    except InfeasibleHorizon:
        dp_path, dp_val = None, None
    try:
        es_path, es_val = exhaustive_search(*args, budget=budget)
    except InfeasibleHorizon:
        es_path, es_val = None, None
    if dp_val is None or es_val is None:
        agree = dp_val is None and es_val is None
        return agree, dp_val, es_val, agree, "both infeasible" if agree else "feasibility mismatch"
    same = bool(np.array_equal(dp_path, es_path))
    agree = dp_val == es_val and path_value(problem.rewards, dp_path) == dp_val
    detail = "" if same else "tie: different path with equal value"
    return agree, dp_val, es_val, same, detail if agree else "value mismatch"


def run_oracle(seeds, grid_shape=(3, 3, 2), n_steps: int | None = None, max_steps: int = 5) -> list[OracleOutcome]:
    out = []
    for seed in seeds:
        problem = random_tiny_instance(int(seed), grid_shape, n_steps=n_steps, max_steps=max_steps)
        agree, dv, ev, same, detail = oracle_compare(problem)
        out.append(OracleOutcome(int(seed), agree, dv, ev, same, detail))
    return out
