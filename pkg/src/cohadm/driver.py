"""Quasistatic load stepping with linear extrapolation warm starts.

Each load step prescribes an increment of boundary displacement and
re-minimizes the energy from a warm start. The warm start is either the
previous converged state or, when the previous linear prediction proved
accurate enough, the extrapolation 2 z_k - z_{k-1}, which is feasible
because the constraint is linear. Records an average stress / average
strain row per step and supports crash-safe incremental sinks.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .admm import AdmmConfig, AdmmSolver, SolverState
from .cohesive import CohesiveParams, CohesiveState, dissipated_energy
from .elasticity import Material, assemble_stiffness
from .errors import ConfigError, ConvergenceError
from .mesh import BrokenMesh, InputMesh, break_mesh, build_jump_operator

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadSchedule:
    """Monotone displacement ramp applied to one boundary set.

    bc_set nodes are driven along `direction` ('x' or 'y') from u_start
    to u_end in n_steps uniform increments; fixed_sets lists
    (set name, components) pairs pinned to zero, components one of
    'x', 'y', 'xy'.
    """

    bc_set: str
    direction: str
    u_start: float
    u_end: float
    n_steps: int
    fixed_sets: tuple = ()

    def __post_init__(self):
        if self.direction not in ("x", "y"):
            raise ConfigError("schedule direction must be 'x' or 'y'")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be at least 1")
        for entry in self.fixed_sets:
            if len(entry) != 2 or entry[1] not in ("x", "y", "xy"):
                raise ConfigError(
                    "fixed_sets entries must be (set name, 'x'|'y'|'xy')"
                )

    def applied(self, step: int) -> float:
        """Prescribed displacement at step k (step 0 is the baseline)."""
        return self.u_start + (self.u_end - self.u_start) * step / self.n_steps


@dataclass(frozen=True)
class ExtrapolationPolicy:
    """Gate for extrapolated warm starts."""

    enabled: bool = True
    quality_threshold: float = 2.0

    def __post_init__(self):
        if self.quality_threshold <= 1:
            raise ConfigError("quality_threshold must exceed 1")


@dataclass
class StepRow:
    step: int
    u_applied: float
    reaction_force: float
    avg_stress: float
    avg_strain: float
    iterations: int
    extrapolated: bool
    wall_ms: float


@dataclass
class RunRecord:
    """Per-step outputs of a quasistatic run plus the final fields."""

    width: float
    height: float
    thickness: float
    direction: str
    rows: list[StepRow] = field(default_factory=list)
    dissipation: list[float] = field(default_factory=list)
    residual_log: list[tuple] = field(default_factory=list)
    final_state: SolverState | None = None
    cohesive_state: CohesiveState | None = None
    jump: object = None
    cohesive: CohesiveParams | None = None

    @property
    def total_iterations(self) -> int:
        return sum(r.iterations for r in self.rows)

    @property
    def stresses(self) -> np.ndarray:
        return np.array([r.avg_stress for r in self.rows])

    @property
    def strains(self) -> np.ndarray:
        return np.array([r.avg_strain for r in self.rows])

    @property
    def peak_stress(self) -> float:
        return float(self.stresses.max())


class StateScale:
    """Nondimensionalization for norms over the mixed-unit state."""

    def __init__(self, params: CohesiveParams, mean_area: float):
        self.u_scale = params.delta_c
        self.delta_scale = params.delta_c
        self.y_scale = max(mean_area, 1e-300) * params.sigma_c

    def norm(self, a: SolverState, b: SolverState) -> float:
        """Euclidean norm of the scaled difference a - b."""
        du = (a.u - b.u) / self.u_scale
        dd = (a.delta - b.delta) / self.delta_scale
        dy = (a.y - b.y) / self.y_scale
        return float(np.sqrt(du @ du + dd @ dd + dy @ dy))


def extrapolate(z_k: SolverState, z_km1: SolverState) -> SolverState:
    """Linear prediction 2 z_k - z_{k-1}, componentwise over (u, delta, y)."""
    return SolverState(
        u=2.0 * z_k.u - z_km1.u,
        delta=2.0 * z_k.delta - z_km1.delta,
        y=2.0 * z_k.y - z_km1.y,
    )


def extrapolation_quality(
    z_k: SolverState,
    z_km1: SolverState,
    z_tilde_k: SolverState,
    scale: StateScale,
) -> float:
    """Accuracy ratio |z_k - z_{k-1}| / |z_k - z~_k| of the last prediction.

    Infinity means a perfect prediction; values above the policy
    threshold enable extrapolation for the next step.
    """
    denom = scale.norm(z_k, z_tilde_k)
    if denom == 0.0:
        return np.inf
    return scale.norm(z_k, z_km1) / denom


def _dirichlet_layout(mesh: BrokenMesh, schedule: LoadSchedule):
    """Sorted constrained DOFs and the positions of the driven ones."""
    sets = mesh.input_mesh.boundary_sets
    if schedule.bc_set not in sets:
        raise ConfigError(f"unknown boundary set {schedule.bc_set!r}")
    driven = mesh.dofs_of(sets[schedule.bc_set], schedule.direction)
    fixed_parts = []
    for name, components in schedule.fixed_sets:
        if name not in sets:
            raise ConfigError(f"unknown boundary set {name!r}")
        fixed_parts.append(mesh.dofs_of(sets[name], components))
    fixed = (
        np.unique(np.concatenate(fixed_parts)) if fixed_parts else
        np.zeros(0, dtype=np.int64)
    )
    overlap = np.intersect1d(driven, fixed)
    if overlap.size:
        raise ConfigError(
            "driven and fixed boundary sets overlap on the driven component"
        )
    all_dofs = np.unique(np.concatenate([driven, fixed]))
    driven_pos = np.searchsorted(all_dofs, driven)
    return all_dofs, driven_pos


def run_quasistatic(
    input_mesh: InputMesh,
    material: Material,
    cohesive: CohesiveParams,
    schedule: LoadSchedule,
    admm_config: AdmmConfig,
    policy: ExtrapolationPolicy = ExtrapolationPolicy(),
    gauss_per_edge: int = 2,
    setup_sink=None,
    step_sink=None,
    iteration_sink=None,
) -> RunRecord:
    """Run the full load schedule and collect the stress-strain record.

    setup_sink(mesh, jump, solver) fires once after assembly;
    step_sink(row, state, cohesive_state) after every converged step
    (crash-safe flushing is the caller's concern); iteration_sink(step,
    iter, primal, dual) after every ADMM iteration. On non-convergence
    the raised ConvergenceError carries the partial record as
    `partial_record`.
    """
    mesh = break_mesh(input_mesh)
    jump = build_jump_operator(mesh, gauss_per_edge, material.thickness)
    stiffness = assemble_stiffness(mesh, material)
    dirichlet, driven_pos = _dirichlet_layout(mesh, schedule)
    reaction_nodes = mesh.private_nodes_of(
        input_mesh.boundary_sets[schedule.bc_set]
    )
    record_log: list[tuple] = []

    def _log_iteration(step, it, primal, dual):
        record_log.append((step, it, primal, dual))
        if iteration_sink is not None:
            iteration_sink(step, it, primal, dual)

    solver = AdmmSolver(
        stiffness,
        jump,
        cohesive,
        admm_config,
        dirichlet,
        mesh.nodes,
        reaction_nodes=reaction_nodes,
        iteration_sink=_log_iteration,
    )
    matrix_digest = solver.fact.checksum()
    if setup_sink is not None:
        setup_sink(mesh, jump, solver)

    lo = input_mesh.nodes.min(axis=0)
    hi = input_mesh.nodes.max(axis=0)
    extent = hi - lo
    axis = 0 if schedule.direction == "x" else 1
    width = float(extent[axis])
    height = float(extent[1 - axis])
    section = height * material.thickness
    record = RunRecord(
        width=width,
        height=height,
        thickness=material.thickness,
        direction=schedule.direction,
        residual_log=record_log,
        jump=jump,
        cohesive=cohesive,
    )

    cstate = CohesiveState.pristine(jump.n_points)
    scale = StateScale(
        cohesive, float(np.mean(jump.areas)) if jump.n_points else 1.0
    )

    def emit(row: StepRow, state: SolverState) -> None:
        record.rows.append(row)
        record.dissipation.append(
            dissipated_energy(cstate.delta_max, jump.areas, cohesive)
        )
        if step_sink is not None:
            step_sink(row, state, cstate)

    emit(
        StepRow(
            step=0,
            u_applied=schedule.applied(0),
            reaction_force=0.0,
            avg_stress=0.0,
            avg_strain=schedule.applied(0) / width,
            iterations=0,
            extrapolated=False,
            wall_ms=0.0,
        ),
        SolverState.zeros(jump.n_dof, jump.n_points),
    )

    z_before = None                      # z_{k-2}
    z_prev = solver.initial_state()      # z_{k-1}
    quality = None
    for k in range(1, schedule.n_steps + 1):
        target = schedule.applied(k)
        bc_values = np.zeros(len(dirichlet))
        bc_values[driven_pos] = target
        use_extrap = (
            policy.enabled
            and k >= 3
            and quality is not None
            and quality > policy.quality_threshold
        )
        warm = extrapolate(z_prev, z_before) if use_extrap else z_prev.copy()
        t0 = time.perf_counter()
        try:
            result = solver.run_step(warm, bc_values, cstate, step=k)
        except ConvergenceError as exc:
            exc.partial_record = record
            raise
        wall_ms = 1e3 * (time.perf_counter() - t0)

        force = float(result.reaction[axis])
        emit(
            StepRow(
                step=k,
                u_applied=target,
                reaction_force=force,
                avg_stress=force / section,
                avg_strain=target / width,
                iterations=result.iterations,
                extrapolated=use_extrap,
                wall_ms=wall_ms,
            ),
            result.state,
        )
        log.info(
            "step %d/%d: u=%.6g force=%.6g iters=%d extrap=%s",
            k, schedule.n_steps, target, force, result.iterations, use_extrap,
        )

        z_new = result.state
        if z_before is not None:
            trial = extrapolate(z_prev, z_before)
            quality = extrapolation_quality(z_new, z_prev, trial, scale)
        z_before, z_prev = z_prev, z_new

    assert solver.fact.checksum() == matrix_digest, "operator mutated during run"
    record.final_state = z_prev
    record.cohesive_state = cstate
    return record
