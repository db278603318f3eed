"""Plain-text mesh format, YAML run configuration, and CSV outputs.

Mesh files have three fixed-order sections: `$Nodes` (count, then
`id x y` with 1-based contiguous ids), `$Triangles` (count, then
`id n1 n2 n3`), and `$NodeSets` (a set name followed by whitespace-
separated ids, terminated by a blank line). `#` starts a comment.
All parse failures carry the file path and line number.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np
import yaml

from .admm import AdmmConfig
from .cohesive import CohesiveParams
from .driver import ExtrapolationPolicy, LoadSchedule, RunRecord, StepRow
from .elasticity import Material
from .errors import ConfigError, MeshError, MeshParseError
from .mesh import InputMesh, triangle_signed_areas

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# mesh files
# ---------------------------------------------------------------------------

def _clean_lines(path):
    """Yield (line number, stripped text) with comments removed."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            yield lineno, text


def parse_mesh(path) -> InputMesh:
    """Parse a mesh file and validate the result.

    Clockwise triangles are re-oriented with a logged warning; structural
    problems raise MeshParseError with the offending line.
    """
    lines = list(_clean_lines(path))
    pos = 0
    n_lines = len(lines)

    def skip_blank():
        nonlocal pos
        while pos < n_lines and not lines[pos][1]:
            pos += 1

    def expect_section(name):
        nonlocal pos
        skip_blank()
        if pos >= n_lines or lines[pos][1] != name:
            lineno = lines[pos][0] if pos < n_lines else n_lines + 1
            raise MeshParseError(path, lineno, f"expected section {name}")
        pos += 1

    def read_count(what):
        nonlocal pos
        skip_blank()
        if pos >= n_lines:
            raise MeshParseError(path, n_lines + 1, f"missing {what} count")
        lineno, text = lines[pos]
        try:
            count = int(text)
        except ValueError:
            raise MeshParseError(path, lineno, f"bad {what} count {text!r}") from None
        if count < 0:
            raise MeshParseError(path, lineno, f"negative {what} count")
        pos += 1
        return count

    def read_rows(count, n_fields, cast, what):
        nonlocal pos
        rows = np.empty((count, n_fields - 1), dtype=float if cast is float else np.int64)
        linenos = np.empty(count, dtype=np.int64)
        for k in range(count):
            skip_blank()
            if pos >= n_lines:
                raise MeshParseError(path, n_lines + 1, f"truncated {what} section")
            lineno, text = lines[pos]
            parts = text.split()
            if len(parts) != n_fields:
                raise MeshParseError(
                    path, lineno, f"expected {n_fields} fields, got {len(parts)}"
                )
            try:
                ident = int(parts[0])
                values = [cast(v) for v in parts[1:]]
            except ValueError:
                raise MeshParseError(path, lineno, f"bad {what} row {text!r}") from None
            if ident != k + 1:
                raise MeshParseError(
                    path, lineno, f"{what} ids must be 1-based contiguous; got {ident}"
                )
            rows[k] = values
            linenos[k] = lineno
            pos += 1
        return rows, linenos

    expect_section("$Nodes")
    n_nodes = read_count("node")
    nodes, _ = read_rows(n_nodes, 3, float, "node")

    expect_section("$Triangles")
    n_tris = read_count("triangle")
    tris, tri_lines = read_rows(n_tris, 4, int, "triangle")
    bad = (tris < 1) | (tris > n_nodes)
    if np.any(bad):
        row = int(np.argmax(bad.any(axis=1)))
        raise MeshParseError(
            path, int(tri_lines[row]),
            f"triangle {row + 1} references node {int(tris[row][bad[row]][0])} "
            f"of {n_nodes}",
        )
    tris = tris - 1  # to 0-based

    skip_blank()
    sets: dict[str, np.ndarray] = {}
    if pos < n_lines:
        if lines[pos][1] != "$NodeSets":
            raise MeshParseError(path, lines[pos][0], "expected section $NodeSets")
        pos += 1
        current_name = None
        current_ids: list[int] = []
        current_line = 0

        def close_set():
            nonlocal current_name, current_ids
            if current_name is not None:
                if current_name in sets:
                    raise MeshParseError(
                        path, current_line, f"duplicate node set {current_name!r}"
                    )
                ids = np.asarray(current_ids, dtype=np.int64)
                if ids.size and (ids.min() < 1 or ids.max() > n_nodes):
                    raise MeshParseError(
                        path, current_line,
                        f"node set {current_name!r} references a node out of range",
                    )
                sets[current_name] = ids - 1
                current_name, current_ids = None, []

        while pos < n_lines:
            lineno, text = lines[pos]
            pos += 1
            if not text:
                close_set()
                continue
            parts = text.split()
            if current_name is None:
                current_name = parts[0]
                current_line = lineno
                parts = parts[1:]
            try:
                current_ids.extend(int(v) for v in parts)
            except ValueError:
                raise MeshParseError(path, lineno, f"bad node id in {text!r}") from None
        close_set()

    # re-orient clockwise triangles before invariant validation
    if n_tris:
        areas = triangle_signed_areas(nodes, tris)
        flipped = areas < 0
        if np.any(flipped):
            tris[flipped] = tris[flipped][:, [0, 2, 1]]
            log.warning(
                "%s: re-oriented %d clockwise triangle(s)", path, int(flipped.sum())
            )
    mesh = InputMesh(nodes=nodes, triangles=tris, boundary_sets=sets)
    try:
        mesh.validate()
    except MeshError as exc:
        raise MeshParseError(path, n_lines, str(exc)) from exc
    return mesh


def write_mesh(mesh: InputMesh, path) -> None:
    """Write a mesh file; coordinates round-trip bit-exactly via repr."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("$Nodes\n")
        fh.write(f"{mesh.n_nodes}\n")
        for i, (x, y) in enumerate(mesh.nodes, start=1):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
        fh.write("$Triangles\n")
        fh.write(f"{mesh.n_triangles}\n")
        for i, (a, b, c) in enumerate(mesh.triangles + 1, start=1):
            fh.write(f"{i} {a} {b} {c}\n")
        fh.write("$NodeSets\n")
        for name, ids in mesh.boundary_sets.items():
            fh.write(name + " " + " ".join(str(i + 1) for i in ids) + "\n\n")


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass
class OutputOptions:
    directory: str = "out"
    per_step_fields: bool = False


@dataclass
class RunConfig:
    material: Material
    cohesive: CohesiveParams
    admm: AdmmConfig
    schedule: LoadSchedule
    policy: ExtrapolationPolicy
    output: OutputOptions


def _section(data: dict, name: str) -> dict:
    if name not in data:
        raise ConfigError(f"{name}: missing section")
    value = data[name]
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: must be a mapping")
    return value


def _take(section: dict, path: str, key: str, kind, default=...):
    if key not in section:
        if default is not ...:
            return default
        raise ConfigError(f"{path}.{key}: missing required key")
    value = section.pop(key)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(
            f"{path}.{key}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _reject_unknown(section: dict, path: str) -> None:
    if section:
        key = sorted(section)[0]
        raise ConfigError(f"{path}.{key}: unknown key")


def parse_config(path) -> RunConfig:
    """Parse and validate a YAML run configuration.

    Syntax errors carry the YAML line number; invariant violations name
    the offending dotted key.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    data = dict(data)

    sec = dict(_section(data, "material"))
    try:
        material = Material(
            youngs_modulus=_take(sec, "material", "youngs_modulus", float),
            poisson_ratio=_take(sec, "material", "poisson_ratio", float),
            mode=_take(sec, "material", "mode", str, "plane_stress"),
            thickness=_take(sec, "material", "thickness", float, 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"material: {exc}") from exc
    _reject_unknown(sec, "material")

    sec = dict(_section(data, "cohesive"))
    try:
        cohesive = CohesiveParams(
            sigma_c=_take(sec, "cohesive", "sigma_c", float),
            delta_c=_take(sec, "cohesive", "delta_c", float),
            beta=_take(sec, "cohesive", "beta", float, 1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"cohesive: {exc}") from exc
    _reject_unknown(sec, "cohesive")

    sec = dict(_section(data, "admm"))
    admm = AdmmConfig(
        alpha=_take(sec, "admm", "alpha", float, 100.0),
        c_primal=_take(sec, "admm", "c_primal", float),
        c_dual=_take(sec, "admm", "c_dual", float),
        max_iters=_take(sec, "admm", "max_iters", int, 100_000),
    )
    _reject_unknown(sec, "admm")

    sec = dict(_section(data, "schedule"))
    fixed_raw = _take(sec, "schedule", "fixed", list, [])
    fixed = []
    for i, entry in enumerate(fixed_raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"schedule.fixed[{i}]: must be a mapping")
        entry = dict(entry)
        fixed.append(
            (
                _take(entry, f"schedule.fixed[{i}]", "set", str),
                _take(entry, f"schedule.fixed[{i}]", "components", str),
            )
        )
        _reject_unknown(entry, f"schedule.fixed[{i}]")
    schedule = LoadSchedule(
        bc_set=_take(sec, "schedule", "bc_set", str),
        direction=_take(sec, "schedule", "direction", str),
        u_start=_take(sec, "schedule", "u_start", float, 0.0),
        u_end=_take(sec, "schedule", "u_end", float),
        n_steps=_take(sec, "schedule", "n_steps", int),
        fixed_sets=tuple(fixed),
    )
    _reject_unknown(sec, "schedule")

    sec = dict(data.get("policy") or {})
    policy = ExtrapolationPolicy(
        enabled=_take(sec, "policy", "extrapolation", bool, True),
        quality_threshold=_take(sec, "policy", "quality_threshold", float, 2.0),
    )
    _reject_unknown(sec, "policy")

    sec = dict(data.get("output") or {})
    output = OutputOptions(
        directory=_take(sec, "output", "directory", str, "out"),
        per_step_fields=_take(sec, "output", "per_step_fields", bool, False),
    )
    _reject_unknown(sec, "output")

    for key in data:
        if key not in ("material", "cohesive", "admm", "schedule", "policy", "output"):
            raise ConfigError(f"{key}: unknown section")
    return RunConfig(
        material=material,
        cohesive=cohesive,
        admm=admm,
        schedule=schedule,
        policy=policy,
        output=output,
    )


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

STRESS_STRAIN_HEADER = (
    "step,u_applied,reaction_force,avg_stress,avg_strain,"
    "iterations,extrapolated,wall_ms"
)
CRACK_FIELD_HEADER = "gauss_point,x,y,delta_n,delta_s,delta_max,status"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_step_row(row: StepRow) -> str:
    return ",".join(
        [
            str(row.step),
            _fmt(row.u_applied),
            _fmt(row.reaction_force),
            _fmt(row.avg_stress),
            _fmt(row.avg_strain),
            str(row.iterations),
            "true" if row.extrapolated else "false",
            _fmt(row.wall_ms),
        ]
    )


def point_status(eff: float, delta_max: float, delta_c: float) -> str:
    if delta_max <= 0.0:
        return "closed"
    if delta_max >= delta_c:
        return "failed"
    if eff < delta_max * (1.0 - 1e-9):
        return "unloading"
    return "opening"


def _crack_field_rows(jump, params: CohesiveParams, delta, delta_max):
    delta = np.asarray(delta).reshape(-1, 2)
    eff = params.effective_opening(delta)
    for i in range(jump.n_points):
        x, y = jump.points[i]
        yield ",".join(
            [
                str(i),
                _fmt(x),
                _fmt(y),
                _fmt(delta[i, 0]),
                _fmt(delta[i, 1]),
                _fmt(delta_max[i]),
                point_status(eff[i], delta_max[i], params.delta_c),
            ]
        )


def write_crack_field(path, jump, params, delta, delta_max) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CRACK_FIELD_HEADER + "\n")
        for line in _crack_field_rows(jump, params, delta, delta_max):
            fh.write(line + "\n")


def write_outputs(record: RunRecord, out_dir) -> dict:
    """One-shot dump of a completed run: CSV curves, crack field, log.

    Returns the mapping of logical name to written path.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "stress_strain": os.path.join(out_dir, "stress_strain.csv"),
        "crack_field": os.path.join(out_dir, "crack_field.csv"),
        "iterations": os.path.join(out_dir, "iterations.log"),
    }
    try:
        with open(paths["stress_strain"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(STRESS_STRAIN_HEADER + "\n")
            for row in record.rows:
                fh.write(format_step_row(row) + "\n")
        with open(paths["iterations"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# step iter primal_inf dual_inf\n")
            for step, it, primal, dual in record.residual_log:
                fh.write(f"{step} {it} {_fmt(primal)} {_fmt(dual)}\n")
        if record.final_state is not None and record.jump is not None:
            write_crack_field(
                paths["crack_field"],
                record.jump,
                record.cohesive,
                record.final_state.delta,
                record.cohesive_state.delta_max,
            )
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out_dir}: {exc}") from exc
    return paths


class RunWriter:
    """Incremental, crash-safe writer wired into the driver sinks.

    Rows are flushed after every load step so a crashed or aborted run
    leaves a usable partial stress_strain.csv behind.
    """

    def __init__(self, out_dir, per_step_fields: bool = False):
        self.out_dir = str(out_dir)
        self.per_step_fields = per_step_fields
        os.makedirs(self.out_dir, exist_ok=True)
        self._ss = open(
            os.path.join(self.out_dir, "stress_strain.csv"),
            "w", encoding="utf-8", newline="\n",
        )
        self._ss.write(STRESS_STRAIN_HEADER + "\n")
        self._it = open(
            os.path.join(self.out_dir, "iterations.log"),
            "w", encoding="utf-8", newline="\n",
        )
        self._it.write("# step iter primal_inf dual_inf\n")
        self._jump = None
        self._params = None

    def bind(self, mesh, jump, solver) -> None:
        self._jump = jump
        self._params = solver.params

    def on_iteration(self, step, it, primal, dual) -> None:
        self._it.write(f"{step} {it} {_fmt(primal)} {_fmt(dual)}\n")

    def on_step(self, row: StepRow, state, cohesive_state) -> None:
        self._ss.write(format_step_row(row) + "\n")
        self._ss.flush()
        self._it.flush()
        if self.per_step_fields and self._jump is not None:
            write_crack_field(
                os.path.join(self.out_dir, f"crack_field_step{row.step:04d}.csv"),
                self._jump,
                self._params,
                state.delta,
                cohesive_state.delta_max,
            )

    def finalize(self, record: RunRecord) -> None:
        if record.final_state is not None and self._jump is not None:
            write_crack_field(
                os.path.join(self.out_dir, "crack_field.csv"),
                self._jump,
                self._params,
                record.final_state.delta,
                record.cohesive_state.delta_max,
            )
        self.close()

    def close(self) -> None:
        if not self._ss.closed:
            self._ss.close()
        if not self._it.closed:
            self._it.close()
