import logging

from hypothesis import given, settings
from hypothesis import strategies as st

import numpy as np
import pytest

from cohadm.admm import AdmmConfig
from cohadm.cohesive import CohesiveParams
from cohadm.driver import LoadSchedule, run_quasistatic
from cohadm.errors import ConfigError, MeshParseError
from cohadm.fileio import (
    CRACK_FIELD_HEADER,
    STRESS_STRAIN_HEADER,
    RunWriter,
    parse_config,
    parse_mesh,
    point_status,
    write_mesh,
    write_outputs,
)
from cohadm.meshgen import rect_strip

TWO_TRI = """\
# two-triangle unit square
$Nodes
4
1 0.0 0.0
2 1.0 0.0
3 1.0 1.0
4 0.0 1.0
$Triangles
2
1 1 2 3
2 1 3 4
$NodeSets
left 1 4

right 2 3

pin 1
"""

CONFIG = """\
material:
  youngs_modulus: 3000.0
  poisson_ratio: 0.2
  mode: plane_stress
  thickness: 1.0
cohesive:
  sigma_c: 3.0
  delta_c: 0.02287
  beta: 1.0
admm:
  alpha: 100.0
  c_primal: 0.01
  c_dual: 0.01
  max_iters: 50000
schedule:
  bc_set: right
  direction: x
  u_start: 0.0
  u_end: 0.002
  n_steps: 4
  fixed:
    - {set: left, components: x}
    - {set: pin, components: y}
policy:
  extrapolation: true
  quality_threshold: 2.0
output:
  directory: out
  per_step_fields: false
"""


@pytest.fixture
def mesh_file(tmp_path):
    path = tmp_path / "two.mesh"
    path.write_text(TWO_TRI)
    return path


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(CONFIG)
    return path


class TestMeshParsing:
    def test_fixture_counts(self, mesh_file):
        mesh = parse_mesh(mesh_file)
        assert mesh.n_nodes == 4
        assert mesh.n_triangles == 2
        assert set(mesh.boundary_sets) == {"left", "right", "pin"}
        assert np.array_equal(mesh.boundary_sets["left"], [0, 3])
        from cohadm.mesh import break_mesh

        assert len(break_mesh(mesh).interfaces) == 1

    def test_dangling_triangle_index_line_number(self, tmp_path):
        bad = TWO_TRI.replace("1 1 2 3", "1 1 2 99")
        path = tmp_path / "bad.mesh"
        path.write_text(bad)
        with pytest.raises(MeshParseError) as err:
            parse_mesh(path)
        assert err.value.line == 10   # the offending triangle row
        assert "references node 99 of 4" in str(err.value)

    def test_clockwise_reoriented_with_warning(self, tmp_path, caplog):
        flipped = TWO_TRI.replace("1 1 2 3", "1 1 3 2")
        path = tmp_path / "cw.mesh"
        path.write_text(flipped)
        with caplog.at_level(logging.WARNING):
            mesh = parse_mesh(path)
        assert "re-oriented 1 clockwise" in caplog.text
        mesh.validate()   # invariants hold after the fix

    def test_duplicate_id_rejected(self, tmp_path):
        bad = TWO_TRI.replace("2 1.0 0.0", "1 1.0 0.0")
        path = tmp_path / "dup.mesh"
        path.write_text(bad)
        with pytest.raises(MeshParseError, match="contiguous"):
            parse_mesh(path)

    def test_missing_section_rejected(self, tmp_path):
        path = tmp_path / "nosec.mesh"
        path.write_text("$Nodes\n0\n")
        with pytest.raises(MeshParseError, match=r"\$Triangles"):
            parse_mesh(path)

    def test_truncated_nodes_rejected(self, tmp_path):
        path = tmp_path / "trunc.mesh"
        path.write_text("$Nodes\n3\n1 0.0 0.0\n")
        with pytest.raises(MeshParseError, match="truncated"):
            parse_mesh(path)

    def test_bad_count_rejected(self, tmp_path):
        path = tmp_path / "count.mesh"
        path.write_text("$Nodes\nfour\n")
        with pytest.raises(MeshParseError, match="count"):
            parse_mesh(path)

    def test_node_set_out_of_range(self, tmp_path):
        bad = TWO_TRI.replace("pin 1", "pin 17")
        path = tmp_path / "set.mesh"
        path.write_text(bad)
        with pytest.raises(MeshParseError, match="out of range"):
            parse_mesh(path)

    def test_node_set_spans_lines(self, tmp_path):
        text = TWO_TRI.replace("left 1 4", "left 1\n  4")
        path = tmp_path / "span.mesh"
        path.write_text(text)
        mesh = parse_mesh(path)
        assert np.array_equal(mesh.boundary_sets["left"], [0, 3])

    def test_round_trip_bit_exact(self, tmp_path):
        mesh = rect_strip(np.pi, np.e, 3, 2)
        path = tmp_path / "rt.mesh"
        write_mesh(mesh, path)
        back = parse_mesh(path)
        assert np.array_equal(back.nodes, mesh.nodes)
        assert np.array_equal(back.triangles, mesh.triangles)
        for name in mesh.boundary_sets:
            assert np.array_equal(back.boundary_sets[name], mesh.boundary_sets[name])

    @given(text=st.text(max_size=300))
    @settings(max_examples=150, deadline=None)
    def test_parser_totality(self, tmp_path_factory, text):
        """Arbitrary input never crashes: structured error or valid mesh."""
        path = tmp_path_factory.mktemp("fuzz") / "fuzz.mesh"
        path.write_text(text, encoding="utf-8")
        try:
            parse_mesh(path)
        except MeshParseError:
            pass

    def test_mutated_fixture_totality(self, tmp_path):
        """Every single-line deletion of a valid file fails cleanly or parses."""
        lines = TWO_TRI.splitlines()
        for k in range(len(lines)):
            mutated = "\n".join(lines[:k] + lines[k + 1 :])
            path = tmp_path / f"m{k}.mesh"
            path.write_text(mutated)
            try:
                parse_mesh(path)
            except MeshParseError as exc:
                assert exc.line >= 1
                assert exc.path.endswith(f"m{k}.mesh")


class TestConfigParsing:
    def test_full_parse(self, config_file):
        cfg = parse_config(config_file)
        assert cfg.material.youngs_modulus == 3000.0
        assert cfg.cohesive.sigma_c == 3.0
        assert cfg.admm.max_iters == 50000
        assert cfg.schedule.fixed_sets == (("left", "x"), ("pin", "y"))
        assert cfg.policy.enabled is True
        assert cfg.output.directory == "out"

    def test_missing_key_names_dotted_path(self, tmp_path):
        text = CONFIG.replace("  sigma_c: 3.0\n", "")
        path = tmp_path / "c.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError, match="cohesive.sigma_c"):
            parse_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        text = CONFIG.replace("beta: 1.0", "beta: 1.0\n  gamma: 2.0")
        path = tmp_path / "c.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError, match="cohesive.gamma"):
            parse_config(path)

    def test_invalid_value_names_section(self, tmp_path):
        text = CONFIG.replace("youngs_modulus: 3000.0", "youngs_modulus: -3.0")
        path = tmp_path / "c.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError, match="material"):
            parse_config(path)

    def test_yaml_syntax_error_carries_line(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("material: {youngs_modulus: [unclosed\n")
        with pytest.raises(ConfigError, match=r":\d+"):
            parse_config(path)

    def test_wrong_type_rejected(self, tmp_path):
        text = CONFIG.replace("n_steps: 4", "n_steps: lots")
        path = tmp_path / "c.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError, match="schedule.n_steps"):
            parse_config(path)


@pytest.fixture(scope="module")
def small_run():
    mesh = rect_strip(2.0, 1.0, 2, 2)
    from cohadm.elasticity import Material

    mat = Material(youngs_modulus=3000.0, poisson_ratio=0.2,
                   mode="plane_stress", thickness=0.5)
    params = CohesiveParams(sigma_c=3.0, delta_c=0.02287, beta=1.0)
    sched = LoadSchedule(bc_set="right", direction="x", u_start=0.0,
                         u_end=0.001, n_steps=4,
                         fixed_sets=(("left", "x"), ("pin", "y")))
    return run_quasistatic(mesh, mat, params, sched, AdmmConfig())


class TestOutputs:
    def test_stress_strain_schema(self, small_run, tmp_path):
        paths = write_outputs(small_run, tmp_path / "out")
        lines = open(paths["stress_strain"], newline="").read().split("\n")
        assert lines[0] == STRESS_STRAIN_HEADER
        # header + (n_steps + 1) rows + trailing newline
        assert len([l for l in lines if l]) == 1 + 5
        assert "\r" not in open(paths["stress_strain"], newline="").read()

    def test_stress_column_consistency(self, small_run, tmp_path):
        paths = write_outputs(small_run, tmp_path / "out")
        rows = [l.split(",") for l in open(paths["stress_strain"]).read().splitlines()[1:]]
        section = small_run.height * small_run.thickness
        for row in rows:
            force, stress, strain = float(row[2]), float(row[3]), float(row[4])
            u = float(row[1])
            assert abs(stress - force / section) <= 1e-12 * max(abs(stress), 1.0)
            assert abs(strain - u / small_run.width) <= 1e-12 * max(abs(strain), 1.0)

    def test_crack_field_pre_activation(self, small_run, tmp_path):
        paths = write_outputs(small_run, tmp_path / "out")
        lines = open(paths["crack_field"]).read().splitlines()
        assert lines[0] == CRACK_FIELD_HEADER
        assert len(lines) - 1 == small_run.jump.n_points
        for line in lines[1:]:
            fields = line.split(",")
            assert fields[-1] == "closed"
            assert float(fields[5]) == 0.0

    def test_iterations_log_rows(self, small_run, tmp_path):
        paths = write_outputs(small_run, tmp_path / "out")
        lines = open(paths["iterations"]).read().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) - 1 == small_run.total_iterations

    def test_point_status_classification(self):
        dc = 0.02287
        assert point_status(0.0, 0.0, dc) == "closed"
        assert point_status(0.1, 0.5 * dc, dc) == "opening"
        assert point_status(0.4 * dc, 0.5 * dc, dc) == "unloading"
        assert point_status(0.0, dc, dc) == "failed"

    def test_incremental_writer_matches_one_shot(self, tmp_path):
        mesh = rect_strip(2.0, 1.0, 2, 2)
        from cohadm.elasticity import Material

        mat = Material(youngs_modulus=3000.0, poisson_ratio=0.2,
                       mode="plane_stress", thickness=0.5)
        params = CohesiveParams(sigma_c=3.0, delta_c=0.02287, beta=1.0)
        sched = LoadSchedule(bc_set="right", direction="x", u_start=0.0,
                             u_end=0.001, n_steps=4,
                             fixed_sets=(("left", "x"), ("pin", "y")))
        writer = RunWriter(tmp_path / "inc", per_step_fields=True)
        record = run_quasistatic(
            mesh, mat, params, sched, AdmmConfig(),
            setup_sink=writer.bind,
            step_sink=writer.on_step,
            iteration_sink=writer.on_iteration,
        )
        writer.finalize(record)
        write_outputs(record, tmp_path / "oneshot")
        for name in ("stress_strain.csv", "crack_field.csv", "iterations.log"):
            a = (tmp_path / "inc" / name).read_text()
            b = (tmp_path / "oneshot" / name).read_text()
            assert a == b
        # one field dump per emitted row (baseline + 4 steps)
        dumps = sorted((tmp_path / "inc").glob("crack_field_step*.csv"))
        assert len(dumps) == 5
