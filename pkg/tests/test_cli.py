import numpy as np
import pytest

from resetwalk import load_edge_list, transition_matrix, watts_strogatz
from resetwalk.cli import main, parse_grid, ConfigError


def run(*argv):
    return main(list(argv))


def body_lines(path):
    """CSV body with the provenance block stripped."""
    with open(path) as fh:
        return [line for line in fh.read().splitlines() if not line.startswith("#")]


class TestGraphCommand:
    def test_edge_list_round_trip(self, tmp_path):
        out = tmp_path / "graph.edges"
        assert run("graph", "--graph", "ws:30,2,0.4", "--seed", "9",
                   "--emit-edgelist", "--out", str(out)) == 0
        reloaded = load_edge_list(out.read_text())
        direct = watts_strogatz(30, 2, 0.4, seed=9)
        assert np.array_equal(reloaded.adjacency, direct.adjacency)

    def test_edgelist_input_kind(self, tmp_path):
        first = tmp_path / "a.edges"
        run("graph", "--graph", "ba:25,3", "--seed", "4", "--emit-edgelist",
            "--out", str(first))
        second = tmp_path / "b.edges"
        assert run("graph", "--graph", f"edgelist:{first}", "--emit-edgelist",
                   "--out", str(second)) == 0
        assert body_lines(first) == body_lines(second)

    def test_degree_summary(self, tmp_path):
        out = tmp_path / "deg.csv"
        assert run("graph", "--graph", "cc:5", "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "node,degree"
        assert lines[1] == "0,4"


class TestSweeps:
    def test_kemeny_sweep_closed_form(self, tmp_path):
        out = tmp_path / "kem.csv"
        assert run("kemeny-sweep", "--graph", "cc:100", "--pgrid", "0.1:0.9:9",
                   "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "p,kemeny,efficiency"
        for row in lines[1:]:
            p, k, eff = map(float, row.split(","))
            assert k == pytest.approx(99**2 / (100 - p), abs=1e-9)

    def test_mfpt_sweep_schema(self, tmp_path):
        out = tmp_path / "mfpt.csv"
        assert run("mfpt-sweep", "--graph", "ws:40,2,0.5", "--seed", "3",
                   "--reloc", "uniform:1.0", "--pgrid", "0.2:0.8:4",
                   "--pairs", "0:7,3:12", "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "p,kemeny,efficiency,mfpt_0_7,mfpt_3_12"
        assert len(lines) == 5

    def test_mfht_sweep_schema(self, tmp_path):
        out = tmp_path / "mfht.csv"
        assert run("mfht-sweep", "--graph", "ws:25,2,0.5", "--seed", "8",
                   "--reloc", "uniform:1.0", "--targets", "set:3,9",
                   "--agrid", "0.25:0.75:3", "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "alpha,start,mfht,global_mfht,regime"
        assert len(lines) == 1 + 3 * 25
        assert lines[1].endswith("ergodic-sufficient")

    def test_byte_identical_bodies(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ("mfpt-sweep", "--graph", "ba:30,3", "--seed", "5", "--reloc",
                "degree:0.5", "--pgrid", "0.1:0.9:5")
        run(*args, "--out", str(a))
        run(*args, "--out", str(b))
        assert body_lines(a) == body_lines(b)


class TestNessCommand:
    def test_geometric_exit_zero(self, tmp_path):
        out = tmp_path / "ness.csv"
        assert run("ness", "--graph", "cc:6", "--law", "geom:0.5", "--reloc",
                   "uniform:1.0", "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "j,p_infty,ness_exists"
        assert all(row.endswith(",1") for row in lines[1:])

    def test_no_ness_regime_exit_three(self, tmp_path):
        out = tmp_path / "ness.csv"
        assert run("ness", "--graph", "cc:6", "--law", "sibuya:0.5", "--reloc",
                   "node:2", "--out", str(out)) == 3
        lines = body_lines(out)
        assert all(row.endswith(",0") for row in lines[1:])
        values = [float(row.split(",")[1]) for row in lines[1:]]
        assert values == pytest.approx([1 / 6] * 6)


class TestSurvivalCommand:
    def test_schema_and_summary(self, tmp_path):
        out = tmp_path / "survival.csv"
        summary = tmp_path / "summary.csv"
        assert run("survival", "--graph", "ws:20,2,0.5", "--seed", "2",
                   "--law", "geom:0.3", "--reloc", "uniform:1.0",
                   "--targets", "frac:0.2", "--horizon", "40",
                   "--summary-out", str(summary), "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "i,t,survival,fht_pdf"
        assert len(lines) == 1 + 20 * 41
        summary_lines = body_lines(summary)
        assert summary_lines[0] == "i,mfht,hitting_prob,regime"
        assert len(summary_lines) == 21

    def test_realized_targets_in_provenance(self, tmp_path):
        out = tmp_path / "survival.csv"
        run("survival", "--graph", "ws:20,2,0.5", "--seed", "2",
            "--law", "geom:0.3", "--reloc", "uniform:1.0",
            "--targets", "frac:0.2", "--horizon", "10", "--out", str(out))
        header = [l for l in out.read_text().splitlines() if l.startswith("#")]
        assert any("t_nodes" in line for line in header)
        assert any("r_nodes" in line for line in header)


class TestSimulateCommand:
    def test_occupation_csv(self, tmp_path):
        out = tmp_path / "occ.csv"
        assert run("simulate", "--graph", "cc:4", "--law", "geom:0.4",
                   "--reloc", "uniform:1.0", "--trials", "2000",
                   "--horizon", "30", "--at", "30", "--statistic", "occupation",
                   "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "node,estimate,standard_error"
        total = sum(float(r.split(",")[1]) for r in lines[1:])
        assert total == pytest.approx(1.0)

    def test_trajectory_dump(self, tmp_path):
        out = tmp_path / "est.csv"
        dump = tmp_path / "dump.csv"
        assert run("simulate", "--graph", "cc:4", "--law", "period:1",
                   "--reloc", "node:1", "--trials", "10", "--horizon", "5",
                   "--statistic", "occupation", "--dump", str(dump),
                   "--dump-trials", "2", "--out", str(out)) == 0
        lines = body_lines(dump)
        assert lines[0] == "trial,t,node,event"
        assert lines[1] == "0,1,1,reset"

    def test_mfht_statistic(self, tmp_path):
        out = tmp_path / "mfht.csv"
        assert run("simulate", "--graph", "cc:3", "--law", "geom:0.5",
                   "--reloc", "uniform:1.0", "--targets", "set:2",
                   "--trials", "4000", "--horizon", "2000",
                   "--statistic", "mfht", "--out", str(out)) == 0
        lines = body_lines(out)
        assert lines[0] == "start,estimate,standard_error,censored,trials"


class TestConfigHandling:
    def test_config_file_with_flag_override(self, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            "graph = cc:8\nlaw = geom:0.5\nreloc = uniform:1.0\npgrid = 0.2:0.8:3\n"
        )
        out = tmp_path / "kem.csv"
        assert run("kemeny-sweep", "--config", str(config), "--pgrid",
                   "0.1:0.9:5", "--out", str(out)) == 0
        assert len(body_lines(out)) == 6  # flag grid wins over the file's

    def test_missing_required_flags_exit_two(self, tmp_path):
        assert run("ness", "--graph", "cc:5", "--out", str(tmp_path / "x.csv")) == 2
        assert run("kemeny-sweep", "--graph", "cc:5") == 2

    def test_bad_specs_exit_two(self, tmp_path):
        out = str(tmp_path / "x.csv")
        assert run("kemeny-sweep", "--graph", "nope:5", "--out", out) == 2
        assert run("ness", "--graph", "cc:5", "--law", "geom:2.0",
                   "--reloc", "uniform:1.0", "--out", out) == 2
        assert run("kemeny-sweep", "--graph", "cc:5", "--pgrid", "0:1:5",
                   "--out", out) == 2

    def test_grid_parsing(self):
        grid = parse_grid("0.1:0.9:5")
        assert grid.tolist() == pytest.approx([0.1, 0.3, 0.5, 0.7, 0.9])
        with pytest.raises(ConfigError):
            parse_grid("0.5:0.1:3")
        with pytest.raises(ConfigError):
            parse_grid("abc")
