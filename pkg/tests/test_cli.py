"""Command-line surface.

Claims:
    - grow/verify/couple/oracle/fit/experiment subcommands work end to end
    - oracle prints exact fractions (7/3 for the friend diameter at n=4)
    - usage problems exit 1, invariant violations exit 2, I/O problems 3
"""

import pytest

from rftlab import FrozenTree
from rftlab.cli import main


class TestGrowVerify:
    def test_grow_writes_loadable_tree(self, tmp_path, capsys):
        out = tmp_path / "tree.txt"
        assert main(["grow", "--model", "friend", "--n", "500", "--seed", "3",
                     "--out", str(out)]) == 0
        tree = FrozenTree.load(out)
        assert tree.n == 500

    def test_verify_ok(self, tmp_path, capsys):
        out = tmp_path / "tree.txt"
        main(["grow", "--model", "pa", "--n", "300", "--seed", "1", "--out", str(out)])
        assert main(["verify", str(out)]) == 0
        assert "0 violations" in capsys.readouterr().out

    def test_verify_missing_file_is_io_error(self, tmp_path):
        assert main(["verify", str(tmp_path / "nope.txt")]) == 3


class TestCouple:
    def test_couple_ok(self, tmp_path, capsys):
        assert main(["couple", "--n", "2000", "--pairs", "5000", "--seed", "5",
                     "--out", str(tmp_path / "pair")]) == 0
        out = capsys.readouterr().out
        assert "distance bound ok" in out and "leaf proximity ok" in out
        assert (tmp_path / "pair" / "manifest.json").exists()

    def test_violation_exit_code(self, monkeypatch):
        import rftlab.cli as cli
        from rftlab.errors import CouplingInvariantError

        def boom(*a, **k):
            raise CouplingInvariantError("forced for the exit-code test")

        monkeypatch.setattr(cli.coupling, "verify_distance_bound", boom)
        assert main(["couple", "--n", "100", "--pairs", "10", "--seed", "0"]) == 2


class TestOracle:
    def test_prints_exact_fraction(self, capsys):
        assert main(["oracle", "--model", "friend", "--n", "4", "--stat", "diam"]) == 0
        assert "7/3" in capsys.readouterr().out

    def test_with_monte_carlo(self, capsys):
        assert main(["oracle", "--model", "urrt", "--n", "4", "--stat", "x1",
                     "--mc-replicas", "2000", "--seed", "9"]) == 0
        assert "monte carlo" in capsys.readouterr().out

    def test_unknown_stat_is_usage_error(self):
        assert main(["oracle", "--model", "friend", "--n", "4",
                     "--stat", "entropy"]) == 1

    def test_oversized_n_is_usage_error(self):
        assert main(["oracle", "--model", "friend", "--n", "12",
                     "--stat", "diam"]) == 1


class TestExperimentAndFit:
    def test_experiment_and_fit(self, tmp_path, capsys):
        plan = tmp_path / "plan.cfg"
        plan.write_text(
            "model = friend\nk = 1\nn_target = 2000\nschedule = geometric\n"
            "n0 = 250\nratio = 2\nreplicas = 2\nseed = 11\n"
            f"out = {tmp_path / 'results'}\n"
        )
        assert main(["experiment", str(plan)]) == 0
        csvs = sorted(str(p) for p in (tmp_path / "results").glob("snapshots_r*.csv"))
        assert len(csvs) == 2
        assert main(["fit", *csvs, "--column", "x_geq_2"]) == 0
        out = capsys.readouterr().out
        assert "slope=" in out

    def test_malformed_plan_exits_one(self, tmp_path, capsys):
        plan = tmp_path / "plan.cfg"
        plan.write_text("model = friend\nwat\n")
        assert main(["experiment", str(plan)]) == 1
        assert "plan.cfg:2" in capsys.readouterr().err


class TestUsage:
    def test_no_subcommand(self, capsys):
        assert main([]) == 1

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_bad_flag_value(self):
        assert main(["grow", "--model", "friend", "--n", "abc", "--out", "x"]) == 1

    def test_bad_model_parameter(self):
        assert main(["grow", "--model", "redirect", "--n", "10", "--out", "x"]) == 1
        assert main(["grow", "--model", "friend", "--k", "0", "--n", "10",
                     "--out", "x"]) == 1
