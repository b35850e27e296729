"""CLI behaviour: transcript goldens against the published interaction
figures (modulo whitespace and name casing), exit codes, report files."""

import io
import subprocess
import sys

from csptree.cli import main

PATROL_FIG_TRANSCRIPT = """\
Starting ITree animation...
Events: (1) Reset_PatrolMod Din; (2) Cal_PatrolMod (Din,-3); (3) Cal_PatrolMod (Din,-2); (4) Cal_PatrolMod (Din,-1); (5) Cal_PatrolMod (Din,0); (6) Cal_PatrolMod (Din,1); (7) Cal_PatrolMod (Din,2); (8) Cal_PatrolMod (Din,3);
[Choose: 1-8]: Cal_PatrolMod (Din,-3)
Events: (1) Right_PatrolMod (Dout,-2);
[Choose: 1-1]: Right_PatrolMod (Dout,-2)
Events: (1) Right_PatrolMod (Dout,-2);
[Choose: 1-1]: Right_PatrolMod (Dout,-2)
Events: (1) Right_PatrolMod (Dout,-1);
[Choose: 1-1]: Right_PatrolMod (Dout,-1)
Events: (1) Right_PatrolMod (Dout,-1);
[Choose: 1-1]: Right_PatrolMod (Dout,-1)
Events: (1) Right_PatrolMod (Dout,0);
[Choose: 1-1]: Right_PatrolMod (Dout,0)
Events: (1) Right_PatrolMod (Dout,0); (2) Cal_PatrolMod (Din,-3); (3) Cal_PatrolMod (Din,-2); (4) Cal_PatrolMod (Din,-1); (5) Cal_PatrolMod (Din,0); (6) Cal_PatrolMod (Din,1); (7) Cal_PatrolMod (Din,2); (8) Cal_PatrolMod (Din,3);
[Choose: 1-8]: Right_PatrolMod (Dout,0)
Events: (1) Reset_PatrolMod Din; (2) Cal_PatrolMod (Din,-3); (3) Cal_PatrolMod (Din,-2); (4) Cal_PatrolMod (Din,-1); (5) Cal_PatrolMod (Din,0); (6) Cal_PatrolMod (Din,1); (7) Cal_PatrolMod (Din,2); (8) Cal_PatrolMod (Din,3);
""" + "[Choose: 1-8]: \n"


def run_cli(args, stdin_text=""):
    proc = subprocess.run(
        [sys.executable, "-m", "csptree.cli", *args],
        input=stdin_text,
        capture_output=True,
        text=True,
        timeout=120,
    )
    return proc


class TestAnimate:
    def test_patrol_transcript_golden(self):
        proc = run_cli(["animate", "--model", "patrol"], "2\n1\n1\n1\n1\n1\n1\n")
        assert proc.returncode == 0
        assert proc.stdout == PATROL_FIG_TRANSCRIPT

    def test_chemical_ends_terminated(self):
        proc = run_cli(["animate", "--model", "chemical"], "1\n9\n1\n1\n")
        assert proc.returncode == 0
        lines = proc.stdout.splitlines()
        assert lines[0] == "Starting ITree animation..."
        assert "(1) RandomWalkCall ();" in lines[1]
        assert "[Choose: 1-22]: RandomWalkCall ()" in proc.stdout
        assert "[Choose: 1-1]: MoveCall (0,Chemical_Angle_Front)" in proc.stdout
        assert "[Choose: 1-1]: Flag Dout" in proc.stdout
        assert lines[-1] == "Terminated: ()"

    def test_missing_model_nonzero(self):
        proc = run_cli(["animate", "--model", "missing-model"])
        assert proc.returncode != 0
        assert "missing-model" in proc.stderr

    def test_config_override_flag(self):
        proc = run_cli(
            ["animate", "--model", "patrol", "--config", "min_int=-2,max_int=2"], ""
        )
        assert proc.returncode == 0
        assert "[Choose: 1-6]" in proc.stdout
        assert "Cal_PatrolMod (Din,-3)" not in proc.stdout

    def test_invalid_choice_reprompts(self):
        proc = run_cli(["animate", "--model", "patrol"], "0\nbogus\n")
        assert proc.returncode == 0
        assert proc.stdout.count("invalid choice") == 2


class TestCheck:
    def test_scenario1_accepted(self):
        proc = run_cli(
            ["check", "--model", "patrol", "--scenario", "Scenario1", "--max-steps", "42"]
        )
        assert proc.returncode == 0
        assert "accepted: 42 steps" in proc.stdout

    def test_reset_scenario_refused(self):
        proc = run_cli(
            ["check", "--model", "patrol", "--scenario", "reset-refusal", "--max-steps", "6"]
        )
        assert proc.returncode == 1
        assert "refused at step 3: Reset_PatrolMod Din" in proc.stdout

    def test_empty_scenario_accepted(self, tmp_path):
        p = tmp_path / "empty.scn"
        p.write_text("name: empty\n")
        proc = run_cli(
            ["check", "--model", "patrol", "--scenario", str(p), "--max-steps", "0"]
        )
        assert proc.returncode == 0


class TestReplay:
    def test_report_files_written(self, tmp_path):
        proc = run_cli(
            [
                "replay",
                "--model",
                "chemical",
                "--scenario",
                "SCE-ACD-2",
                "--max-steps",
                "6",
                "--out-dir",
                str(tmp_path),
            ]
        )
        assert proc.returncode == 0, proc.stderr
        csv_file = tmp_path / "SCE-ACD-2.csv"
        png_file = tmp_path / "SCE-ACD-2.png"
        assert csv_file.exists() and png_file.exists()
        rows = csv_file.read_text().splitlines()
        assert rows[0] == "step,channel,payload,accepted,menu_size"
        assert len(rows) == 7
        assert rows[1].startswith("0,RandomWalkCall")
        assert png_file.stat().st_size > 1000

    def test_refusal_reported(self):
        proc = run_cli(
            ["replay", "--model", "patrol", "--scenario", "reset-refusal", "--max-steps", "6"]
        )
        assert proc.returncode == 1
        assert "outcome  : refused" in proc.stdout
        assert "Reset_PatrolMod Din" in proc.stdout


class TestLaws:
    def test_default_run_green(self):
        proc = run_cli(["laws", "--cases", "60", "--seed", "7"])
        assert proc.returncode == 0
        assert "all laws hold" in proc.stdout

    def test_broken_merge_fails(self):
        proc = run_cli(["laws", "--cases", "30", "--merge", "broken"])
        assert proc.returncode == 1
        assert "failures" in proc.stdout

    def test_zero_cases_usage_error(self):
        proc = run_cli(["laws", "--cases", "0"])
        assert proc.returncode == 2


def test_main_callable_directly(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(""))
    rc = main(["animate", "--model", "patrol"])
    out = capsys.readouterr().out
    assert rc == 0 and out.startswith("Starting ITree animation...")
