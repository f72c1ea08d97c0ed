"""
End-to-end tests for the cqregion command line: exit codes, CSV/JSON output
with manifests, determinism and replay.
"""

import json

import pytest

from app.cqregion.cli import build_parser, main, read_manifest
from app.cqregion.constants import COMPARE_HEADER, CURVE_HEADER

FAST = ["--restarts", "2", "--max-iters", "150", "--seed", "3", "--threads", "1"]


@pytest.fixture(autouse=True)
def _isolated_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for name in ("CQREGION_THREADS", "CQREGION_LOG_LEVEL", "CQREGION_LEMMA2_DIM", "CQREGION_MAX_TENSOR_POWER", "CQREGION_MAX_DIM"):
        monkeypatch.delenv(name, raising=False)


def _channel(tmp_path, payload, name="channel.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload), encoding="utf-8")
    return str(p)


def _body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def _header(text):
    return [line for line in text.splitlines() if line.startswith("#")]


def _key_values(text):
    out = {}
    for line in text.strip().splitlines():
        k, _, v = line.partition("=")
        out[k] = v
    return out


class TestExitCodes:
    """Tests for main() exit codes"""

    def test_missing_channel_file(self, tmp_path, capsys):
        """A missing channel file exits 2"""
        rc = main(["curve", "--channel", str(tmp_path / "nope.json"), *FAST])
        assert rc == 2
        assert "channel config error" in capsys.readouterr().err

    def test_unknown_kind(self, tmp_path):
        """An unknown channel kind exits 2"""
        assert main(["curve", "--channel", _channel(tmp_path, {"kind": "amplitude_damping"}), *FAST]) == 2

    def test_not_trace_preserving(self, tmp_path):
        """A non-trace-preserving channel exits 2"""
        cfg = {"kind": "kraus", "dim": 2, "kraus": [[[0.5, 0], [0, 0], [0, 0], [0.5, 0]]]}
        assert main(["curve", "--channel", _channel(tmp_path, cfg), *FAST]) == 2

    def test_invalid_restarts(self, tmp_path):
        """--restarts 0 exits 3"""
        assert main(["curve", "--channel", _channel(tmp_path, {"kind": "identity"}), "--restarts", "0"]) == 3

    def test_lambda_below_one(self, tmp_path, capsys):
        """λ < 1 on the grid exits 3 and names the flag"""
        rc = main(["curve", "--channel", _channel(tmp_path, {"kind": "identity"}), "--lambda-grid", "0.5,2"])
        assert rc == 3
        assert "--lambda-grid" in capsys.readouterr().err

    def test_tensor_power_guard(self, tmp_path):
        """A tensor power above the guard exits 3"""
        assert main(["curve", "--channel", _channel(tmp_path, {"kind": "identity"}), "--tensor-power", "5"]) == 3

    @pytest.mark.parametrize("grid", ["0:2:3", "nan", "1,inf"])
    def test_bad_lambda_grid_is_usage(self, tmp_path, capsys, grid):
        """Malformed or non-finite grids exit 3 without a traceback"""
        rc = main(["curve", "--channel", _channel(tmp_path, {"kind": "identity"}), "--lambda-grid", grid, *FAST])
        assert rc == 3
        assert "Traceback" not in capsys.readouterr().err

    def test_negative_refine_rounds(self, tmp_path):
        """--refine-rounds -1 exits 3"""
        assert main(["curve", "--channel", _channel(tmp_path, {"kind": "identity"}), "--refine-rounds", "-1", *FAST]) == 3

    def test_unknown_suite(self):
        """An unknown suite exits 3"""
        assert main(["check", "--suite", "nonsense"]) == 3

    def test_missing_subcommand(self):
        """No subcommand exits 3"""
        assert main([]) == 3

    def test_bad_log_level(self, tmp_path):
        """An unknown log level exits 3"""
        assert main(["curve", "--channel", _channel(tmp_path, {"kind": "identity"}), "--log-level", "chatty", *FAST]) == 3

    def test_bad_env_setting(self, monkeypatch):
        """A malformed environment setting exits 2"""
        monkeypatch.setenv("CQREGION_THREADS", "many")
        assert main(["check", "--suite", "lemma2"]) == 2


class TestCurve:
    """Tests for the curve command"""

    def test_csv_with_manifest(self, tmp_path, capsys):
        """CSV body follows the manifest header"""
        ch = _channel(tmp_path, {"kind": "identity", "dim": 2})
        assert main(["curve", "--channel", ch, "--lambda-grid", "2", *FAST]) == 0
        out = capsys.readouterr().out
        header = _header(out)
        assert header[0] == "# cqregion curve"
        assert any(line.startswith("# channel=") and '"kind":"identity"' in line for line in header)
        assert header[-1].startswith("# duration_s=")
        body = _body(out)
        assert body[0] == ",".join(CURVE_HEADER)
        last = body[-1].split(",")
        assert last[0] == "holevo-endpoint"
        assert float(last[3]) == pytest.approx(float(last[1]))
        for row in body[1:]:
            r, R = float(row.split(",")[1]), float(row.split(",")[2])
            assert r + R <= 1.0 + 1e-6

    def test_deterministic(self, tmp_path):
        """Equal seeds give equal bodies"""
        ch = _channel(tmp_path, {"kind": "dephasing", "param": 0.1})
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["curve", "--channel", ch, "--lambda-grid", "1.5,3", "--out", str(a), *FAST]) == 0
        assert main(["curve", "--channel", ch, "--lambda-grid", "1.5,3", "--out", str(b), *FAST]) == 0
        assert _body(a.read_text()) == _body(b.read_text())

    def test_replay_reproduces(self, tmp_path):
        """replay reproduces the file apart from its duration"""
        ch = _channel(tmp_path, {"kind": "dephasing", "param": 0.2})
        first, again = tmp_path / "first.csv", tmp_path / "again.csv"
        assert main(["curve", "--channel", ch, "--lambda-grid", "2", "--out", str(first), *FAST]) == 0
        assert main(["replay", str(first), "--out", str(again)]) == 0
        a, b = first.read_text().splitlines(), again.read_text().splitlines()
        assert [l for l in a if not l.startswith("# duration_s=")] == [l for l in b if not l.startswith("# duration_s=")]

    def test_manifest_round_trip(self, tmp_path):
        """read_manifest() returns the run's settings"""
        ch = _channel(tmp_path, {"kind": "identity"})
        out = tmp_path / "c.csv"
        main(["curve", "--channel", ch, "--lambda-grid", "2", "--out", str(out), *FAST])
        manifest = read_manifest(out)
        assert manifest["command"] == "curve"
        assert manifest["channel"] == {"kind": "identity"}
        assert manifest["args"]["restarts"] == 2
        assert manifest["config"]["lambda_grid"] == [2.0]
        assert manifest["args"]["refine_rounds"] == 3
        assert manifest["config"]["refine_rounds"] == 3


class TestCompare:
    """Tests for the compare command"""

    def test_identity_rows(self, tmp_path, capsys):
        """Identity rows: 41 points with delta near zero"""
        ch = _channel(tmp_path, {"kind": "identity"})
        assert main(["compare", "--channel", ch, "--lambda-grid", "2", *FAST]) == 0
        body = _body(capsys.readouterr().out)
        assert body[0] == ",".join(COMPARE_HEADER)
        rows = [list(map(float, row.split(","))) for row in body[1:]]
        assert len(rows) == 41
        assert rows[0][0] == 0.0
        for r, r_opt, r_ts, delta in rows:
            assert delta == pytest.approx(r_opt - r_ts, abs=1e-9)
            assert abs(delta) <= 1e-2

    def _deltas(self, tmp_path, capsys, p, extra):
        ch = _channel(tmp_path, {"kind": "depolarizing", "param": p})
        assert main(["compare", "--channel", ch, "--lambda-grid", "1,2,5", *extra]) == 0
        body = _body(capsys.readouterr().out)
        return [float(row.split(",")[3]) for row in body[1:]]

    def test_depolarizing_near_time_sharing(self, tmp_path, capsys):
        """depolarizing(0.06) stays within 1e-3 of time-sharing"""
        deltas = self._deltas(tmp_path, capsys, 0.06, FAST)
        assert max(deltas) <= 1e-3

    def test_depolarizing_small_p_above_time_sharing(self, tmp_path, capsys):
        """depolarizing(0.03) rises above time-sharing"""
        extra = ["--restarts", "6", "--max-iters", "800", "--seed", "5", "--threads", "1", "--refine-rounds", "4"]
        deltas = self._deltas(tmp_path, capsys, 0.03, extra)
        assert max(deltas) > 2e-4


class TestCapacities:
    """Tests for the capacities command"""

    def test_dephasing(self, tmp_path, capsys):
        """Key-value summary and JSON report for dephasing"""
        ch = _channel(tmp_path, {"kind": "dephasing", "param": 0.1})
        report_path = tmp_path / "report.json"
        assert main(["capacities", "--channel", ch, "--out", str(report_path), *FAST]) == 0
        values = _key_values(capsys.readouterr().out)
        assert list(values)[:6] == ["C1", "Q1", "degradability_residual", "degradable", "ea_r", "ea_R"]
        assert float(values["C1"]) == pytest.approx(1.0, abs=1e-2)
        assert float(values["Q1"]) == pytest.approx(0.531, abs=1e-2)
        assert values["degradable"] == "true"
        assert float(values["ea_r"]) + float(values["ea_R"]) == pytest.approx(float(values["Q1"]), abs=1e-8)

        report = json.loads(report_path.read_text())
        assert report["schema"] == 1
        assert report["manifest"]["command"] == "capacities"
        assert report["degradability"]["method"] == "dephasing-identity"
        assert len(report["ea_point"]) == 2
        member = report["ensembles"]["q1"][0]
        assert 0.0 <= member["p"] <= 1.0
        assert len(member["rho"]) == 2 and len(member["rho"][0][0]) == 2

    def test_replay_json(self, tmp_path):
        """replay reproduces the JSON report"""
        ch = _channel(tmp_path, {"kind": "dephasing", "param": 0.1})
        first, again = tmp_path / "r1.json", tmp_path / "r2.json"
        assert main(["capacities", "--channel", ch, "--out", str(first), *FAST]) == 0
        assert main(["replay", str(first), "--out", str(again)]) == 0
        a, b = json.loads(first.read_text()), json.loads(again.read_text())
        a["manifest"].pop("duration_s")
        b["manifest"].pop("duration_s")
        assert a == b

    def test_flat_region_report(self, tmp_path, capsys):
        """The identity reports no flat region"""
        ch = _channel(tmp_path, {"kind": "identity"})
        assert main(["capacities", "--channel", ch, "--probe-flat-region", *FAST]) == 0
        values = _key_values(capsys.readouterr().out)
        assert values["flat_region_found"] == "false"


class TestCheck:
    """Tests for the check command"""

    def test_lemma2_passes(self, capsys):
        """The lemma2 suite passes and prints a summary"""
        assert main(["check", "--suite", "lemma2", "--seed", "1"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[-1].startswith("suite=lemma2 ")
        assert all(line.startswith("PASS") for line in out[:-1])

    def test_core_passes(self, capsys):
        """The core suite passes"""
        assert main(["check", "--suite", "core", "--seed", "0", "--restarts", "2"]) == 0
        assert "failed=0" in capsys.readouterr().out

    def test_concavity_passes(self, capsys):
        """The concavity suite passes"""
        assert main(["check", "--suite", "concavity", "--seed", "2"]) == 0
        assert "failed=0" in capsys.readouterr().out

    def test_replay_rejects_check_output(self, tmp_path):
        """check output cannot be replayed"""
        bogus = tmp_path / "x.csv"
        bogus.write_text("# cqregion check\n# command=check\n# args={}\nPASS\n")
        assert main(["replay", str(bogus), "--out", str(tmp_path / "y.csv")]) == 3


class TestParser:
    """Tests for build_parser()"""

    def test_defaults(self):
        """Defaults for the curve command"""
        args = build_parser().parse_args(["curve", "--channel", "c.json"])
        assert args.lambda_grid == "default"
        assert args.restarts == 32
        assert args.threads is None
