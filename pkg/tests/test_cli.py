import json

import pytest

from opsim.cli import main


def read_all(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_presets_lists_all(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("fig7-left", "fig7-right", "fig8", "fig9"):
        assert name in out


def test_scan_preset_writes_bundle(tmp_path):
    out = tmp_path / "d"
    assert main(["scan", "--preset", "fig7-left", "--seed", "42", "--out", str(out), "--replications", "2"]) == 0
    assert {"runs.csv", "summary.csv", "fig7-left.svg", "manifest.json"} <= set(read_all(out))


def test_scan_fig9_twice_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["scan", "--preset", "fig9", "--seed", "42", "--out", str(a), "--replications", "5"]) == 0
    assert main(["scan", "--preset", "fig9", "--seed", "42", "--out", str(b), "--replications", "5"]) == 0
    assert read_all(a) == read_all(b)


def test_missing_config_is_io_error(capsys):
    assert main(["run", "--config", "missing.cfg"]) == 2
    assert "missing.cfg" in capsys.readouterr().err


def test_invalid_config_is_validation_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("operator.fa = -1\n")
    assert main(["run", "--config", str(cfg)]) == 1
    assert "operator.fa" in capsys.readouterr().err


def test_bad_override_and_usage_errors():
    assert main(["run", "--fa", "-2"]) == 1
    assert main(["run", "--nd", "x"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["scan", "--preset", "fig99"])
    assert exc.value.code == 1


def test_run_prints_table_and_log(tmp_path, capsys):
    log = tmp_path / "log.json"
    args = ["run", "--seed", "3", "--adjust-error", "--cutoff-time", "--log", str(log)]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "pq1000" in out and "pq10" in out and "total ticks" in out
    data = json.loads(log.read_text())
    assert data["seed"] == 3 and len(data["records"]) == 5


def test_seed_env_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("OPSIM_SEED", "77")
    main(["run", "--adjust-error", "--cutoff-time"])
    assert "seed=77" in capsys.readouterr().out
    main(["run", "--adjust-error", "--cutoff-time", "--seed", "5"])
    assert "seed=5" in capsys.readouterr().out


def test_config_file_feeds_scan(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("operator.fa = 0.2\nmanager.adjust_error = true\nmanager.cutoff_time = true\nscan.replications = 2\n")
    out = tmp_path / "o"
    assert main(["scan", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "runs.csv").read_text().splitlines()
    assert len(rows) == 6 and rows[1].startswith("0.2,1,true,true,")


def test_override_narrows_preset_axis(tmp_path):
    out = tmp_path / "o"
    assert main(["scan", "--preset", "fig9", "--nd", "5", "--replications", "2", "--out", str(out)]) == 0
    rows = (out / "runs.csv").read_text().splitlines()[1:]
    assert len(rows) == 10 and all(r.split(",")[1] == "5" for r in rows)


def test_plot_rerenders_from_csv(tmp_path):
    out = tmp_path / "o"
    main(["scan", "--preset", "fig9", "--replications", "2", "--out", str(out)])
    again = tmp_path / "p"
    assert main(["plot", str(out / "runs.csv"), "--preset", "fig9", "--out", str(again)]) == 0
    for name in ("fig9-left.svg", "fig9-right.svg"):
        assert (again / name).read_bytes() == (out / name).read_bytes()
    assert main(["plot", str(out / "runs.csv"), "--adjust-error", "--out", str(again)]) == 1  # no cutoff=false rows


def test_from_manifest_reproduces(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["scan", "--preset", "fig7-right", "--seed", "8", "--replications", "2", "--out", str(a)])
    assert main(["scan", "--from-manifest", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert read_all(a) == read_all(b)
