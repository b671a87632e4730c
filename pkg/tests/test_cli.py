import pytest

import radm.cli as cli
from radm.errors import BlowUpError
from radm.output import output_lock, read_diag_csv, read_snapshot


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def small_cfg(tmp_path):
    return write(tmp_path / "run.cfg", "grid_n=16\nt_end=0.02\ndt=5e-3\nsample_every=2\n")


def test_run_writes_outputs(tmp_path, small_cfg, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", str(small_cfg), "--out-dir", str(out)]) == 0
    recs = read_diag_csv(out / "diagnostics.csv")
    assert [r.t for r in recs] == pytest.approx([0.0, 0.01, 0.02])
    assert read_snapshot(out / "final.snap").header.t == pytest.approx(0.02)
    assert (out / "manifest.json").exists()
    # rerun from the manifest reproduces the diagnostics bytes
    out2 = tmp_path / "out2"
    assert cli.main(["run", str(out / "manifest.json"), "--out-dir", str(out2)]) == 0
    assert (out / "diagnostics.csv").read_bytes() == (out2 / "diagnostics.csv").read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    bad = write(tmp_path / "bad.cfg", "theta=1.5\n")
    assert cli.main(["run", str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_blow_up_exit_code(tmp_path, small_cfg, monkeypatch):
    def explode(*args, **kwargs):
        raise BlowUpError(0.01, 2)

    monkeypatch.setattr(cli, "simulate", explode)
    out = tmp_path / "out"
    assert cli.main(["run", str(small_cfg), "--out-dir", str(out)]) == 3
    assert (out / "diagnostics.csv").exists()


def test_locked_out_dir(tmp_path, small_cfg):
    out = tmp_path / "busy"
    with output_lock(out):
        assert cli.main(["run", str(small_cfg), "--out-dir", str(out)]) == 1


def test_audit(capsys):
    assert cli.main(["audit", "--grid-n", "16", "--n-max", "4"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "PASS symbol_audit"


def test_experiment_pass_and_fail(tmp_path, capsys):
    ok = write(tmp_path / "a.exp", f"kind=symbol_audit\ngrid_n=16\nsweep=0,1,2\noutput={tmp_path / 'r' / 'a.csv'}\n")
    assert cli.main(["experiment", str(ok)]) == 0
    assert (tmp_path / "r" / "a.csv").exists()
    # the Taylor–Green error sits at round-off, so no order can be observed
    tg = write(tmp_path / "tg.exp", "kind=taylor_green_verify\ngrid_n=16\nmodel_mode=plain_rotational_nse\n"
               "nu=0.01\nt_end=0.05\ndt=1e-2\n")
    assert cli.main(["experiment", str(tg), "--output", str(tmp_path / "r" / "tg.csv")]) == 4
    assert "FAIL taylor_green_verify.order" in capsys.readouterr().out


def test_snapshot_dump(tmp_path, small_cfg, capsys):
    out = tmp_path / "out"
    cli.main(["run", str(small_cfg), "--out-dir", str(out)])
    capsys.readouterr()
    assert cli.main(["snapshot-dump", str(out / "final.snap"), "--limit", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n_per_axis 16" and lines[-1] == "..."


def test_snapshot_dump_rejects_garbage(tmp_path):
    junk = tmp_path / "junk.snap"
    junk.write_bytes(b"not a snapshot at all, clearly wrong size.........")
    assert cli.main(["snapshot-dump", str(junk)]) == 2
