"""Tests for the golden regression corpus and its verification harness."""

import json
import shutil
from pathlib import Path

import pytest

import qfisher.goldens as goldens_mod
from qfisher.cli import main
from qfisher.goldens import verify_goldens


def test_fresh_checkout_goldens_pass():
    report = verify_goldens()
    assert report.passed, report.summary()
    assert len(report.checked) >= 4


def test_cli_verify_goldens_exit_zero(capsys):
    assert main(["verify-goldens"]) == 0
    out = capsys.readouterr().out
    assert "goldens passed" in out


def test_manifest_provenance_tags():
    manifest = json.loads(
        (Path(goldens_mod.__file__).parent / "goldens" / "manifest.json").read_text()
    )
    allowed = {"closed-form", "exact", "oracle"}
    for entry in manifest["goldens"]:
        for column, spec in entry["tolerances"].items():
            assert spec["provenance"] in allowed, (entry["name"], column)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_degraded_integrator_flagged(tmp_path, monkeypatch):
    """Coarsening the integrator by 10x must trip the golden tolerances."""
    import hashlib

    src = Path(goldens_mod.__file__).parent / "goldens"
    work = tmp_path / "goldens"
    shutil.copytree(src, work)
    for cfg_path in work.glob("*.cfg"):
        lines = []
        for line in cfg_path.read_text().splitlines():
            if line.strip().startswith("steps"):
                steps = int(line.split("=")[1])
                lines.append(f"steps = {max(10, steps // 10)}")
            else:
                lines.append(line)
        cfg_path.write_text("\n".join(lines) + "\n")
    manifest = json.loads((work / "manifest.json").read_text())
    for entry in manifest["goldens"]:
        text = (work / entry["config"]).read_text()
        entry["config_sha256"] = hashlib.sha256(text.encode()).hexdigest()
    (work / "manifest.json").write_text(json.dumps(manifest))
    monkeypatch.setattr(goldens_mod, "_golden_dir", lambda: work)
    report = verify_goldens()
    assert not report.passed
    failed = {f.golden for f in report.failures}
    assert "no_control_sweep" in failed or "frame_invariance" in failed


def test_b2t4_golden_matches_analytic_column():
    src = Path(goldens_mod.__file__).parent / "goldens"
    text = (src / "upper_bound_table.csv").read_text()
    rows = [
        line.split(",")
        for line in text.splitlines()
        if line and not line.startswith("#") and not line.startswith("B,")
    ]
    for row in rows:
        b_field, t_end, bound, closed = (float(x) for x in row[:4])
        assert abs(closed - b_field * b_field * t_end**4) <= 1e-9
        assert abs(bound - closed) <= 1e-6 * closed


def test_tampered_config_detected(tmp_path, monkeypatch):
    from qfisher.errors import ConfigError

    src = Path(goldens_mod.__file__).parent / "goldens"
    work = tmp_path / "goldens"
    shutil.copytree(src, work)
    cfg = work / "upper_bound_table.cfg"
    cfg.write_text(cfg.read_text() + "# silent edit\n")
    monkeypatch.setattr(goldens_mod, "_golden_dir", lambda: work)
    with pytest.raises(ConfigError, match="manifest hash"):
        verify_goldens()


def test_regenerate_writes_identical_tables(tmp_path, monkeypatch):
    src = Path(goldens_mod.__file__).parent / "goldens"
    work = tmp_path / "goldens"
    shutil.copytree(src, work)
    monkeypatch.setattr(goldens_mod, "_golden_dir", lambda: work)
    before = {p.name: p.read_text() for p in work.glob("*.csv")}
    goldens_mod.regenerate_goldens()
    after = {p.name: p.read_text() for p in work.glob("*.csv")}
    assert before == after
