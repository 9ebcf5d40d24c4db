"""Golden regression corpus: small scenario configs shipped with the package
together with their expected result tables and per-column tolerances.

``verify_goldens`` re-runs every golden scenario and diffs the fresh table
against the stored one within the manifest tolerances. Goldens are rewritten
only by the explicit ``--regenerate`` flag, never implicitly.

Each manifest entry tags every checked column with the provenance of its
expected values: "closed-form" (value fixed by a known formula), "exact"
(value forced by construction, e.g. validation rows), or "oracle" (value
frozen from an independently cross-checked numerical computation).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .config import parse_config_text
from .errors import ConfigError
from .scenarios import execute_scenario, render_csv


def _golden_dir():
    return resources.files("qfisher") / "goldens"


def _parse_table(text: str) -> tuple[list[str], list[dict[str, str]]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    columns = lines[0].split(",")
    rows = [dict(zip(columns, ln.split(","))) for ln in lines[1:]]
    return columns, rows


@dataclass(frozen=True)
class GoldenFailure:
    golden: str
    row: int
    column: str
    expected: float
    actual: float
    tolerance: float


@dataclass(frozen=True)
class GoldenReport:
    checked: tuple[str, ...]
    failures: tuple[GoldenFailure, ...]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = []
        failed_names = {f.golden for f in self.failures}
        for name in self.checked:
            status = "FAIL" if name in failed_names else "ok"
            lines.append(f"golden {name}: {status}")
        for f in self.failures:
            lines.append(
                f"  {f.golden} row {f.row} column {f.column}: expected "
                f"{f.expected!r}, got {f.actual!r} (tol {f.tolerance})"
            )
        lines.append(
            f"{len(self.checked) - len(failed_names)}/{len(self.checked)} goldens passed"
        )
        return "\n".join(lines)


def _load_manifest() -> dict:
    manifest_text = (_golden_dir() / "manifest.json").read_text(encoding="utf-8")
    return json.loads(manifest_text)


def _run_golden(entry: dict) -> str:
    cfg_text = (_golden_dir() / entry["config"]).read_text(encoding="utf-8")
    digest = hashlib.sha256(cfg_text.encode("utf-8")).hexdigest()
    if entry.get("config_sha256") not in (None, digest):
        raise ConfigError(
            f"golden config {entry['config']} does not match its manifest hash; "
            "regenerate the goldens explicitly if the change is intended"
        )
    cfg = parse_config_text(cfg_text, source=entry["config"])
    columns, rows, comments, _ = execute_scenario(cfg)
    return render_csv(columns, rows, comments)


def verify_goldens() -> GoldenReport:
    """Re-run every golden scenario and diff against the stored tables."""
    manifest = _load_manifest()
    failures: list[GoldenFailure] = []
    checked: list[str] = []
    for entry in manifest["goldens"]:
        name = entry["name"]
        checked.append(name)
        expected_text = (_golden_dir() / entry["expected"]).read_text(encoding="utf-8")
        actual_text = _run_golden(entry)
        exp_cols, exp_rows = _parse_table(expected_text)
        act_cols, act_rows = _parse_table(actual_text)
        if exp_cols != act_cols or len(exp_rows) != len(act_rows):
            failures.append(
                GoldenFailure(
                    golden=name, row=-1, column="<shape>", expected=len(exp_rows),
                    actual=len(act_rows), tolerance=0.0,
                )
            )
            continue
        tolerances = entry["tolerances"]
        for i, (er, ar) in enumerate(zip(exp_rows, act_rows)):
            for col, spec in tolerances.items():
                expected = float(er[col])
                actual = float(ar[col])
                tol = float(spec["rtol"]) * max(1.0, abs(expected)) + float(
                    spec.get("atol", 0.0)
                )
                if not abs(expected - actual) <= tol:
                    failures.append(
                        GoldenFailure(
                            golden=name,
                            row=i,
                            column=col,
                            expected=expected,
                            actual=actual,
                            tolerance=tol,
                        )
                    )
    return GoldenReport(checked=tuple(checked), failures=tuple(failures))


def regenerate_goldens() -> list[Path]:
    """Rewrite the stored golden tables from the current code (explicit only)."""
    manifest = _load_manifest()
    written = []
    base = Path(str(_golden_dir()))
    for entry in manifest["goldens"]:
        text = _run_golden(entry)
        target = base / entry["expected"]
        target.write_text(text, encoding="utf-8")
        written.append(target)
    return written
