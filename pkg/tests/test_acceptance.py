"""Acceptance suite: runs the shipped ``validate`` experiment once and reports
one pass/fail line per acceptance criterion."""
import pytest

from adaptdiff import cli
from adaptdiff.csvio import read_csv

from conftest import ACCEPTANCE_LINES

CRITERIA = {
    1: "neutral fixation probabilities are exact",
    2: "neutral invasion fitness closed form",
    3: "operator identities",
    4: "defence and isolation sequence identities",
    5: "weak-selection factorisation of fixation gradients",
    6: "genealogical probabilities, harmonic vs Monte Carlo",
    7: "adaptive slopes",
    8: "diffusion coefficients",
    9: "rare-mutation limit",
    10: "small-mutation-step limit",
    11: "stationary population sizes",
    12: "linear scaling of jump counts and gradients",
}


@pytest.fixture(scope="session")
def validation(tmp_path_factory):
    out = tmp_path_factory.mktemp("validate")
    code = cli.main(["validate", "--out", str(out)])
    _, header, rows = read_csv(out / "checks.csv")
    checks = [dict(zip(header, r)) for r in rows]
    return code, checks


def test_validate_exit_code_and_count(validation):
    code, checks = validation
    assert len(checks) >= 25
    assert code == (cli.EXIT_OK if all(c["status"] == "pass" for c in checks)
                    else cli.EXIT_VALIDATION)


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_criterion(validation, criterion):
    _, checks = validation
    mine = [c for c in checks if int(c["criterion"]) == criterion]
    failed = [c for c in mine if c["status"] != "pass"]
    status = "PASS" if mine and not failed else "FAIL"
    line = (f"criterion {criterion:2d} [{status}] {CRITERIA[criterion]}: "
            f"{len(mine) - len(failed)}/{len(mine)} checks passed")
    if failed:
        line += " (failed: " + ", ".join(c["name"] for c in failed) + ")"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert mine, "no checks recorded for this criterion"
    assert not failed, "; ".join(
        f"{c['name']}: value={c['value']} reference={c['reference']} "
        f"tolerance={c['tolerance']} [{c['detail']}]" for c in failed)
