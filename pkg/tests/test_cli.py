"""Command line interface: eval, geodesic, suite, claim, zoo-list."""

import csv
import io
import json

import numpy as np
import pytest

from finslerkit import cli, zoo

FUNK = "{kind: funk_ball_shifted, dimension: 2, parameters: {a: [0.3, 0.0]}}"
MINK = "{kind: minkowski, dimension: 2}"
SLAB = "{kind: incomplete_slab, dimension: 3}"

CLAIMS_YAML = """
- id: funk-curvature
  metric: {kind: funk_ball_shifted, dimension: 2, parameters: {a: [0.3, 0.0]}}
  quantity: flag_curvature
  target: {kind: constant, value: -0.25}
  tolerance: 1e-6
  tolerance_kind: relative
  samples: {count: 20, seed: 4}
- id: flat-cartan
  metric: {kind: riemannian, dimension: 2, parameters: {model: flat}}
  quantity: mean_cartan
  target: {kind: zero}
  tolerance: 1e-10
  tolerance_kind: absolute
  samples: {count: 20, seed: 4}
"""


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_eval_norm_prints_twelve_digits(capsys):
    code, out, _ = run_cli(capsys, "eval", "--metric", FUNK,
                           "--x", "0.1,0.2", "--y", "0.5,-0.3",
                           "--quantity", "F")
    assert code == 0
    assert out.strip() == "0.733440393903"


def test_eval_flag_curvature(capsys):
    code, out, _ = run_cli(capsys, "eval", "--metric", FUNK,
                           "--x", "0.1,0.2", "--y", "0.5,-0.3",
                           "--u", "1.0,0.0", "--quantity", "K")
    assert code == 0
    assert float(out.strip()) == pytest.approx(-0.25, rel=1e-9)


def test_eval_curvature_requires_flag_edge(capsys):
    code, _, err = run_cli(capsys, "eval", "--metric", FUNK,
                           "--x", "0.1,0.2", "--y", "0.5,-0.3",
                           "--quantity", "K")
    assert code == 2
    assert "u" in err


def test_eval_s_curvature_of_pure_funk(capsys):
    plain = "{kind: funk_ball_shifted, dimension: 2, parameters: {a: [0.0, 0.0]}}"
    code, out, _ = run_cli(capsys, "eval", "--metric", plain,
                           "--x", "0.1,0.2", "--y", "0.5,-0.3",
                           "--quantity", "S")
    assert code == 0
    code2, out2, _ = run_cli(capsys, "eval", "--metric", plain,
                             "--x", "0.1,0.2", "--y", "0.5,-0.3",
                             "--quantity", "F")
    # S = (n + 1) F / 2 for the Funk metric of the ball
    assert float(out.strip()) == pytest.approx(1.5 * float(out2.strip()),
                                               abs=1e-3)


def test_geodesic_csv_has_constant_velocity_rows(capsys):
    code, out, _ = run_cli(capsys, "geodesic", "--metric", MINK,
                           "--x", "0,0", "--y", "0.5,0.25",
                           "--t-span", "0,1", "--nodes", "9")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9
    for row in rows:
        t = float(row["t"])
        assert float(row["x1"]) == pytest.approx(0.5 * t, abs=1e-10)
        assert float(row["x2"]) == pytest.approx(0.25 * t, abs=1e-10)
        assert float(row["y1"]) == pytest.approx(0.5, abs=1e-10)
        assert float(row["y2"]) == pytest.approx(0.25, abs=1e-10)


def test_geodesic_torsion_columns(capsys):
    code, out, _ = run_cli(capsys, "geodesic", "--metric", FUNK,
                           "--x", "0.1,-0.2", "--y", "0.8,0.5",
                           "--t-span", "0,1", "--nodes", "33", "--torsion")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert "phi" in rows[0] and "residual" in rows[0]
    phi = np.array([float(r["phi"]) for r in rows])
    residual = np.array([float(r["residual"]) for r in rows])
    assert residual.max() <= 1e-4 * max(1.0, phi.max())


def test_geodesic_exit_is_reported(capsys):
    code, out, err = run_cli(capsys, "geodesic", "--metric", SLAB,
                             "--x", "0,0,0", "--y", "1,0.2,0",
                             "--t-span", "0,5", "--nodes", "9",
                             "--tol", "1e-8")
    assert code == 0
    assert "exit" in err.lower()
    rows = list(csv.DictReader(io.StringIO(out)))
    last = np.array([float(rows[-1]["x1"]), float(rows[-1]["x2"])])
    assert np.dot(last, last) < 1.0


def test_suite_command_passes_on_shipped_claims(tmp_path, capsys):
    path = tmp_path / "claims.yaml"
    path.write_text(CLAIMS_YAML)
    code, out, err = run_cli(capsys, "suite", "--file", str(path))
    assert code == 0
    payload = json.loads(out)
    assert payload["passed"] is True
    assert err == ""


def test_suite_reports_failures_on_stderr(tmp_path, capsys):
    tightened = CLAIMS_YAML.replace("tolerance: 1e-6", "tolerance: 1e-16")
    path = tmp_path / "claims.yaml"
    path.write_text(tightened)
    code, out, err = run_cli(capsys, "suite", "--file", str(path))
    assert code == 1
    assert "funk-curvature" in err
    assert "FAIL" in err


def test_suite_seed_override_is_deterministic(tmp_path, capsys):
    path = tmp_path / "claims.yaml"
    path.write_text(CLAIMS_YAML)
    outputs = []
    for _ in range(2):
        code, out, _ = run_cli(capsys, "suite", "--file", str(path),
                               "--seed", "7")
        assert code == 0
        payload = json.loads(out)
        for rec in payload["claims"]:
            rec.pop("runtime", None)
        outputs.append(json.dumps(payload, sort_keys=True))
    assert outputs[0] == outputs[1]


def test_claim_command_filters_by_id(tmp_path, capsys):
    path = tmp_path / "claims.yaml"
    path.write_text(CLAIMS_YAML)
    code, out, _ = run_cli(capsys, "claim", "--file", str(path),
                           "--id", "flat-cartan")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["claims"]) == 1
    assert payload["claims"][0]["claim_id"] == "flat-cartan"


def test_zoo_list_emits_reconstructible_specs(capsys):
    code, out, _ = run_cli(capsys, "zoo-list", "--emit-specs")
    assert code == 0
    import yaml

    specs = [zoo.MetricSpec.from_dict(d) for d in yaml.safe_load(out)]
    assert sorted(s.kind for s in specs) == sorted(zoo.KINDS)
    for spec in specs:
        zoo.build_metric(spec)


def test_bad_metric_spec_is_a_usage_error(capsys):
    code, _, err = run_cli(capsys, "eval",
                           "--metric", "{kind: bogus, dimension: 2}",
                           "--x", "0,0", "--y", "1,0", "--quantity", "F")
    assert code == 2
    assert "bogus" in err


def test_out_of_domain_point_is_a_usage_error(capsys):
    code, _, err = run_cli(capsys, "eval", "--metric", FUNK,
                           "--x", "2.0,0.0", "--y", "1,0", "--quantity", "F")
    assert code == 2
    assert "domain" in err.lower()
