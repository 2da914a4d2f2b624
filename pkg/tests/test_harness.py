import io
import math

import numpy as np
import pytest

from irsnet import association
from irsnet.harness import cli, recipes
from irsnet.harness.sweep import (
    ComparisonRow,
    SweepSpec,
    compare_report,
    emit_csv,
    parse_csv,
    run_sweep,
)
from irsnet.scenario import default_scenario


def test_spec_validation():
    sc = default_scenario()
    with pytest.raises(ValueError, match="cannot sweep"):
        SweepSpec(sc, "bogus", (1.0,))
    with pytest.raises(ValueError, match="nonempty"):
        SweepSpec(sc, "mu", ())
    with pytest.raises(ValueError, match="protocol"):
        SweepSpec(sc, "mu", (0.5,), protocol="nope")


def test_single_point_sweep_equals_direct_call(sc):
    spec = SweepSpec(sc, "mu", (sc.mu,), protocol="association",
                     engines="analytic")
    rows = run_sweep(spec)
    probs = association.association_probs(sc)
    by_metric = {r.metric: r for r in rows}
    for state in ("los", "nlos", "rlos"):
        assert by_metric[f"a_{state}"].analytic == pytest.approx(probs[state])
        assert by_metric[f"a_{state}"].mc_mean is None


def test_density_sweep_has_three_metrics_per_point(sc):
    spec = SweepSpec(sc, "d", (50.0, 100.0), protocol="densities",
                     engines="analytic")
    rows = run_sweep(spec)
    assert len(rows) == 6
    assert {r.metric for r in rows} == {
        "lambda_b_los_per_km2", "lambda_b_nlos_per_km2", "lambda_b_rlos_per_km2"
    }


def test_per_cell_budget_derives_element_count(sc):
    from irsnet.harness.sweep import _apply

    base = sc.replace(lambda_o=200e-6)
    scn = _apply(base, "mu", 0.5, n_c=3000.0)
    assert scn.n_elements == round(3000 * scn.lambda_b / scn.lambda_i)


def test_emit_parse_round_trip(tmp_path):
    rows = [
        ComparisonRow("mu", 0.5, "a_los", 0.123456789012345, 0.121, 0.004),
        ComparisonRow("mu", 0.5, "a_rlos", 0.25, None, None),
    ]
    path = tmp_path / "out.csv"
    emit_csv(rows, str(path))
    assert parse_csv(str(path)) == rows


def test_emit_csv_empty_table_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], str(path))
    content = path.read_text()
    assert content == "param,value,metric,analytic,mc_mean,mc_ci,abs_diff,status\n"


def test_emit_csv_deterministic_bytes(sc, tmp_path):
    spec = SweepSpec(sc, "mu", (0.2, 0.6), protocol="densities",
                     engines="both", n_drops=2_000, seed=5)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_sweep(spec), str(p1))
    emit_csv(run_sweep(spec), str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_compare_report_gates():
    good = ComparisonRow("mu", 0.1, "a_los", 0.50, 0.505, 0.01)
    bad = ComparisonRow("mu", 0.1, "a_los", 0.50, 0.60, 0.01)
    summary = compare_report([good, bad], abs_gate=0.02)
    assert summary.n_pass == 1 and summary.n_fail == 1 and not summary.ok
    summary2 = compare_report([good], abs_gate=0.02)
    assert summary2.ok


def test_compare_identical_engines_pass():
    rows = [ComparisonRow("mu", 0.3, "h", 0.25, 0.25, 0.0)]
    assert compare_report(rows, abs_gate=1e-9).ok


def test_recipes_enumerate_all_figures():
    assert recipes.recipe_names() == [
        "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"
    ]
    for name in recipes.recipe_names():
        specs = recipes.build_recipe(name, n_drops=500, seed=1)
        assert specs
        for tag, spec in specs:
            assert spec.values


def test_cli_validate_ok(capsys):
    assert cli.main(["validate"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "lambda_b_per_km2" in out and "derived lambda_i_per_km2" in out


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("lambda_b_per_km2 = -3.0\n")
    assert cli.main(["validate", "--config", str(bad)]) == cli.EXIT_CONFIG


def test_cli_unknown_key_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("lambda_beta = 1.0\n")
    assert cli.main(["validate", "--config", str(bad)]) == cli.EXIT_CONFIG


def test_cli_handover_analytic(capsys):
    code = cli.main(["handover", "--set", "v_m_per_unit=0"])
    assert code == cli.EXIT_OK
    assert "h = 0.0" in capsys.readouterr().out


def test_cli_densities_writes_csv(tmp_path, capsys):
    out = tmp_path / "dens.csv"
    code = cli.main([
        "densities", "--d", "50,100", "--engine", "both",
        "--drops", "2000", "--out", str(out),
    ])
    assert code == cli.EXIT_OK
    rows = parse_csv(str(out))
    assert len(rows) == 6
    assert all(r.mc_mean is not None for r in rows)


def test_cli_compare_pass_and_fail_exit_codes(tmp_path):
    code = cli.main([
        "compare", "--protocol", "densities", "--drops", "4000",
        "--gate", "0.08",
    ])
    assert code == cli.EXIT_OK
    # an absurdly tight gate turns sampling noise into failures
    code = cli.main([
        "compare", "--protocol", "association", "--drops", "400",
        "--gate", "1e-12",
    ])
    assert code == cli.EXIT_COMPARE_FAIL


def test_cli_recipe_smoke(tmp_path, capsys):
    code = cli.main([
        "recipe", "fig3", "--drops", "600", "--seed", "2",
        "--out", str(tmp_path),
        "--set", "lambda_b_per_km2=10",
    ])
    assert code in (cli.EXIT_OK, cli.EXIT_COMPARE_FAIL)
    made = sorted(p.name for p in tmp_path.glob("fig3_*.csv"))
    assert made == ["fig3_lo100.csv", "fig3_lo500.csv"]
    rows = parse_csv(str(tmp_path / "fig3_lo500.csv"))
    assert {r.metric for r in rows} == {"a_los", "a_nlos", "a_rlos"}
