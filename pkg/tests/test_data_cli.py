"""ECDC ingestion, the day-number calendar, and the CLI surface."""

import json
import math
from datetime import date

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from countpred.cli import cli_dispatch
from countpred.data import (
    DAYNUM_EPOCH,
    DailySeries,
    date_of_daynum,
    daynum_of_date,
    load_adjustments,
    parse_ecdc_csv,
    weekday_of_daynum,
    write_ecdc_csv,
)
from countpred.errors import AdjustmentError, DataError


# ------------------------------------------------------------- calendar


def test_daynum_anchors():
    assert daynum_of_date(date(2019, 12, 31)) == 1
    assert daynum_of_date(date(2020, 3, 1)) == 62
    assert date_of_daynum(62) == date(2020, 3, 1)
    assert DAYNUM_EPOCH == date(2019, 12, 30)


def test_weekday_labels():
    assert weekday_of_daynum(62) == "Sunday"
    assert weekday_of_daynum(108) == "Thursday"
    assert weekday_of_daynum(138) == "Saturday"
    assert weekday_of_daynum(179) == "Friday"


@given(st.integers(min_value=-100000, max_value=100000))
def test_daynum_round_trip(daynum):
    assert daynum_of_date(date_of_daynum(daynum)) == daynum


# -------------------------------------------------------------- parsing


HEADER = "dateRep,day,month,year,cases,deaths,countriesAndTerritories,geoId\n"


def write_csv(path, rows, header=HEADER):
    path.write_text(header + "".join(rows))
    return str(path)


def row(d, deaths, country="Testland", geo="TL", date_rep=None):
    dr = date_rep if date_rep is not None else f"{d.day:02d}/{d.month:02d}/{d.year}"
    return f"{dr},{d.day},{d.month},{d.year},0,{deaths},{country},{geo}\n"


def test_parse_basic_and_country_filter(tmp_path):
    rows = [
        row(date(2020, 3, 2), 5),
        row(date(2020, 3, 1), 3),
        row(date(2020, 3, 1), 9, country="Elsewhere", geo="EW"),
    ]
    path = write_csv(tmp_path / "d.csv", rows)
    series = parse_ecdc_csv(path, "Testland")
    assert series.counts() == [3, 5]
    assert series.daynums() == [62, 63]
    assert series.records[0].weekday == "Sunday"
    # geo id and case-insensitive matching select the same rows
    assert parse_ecdc_csv(path, "tl").counts() == [3, 5]
    assert parse_ecdc_csv(path, "TESTLAND").counts() == [3, 5]


def test_parse_gap_fill_and_fallback_date(tmp_path):
    rows = [
        row(date(2020, 3, 1), 3),
        # dateRep empty: parser falls back to day/month/year columns
        row(date(2020, 3, 4), 7, date_rep=""),
    ]
    series = parse_ecdc_csv(write_csv(tmp_path / "d.csv", rows), "Testland")
    assert series.counts() == [3, 0, 0, 7]
    assert [r.filled for r in series.records] == [False, True, True, False]


def test_parse_errors_carry_line_numbers(tmp_path):
    rows = [row(date(2020, 3, 1), 3),
            "bogus,x,y,z,0,5,Testland,TL\n"]
    with pytest.raises(DataError) as err:
        parse_ecdc_csv(write_csv(tmp_path / "d.csv", rows), "Testland")
    assert err.value.line == 3
    assert "line 3" in str(err.value)

    bad = write_csv(tmp_path / "e.csv",
                    ["01/03/2020,1,3,2020,0,NaNish,Testland,TL\n"])
    with pytest.raises(DataError, match="unparseable deaths"):
        parse_ecdc_csv(bad, "Testland")


def test_parse_rejects_negative_duplicate_missing(tmp_path):
    with pytest.raises(DataError, match="negative"):
        parse_ecdc_csv(write_csv(tmp_path / "a.csv",
                                 [row(date(2020, 3, 1), -2)]), "Testland")
    with pytest.raises(DataError, match="duplicate"):
        parse_ecdc_csv(write_csv(tmp_path / "b.csv",
                                 [row(date(2020, 3, 1), 1),
                                  row(date(2020, 3, 1), 2)]), "Testland")
    with pytest.raises(DataError, match="missing required columns"):
        parse_ecdc_csv(write_csv(tmp_path / "c.csv", [],
                                 header="dateRep,deaths\n"), "Testland")
    with pytest.raises(DataError, match="no rows for country"):
        parse_ecdc_csv(write_csv(tmp_path / "d.csv",
                                 [row(date(2020, 3, 1), 1)]), "Atlantis")
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError):
        parse_ecdc_csv(str(empty), "Testland")


def test_write_parse_round_trip(tmp_path):
    rows = [row(date(2020, 3, 1), 3), row(date(2020, 3, 4), 7)]
    series = parse_ecdc_csv(write_csv(tmp_path / "in.csv", rows), "Testland")
    out = tmp_path / "out.csv"
    write_ecdc_csv(series, out)
    again = parse_ecdc_csv(str(out), "Testland")
    assert again.records == series.records


def test_series_helpers(tmp_path):
    rows = [row(date(2020, 3, 1) , 3), row(date(2020, 3, 2), 5),
            row(date(2020, 3, 3), 7)]
    series = parse_ecdc_csv(write_csv(tmp_path / "d.csv", rows), "Testland")
    assert series.total() == 15
    assert series.cumulative_to(63) == 8
    cut = series.truncated(63)
    assert cut.counts() == [3, 5]
    tail = series.truncated(64, start_daynum=63)
    assert tail.counts() == [5, 7]
    with pytest.raises(DataError):
        series.truncated(10)
    adj = series.with_adjustments([(63, 4)])
    assert adj.adjustments == ((63, 4),)
    assert adj.truncated(62).adjustments == ()


def test_load_adjustments(tmp_path):
    good = tmp_path / "adj.json"
    good.write_text(json.dumps([{"daynum": 108, "amount": 3778}]))
    assert load_adjustments(str(good)) == ((108, 3778),)

    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    with pytest.raises(DataError, match="invalid adjustments JSON"):
        load_adjustments(str(bad_json))

    not_list = tmp_path / "nl.json"
    not_list.write_text(json.dumps({"daynum": 1, "amount": 2}))
    with pytest.raises(DataError, match="JSON list"):
        load_adjustments(str(not_list))

    bad_entry = tmp_path / "be.json"
    bad_entry.write_text(json.dumps([{"daynum": 1}]))
    with pytest.raises(DataError, match="bad adjustment entry"):
        load_adjustments(str(bad_entry))

    negative = tmp_path / "neg.json"
    negative.write_text(json.dumps([{"daynum": 1, "amount": -5}]))
    with pytest.raises(AdjustmentError):
        load_adjustments(str(negative))


# ------------------------------------------------------------------ CLI


@pytest.fixture()
def series_csv(tmp_path):
    """Sixty days of smooth weekday-modulated counts from day 62."""
    mult = {"Monday": 0.85, "Tuesday": 1.1, "Wednesday": 1.2, "Thursday": 1.1,
            "Friday": 1.05, "Saturday": 0.95, "Sunday": 0.75}
    rows = []
    rng = np.random.default_rng(6021)
    for daynum in range(62, 122):
        lam = math.exp(2.0 + 0.035 * (daynum - 62)) * mult[weekday_of_daynum(daynum)]
        rows.append(row(date_of_daynum(daynum), int(rng.poisson(lam))))
    return write_csv(tmp_path / "series.csv", rows)


def run_cli(args):
    return cli_dispatch(args)


def test_cli_help_and_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli(["--help"])
    assert exc.value.code == 0
    capsys.readouterr()

    with pytest.raises(SystemExit) as exc:
        run_cli(["not-a-command"])
    assert exc.value.code == 1
    assert "error: usage:" in capsys.readouterr().err

    with pytest.raises(SystemExit) as exc:
        run_cli(["forecast"])  # missing required arguments
    assert exc.value.code == 1


def test_cli_fit_json(series_csv, tmp_path, capsys):
    out = tmp_path / "fit.json"
    code = run_cli(["fit", "--data", series_csv, "--country", "Testland",
                    "--order", "2", "--day-factor", "--max-order", "3",
                    "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["meta"]["version"]
    assert payload["converged"] is True
    assert len(payload["theta_standardized"]) == 1 + 2 + 6
    assert len(payload["aic_table"]) == 3
    assert {"aic_nd", "aic_d"} <= set(payload["aic_table"][0])
    assert payload["diagnostics"]["df"] == 5
    # raw and standardized parameterizations agree on the fitted rates
    raw = payload["theta_raw"]
    assert len(raw) == len(payload["theta_standardized"])


def test_cli_fit_stdout_json(series_csv, capsys):
    code = run_cli(["fit", "--data", series_csv, "--country", "Testland",
                    "--order", "1"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["order"] == 1


def test_cli_predict(series_csv, tmp_path):
    out = tmp_path / "pred.json"
    code = run_cli(["predict", "--data", series_csv, "--country", "Testland",
                    "--order", "2", "--day-factor", "--daynum", "120,121",
                    "--variant", "normal", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert len(payload["predictions"]) == 2
    for p in payload["predictions"]:
        assert p["lower"] <= p["upper"]
        assert p["rate"] > 0


def test_cli_forecast(series_csv, tmp_path):
    out = tmp_path / "fc.json"
    code = run_cli(["forecast", "--data", series_csv, "--country", "Testland",
                    "--order", "2", "--day-factor", "--target-daynum", "125",
                    "--overdispersed", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["horizon_days"] == 4
    assert payload["alpha_star"] == pytest.approx(1 - 0.95 ** 0.25)
    lo, hi = payload["interval"]
    assert lo <= payload["point"] <= hi
    assert len(payload["per_day"]) == 4


def test_cli_sweep(series_csv, tmp_path):
    out = tmp_path / "sweep.csv"
    code = run_cli(["sweep", "--data", series_csv, "--country", "Testland",
                    "--order", "2", "--day-factor", "--target-daynum", "122",
                    "--cutoffs", "119:121", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0].startswith("# ")
    assert lines[1] == "cutoff_daynum,s_current,xi_hat,point,lower,upper,error"
    assert len(lines) == 5
    first = lines[2].split(",")
    assert first[0] == "119" and first[-1] == ""


def test_cli_sweep_collects_row_errors(series_csv, tmp_path):
    out = tmp_path / "sweep.csv"
    code = run_cli(["sweep", "--data", series_csv, "--country", "Testland",
                    "--order", "2", "--day-factor", "--target-daynum", "122",
                    "--cutoffs", "64,121", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    bad = lines[2].split(",")
    assert bad[0] == "64" and bad[-1] != ""
    good = lines[3].split(",")
    assert good[0] == "121" and good[-1] == ""


def test_cli_simulate_csv(tmp_path):
    out = tmp_path / "sim.csv"
    code = run_cli(["simulate", "--scenario", "intercept", "--n", "5",
                    "--lambda", "1.0", "--reps", "300", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3
    assert "seed=20200315" in lines[0]
    assert lines[1].split(",")[0] == "n"


def test_cli_exact_props(capsys):
    code = run_cli(["exact-props", "--lambda-grid", "1,5", "--alpha", "0.05"])
    assert code == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 4
    header = lines[1].split(",")
    cov_idx = header.index("Gam0R_coverage")
    for data_line in lines[2:]:
        cells = data_line.split(",")
        assert float(cells[cov_idx]) == pytest.approx(0.95, abs=1e-10)
        assert float(cells[header.index("Gam0N_coverage")]) >= 0.95 - 1e-12


def test_cli_reallocate(series_csv, tmp_path):
    adj = tmp_path / "adj.json"
    adj.write_text(json.dumps([{"daynum": 80, "amount": 10}]))
    out = tmp_path / "re.csv"
    code = run_cli(["reallocate", "--data", series_csv, "--country", "Testland",
                    "--adjustments", str(adj), "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[1] == "dateRep,daynum,weekday,count_original,count_adjusted"
    rows = [ln.split(",") for ln in lines[2:]]
    assert sum(int(r[3]) for r in rows) == sum(int(r[4]) for r in rows)
    changed = [r for r in rows if r[3] != r[4]]
    assert changed, "reallocation should move at least one count"


def test_cli_reallocate_requires_adjustments(series_csv, capsys):
    code = run_cli(["reallocate", "--data", series_csv, "--country", "Testland"])
    assert code == 1
    assert "error: usage:" in capsys.readouterr().err


def test_cli_exit_code_data_errors(series_csv, tmp_path, capsys):
    code = run_cli(["fit", "--data", str(tmp_path / "missing.csv"),
                    "--country", "Testland"])
    assert code == 2
    assert "error: data:" in capsys.readouterr().err

    code = run_cli(["fit", "--data", series_csv, "--country", "Atlantis"])
    assert code == 2
    assert "error: data:" in capsys.readouterr().err


def test_cli_exit_code_usage_errors(series_csv, capsys):
    # forecast target at or before the cutoff is a usage-level error
    code = run_cli(["forecast", "--data", series_csv, "--country", "Testland",
                    "--target-daynum", "100"])
    assert code == 1
    assert "error: usage:" in capsys.readouterr().err

    code = run_cli(["forecast", "--data", series_csv, "--country", "Testland",
                    "--target-daynum", "500"])
    assert code == 1
    err = capsys.readouterr().err
    assert "error: usage:" in err


def test_cli_exit_code_numerical_errors(tmp_path, capsys):
    # two distinct daynums cannot identify a quintic: singular design
    rows = [row(date(2020, 3, 1), 5), row(date(2020, 3, 2), 8),
            row(date(2020, 3, 3), 6)]
    path = write_csv(tmp_path / "tiny.csv", rows)
    code = run_cli(["fit", "--data", path, "--country", "Testland",
                    "--order", "2", "--max-order", "2"])
    assert code in (2, 3)
    assert capsys.readouterr().err.startswith("error:")
