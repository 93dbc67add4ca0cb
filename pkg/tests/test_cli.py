import json
import subprocess
import sys

import pytest

from conftest import write_csv


@pytest.fixture
def two_groups(tmp_path):
    return write_csv(tmp_path / "two.csv", ["arm", "score"], [["A", 0], ["A", 1], ["B", 0], ["B", 1]])


def test_sbt_table_format(run_cli, walkthrough_csv):
    res = run_cli("sbt", "--input", walkthrough_csv, "--group-col", "group",
                  "--levels", "Woman,Man", "--n-boot", 200, "--seed", 1, "--format", "table")
    assert res.code == 0
    text = res.stdout.decode()
    assert "Group means" in text and "top_5" in text and "Woman" in text


def test_sbt_csv_files(run_cli, walkthrough_csv, tmp_path):
    out = tmp_path / "result"
    res = run_cli("sbt", "--input", walkthrough_csv, "--group-col", "group", "--n-boot", 100,
                  "--seed", 1, "--format", "csv", "--out", out)
    assert res.code == 0 and res.stdout == b""
    means = (tmp_path / "result.means.csv").read_text().splitlines()
    sbt = (tmp_path / "result.sbt.csv").read_text().splitlines()
    assert means[0] == "group,n,Q1,Q2,Q3,Q4,Q5"
    assert sbt[0] == "group,n,top_1,top_2,top_3,top_4,top_5"
    assert len(means) == len(sbt) == 3


def test_single_column_sbt(run_cli, tmp_path):
    path = write_csv(tmp_path / "one.csv", ["g", "q"], [["a", 1], ["a", 4], ["b", 2], ["b", 5], ["b", 3]])
    res = run_cli("sbt", "--input", path, "--group-col", "g", "--n-boot", 50, "--seed", 2)
    payload = json.loads(res.stdout)
    assert payload["noncontainment"] == {"a": {"top_1": 0.0}, "b": {"top_1": 0.0}}
    assert "only 2 row(s)" in res.stderr


def test_ordering_disjoint_groups(run_cli, tmp_path):
    path = write_csv(tmp_path / "d.csv", ["g", "s"], [["hi", 10]] * 3 + [["lo", 0]] * 3)
    res = run_cli("ordering", "--input", path, "--group-col", "g", "--type", "numeric",
                  "--split", 1, "--seed", 1, "--n-boot", 200)
    result = json.loads(res.stdout)["results"][0]
    assert result["p_hat"] == 1.0 and result["group_order"] == ["hi", "lo"]


def test_total_equals_split_for_two_groups(run_cli, two_groups):
    base = ["ordering", "--input", two_groups, "--group-col", "arm", "--type", "numeric",
            "--seed", 77, "--n-boot", 3000]
    split = json.loads(run_cli(*base, "--split", 1).stdout)["results"][0]
    total = json.loads(run_cli(*base, "--total").stdout)["results"][0]
    assert split["event_count"] == total["event_count"]
    assert total["split"] == "total"


def test_enumeration_case_end_to_end(run_cli, two_groups):
    res = run_cli("ordering", "--input", two_groups, "--group-col", "arm", "--type", "numeric",
                  "--split", 1, "--seed", 2, "--n-boot", 10_000)
    result = json.loads(res.stdout)["results"][0]
    assert abs(result["p_hat"] - 0.3125) <= 3 * 0.00464


def test_ordering_needs_score_selection(run_cli, walkthrough_csv):
    res = run_cli("ordering", "--input", walkthrough_csv, "--group-col", "group", "--split", 1)
    assert res.code == 2 and "--score-column" in res.stderr


def test_ordering_per_item_and_row_mean(run_cli, walkthrough_csv):
    base = ["ordering", "--input", walkthrough_csv, "--group-col", "group", "--split", 1,
            "--seed", 3, "--n-boot", 200]
    per_item = json.loads(run_cli(*base, "--per-item").stdout)
    assert [r["item"] for r in per_item["results"]] == ["Q1", "Q2", "Q3", "Q4", "Q5"]
    row_mean = json.loads(run_cli(*base, "--row-mean").stdout)
    assert row_mean["results"][0]["item"] == "row_mean"
    single = json.loads(run_cli(*base, "--score-column", "Q3").stdout)
    assert single["results"][0]["item"] == "Q3"
    # each per-item run uses the same replicate streams as the single-column run
    assert single["results"][0]["event_count"] == per_item["results"][2]["event_count"]


def test_ordering_table_and_csv(run_cli, two_groups, tmp_path):
    base = ["ordering", "--input", two_groups, "--group-col", "arm", "--type", "numeric",
            "--split", 1, "--seed", 1, "--n-boot", 100]
    text = run_cli(*base, "--format", "table", "--adjusted").stdout.decode()
    assert "ordering event probability" in text
    res = run_cli(*base, "--format", "csv", "--out", tmp_path / "o")
    assert res.code == 0
    assert (tmp_path / "o.ordering.csv").read_text().startswith("item,split,group_order")


def test_hint_for_extreme_p_hat_with_small_b(run_cli, tmp_path):
    rows = [["a", v] for v in (5, 6, 7, 5)] + [["b", v] for v in (1, 2, 6, 1)]
    path = write_csv(tmp_path / "h.csv", ["g", "s"], rows)
    res = run_cli("ordering", "--input", path, "--group-col", "g", "--type", "numeric",
                  "--split", 1, "--seed", 4, "--n-boot", 1000)
    p_hat = json.loads(res.stdout)["results"][0]["p_hat"]
    assert 0.9 < p_hat < 1.0
    assert "hint:" in res.stderr and "--n-boot 10000" in res.stderr


def test_likert_map_file(run_cli, tmp_path):
    path = write_csv(tmp_path / "t.csv", ["g", "q1", "q2"],
                     [["a", "Often", "never"], ["a", "often", "Never"], ["b", "NEVER", "often"]])
    mapping = tmp_path / "map.txt"
    mapping.write_text("never = 1\noften = 4\n")
    res = run_cli("sbt", "--input", path, "--group-col", "g", "--likert-map", mapping,
                  "--n-boot", 10, "--seed", 1)
    assert res.code == 0
    assert json.loads(res.stdout)["mean_table"]["a"] == {"q1": 4.0, "q2": 1.0}


def test_missing_tokens_flag(run_cli, tmp_path):
    path = write_csv(tmp_path / "t.csv", ["g", "q"], [["a", 1], ["a", "skip"], ["a", 3]])
    res = run_cli("sbt", "--input", path, "--group-col", "g", "--missing-tokens", "skip",
                  "--n-boot", 10, "--seed", 1)
    assert json.loads(res.stdout)["mean_table"]["a"]["q"] == 2.0


def test_io_errors(run_cli, tmp_path, two_groups):
    res = run_cli("sbt", "--input", tmp_path / "nope.csv", "--group-col", "g")
    assert res.code == 4
    res = run_cli("sbt", "--input", two_groups, "--group-col", "arm", "--type", "numeric",
                  "--out", tmp_path / "missing-dir" / "out.json")
    assert res.code == 4


def test_config_errors(run_cli, two_groups):
    base = ["--input", two_groups, "--group-col", "arm", "--type", "numeric"]
    assert run_cli("sbt", *base, "--workers", 0).code == 2
    assert run_cli("sbt", *base, "--sample-size", 5, "--no-replace").code == 2
    assert run_cli("sbt", "--input", two_groups, "--group-col", "nope").code == 2
    assert run_cli("ordering", *base).code == 2  # neither --split nor --total
    assert run_cli("ordering", *base, "--levels", "A", "--total").code == 2


def test_data_error_unknown_group(run_cli, two_groups):
    res = run_cli("sbt", "--input", two_groups, "--group-col", "arm", "--type", "numeric",
                  "--levels", "X,Y")
    assert res.code == 3 and "no rows matched" in res.stderr


def test_module_entry_point(walkthrough_csv):
    proc = subprocess.run(
        [sys.executable, "-m", "stratboot", "sbt", "--input", str(walkthrough_csv),
         "--group-col", "group", "--n-boot", "20", "--seed", "1"],
        capture_output=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "sbt"
