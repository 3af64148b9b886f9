from pytest import fixture, raises

import io
import json

from frobthresh import TABLE_COLUMNS, FamilySpec, RunConfig, build_config, evaluate, \
    load_config, parse_families, parse_size, report_row, threshold_table, write_table


@fixture(scope="module")
def reports():
    """Reports for two small hypersurfaces."""
    specs = [FamilySpec.of("pfaffian", 4, p=2, s=1), FamilySpec.of("symmetric", 2, p=2, s=1)]
    computed = threshold_table(specs)
    return computed


def test_report_row_should_fill_all_columns(reports):
    row = report_row(reports[1])
    assert tuple(row) == TABLE_COLUMNS
    assert row["family"] == "symmetric"
    assert (row["m"], row["n"], row["p"], row["s"], row["q"]) == ("2", "2", "2", "1", "2")
    assert (row["v"], row["indeg_ann"], row["v_over_q"]) == ("2", "1", "1")
    assert (row["lower_bound"], row["theorem_c"], row["upper_bound_vq"]) == ("1", "3/2", "2")
    assert row["bounds_ok"] == "true"
    assert row["wall_ms"] != ""


def test_report_row_should_leave_out_timings_on_request(reports):
    assert report_row(reports[0], timings=False)["wall_ms"] == ""


def test_report_row_of_skipped_ring_should_be_marked():
    spec = FamilySpec.of("symmetric", 2, p=2, s=1)
    report = evaluate(spec)
    report.skipped = True
    report.v = None
    row = report_row(report)
    assert row["bounds_ok"] == "skipped"
    assert row["v"] == row["v_over_q"] == ""


def test_csv_table_should_have_header_and_unix_line_endings(reports):
    stream = io.StringIO()
    write_table(reports, "csv", stream, timings=False)
    content = stream.getvalue()
    assert "\r" not in content
    lines = content.splitlines()
    assert lines[0] == ",".join(TABLE_COLUMNS)
    assert lines[1] == "pfaffian,4,4,2,1,2,4,2,2,4,4,4,true,"
    assert len(lines) == 3


def test_markdown_table_should_have_separator(reports):
    stream = io.StringIO()
    write_table(reports, "markdown", stream)
    lines = stream.getvalue().splitlines()
    assert lines[0].startswith("| family | m |")
    assert lines[1] == "|" + "---|" * len(TABLE_COLUMNS)
    assert len(lines) == 4


def test_json_table_should_include_details(reports):
    stream = io.StringIO()
    write_table(reports, "json", stream)
    data = json.loads(stream.getvalue())
    assert [d["family"] for d in data] == ["pfaffian", "symmetric"]
    assert data[1]["witness"] == "x11"
    assert data[1]["checks"]["duality"]
    assert data[0]["slice_dims"][-1]["quotient"] == 0


def test_unknown_table_format_should_raise(reports):
    with raises(ValueError):
        write_table(reports, "xml", io.StringIO())


def test_parse_families_should_expand_ranges():
    assert parse_families("symmetric:2-3; generic:2,3x2") == (
        ("symmetric", (2,)), ("symmetric", (3,)), ("generic", (2,)), ("generic", (3, 2)),
    )


def test_parse_families_should_reject_unknown_family():
    with raises(ValueError):
        parse_families("hankel:3")


def test_parse_families_should_reject_missing_sizes():
    with raises(ValueError):
        parse_families("symmetric")


def test_parse_size_should_accept_suffixes():
    assert parse_size("512M") == 512 << 20
    assert parse_size("2g") == 2 << 30
    assert parse_size("1000") == 1000


def test_run_config_should_expand_sorted_specs():
    config = RunConfig(families=parse_families("symmetric:2;generic:2;symmetric:2"),
                       primes=(3, 2), s_max=2)
    specs = config.specs()
    assert len(specs) == 8
    assert specs[0] == FamilySpec("generic", 2, 2, 2, 1)
    assert specs[-1] == FamilySpec("symmetric", 2, 2, 3, 2)


def test_run_config_should_reject_invalid_settings():
    with raises(ValueError):
        RunConfig(primes=(4,))
    with raises(ValueError):
        RunConfig(s_max=0)
    with raises(ValueError):
        RunConfig(format="xml")
    with raises(ValueError):
        RunConfig(mem_cap=1024)


def test_load_config_should_read_keys_without_section(tmp_path):
    path = tmp_path / "scan.cfg"
    path.write_text("# small scan\nfamilies = symmetric:2-3\nprimes = 2,3  # both\n")
    assert load_config(path) == {"families": "symmetric:2-3", "primes": "2,3"}


def test_build_config_should_let_flags_override_environment_and_file():
    values = {"threads": "2", "families": "pfaffian:4"}
    environ = {"FROBTHRESH_THREADS": "3"}
    assert build_config(values, environ).threads == 3
    assert build_config(values, environ, threads="4").threads == 4
    assert build_config(values, {}, threads=None).threads == 2


def test_build_config_should_convert_values():
    config = build_config({"mem_cap": "1G", "timings": "no", "format": "markdown"},
                          {"FROBTHRESH_MEM_CAP": "512M"})
    assert config.mem_cap == 512 << 20
    assert not config.timings
    assert config.format == "markdown"


def test_build_config_should_reject_unknown_keys():
    with raises(ValueError):
        build_config({"colour": "blue"}, {})


def test_build_config_should_reject_invalid_boolean():
    with raises(ValueError):
        build_config({"timings": "maybe"}, {})


def test_scan_of_polynomial_rings_should_give_maximal_degrees():
    config = RunConfig(families=parse_families("polynomial_ring:4"), s_max=2)
    assert [r.v for r in threshold_table(config.specs())] == [4, 12]


def test_scan_of_symmetric_matrices_should_approach_threshold():
    config = RunConfig(families=parse_families("symmetric:2"), s_max=3)
    reports = threshold_table(config.specs())
    assert [r.v for r in reports] == [2, 5, 11]
    assert [float(r.ratio) for r in reports] == [1.0, 1.25, 1.375]
    assert all(r.bounds_ok for r in reports)


def test_load_config_should_reject_line_without_delimiter(tmp_path):
    path = tmp_path / "scan.cfg"
    path.write_text("families = symmetric:2\nprimes 2\n")
    with raises(ValueError, match="Invalid configuration file"):
        load_config(path)
