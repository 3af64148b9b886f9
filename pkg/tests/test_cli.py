import json
import os
import subprocess

import frobthresh


def test_if_given_no_command_should_print_usage_and_exit(capfd):
    result = subprocess.run(["frobthresh"])
    std = capfd.readouterr()
    assert result.returncode == 2
    assert std.err.startswith("usage: ")
    assert "error: the following arguments are required: command" in std.err


def test_version_should_be_printed(capfd):
    subprocess.run(["frobthresh", "--version"])
    std = capfd.readouterr()
    assert std.out.strip() == frobthresh.__version__


def test_vr_should_print_csv_row(capfd):
    result = subprocess.run(["frobthresh", "vr", "symmetric", "2", "--p", "2", "--no-timings"])
    std = capfd.readouterr()
    assert result.returncode == 0
    lines = std.out.splitlines()
    assert lines[0].startswith("family,m,n,p,s,q,v,")
    assert lines[1] == "symmetric,2,2,2,1,2,2,1,1,1,3/2,2,true,"


def test_vr_should_accept_two_sizes(capfd):
    subprocess.run(["frobthresh", "vr", "maximal_minors", "3", "1", "--format", "json"])
    std = capfd.readouterr()
    data = json.loads(std.out)
    assert data[0]["v"] == "0"


def test_vr_with_invalid_ring_should_exit_with_usage_error(capfd):
    result = subprocess.run(["frobthresh", "vr", "pfaffian", "3"])
    std = capfd.readouterr()
    assert result.returncode == 2
    assert "Pfaffian needs an even size" in std.err


def test_vr_with_composite_characteristic_should_exit_with_usage_error(capfd):
    result = subprocess.run(["frobthresh", "vr", "symmetric", "2", "--p", "4"])
    capfd.readouterr()
    assert result.returncode == 2


def test_verbose_flag_should_log_progress(capfd):
    subprocess.run(["frobthresh", "-v", "vr", "symmetric", "2"])
    std = capfd.readouterr()
    assert "INFO:frobthresh:" in std.err


def test_scan_should_write_configured_table(capfd, tmp_path):
    config = tmp_path / "scan.cfg"
    output = tmp_path / "table.csv"
    config.write_text("families = symmetric:2; pfaffian:4\nprimes = 2\ntimings = false\n")
    result = subprocess.run(["frobthresh", "scan", "-c", str(config), "-o", str(output)])
    capfd.readouterr()
    assert result.returncode == 0
    lines = output.read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("pfaffian,4,4,2,1,2,4,")
    assert lines[2].startswith("symmetric,2,2,2,1,2,2,")


def test_scan_should_not_depend_on_worker_count(capfd):
    command = ["frobthresh", "scan", "--family", "symmetric:2", "--family", "generic:2",
               "--s-max", "2", "--no-timings"]
    subprocess.run(command + ["--threads", "1"])
    serial = capfd.readouterr().out
    subprocess.run(command + ["--threads", "2"])
    parallel = capfd.readouterr().out
    assert serial == parallel
    assert len(serial.splitlines()) == 5


def test_scan_with_unwritable_output_should_exit_with_io_error(capfd, tmp_path):
    output = tmp_path / "missing" / "table.csv"
    result = subprocess.run(["frobthresh", "scan", "--family", "symmetric:2", "-o", str(output)])
    std = capfd.readouterr()
    assert result.returncode == 3
    assert "error:" in std.err


def test_scan_with_unknown_family_should_exit_with_usage_error(capfd):
    result = subprocess.run(["frobthresh", "scan", "--family", "hankel:3"])
    capfd.readouterr()
    assert result.returncode == 2


def test_annihilator_should_report_closed_form_in_characteristic_two(capfd):
    subprocess.run(["frobthresh", "annihilator", "symmetric", "2", "--p", "2", "--s", "2"])
    std = capfd.readouterr()
    data = json.loads(std.out)
    assert data["indeg"] == 4
    assert data["annihilates"] and data["nonzero"]
    assert data["closed_form"]["degree"] == 4
    assert data["closed_form"]["annihilates"]
    assert data["closed_form"]["indeg_at_most_degree"]


def test_annihilator_of_pfaffian_should_be_pfaffian(capfd):
    subprocess.run(["frobthresh", "annihilator", "pfaffian", "4"])
    std = capfd.readouterr()
    data = json.loads(std.out)
    assert data["indeg"] == 2
    assert "closed_form" not in data


def test_degenerate_should_report_fibers_and_composition(capfd):
    subprocess.run(["frobthresh", "degenerate", "4", "--p", "3"])
    std = capfd.readouterr()
    data = json.loads(std.out)
    assert data["fibers"] == [{"t": 0, "v": 8}, {"t": 1, "v": 8}, {"t": 2, "v": 8}]
    assert data["composition"]["v"] == 8
    assert all(data["checks"].values())


def test_weights_fundamental_should_print_coordinates(capfd):
    subprocess.run(["frobthresh", "weights", "fundamental", "3,1,0"])
    assert capfd.readouterr().out.strip() == "2,1,0"


def test_weights_padic_should_print_layers(capfd):
    subprocess.run(["frobthresh", "weights", "padic", "3,1", "--p", "2"])
    assert capfd.readouterr().out.strip() == "(1,1) + 2*(1,0)"


def test_weights_euler_should_print_signed_dimension(capfd):
    subprocess.run(["frobthresh", "weights", "euler", "0,2,0"])
    assert capfd.readouterr().out.strip() == "sign -1, partition (1,1,0), dim 3"


def test_weights_euler_of_singular_weight_should_print_zero(capfd):
    subprocess.run(["frobthresh", "weights", "euler", "0,1,0"])
    assert capfd.readouterr().out.strip() == "0"


def test_weights_window_should_print_outcome(capfd):
    subprocess.run(["frobthresh", "weights", "window", "1,0", "--e", "6", "--n", "3",
                    "--q", "2", "--j", "1"])
    assert capfd.readouterr().out.strip() == "true"


def test_malformed_weight_should_exit_with_usage_error(capfd):
    result = subprocess.run(["frobthresh", "weights", "fundamental", "3,a"])
    std = capfd.readouterr()
    assert result.returncode == 2
    assert "malformed weight" in std.err


def test_hilbert_should_print_series(capfd):
    subprocess.run(["frobthresh", "hilbert", "2", "3"])
    assert capfd.readouterr().out.strip() == "1,2,3,2,1"


def test_weights_euler_should_sort_with_sign(capfd):
    subprocess.run(["frobthresh", "weights", "euler", "1,0,2"])
    assert capfd.readouterr().out.strip() == "sign -1, partition (1,1,1), dim 1"


def test_weights_padic_should_print_higher_layers(capfd):
    subprocess.run(["frobthresh", "weights", "padic", "5,2", "--p", "2"])
    assert capfd.readouterr().out.strip() == "(1,0) + 2*(2,1)"


def test_weights_window_should_accept_padded_weight(capfd):
    subprocess.run(["frobthresh", "weights", "window", "1,1,0", "--e", "6", "--n", "4",
                    "--q", "3", "--j", "1"])
    assert capfd.readouterr().out.strip() == "true"


def test_scan_without_families_should_print_header_only(capfd):
    result = subprocess.run(["frobthresh", "scan"])
    std = capfd.readouterr()
    assert result.returncode == 0
    assert std.out.splitlines() == [",".join(frobthresh.TABLE_COLUMNS)]


def test_degenerate_of_smallest_pfaffian_should_be_zero(capfd):
    subprocess.run(["frobthresh", "degenerate", "2", "--p", "3"])
    data = json.loads(capfd.readouterr().out)
    assert [f["v"] for f in data["fibers"]] == [0, 0, 0]


def test_vr_over_memory_cap_should_exit_with_skip(capfd):
    result = subprocess.run(["frobthresh", "vr", "generic", "3", "--p", "3", "--no-timings",
                             "--mem-cap", "64M"])
    std = capfd.readouterr()
    assert result.returncode == 4
    assert std.out.splitlines()[1] == "generic,3,3,3,1,3,,,,6,6,12,skipped,"


def test_vr_should_read_memory_cap_from_environment(capfd):
    environ = dict(os.environ, FROBTHRESH_MEM_CAP="64M")
    result = subprocess.run(["frobthresh", "vr", "generic", "3", "--p", "3"], env=environ)
    capfd.readouterr()
    assert result.returncode == 4


def test_vr_with_invalid_memory_cap_in_environment_should_exit_with_usage_error(capfd):
    environ = dict(os.environ, FROBTHRESH_MEM_CAP="garbage")
    result = subprocess.run(["frobthresh", "vr", "symmetric", "2"], env=environ)
    capfd.readouterr()
    assert result.returncode == 2


def test_scan_with_malformed_config_should_exit_with_usage_error(capfd, tmp_path):
    config = tmp_path / "scan.cfg"
    config.write_text("families = symmetric:2\nprimes 2\n")
    result = subprocess.run(["frobthresh", "scan", "-c", str(config)])
    std = capfd.readouterr()
    assert result.returncode == 2
    assert "Invalid configuration file" in std.err
    assert "Traceback" not in std.err
