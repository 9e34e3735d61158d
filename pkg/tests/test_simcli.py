"""Simulator configuration, reproducibility, and CSV output."""

import numpy as np
import pytest

from chasedet.errors import ConfigError
from chasedet.simcli import (
    CSV_HEADER,
    SimConfig,
    SimRecord,
    build_config,
    config_lines,
    main,
    monte_carlo,
    parse_snr_grid,
    validate_config,
    write_csv,
)


def test_parse_snr_grid_forms():
    assert parse_snr_grid("4:2:12") == (4.0, 6.0, 8.0, 10.0, 12.0)
    assert parse_snr_grid("7") == (7.0,)
    assert parse_snr_grid("1,2.5,3") == (1.0, 2.5, 3.0)
    assert parse_snr_grid("12:-4:4") == (12.0, 8.0, 4.0)
    assert parse_snr_grid("0:3:10") == (0.0, 3.0, 6.0, 9.0)
    for bad in ("4:0:8", "1:2", "1:2:3:4", "abc", "4;8"):
        with pytest.raises(ConfigError):
            parse_snr_grid(bad)


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\n"
        "detector = bchase\n"
        "mod = 64   # inline comment\n"
        "\n"
        "snr = 0:5:10\n"
        "corr = 0.5\n"
    )
    cfg = build_config(str(path), {})
    assert cfg.detector == "bchase"
    assert cfg.mod == 64
    assert cfg.snr_db == (0.0, 5.0, 10.0)
    assert cfg.corr_tx == cfg.corr_rx == 0.5


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("mod = 16\nbogus = 3\n")
    with pytest.raises(ConfigError, match="line 2.*bogus"):
        build_config(str(path), {})
    path.write_text("mod sixteen\n")
    with pytest.raises(ConfigError, match="line 1"):
        build_config(str(path), {})
    path.write_text("blocks = many\n")
    with pytest.raises(ConfigError, match="invalid value"):
        build_config(str(path), {})


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("blocks = 50\nseed = 1\n")
    cfg = build_config(str(path), {"blocks": 7, "seed": None})
    assert cfg.blocks == 7
    assert cfg.seed == 1


def test_validate_config_rejections():
    good = SimConfig()
    assert validate_config(good) is good
    cases = [
        {"detector": "zf"},
        {"mod": 8},
        {"n_streams": 4},  # exceeds default 2x2 antennas
        {"n_rx": 1},
        {"corr_tx": 1.0},
        {"rate": 0.75},
        {"snr_db": ()},
        {"blocks": 0},
        {"iterations": 0},
        {"workers": 0},
        {"detector": "maxlog", "mod": 64, "n_streams": 4, "n_rx": 4, "n_tx": 4},
    ]
    for kwargs in cases:
        base = {**SimConfig().__dict__, **kwargs}
        with pytest.raises(ConfigError):
            validate_config(SimConfig(**base))


def test_csv_format(tmp_path):
    rec = SimRecord(
        snr_db=6.0,
        iteration=2,
        detector="lchase",
        blocks=3,
        block_errors=1,
        bit_errors=5,
        bler=1 / 3,
        ber=5 / (3 * 64),
        metric_count_mean=30.0,
        wall_time_s=0.0,
    )
    path = tmp_path / "out.csv"
    write_csv([rec], path, header_comments=("detector = lchase",))
    lines = path.read_text().splitlines()
    assert lines[0] == "# detector = lchase"
    assert lines[1] == CSV_HEADER
    assert lines[1] == (
        "snr_db,iteration,detector,blocks,block_errors,bit_errors,"
        "bler,ber,metric_count_mean,wall_time_s"
    )
    assert lines[2] == "6,2,lchase,3,1,5,0.333333333333,0.0260416666667,30,0"


def _tiny_config(**kwargs):
    base = dict(
        detector="lchase",
        mod=4,
        n_streams=2,
        n_rx=2,
        n_tx=2,
        snr_db=(2.0,),
        blocks=3,
        iterations=2,
        info_bits=16,
        seed=99,
        timing=False,
    )
    base.update(kwargs)
    return validate_config(SimConfig(**base))


def test_monte_carlo_is_reproducible():
    cfg = _tiny_config()
    first = monte_carlo(cfg)
    second = monte_carlo(cfg)
    assert first == second
    assert len(first) == 2  # one SNR point, two iterations
    assert not first[0] == monte_carlo(_tiny_config(seed=100))[0]


def test_record_consistency():
    cfg = _tiny_config(snr_db=(0.0, 8.0), blocks=4)
    records = monte_carlo(cfg)
    assert [r.iteration for r in records] == [1, 2, 1, 2]
    assert [r.snr_db for r in records] == [0.0, 0.0, 8.0, 8.0]
    for r in records:
        assert r.detector == "lchase"
        assert r.blocks == 4
        assert r.bler == r.block_errors / 4
        assert r.ber == r.bit_errors / (4 * 16)
        assert r.wall_time_s == 0.0
        # 2 streams of 4-QAM: 2*4 - 2 evaluations per detected stream.
        assert r.metric_count_mean == 6.0


def test_worker_pool_matches_serial():
    serial = monte_carlo(_tiny_config(blocks=4))
    pooled = monte_carlo(_tiny_config(blocks=4, workers=2))
    assert serial == pooled


def test_timing_column():
    records = monte_carlo(_tiny_config(timing=True, blocks=2, iterations=1))
    assert records[0].wall_time_s > 0.0


def test_config_lines_roundtrip_keys():
    lines = config_lines(_tiny_config())
    assert "detector = lchase" in lines
    assert "snr_db = 2" in lines
    assert any(line.startswith("seed = 99") for line in lines)


def test_main_smoke(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main(
        [
            "--mod", "4", "--streams", "2", "--rx", "2", "--tx", "2",
            "--snr", "2", "--blocks", "2", "--iters", "2",
            "--info-bits", "16", "--seed", "3", "--out", str(out),
        ]
    )
    assert code == 0
    captured = capsys.readouterr()
    assert f"wrote {out} (2 rows)" in captured.out
    lines = out.read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == CSV_HEADER
    assert len(body) == 3
    assert any("seed = 3" in c for c in comments)


def test_main_reports_config_errors(tmp_path, capsys):
    code = main(["--streams", "4", "--rx", "2", "--tx", "4"])
    assert code == 2
    assert "error:" in capsys.readouterr().err
