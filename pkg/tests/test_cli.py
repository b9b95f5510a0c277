import csv
import json

import numpy as np
import pytest

from softremish import bench
from softremish.activations import RELU, SOFTREMISH
from softremish.activations import eval as act_eval
from softremish.cli import main
from softremish.config import (
    SCHEMA,
    benchmark_config_from,
    defaults,
    dump_config,
    load_config,
    parse_config_text,
    train_config_from,
)
from softremish.errors import ConfigError

QUICK = ["--epochs", "1", "--synthetic", "200", "--batch", "64", "-q"]


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --------------------------------------------------------------------------
# config files


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("")
    assert load_config(p) == defaults()


def test_unknown_key_names_line(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("epoch=3\n")
    with pytest.raises(ConfigError, match="line 1") as info:
        load_config(p)
    assert info.value.line == 1


@pytest.mark.parametrize(
    "text,line",
    [("epochs=3\nbatch=abc\n", 2), ("# comment\n\nseed\n", 3), ("lr=nan\n", 1), ("sweep_dense=maybe\n", 1)],
)
def test_bad_lines(text, line):
    with pytest.raises(ConfigError, match=f"line {line}"):
        parse_config_text(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.txt")


def test_parse_values():
    s = parse_config_text("activation = relu, mish  # two\nrange=-3 3\nsynthetic=none\nsweep-dense=false\n")
    assert s == {"activation": ["relu", "mish"], "range": (-3.0, 3.0), "synthetic": None, "sweep_dense": False}


def test_dump_round_trips():
    s = defaults()
    s.update(activation=["tanh", "softremish"], alpha=1.5, synthetic=300, lr=3e-4, range=(-2.0, 7.5))
    assert {**defaults(), **parse_config_text(dump_config(s))} == s
    assert dump_config(s).count("\n") == len(SCHEMA)


def test_configs_from_settings():
    s = defaults()
    s.update(activation=["softremish"], alpha=1.0, batch=32, optimizer="sgd")
    cfg = train_config_from(s)
    assert cfg.activation.alpha == 1.0 and cfg.batch_size == 32 and cfg.optimizer.kind == "sgd"
    b = benchmark_config_from(defaults())
    assert [k.label for k in b.activations] == ["relu", "tanh", "mish", "softremish"]
    s["activation"] = ["swish"]
    with pytest.raises(ConfigError):
        train_config_from(s)
    s.update(activation=["relu"], repeats=0)
    with pytest.raises(ConfigError):
        benchmark_config_from(s)


# --------------------------------------------------------------------------
# train


def test_train_command(tmp_path, capsys):
    out = tmp_path / "r"
    code = main(["train", "--activation", "softremish", "--alpha", "2", "--epochs", "1",
                 "--synthetic", "512", "--seed", "7", "--out", str(out)])
    assert code == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["config.txt", "metrics_softremish_seed7.jsonl"]
    recs = read_jsonl(out / "metrics_softremish_seed7.jsonl")
    assert [r["type"] for r in recs] == ["config", "epoch", "summary"]
    assert recs[0]["config"]["seed"] == 7 and recs[-1]["status"] == "ok"
    assert "max val accuracy" in capsys.readouterr().out


def test_train_defaults_to_softremish(tmp_path):
    assert main(["train", *QUICK, "--out", str(tmp_path)]) == 0
    assert (tmp_path / "metrics_softremish_seed0.jsonl").exists()


def test_echoed_config_reruns_identically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["train", "--activation", "tanh", *QUICK, "--out", str(a)]) == 0
    cfg = (a / "config.txt").read_text()
    (tmp_path / "again.txt").write_text(cfg.replace(f"out={a}", f"out={b}"))
    assert main(["train", "--config", str(tmp_path / "again.txt"), "-q"]) == 0
    assert (a / "metrics_tanh_seed0.jsonl").read_bytes() == (b / "metrics_tanh_seed0.jsonl").read_bytes()


def test_bogus_activation_is_usage_error(tmp_path, capsys):
    assert main(["train", "--activation", "bogus", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "softremish" in err and "relu" in err


def test_bogus_activation_in_file(tmp_path, capsys):
    p = tmp_path / "c.txt"
    p.write_text("activation=bogus\n")
    assert main(["train", "--config", str(p), "--synthetic", "100"]) == 2
    assert "valid names" in capsys.readouterr().err


def test_batch_zero_is_config_error(tmp_path):
    assert main(["train", "--batch", "0", "--synthetic", "100", "--out", str(tmp_path)]) == 2


def test_train_needs_one_activation(tmp_path):
    args = ["train", "--activation", "relu", "--activation", "tanh", *QUICK, "--out", str(tmp_path)]
    assert main(args) == 2


def test_missing_data_dir(tmp_path):
    assert main(["train", "--data-dir", str(tmp_path / "none"), "--out", str(tmp_path)]) == 2
    assert main(["train", "--out", str(tmp_path)]) == 2


def test_data_error_exit_code(tmp_path):
    (tmp_path / "train-images-idx3-ubyte").write_bytes(b"\x00\x00\x08\x01" + b"\x00" * 12)
    assert main(["train", "--data-dir", str(tmp_path), "--out", str(tmp_path / "o")]) == 3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit_code(tmp_path):
    args = ["train", "--activation", "relu", "--optimizer", "sgd", "--lr", "1e30", *QUICK, "--out", str(tmp_path)]
    assert main(args) == 4
    recs = read_jsonl(tmp_path / "metrics_relu_seed0.jsonl")
    assert recs[-1]["status"] == "diverged"


def test_flag_overrides_file(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("epochs=3\nsynthetic=100\nbatch=50\n")
    out = tmp_path / "o"
    assert main(["train", "--config", str(p), "--epochs", "2", "--out", str(out), "-q"]) == 0
    recs = read_jsonl(out / "metrics_softremish_seed0.jsonl")
    assert recs[0]["config"]["epochs"] == 2 and recs[0]["config"]["batch_size"] == 50
    assert sum(r["type"] == "epoch" for r in recs) == 2
    assert "epochs=2\n" in (out / "config.txt").read_text()


def test_no_subcommand():
    assert main([]) == 2


# --------------------------------------------------------------------------
# bench


@pytest.fixture(scope="module")
def bench_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    assert main(["bench", "--repeats", "2", "--seed", "10", *QUICK, "--out", str(out)]) == 0
    return out


def test_bench_counts(bench_dir):
    runs = read_jsonl(bench_dir / "runs.jsonl")
    assert len(runs) == 8
    assert sorted({(r["activation"], r["seed"]) for r in runs}) == sorted(
        (a, s) for a in ("relu", "tanh", "mish", "softremish") for s in (10, 11)
    )
    assert len(list((bench_dir / "runs").iterdir())) == 8
    t1 = read_csv(bench_dir / "table1_accuracy.csv")
    t2 = read_csv(bench_dir / "table2_loss.csv")
    assert t1[0][:3] == ["activation", "alpha", "validation_accuracy"]
    assert t2[0][:4] == ["activation", "alpha", "validation_loss", "training_loss_min"]
    assert [r[0] for r in t1[1:]] == [r[0] for r in t2[1:]] == ["relu", "tanh", "mish", "softremish"]


def test_bench_aggregates_recompute(bench_dir):
    runs = read_jsonl(bench_dir / "runs.jsonl")
    rows = {r[0]: r for r in read_csv(bench_dir / "table1_accuracy.csv")[1:]}
    losses = {r[0]: r for r in read_csv(bench_dir / "table2_loss.csv")[1:]}
    for act, row in rows.items():
        mine = [r for r in runs if r["activation"] == act]
        assert row[2] == bench.fmt_acc(max(r["max_val_accuracy"] for r in mine))
        assert row[3] == bench.fmt_acc(sum(r["max_val_accuracy"] for r in mine) / 2)
        assert losses[act][2] == bench.fmt_loss(min(r["min_val_loss"] for r in mine))
        assert losses[act][3] == bench.fmt_loss(min(r["min_train_loss"] for r in mine))
        for r in mine:
            assert r["max_val_accuracy"] == max(e["val_accuracy"] for e in r["epochs"])
    ranks = sorted(rows.values(), key=lambda r: int(r[4]))
    assert [float(r[2]) for r in ranks] == sorted((float(r[2]) for r in ranks), reverse=True)


def test_table_number_formats():
    assert bench.fmt_acc(0.9941) == "0.9941"
    assert bench.fmt_acc(1 / 3) == "0.333333333"
    assert bench.fmt_loss(3.137582e-8) == "3.137582e-08"
    assert bench.fmt_loss(float("nan")) == "NA"


def test_bench_single_activation(tmp_path):
    assert main(["bench", "--activation", "softremish", "--alpha", "1", *QUICK, "--out", str(tmp_path)]) == 0
    t1 = read_csv(tmp_path / "table1_accuracy.csv")
    assert t1[1][:2] == ["softremish", "1"]
    assert (tmp_path / "runs" / "metrics_softremish-a1_seed0.jsonl").exists()


# --------------------------------------------------------------------------
# curves


def test_curves_order0(tmp_path):
    assert main(["curves", "--order", "0", "--range", "-5", "5", "--samples", "1001", "--out", str(tmp_path)]) == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == sorted(f"fig1_{n}.csv" for n in ("relu", "tanh", "softplus", "mish", "softremish"))
    for name in files:
        rows = read_csv(tmp_path / name)
        assert rows[0] == ["x", "y"] and len(rows) == 1002


def test_curves_default_writes_three_orders(tmp_path):
    assert main(["curves", "--samples", "11", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.iterdir())) == 15
    relu2 = read_csv(tmp_path / "fig3_relu.csv")[1:]
    assert all(float(y) == 0.0 for _, y in relu2)


def test_curves_values_match_eval(tmp_path):
    assert main(["curves", "--order", "0", "--activation", "softremish", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "fig1_softremish.csv")[1:]
    xs = np.array([float(x) for x, _ in rows])
    ys = np.array([float(y) for _, y in rows])
    assert np.array_equal(ys, act_eval(SOFTREMISH, xs))


@pytest.mark.parametrize("args", [["--range", "1", "-1"], ["--samples", "1"], ["--range", "0", "0"]])
def test_curves_bad_range(tmp_path, args):
    assert main(["curves", *args, "--out", str(tmp_path)]) == 2


def test_curve_file_names():
    assert bench.curve_file_name(RELU, 2) == "fig3_relu.csv"
    assert bench.curve_text(RELU, 0, -1, 1, 3) == "x,y\n-1.0,0.0\n0.0,0.0\n1.0,1.0\n"
