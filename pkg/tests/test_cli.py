import shutil
import subprocess
import sys

import numpy as np
import pytest

from fedvec.cli import main
from fedvec.vocab import load_vocabulary

WORDS_A = ["amber", "basil", "cedar", "dune", "ember"]
WORDS_B = ["cedar", "dune", "ember", "fjord", "grove"]


def write_corpus(path, words, n_tokens, seed):
    rng = np.random.default_rng(seed)
    tokens = [words[i] for i in rng.integers(0, len(words), size=n_tokens)]
    lines = [" ".join(tokens[i : i + 10]) for i in range(0, n_tokens, 10)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Corpora, proposals, and a merged vocabulary built through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    corpus_a = write_corpus(root / "org_a.txt", WORDS_A, 300, seed=1)
    corpus_b = write_corpus(root / "org_b.txt", WORDS_B, 300, seed=2)
    for name, corpus in (("a", corpus_a), ("b", corpus_b)):
        code = main(
            [
                "propose",
                str(corpus),
                "--vocab-cap", "100",
                "--vocab-threshold", "2",
                "--out", str(root / f"proposal_{name}.txt"),
            ]
        )
        assert code == 0
    code = main(
        [
            "merge",
            str(root / "proposal_a.txt"),
            str(root / "proposal_b.txt"),
            "--vocab-cap", "100",
            "--vocab-threshold", "2",
            "--out", str(root / "vocab.txt"),
        ]
    )
    assert code == 0
    return root


TRAIN_FLAGS = [
    "--batch", "16",
    "--dim", "8",
    "--neg", "4",
    "--window", "2",
    "--iters", "12",
    "--val-interval", "3",
    "--seed", "7",
]


@pytest.fixture(scope="module")
def checkpoint(workspace):
    out = workspace / "run_fed"
    code = main(
        [
            "train",
            str(workspace / "org_a.txt"),
            str(workspace / "org_b.txt"),
            "--mode", "federated",
            "--nodes", "2",
            "--vocab", str(workspace / "vocab.txt"),
            "--out", str(out),
            *TRAIN_FLAGS,
        ]
    )
    assert code == 0
    return out


class TestPropose:
    def test_writes_sorted_words_only(self, workspace):
        content = (workspace / "proposal_a.txt").read_text()
        assert content == "".join(w + "\n" for w in sorted(WORDS_A))

    def test_reports_sizes(self, tmp_path, capsys):
        corpus = tmp_path / "c.txt"
        corpus.write_text("pea pea pea pod pod soil\n")
        code = main(
            ["propose", str(corpus), "--vocab-threshold", "2",
             "--vocab-cap", "1", "--out", str(tmp_path / "p.txt")]
        )
        assert code == 0
        assert capsys.readouterr().out == "2 qualifying words, proposal size 1\n"
        assert (tmp_path / "p.txt").read_text() == "pea\n"

    def test_counts_out(self, tmp_path):
        corpus = tmp_path / "c.txt"
        corpus.write_text("b a b b a c\n")
        code = main(
            ["propose", str(corpus), "--out", str(tmp_path / "p.txt"),
             "--vocab-threshold", "1", "--counts-out", str(tmp_path / "counts.tsv")]
        )
        assert code == 0
        assert (tmp_path / "counts.tsv").read_text() == "b\t3\na\t2\nc\t1\n"

    def test_empty_corpus_is_an_empty_proposal(self, tmp_path, capsys):
        corpus = tmp_path / "c.txt"
        corpus.write_text("\n")
        code = main(["propose", str(corpus), "--out", str(tmp_path / "p.txt")])
        assert code == 0
        assert (tmp_path / "p.txt").read_text() == ""

    def test_bad_threshold_exits_1(self, tmp_path, capsys):
        corpus = tmp_path / "c.txt"
        corpus.write_text("a\n")
        code = main(
            ["propose", str(corpus), "--vocab-threshold", "0", "--out", str(tmp_path / "p.txt")]
        )
        assert code == 1
        assert "usage error" in capsys.readouterr().err

    def test_missing_corpus_exits_1(self, tmp_path, capsys):
        code = main(["propose", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "p.txt")])
        assert code == 1
        assert "no such corpus file" in capsys.readouterr().err


class TestMerge:
    def test_union_vocabulary(self, workspace, capsys):
        vocab = load_vocabulary(workspace / "vocab.txt")
        assert list(vocab.words) == sorted(set(WORDS_A) | set(WORDS_B))
        assert vocab.merge_mode == "union"

    def test_intersection_mode(self, workspace, tmp_path, capsys):
        out = tmp_path / "inter.txt"
        code = main(
            ["merge", str(workspace / "proposal_a.txt"), str(workspace / "proposal_b.txt"),
             "--mode", "intersection", "--vocab-cap", "100", "--vocab-threshold", "2",
             "--out", str(out)]
        )
        assert code == 0
        assert capsys.readouterr().out == "vocabulary size 3 (0.0300 of cap)\n"
        vocab = load_vocabulary(out)
        assert list(vocab.words) == sorted(set(WORDS_A) & set(WORDS_B))

    def test_empty_intersection_exits_1(self, tmp_path, capsys):
        (tmp_path / "p1.txt").write_text("apple\n")
        (tmp_path / "p2.txt").write_text("zebra\n")
        code = main(
            ["merge", str(tmp_path / "p1.txt"), str(tmp_path / "p2.txt"),
             "--mode", "intersection", "--out", str(tmp_path / "v.txt")]
        )
        assert code == 1
        assert not (tmp_path / "v.txt").exists()

    def test_missing_proposal_exits_1(self, tmp_path, capsys):
        code = main(["merge", str(tmp_path / "ghost.txt"), "--out", str(tmp_path / "v.txt")])
        assert code == 1


class TestTrain:
    def test_artifacts_and_loss_schedule(self, checkpoint, workspace):
        for name in (
            "loss.csv",
            "input_embeddings.txt",
            "output_embeddings.txt",
            "vocab.txt",
            "manifest.txt",
        ):
            assert (checkpoint / name).is_file()
        lines = (checkpoint / "loss.csv").read_text().splitlines()
        assert lines[0] == "iteration,epoch,node,loss"
        assert len(lines) == 1 + 12 // 3
        for line in lines[1:]:
            iteration, epoch, node, loss = line.split(",")
            assert int(iteration) % 3 == 0
            assert int(epoch) >= 0
            assert node == "global"
            assert float(loss) > 0
        # The written vocabulary equals the one trained against.
        assert (checkpoint / "vocab.txt").read_bytes() == (workspace / "vocab.txt").read_bytes()

    def test_single_node_federated_equals_centralized(self, workspace):
        args_common = [
            str(workspace / "org_a.txt"),
            "--vocab", str(workspace / "vocab.txt"),
            *TRAIN_FLAGS,
        ]
        fed_out = workspace / "run_n1_fed"
        cen_out = workspace / "run_n1_cen"
        assert main(["train", *args_common, "--mode", "federated", "--nodes", "1",
                     "--out", str(fed_out)]) == 0
        assert main(["train", *args_common, "--mode", "centralized",
                     "--out", str(cen_out)]) == 0
        for name in ("loss.csv", "input_embeddings.txt", "output_embeddings.txt"):
            assert (fed_out / name).read_bytes() == (cen_out / name).read_bytes()

    def test_manifest_rerun_reproduces_artifacts_byte_for_byte(self, checkpoint, workspace):
        rerun = workspace / "run_rerun"
        code = main(
            ["train", "--config", str(checkpoint / "manifest.txt"), "--out", str(rerun)]
        )
        assert code == 0
        for name in (
            "loss.csv",
            "input_embeddings.txt",
            "output_embeddings.txt",
            "vocab.txt",
            "manifest.txt",
        ):
            assert (rerun / name).read_bytes() == (checkpoint / name).read_bytes()

    def test_flags_override_config_file(self, workspace, tmp_path):
        config = tmp_path / "cfg.txt"
        config.write_text(
            "mode=centralized\n"
            f"vocab={workspace / 'vocab.txt'}\n"
            f"datasets={workspace / 'org_a.txt'}\n"
            "batch=16\ndim=8\nneg=4\nwindow=2\niters=4\nval_interval=2\nseed=7\n"
        )
        out = tmp_path / "run"
        code = main(["train", "--config", str(config), "--iters", "6", "--out", str(out)])
        assert code == 0
        manifest = (out / "manifest.txt").read_text()
        assert "iters=6\n" in manifest
        assert "batch=16\n" in manifest  # file value survives where no flag given
        lines = (out / "loss.csv").read_text().splitlines()
        assert len(lines) == 1 + 6 // 2

    def test_unknown_config_key_exits_1(self, workspace, tmp_path, capsys):
        config = tmp_path / "cfg.txt"
        config.write_text("flux_capacitor=1\n")
        code = main(["train", "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_dataset_count_mismatch_exits_1(self, workspace, tmp_path, capsys):
        code = main(
            ["train", str(workspace / "org_a.txt"),
             "--mode", "federated", "--nodes", "2",
             "--vocab", str(workspace / "vocab.txt"), "--out", str(tmp_path / "o"),
             *TRAIN_FLAGS[:-2]]
        )
        assert code == 1
        assert "expected 2" in capsys.readouterr().err

    def test_centralized_takes_one_dataset(self, workspace, tmp_path, capsys):
        code = main(
            ["train", str(workspace / "org_a.txt"), str(workspace / "org_b.txt"),
             "--mode", "centralized",
             "--vocab", str(workspace / "vocab.txt"), "--out", str(tmp_path / "o")]
        )
        assert code == 1

    def test_missing_mode_exits_1(self, workspace, tmp_path, capsys):
        code = main(
            ["train", str(workspace / "org_a.txt"),
             "--vocab", str(workspace / "vocab.txt"), "--out", str(tmp_path / "o")]
        )
        assert code == 1
        assert "--mode is required" in capsys.readouterr().err

    def test_invalid_hyperparameter_exits_1(self, workspace, tmp_path, capsys):
        code = main(
            ["train", str(workspace / "org_a.txt"), "--mode", "centralized",
             "--vocab", str(workspace / "vocab.txt"), "--out", str(tmp_path / "o"),
             "--iters", "0"]
        )
        assert code == 1

    def test_missing_vocab_file_exits_1(self, workspace, tmp_path, capsys):
        code = main(
            ["train", str(workspace / "org_a.txt"), "--mode", "centralized",
             "--vocab", str(tmp_path / "ghost.txt"), "--out", str(tmp_path / "o")]
        )
        assert code == 1
        assert "no such vocabulary file" in capsys.readouterr().err


class TestNeighbors:
    def test_query_output_shape(self, checkpoint, capsys):
        code = main(["neighbors", "cedar", "--checkpoint", str(checkpoint), "-k", "3"])
        assert code == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0] == "query\tcedar"
        assert lines[-1] == ""  # blank separator after each query block
        assert len(lines) == 5  # header + 3 neighbors + separator
        for rank, line in enumerate(lines[1:-1], 1):
            got_rank, word, dist = line.split("\t")
            assert int(got_rank) == rank
            assert word != "cedar"
            assert 0.0 <= float(dist) <= 2.0

    def test_unknown_word_alone_exits_1(self, checkpoint, capsys):
        code = main(["neighbors", "quetzal", "--checkpoint", str(checkpoint)])
        assert code == 1
        captured = capsys.readouterr()
        assert "quetzal" in captured.err
        assert captured.out == ""

    def test_mixed_queries_exit_0_with_stderr_note(self, checkpoint, capsys):
        code = main(["neighbors", "quetzal", "cedar", "--checkpoint", str(checkpoint)])
        assert code == 0
        captured = capsys.readouterr()
        assert "quetzal" in captured.err
        assert "query\tcedar" in captured.out

    def test_bad_k_exits_1(self, checkpoint, capsys):
        assert main(["neighbors", "cedar", "--checkpoint", str(checkpoint), "-k", "0"]) == 1

    def test_missing_checkpoint_exits_1(self, tmp_path, capsys):
        assert main(["neighbors", "cedar", "--checkpoint", str(tmp_path / "none")]) == 1

    def test_tampered_checkpoint_exits_1(self, checkpoint, tmp_path, capsys):
        broken = tmp_path / "broken"
        shutil.copytree(checkpoint, broken)
        emb = broken / "input_embeddings.txt"
        lines = emb.read_text().splitlines()
        first_word = lines[1].split(" ")[0]
        lines[1] = lines[1].replace(first_word, "intruder", 1)
        emb.write_text("\n".join(lines) + "\n")
        code = main(["neighbors", "cedar", "--checkpoint", str(broken)])
        assert code == 1
        assert "disagree" in capsys.readouterr().err


class TestExport:
    def test_reexport_is_byte_identical(self, checkpoint, tmp_path):
        for which in ("input", "output"):
            out = tmp_path / f"{which}.txt"
            code = main(
                ["export", "--checkpoint", str(checkpoint), "--which", which, "--out", str(out)]
            )
            assert code == 0
            original = (checkpoint / f"{which}_embeddings.txt").read_bytes()
            assert out.read_bytes() == original

    def test_bad_which_exits_1(self, checkpoint, tmp_path, capsys):
        code = main(
            ["export", "--checkpoint", str(checkpoint), "--which", "sideways",
             "--out", str(tmp_path / "e.txt")]
        )
        assert code == 1


class TestEntryPoints:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "fedvec.cli", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip().startswith("fedvec ")

    def test_console_script_if_installed(self):
        exe = shutil.which("fedvec")
        if exe is None:
            pytest.skip("console script not on PATH")
        proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
        assert proc.returncode == 0

    def test_no_subcommand_exits_1(self, capsys):
        assert main([]) == 1

    def test_unknown_flag_exits_1(self, capsys):
        assert main(["train", "--warp-speed", "9"]) == 1
