import re

import pytest

from oracles import reference_ap
from termorder.cli import main
from termorder.evaluation import read_run

CORPUS = """\
d1\tterm order matters for retrieval
d2\torder term is reversed here
d3\tnothing relevant at all
d4\tretrieval of documents by term order
d5\tanother unrelated document
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def strip_timestamp(text):
    return re.sub(r"generated=\S+", "generated=", text)


@pytest.fixture
def workspace(tmp_path, capsys):
    (tmp_path / "corpus.tsv").write_text(CORPUS)
    (tmp_path / "topics.tsv").write_text("1\tterm order\n")
    (tmp_path / "qrels").write_text("1 0 d1 1\n1 0 d4 1\n1 0 d2 0\n")
    code, out, _ = run(capsys, "build-index", "--corpus", tmp_path / "corpus.tsv", "--format", "lines",
                       "--index", tmp_path / "ix")
    assert code == 0
    return tmp_path


class TestBuildIndex:
    def test_summary(self, tmp_path, capsys):
        (tmp_path / "c.tsv").write_text(CORPUS)
        code, out, _ = run(capsys, "build-index", "--corpus", tmp_path / "c.tsv", "--format", "lines",
                           "--index", tmp_path / "ix")
        assert code == 0
        assert "docs=5" in out

    def test_rebuild_same_hash(self, tmp_path, capsys):
        (tmp_path / "c.tsv").write_text(CORPUS)
        hashes = []
        for name in ("a", "b"):
            _, out, _ = run(capsys, "build-index", "--corpus", tmp_path / "c.tsv", "--format", "lines",
                            "--index", tmp_path / name)
            hashes.append(re.search(r"manifest=(\w+)", out).group(1))
        assert hashes[0] == hashes[1]

    def test_empty_corpus(self, tmp_path, capsys):
        (tmp_path / "c.tsv").write_text("")
        code, _, err = run(capsys, "build-index", "--corpus", tmp_path / "c.tsv", "--format", "lines",
                           "--index", tmp_path / "ix")
        assert code == 2
        assert "error" in err

    def test_malformed_corpus(self, tmp_path, capsys):
        (tmp_path / "c.trec").write_text("<DOC>\n<TEXT>no id</TEXT>\n</DOC>\n")
        code, _, err = run(capsys, "build-index", "--corpus", tmp_path / "c.trec", "--index", tmp_path / "ix")
        assert code == 2
        assert "offset 0" in err

    def test_usage_error(self, capsys):
        assert run(capsys, "build-index")[0] == 1
        assert run(capsys, "no-such-command")[0] == 1
        assert run(capsys, "eval", "--run", "x", "--qrels", "y", "--bogus")[0] == 1


class TestBatchSearch:
    def test_three_matching_docs(self, workspace, capsys):
        code, out, _ = run(capsys, "batch-search", "--index", workspace / "ix", "--topics",
                           workspace / "topics.tsv", "--model", "sdm")
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 3
        assert [line.split()[3] for line in lines] == ["1", "2", "3"]
        assert all(line.split()[1] == "Q0" for line in lines)

    def test_neutral_sdm_m_matches_sdm(self, workspace, capsys):
        common = ["--index", workspace / "ix", "--topics", workspace / "topics.tsv"]
        _, base, _ = run(capsys, "batch-search", *common, "--model", "sdm", "--lambda-ow", "0")
        _, neutral, _ = run(capsys, "batch-search", *common, "--model", "sdm-m", "--lambda-ow", "0",
                            "--neutral-order-weights")
        assert [l.split()[2] for l in base.splitlines()] == [l.split()[2] for l in neutral.splitlines()]

    def test_run_file_and_sidecar(self, workspace, capsys):
        out = workspace / "run.txt"
        code, _, _ = run(capsys, "batch-search", "--index", workspace / "ix", "--topics", workspace / "topics.tsv",
                         "--model", "plm-m", "-o", out, "--tag", "mine")
        assert code == 0
        entries = read_run(out)["1"]
        assert {e.tag for e in entries} == {"mine"}
        assert [e.score for e in entries] == sorted((e.score for e in entries), reverse=True)
        sidecar = (workspace / "run.txt.config").read_text()
        assert "config plm_lambda=4.0" in sidecar
        assert "index_manifest_sha256=" in sidecar

    def test_empty_topic_skipped(self, workspace, capsys):
        (workspace / "t2.tsv").write_text("1\tterm order\n2\t!!!\n")
        code, out, _ = run(capsys, "batch-search", "--index", workspace / "ix", "--topics",
                           workspace / "t2.tsv", "--model", "sdm")
        assert code == 0
        assert {line.split()[0] for line in out.splitlines()} == {"1"}

    def test_missing_index(self, tmp_path, capsys):
        (tmp_path / "t").write_text("1\tx\n")
        code, _, _ = run(capsys, "batch-search", "--index", tmp_path / "none", "--topics", tmp_path / "t",
                         "--model", "sdm")
        assert code == 2

    def test_threads_do_not_change_output(self, workspace, capsys):
        (workspace / "t3.tsv").write_text("1\tterm order\n2\tretrieval documents\n3\torder\n")
        common = ["batch-search", "--index", workspace / "ix", "--topics", workspace / "t3.tsv", "--model", "plm"]
        _, one, _ = run(capsys, *common)
        _, many, _ = run(capsys, *common, "--threads", "3")
        assert one == many


class TestEval:
    def write_run(self, path, docs):
        path.write_text("".join(f"1 Q0 {d} {r} {-r} t\n" for r, d in enumerate(docs, 1)))

    def test_hand_map(self, workspace, capsys):
        self.write_run(workspace / "run", ["d1", "d2", "d4"])
        code, out, _ = run(capsys, "eval", "--run", workspace / "run", "--qrels", workspace / "qrels")
        assert code == 0
        assert "all\t0.8333\t" in out
        assert reference_ap(["d1", "d2", "d4"], {"d1", "d4"}) == pytest.approx(0.8333, abs=1e-4)

    def test_against_itself(self, workspace, capsys):
        (workspace / "run").write_text("1 Q0 d1 1 0 t\n2 Q0 d2 1 0 t\n3 Q0 d4 1 0 t\n")
        (workspace / "q3").write_text("1 0 d1 1\n2 0 d4 1\n3 0 d4 1\n")
        _, out, _ = run(capsys, "eval", "--run", workspace / "run", "--qrels", workspace / "q3",
                        "--baseline", workspace / "run")
        assert "p=1 " in out
        assert "*" not in out.split("all\t")[1].splitlines()[0]

    def test_query_missing_from_qrels(self, workspace, capsys, caplog):
        (workspace / "run").write_text("1 Q0 d1 1 0 t\n9 Q0 d1 1 0 t\n")
        _, out, _ = run(capsys, "eval", "--run", workspace / "run", "--qrels", workspace / "qrels")
        assert "excluded=1" in out
        assert "query 9" in caplog.text

    def test_bad_run(self, workspace, capsys):
        (workspace / "run").write_text("1 Q0 d1\n")
        code, _, _ = run(capsys, "eval", "--run", workspace / "run", "--qrels", workspace / "qrels")
        assert code == 2


class TestSweep:
    def sweep(self, workspace, capsys, *extra):
        code, out, _ = run(capsys, "sweep", "--index", workspace / "ix", "--topics", workspace / "topics.tsv",
                           "--qrels", workspace / "qrels", *extra)
        assert code == 0
        return [line.split("\t") for line in out.splitlines() if not line.startswith("#")][1:]

    def test_single_value(self, workspace, capsys):
        rows = self.sweep(workspace, capsys, "--param", "window", "--values", "3", "--model", "sdm-m")
        assert len(rows) == 1 and rows[0][0] == "3"

    def test_lambda_grid(self, workspace, capsys):
        rows = self.sweep(workspace, capsys, "--param", "lambda", "--model", "plm-m")
        assert [float(r[0]) for r in rows] == [0.5, 1, 2, 4, 8]

    def test_window_grid(self, workspace, capsys):
        rows = self.sweep(workspace, capsys, "--param", "window", "--model", "sdm")
        assert [int(r[0]) for r in rows] == list(range(2, 16))

    def test_matches_individual_runs(self, workspace, capsys):
        rows = self.sweep(workspace, capsys, "--param", "window", "--values", "2", "5", "--model", "sdm-m")
        for value, map_, _ in rows:
            path = workspace / f"run{value}"
            run(capsys, "batch-search", "--index", workspace / "ix", "--topics", workspace / "topics.tsv",
                "--model", "sdm-m", "--window", value, "-o", path)
            _, out, _ = run(capsys, "eval", "--run", path, "--qrels", workspace / "qrels")
            assert f"all\t{float(map_):.4f}\t" in out


class TestConfig:
    def test_precedence(self, workspace, capsys):
        (workspace / "cfg").write_text("# experiment\nmu = 10\nwindow = 6\n")
        out = workspace / "run"
        run(capsys, "batch-search", "--index", workspace / "ix", "--topics", workspace / "topics.tsv",
            "--model", "sdm", "--config", workspace / "cfg", "--window", "3", "-o", out)
        sidecar = (workspace / "run.config").read_text()
        assert "config mu=10.0" in sidecar
        assert "config window=3" in sidecar
        assert "config lambda_t=0.85" in sidecar

    def test_bad_config(self, workspace, capsys):
        (workspace / "cfg").write_text("mu 10\n")
        code, _, _ = run(capsys, "batch-search", "--index", workspace / "ix", "--topics", workspace / "topics.tsv",
                         "--model", "sdm", "--config", workspace / "cfg")
        assert code == 1


def test_reports_reproducible(workspace, capsys):
    outputs = []
    for _ in range(2):
        _, out, _ = run(capsys, "analyze-order", "--index", workspace / "ix", "--topics", workspace / "topics.tsv",
                        "--qrels", workspace / "qrels")
        outputs.append(out)
    assert "generated=" in outputs[0]
    assert strip_timestamp(outputs[0]) == strip_timestamp(outputs[1])
    assert "index_manifest_sha256=" in outputs[0]


def test_analyze_order_pairs(workspace, capsys):
    code, out, _ = run(capsys, "analyze-order", "--index", workspace / "ix", "--topics", workspace / "topics.tsv",
                       "--qrels", workspace / "qrels", "--pairs", workspace / "pairs.tsv")
    assert code == 0
    # d1 and d4 hold "term order"; neither holds "order term"
    assert "p(Rel|ordered)=1.0000" in out
    rows = (workspace / "pairs.tsv").read_text().splitlines()
    assert rows[0] == "term_a\tterm_b\tDf_ab\tDf_ba\tsem"
    assert rows[1].split("\t")[2:] == ["2", "1", "0.166667"]


def test_check_axioms_synthetic(tmp_path, capsys):
    code, out, _ = run(capsys, "check-axioms", "--synthetic", "--trials", "6", "--gaps", "1",
                       "--models", "sdm", "sdm-m", "-o", tmp_path / "trials.tsv")
    assert code == 0
    assert "sdm-m" in out
    assert (tmp_path / "trials.tsv").read_text().count("\n") > 6


def test_check_axioms_on_index(tmp_path, capsys):
    run(capsys, "make-synthetic", "--out", tmp_path / "syn", "--docs", "200", "--queries", "4")
    run(capsys, "build-index", "--corpus", tmp_path / "syn" / "corpus.tsv", "--format", "lines",
        "--index", tmp_path / "ix")
    code, out, _ = run(capsys, "check-axioms", "--index", tmp_path / "ix", "--trials", "3", "--gaps", "1",
                       "--models", "plm-m", "--verbose")
    assert code == 0
    assert "plm-m" in out and " no " in out
