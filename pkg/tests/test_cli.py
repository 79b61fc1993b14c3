import io
import json
import xml.etree.ElementTree as ET
from contextlib import redirect_stderr, redirect_stdout

import pytest

from covlink.cli import (EXIT_INFEASIBLE, EXIT_OK, EXIT_TIMELIMIT, EXIT_USAGE, dumps, main,
                         strip_timing)
from covlink.instance import build_edges, builtin_example, load_instance, serialize_instance

RECORD_KEYS = {"status", "objective", "best_bound", "gap", "assignment", "placement", "rho",
               "stats", "instance", "graph", "n", "p", "strategy", "require_nonempty"}
SVG = "{http://www.w3.org/2000/svg}"


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def far_pair(tmp_path):
    path = tmp_path / "far.txt"
    path.write_text("2 2 0.2\n0.5 0.5\n1 1\n0 0\n10 0\n")
    return str(path)


class TestSolve:
    def test_example2(self):
        code, out, _ = run(["solve", "--builtin", "example2", "--graph", "line", "--strategy", "inc2"])
        rec = json.loads(out)
        assert code == EXIT_OK
        assert rec["status"] == "Optimal" and rec["objective"] == 5.0
        assert '"objective": 5.0' in out
        assert set(rec) == RECORD_KEYS
        assert rec["instance"] == builtin_example("example2").digest()

    def test_matching_strategies_agree(self):
        objs = [json.loads(run(["solve", "--builtin", "example1", "--graph", "matching",
                                "--strategy", s])[1])["objective"] for s in ("inc1", "full")]
        assert objs[0] == objs[1]

    def test_field_set_stable_across_strategies(self, far_pair):
        keys = set()
        for s in ("full", "inc1", "inc2", "oracle"):
            rec = json.loads(run(["solve", "--builtin", "example2", "--graph", "cycle",
                                  "--strategy", s])[1])
            keys.add((frozenset(rec), frozenset(rec["stats"])))
        rec = json.loads(run(["solve", "--instance", far_pair, "--graph", "complete"])[1])
        keys.add((frozenset(rec), frozenset(rec["stats"])))
        assert len(keys) == 1

    def test_infeasible_exit(self, far_pair):
        code, out, _ = run(["solve", "--instance", far_pair, "--graph", "complete"])
        rec = json.loads(out)
        assert code == EXIT_INFEASIBLE
        assert rec["status"] == "Infeasible" and rec["objective"] is None

    def test_matching_odd_p(self, far_pair):
        code, out, err = run(["solve", "--instance", far_pair, "--graph", "matching", "--p", "5"])
        assert code == EXIT_USAGE and "matching requires even p" in err and out == ""

    def test_bad_file(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("2 1 0.5\n-0.1 0.1\n1 1\n0 0\n1 0\n")
        code, _, err = run(["solve", "--instance", str(bad)])
        assert code == EXIT_USAGE and "negative radius" in err
        assert run(["solve", "--instance", str(tmp_path / "missing.txt")])[0] == EXIT_USAGE
        assert run(["solve"])[0] == EXIT_USAGE
        assert run(["solve", "--builtin", "example2", "--strategy", "simplex"])[0] == EXIT_USAGE

    def test_time_limit_exit(self, tmp_path):
        inst = tmp_path / "big.txt"
        assert run(["gen", "--seed", "0", "--n", "40", "--p", "6", "--R", "0.1", "--r", "0.12",
                    "--out", str(inst)])[0] == EXIT_OK
        code, out, _ = run(["solve", "--instance", str(inst), "--graph", "line", "--strategy",
                            "inc1", "--time-limit", "0.3"])
        assert code == EXIT_TIMELIMIT and json.loads(out)["status"] == "TimeLimit"

    def test_out_file(self, tmp_path):
        path = tmp_path / "res.json"
        code, out, _ = run(["solve", "--builtin", "example2", "--graph", "line", "--out", str(path)])
        assert code == EXIT_OK and out == ""
        assert json.loads(path.read_text())["objective"] == 5

    @pytest.mark.parametrize("graph", ["line", "ringstar", "complete"])
    def test_svg(self, tmp_path, graph):
        path = tmp_path / "sol.svg"
        code, out, _ = run(["solve", "--builtin", "example1", "--graph", graph, "--strategy",
                            "full", "--svg", str(path)])
        assert code == EXIT_OK
        root = ET.parse(path).getroot()
        cls = lambda c: [e for e in root.iter() if e.get("class") == c]
        assert len(cls("facility")) == 6
        assert len(cls("link")) == len(build_edges(graph, 6).edges)
        assert len(cls("demand")) == 15
        served = sum(1 for j in json.loads(out)["assignment"] if j is not None)
        assert len(cls("coverage")) == served

    def test_json_floats_round_trip(self):
        _, out, _ = run(["solve", "--builtin", "example1", "--graph", "star"])
        rec = json.loads(out)
        assert dumps(rec) + "\n" == out

    def test_strip_timing(self):
        rec = {"a": 1, "stats": {"time_sep_s": 0.1, "nodes": 3}, "wall_s": 2}
        assert strip_timing(rec) == {"a": 1, "stats": {"nodes": 3}}


class TestGen:
    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for path in (a, b):
            code, out, _ = run(["gen", "--seed", "7", "--n", "20", "--R", "0.1", "--r", "0.2",
                                "--p", "6", "--out", str(path)])
            assert code == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        inst = load_instance(a)
        assert out.strip() == inst.digest()
        assert serialize_instance(inst) == a.read_text()

    def test_stdout(self):
        code, out, err = run(["gen", "--seed", "1", "--n", "3"])
        assert code == EXIT_OK and out.splitlines()[0] == "3 2 0.2" and len(err.strip()) == 64

    def test_bad_n(self):
        assert run(["gen", "--n", "0"])[0] == EXIT_USAGE
        assert run(["gen"])[0] == EXIT_USAGE


class TestBench:
    def test_twelve_records(self, tmp_path):
        out = tmp_path / "runs.jsonl"
        code, _, err = run(["bench", "--builtin", "example1", "--p", "2,6", "--out", str(out)])
        recs = [json.loads(line) for line in out.read_text().splitlines()]
        assert code == EXIT_OK and len(recs) == 12
        assert {(r["graph"], r["p"]) for r in recs} == {(g, p) for g in
                                                       ("complete", "cycle", "line", "star",
                                                        "ringstar", "matching") for p in (2, 6)}
        assert "o_share" in err.splitlines()[0]

    def test_summary_o_share(self, tmp_path):
        summary = tmp_path / "s.json"
        code, _, _ = run(["bench", "--builtin", "example2", "--graph", "line", "--strategy",
                          "full,inc2", "--out", str(tmp_path / "r.jsonl"), "--summary", str(summary)])
        rows = json.loads(summary.read_text())
        assert code == EXIT_OK and len(rows) == 2
        full = next(r for r in rows if r["strategy"] == "full")
        assert 0 < full["o_share"] <= 1

    def test_jobs_same_records(self, tmp_path):
        outs = []
        for jobs in ("1", "2"):
            path = tmp_path / f"r{jobs}.jsonl"
            run(["bench", "--gen-n", "8", "--seeds", "2", "--graph", "line,star", "--p", "3",
                 "--jobs", jobs, "--out", str(path)])
            recs = [strip_timing(json.loads(x)) for x in path.read_text().splitlines()]
            outs.append(sorted(json.dumps(r, sort_keys=True) for r in recs))
        assert outs[0] == outs[1]

    def test_failure_recorded(self, tmp_path):
        out = tmp_path / "r.jsonl"
        code, _, _ = run(["bench", "--builtin", "example2", "--graph", "line,matching",
                          "--out", str(out)])
        recs = [json.loads(x) for x in out.read_text().splitlines()]
        errs = [r for r in recs if r["error"]]
        assert code == EXIT_OK and len(recs) == 2 and len(errs) == 1
        assert "matching requires even p" in errs[0]["error"]

    def test_time_limit_cap(self, tmp_path):
        out = tmp_path / "r.jsonl"
        run(["bench", "--gen-n", "40", "--seeds", "1", "--graph", "line", "--strategy", "inc1",
             "--p", "6", "--R", "0.1", "--r", "0.12", "--time-limit", "1", "--out", str(out)])
        rec = json.loads(out.read_text())
        assert rec["status"] == "TimeLimit" and rec["wall_s"] <= 2.0

    def test_usage(self):
        assert run(["bench"])[0] == EXIT_USAGE
        assert run(["bench", "--builtin", "example2", "--graph", "tree"])[0] == EXIT_USAGE
