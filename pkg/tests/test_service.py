"""Pipeline, grouping, document ranking, HTTP API, and CLI behaviour."""

import json
import random
import urllib.error
import urllib.parse
import urllib.request

import pytest

from conftest import EXAMPLE_QUERY_MATHML, mi, mml, mn, mo
from generators import gen_mathml
from mathseek.http_api import create_server, serve_in_background
from mathseek.cli import main as cli_main
from mathseek.index import CorpusRecord, build_index
from mathseek.mss import ScoreTriple
from mathseek.service import FormulaHit, rank_documents, run_query


@pytest.fixture(scope="module")
def demo_index():
    rng = random.Random(20)
    records = [
        CorpusRecord("paper-1", [(0, mml(mi("a"), mo("+"), mi("b"))), (1, EXAMPLE_QUERY_MATHML)]),
        CorpusRecord("paper-2", [(0, mml(mi("a"), mo("+"), mi("c")))]),
        CorpusRecord("paper-3", [(0, mml(mi("x"), mo("-"), mi("y")))]),
    ]
    records += [CorpusRecord(f"bulk-{i}", [(0, gen_mathml(rng))]) for i in range(30)]
    return build_index(records, 1, False)


class TestRunQuery:
    def test_self_query_ranks_first_with_perfect_triple(self, demo_index):
        response = run_query(demo_index, mml(mi("a"), mo("+"), mi("b")), k=10)
        first = response.groups[0].hits[0]
        assert first.canonical == "[V!a[n:+[n:V!b]]]"
        assert first.triple == ScoreTriple.from_parts(1, 1, 0, 3)
        assert first.highlight == ["exact", "exact", "exact"]

    def test_rerank_is_a_permutation_of_core_hits(self, demo_index):
        query = mml(mi("a"), mo("+"), mi("?w0"))
        with_rerank = run_query(demo_index, query, k=15, rerank=True)
        without = run_query(demo_index, query, k=15, rerank=False)
        ids = lambda resp: sorted(
            hit.form_id for group in resp.groups for hit in group.hits
        )
        assert ids(with_rerank) == ids(without)

    def test_groups_partition_hits_and_order_by_best(self, demo_index):
        response = run_query(demo_index, mml(mi("a"), mo("+"), mi("b")), k=20)
        seen = set()
        for group in response.groups:
            assert group.hits, "empty group"
            for hit in group.hits:
                assert hit.form_id not in seen
                seen.add(hit.form_id)
        best = [group.hits[0].triple for group in response.groups]
        assert all(a >= b for a, b in zip(best, best[1:]))

    def test_group_key_distinguishes_substitution_kind(self, demo_index):
        response = run_query(demo_index, mml(mi("a"), mo("+"), mi("b")), k=20)
        keys = {}
        for group in response.groups:
            for hit in group.hits:
                keys[hit.canonical] = group.structure_key
        exact_key = keys["[V!a[n:+[n:V!b]]]"]
        substituted_key = keys["[V!a[n:+[n:V!c]]]"]
        assert exact_key.endswith("#eee")
        assert substituted_key.endswith("#eeu")

    def test_highlight_counts_match_tree_size(self, demo_index):
        response = run_query(demo_index, mml(mi("a"), mo("+"), mi("c")), k=20)
        from mathseek.slt import Slt

        for group in response.groups:
            for hit in group.hits:
                assert hit.highlight is not None
                assert len(hit.highlight) == Slt.from_canonical(hit.canonical).size

    def test_json_shape_and_determinism(self, demo_index):
        query = mml(mi("a"), mo("+"), mi("b"))
        payloads = []
        for _ in range(2):
            data = run_query(demo_index, query, k=10).to_json_dict()
            data["timingMs"] = None
            payloads.append(json.dumps(data, sort_keys=True))
        assert payloads[0] == payloads[1]
        data = json.loads(payloads[0])
        assert set(data) == {"query", "timingMs", "groups", "documents"}
        hit = data["groups"][0]["hits"][0]
        assert set(hit) == {"formId", "canonical", "diceScore", "triple", "highlight", "docs"}
        assert set(hit["triple"]) == {"h", "negUnmatched", "exact"}
        assert set(data["documents"][0]) == {"docName", "bestTriple", "hitCount"}

    def test_k_clamps_to_corpus(self, demo_index):
        response = run_query(demo_index, mml(mi("a"), mo("+"), mi("b")), k=10_000)
        count = sum(len(group.hits) for group in response.groups)
        assert 0 < count <= demo_index.formula_count


class TestReferenceHits:
    BINOM_NEG_N = mml(
        "<msub><mi>&#x3C0;</mi><mi>i</mi></msub><mo>=</mo>",
        "<msup><mn>2</mn><mrow><mo>-</mo><mi>N</mi></mrow></msup>",
        "<mrow><mo>(</mo><mtable><mtr><mtd><mi>N</mi></mtd></mtr>",
        "<mtr><mtd><mi>i</mi></mtd></mtr></mtable><mo>)</mo></mrow>",
    )
    BINOM_N_MINUS_M = mml(
        "<msub><mi>E</mi><mrow><mi>m</mi><mo>,</mo><mi>n</mi></mrow></msub><mo>=</mo>",
        "<msup><mn>2</mn><mrow><mi>n</mi><mo>-</mo><mi>m</mi></mrow></msup>",
        "<mrow><mo>(</mo><mtable><mtr><mtd><mi>n</mi></mtd></mtr>",
        "<mtr><mtd><mi>m</mi></mtd></mtr></mtable><mo>)</mo></mrow>",
    )

    def test_wildcard_query_orders_by_exact_structure(self):
        """Both binomial identities are retrieved; the one substituting only
        the wildcard outranks the one that also renames variables."""
        corpus = [
            CorpusRecord("intro", [(0, self.BINOM_NEG_N)]),
            CorpusRecord("appendix", [(0, self.BINOM_N_MINUS_M)]),
        ]
        index = build_index(corpus, None, True)
        response = run_query(index, EXAMPLE_QUERY_MATHML, k=10)
        hits = [hit for group in response.groups for hit in group.hits]
        assert len(hits) == 2
        assert hits[0].canonical.startswith("[V!π")
        assert hits[1].canonical.startswith("[V!E")
        assert hits[0].triple > hits[1].triple
        assert hits[0].triple.exact > hits[1].triple.exact


class TestDocumentRanking:
    def _hit(self, name, triple, dice, form_id=0):
        return FormulaHit(form_id, "[V!x]", dice, 1, triple, None, [(name, 0)])

    def test_single_hit(self):
        docs = rank_documents([self._hit("only", ScoreTriple.from_parts(1, 1, 0, 1), 1.0)])
        assert [d.name for d in docs] == ["only"]

    def test_best_hit_dominates(self):
        top = ScoreTriple.from_parts(1, 1, 0, 3)
        mid = ScoreTriple.from_parts(2, 3, -1, 1)
        docs = rank_documents(
            [
                self._hit("doc-a", top, 1.0, 1),
                self._hit("doc-b", mid, 0.8, 2),
                self._hit("doc-b", mid, 0.7, 3),
            ]
        )
        assert [d.name for d in docs] == ["doc-a", "doc-b"]
        assert docs[1].hit_count == 2

    def test_hit_count_breaks_triple_ties(self):
        triple = ScoreTriple.from_parts(2, 3, -1, 1)
        docs = rank_documents(
            [
                self._hit("doc-a", triple, 0.5, 1),
                self._hit("doc-b", triple, 0.5, 2),
                self._hit("doc-b", triple, 0.5, 3),
            ]
        )
        assert [d.name for d in docs] == ["doc-b", "doc-a"]

    def test_name_breaks_remaining_ties(self):
        triple = ScoreTriple.from_parts(2, 3, -1, 1)
        docs = rank_documents(
            [self._hit("zzz", triple, 0.5, 1), self._hit("aaa", triple, 0.5, 2)]
        )
        assert [d.name for d in docs] == ["aaa", "zzz"]

    def test_document_list_consistent_with_hits(self, demo_index):
        response = run_query(demo_index, mml(mi("a"), mo("+"), mi("b")), k=20)
        hit_docs = {
            name for group in response.groups for hit in group.hits for name, _ in hit.docs
        }
        assert {doc.name for doc in response.documents} == hit_docs


@pytest.fixture(scope="module")
def live_server(demo_index):
    server = create_server(demo_index, "127.0.0.1", 0)
    serve_in_background(server)
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()


def _get(url):
    try:
        with urllib.request.urlopen(url) as response:
            return response.status, json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as error:
        return error.code, json.loads(error.read().decode("utf-8"))


class TestHttpApi:
    def test_health(self, live_server, demo_index):
        status, body = _get(f"{live_server}/api/health")
        assert status == 200
        assert body == {
            "status": "ok",
            "formulae": demo_index.formula_count,
            "w": 1,
            "eol": False,
        }

    def test_search_round_trip(self, live_server):
        query = urllib.parse.quote(mml(mi("a"), mo("+"), mi("b")))
        status, body = _get(f"{live_server}/api/search?q={query}&k=5&rerank=true")
        assert status == 200
        assert body["groups"][0]["hits"][0]["canonical"] == "[V!a[n:+[n:V!b]]]"

    def test_parse_error_maps_to_400(self, live_server):
        query = urllib.parse.quote("<math><mi>x</math>")
        status, body = _get(f"{live_server}/api/search?q={query}")
        assert status == 400
        assert "error" in body

    def test_missing_query_maps_to_400(self, live_server):
        status, _ = _get(f"{live_server}/api/search")
        assert status == 400

    def test_bad_k_maps_to_400(self, live_server):
        query = urllib.parse.quote(mml(mi("x")))
        status, _ = _get(f"{live_server}/api/search?q={query}&k=0")
        assert status == 400

    def test_bad_by_maps_to_400(self, live_server):
        query = urllib.parse.quote(mml(mi("x")))
        status, _ = _get(f"{live_server}/api/search?q={query}&by=banana")
        assert status == 400

    def test_missing_index_maps_to_503(self):
        server = create_server(None, "127.0.0.1", 0)
        serve_in_background(server)
        try:
            host, port = server.server_address[:2]
            status, _ = _get(f"http://{host}:{port}/api/health")
            assert status == 503
        finally:
            server.shutdown()

    def test_fallback_page_without_static_dir(self, live_server):
        with urllib.request.urlopen(f"{live_server}/") as response:
            assert response.status == 200
            assert b"search API" in response.read()

    def test_static_dir_serving_and_traversal_guard(self, demo_index, tmp_path):
        (tmp_path / "index.html").write_text("<html>ui</html>", encoding="utf-8")
        (tmp_path / "app.js").write_text("console.log(1)", encoding="utf-8")
        server = create_server(demo_index, "127.0.0.1", 0, static_dir=str(tmp_path))
        serve_in_background(server)
        try:
            host, port = server.server_address[:2]
            base = f"http://{host}:{port}"
            with urllib.request.urlopen(f"{base}/") as response:
                assert b"ui" in response.read()
            with urllib.request.urlopen(f"{base}/app.js") as response:
                assert b"console" in response.read()
            status, _ = _get(f"{base}/../etc/passwd")
            assert status == 404
        finally:
            server.shutdown()


class TestCli:
    @pytest.fixture()
    def corpus_file(self, tmp_path):
        lines = [
            json.dumps(
                {
                    "doc": "d1",
                    "formulae": [
                        {"pos": 0, "mathml": mml(mi("a"), mo("+"), mi("b"))},
                        {"pos": 1, "mathml": mml(mi("x"))},
                    ],
                }
            ),
            "not json at all",
            json.dumps(
                {"doc": "d2", "formulae": [{"pos": 0, "mathml": mml(mi("a"), mo("+"), mi("c"))}]}
            ),
        ]
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n".join(lines), encoding="utf-8")
        return path

    def test_index_then_query_self_hit(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "built.idx"
        code = cli_main(
            ["index", "--input", str(corpus_file), "--out", str(out), "--window", "1"]
        )
        assert code == 0
        summary = capsys.readouterr().out
        assert "3 distinct formulae" in summary
        assert "1 malformed records skipped" in summary

        code = cli_main(
            ["query", "--index", str(out), "--query", mml(mi("a"), mo("+"), mi("b")), "--json"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["groups"][0]["hits"][0]["canonical"] == "[V!a[n:+[n:V!b]]]"
        assert payload["groups"][0]["hits"][0]["diceScore"] == 1.0

    def test_query_window_mismatch_warns_but_succeeds(self, corpus_file, tmp_path, caplog):
        out = tmp_path / "built.idx"
        assert cli_main(["index", "--input", str(corpus_file), "--out", str(out), "--window", "1"]) == 0
        with caplog.at_level("WARNING"):
            code = cli_main(
                [
                    "query", "--index", str(out), "--query", mml(mi("x")),
                    "--window", "2", "--text",
                ]
            )
        assert code == 0
        assert any("differs from index window" in message for message in caplog.messages)

    def test_text_output_and_by_doc(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "built.idx"
        cli_main(["index", "--input", str(corpus_file), "--out", str(out), "--window", "1"])
        capsys.readouterr()
        assert cli_main(["query", "--index", str(out), "--query", mml(mi("a"), mo("+"), mi("b")), "--by-doc"]) == 0
        output = capsys.readouterr().out
        assert "d1" in output and "d2" in output

    def test_query_file_argument(self, corpus_file, tmp_path, capsys):
        out = tmp_path / "built.idx"
        cli_main(["index", "--input", str(corpus_file), "--out", str(out), "--window", "1"])
        query_path = tmp_path / "query.xml"
        query_path.write_text(mml(mi("x")), encoding="utf-8")
        assert cli_main(["query", "--index", str(out), "--query", f"@{query_path}"]) == 0

    def test_usage_error_is_exit_1(self):
        assert cli_main(["index", "--input"]) == 1
        assert cli_main(["nonsense"]) == 1
        assert cli_main(["index", "--input", "x", "--out", "y", "--window", "zero"]) == 1

    def test_data_errors_are_exit_2(self, tmp_path):
        missing = tmp_path / "missing.jsonl"
        assert cli_main(["index", "--input", str(missing), "--out", str(tmp_path / "o.idx")]) == 2
        bogus = tmp_path / "bogus.idx"
        bogus.write_bytes(b"not an index")
        assert cli_main(["query", "--index", str(bogus), "--query", mml(mi("x"))]) == 2

    def test_bad_query_mathml_is_exit_2(self, corpus_file, tmp_path):
        out = tmp_path / "built.idx"
        cli_main(["index", "--input", str(corpus_file), "--out", str(out), "--window", "1"])
        assert cli_main(["query", "--index", str(out), "--query", "<math><broken"]) == 2
