import json

import pytest
from fastapi.testclient import TestClient

from shiftsearch.corpus import generate_synthetic_corpus
from shiftsearch.embedding import HashedNgramProvider
from shiftsearch.evaluation import fuse_votes
from shiftsearch.index import IndexConfig, build_index, save_index
from shiftsearch.search import SearchConfig, run_search
from shiftsearch.service import (
    AssessmentPlan,
    FeedbackLog,
    ServiceConfig,
    ServiceConfigError,
    build_app,
    load_plan,
    load_service_config,
    save_plan,
)


@pytest.fixture(scope="module")
def service_env(tmp_path_factory):
    root = tmp_path_factory.mktemp("service")
    bench = generate_synthetic_corpus(21, 60, 5)
    provider = HashedNgramProvider(seed=13, dim=32)
    index = build_index(bench.records, bench.dictionary, provider, IndexConfig())
    save_index(index, root / "idx")

    qid, text = bench.queries[0]
    frozen = run_search(index, provider, text, SearchConfig(page_size=10))
    plan = AssessmentPlan(
        version=1,
        assessment_method="semantic",
        queries={qid: text},
        assignments={"a1": (qid,), "a2": (qid,)},
        rankings={"semantic": {qid: tuple(r.record_id for r in frozen)}},
    )
    save_plan(plan, root / "plan.json")

    config = ServiceConfig(
        index_dir=str(root / "idx"),
        feedback_log=str(root / "feedback.jsonl"),
        plan_path=str(root / "plan.json"),
    )
    return {
        "root": root, "bench": bench, "index": index,
        "config": config, "plan": plan, "qid": qid, "query_text": text,
        "top_id": frozen[0].record_id,
    }


@pytest.fixture(scope="module")
def client(service_env):
    return TestClient(build_app(service_env["config"]))


class TestHealth:
    def test_healthz(self, client, service_env):
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["doc_count"] == service_env["index"].doc_count


class TestSearchEndpoint:
    def test_round_trip(self, client, service_env):
        r = client.get("/api/search", params={"q": service_env["query_text"]})
        assert r.status_code == 200
        body = r.json()
        assert body["count"] == len(body["results"]) <= 20
        top = body["results"][0]
        for key in ("record_id", "title", "body", "timestamp", "score"):
            assert key in top

    def test_limit(self, client, service_env):
        r = client.get("/api/search",
                       params={"q": service_env["query_text"], "limit": 3})
        assert len(r.json()["results"]) <= 3

    def test_time_sort_reorders_page(self, client, service_env):
        r = client.get("/api/search",
                       params={"q": service_env["query_text"], "sort": "time"})
        stamps = [item["timestamp"] for item in r.json()["results"]]
        assert stamps == sorted(stamps, reverse=True)

    def test_method_and_expansion_switches(self, client, service_env):
        for method in ("semantic", "bm25", "keyword"):
            for expansion in ("on", "off"):
                r = client.get("/api/search", params={
                    "q": service_env["query_text"],
                    "method": method, "expansion": expansion,
                })
                assert r.status_code == 200, (method, expansion)

    def test_empty_query_400(self, client):
        r = client.get("/api/search", params={"q": "   "})
        assert r.status_code == 400
        assert r.json() == {"code": "empty_query", "message": "empty query"}

    @pytest.mark.parametrize("params,code", [
        ({"q": "x", "method": "grep"}, "invalid_method"),
        ({"q": "x", "sort": "up"}, "invalid_sort"),
        ({"q": "x", "expansion": "maybe"}, "invalid_expansion"),
        ({"q": "x", "limit": "many"}, "invalid_limit"),
        ({"q": "x", "limit": "0"}, "invalid_limit"),
    ])
    def test_parameter_validation(self, client, params, code):
        r = client.get("/api/search", params=params)
        assert r.status_code == 400
        assert r.json()["code"] == code


class TestRecordEndpoint:
    def test_full_record(self, client, service_env):
        rid = service_env["top_id"]
        r = client.get(f"/api/records/{rid}")
        assert r.status_code == 200
        body = r.json()
        record = service_env["index"].record(rid)
        assert body["record_id"] == rid
        assert body["timestamp"] == record.timestamp
        assert body["attributes"] == list(record.attributes)
        assert body["body"] == [[name, text] for name, text in record.body]

    def test_unknown_record_404(self, client):
        r = client.get("/api/records/r9999x")
        assert r.status_code == 404
        assert r.json()["code"] == "not_found"


class TestPlanEndpoint:
    def test_assessor_view(self, client, service_env):
        r = client.get("/api/plan/a1")
        assert r.status_code == 200
        body = r.json()
        assert body["assessor_id"] == "a1"
        assert body["assessment_method"] == "semantic"
        [query] = body["queries"]
        assert query["query_id"] == service_env["qid"]
        assert query["text"] == service_env["query_text"]
        assert len(query["records"]) == 10
        assert query["records"][0]["record_id"] == service_env["top_id"]

    def test_no_scores_leak_in_assessment_payload(self, client):
        payload = json.dumps(client.get("/api/plan/a1").json())
        for needle in ('"score"', '"doc_sim"', '"term_sim"'):
            assert needle not in payload

    def test_unknown_assessor_404(self, client):
        r = client.get("/api/plan/nobody")
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_assessor"

    def test_missing_plan_404(self, service_env):
        config = ServiceConfig(
            index_dir=service_env["config"].index_dir,
            feedback_log=str(service_env["root"] / "other.jsonl"),
        )
        bare = TestClient(build_app(config))
        r = bare.get("/api/plan/a1")
        assert r.status_code == 404
        assert r.json()["code"] == "no_plan"


class TestFeedbackEndpoint:
    def payload(self, service_env, **kw):
        base = {
            "query_id": service_env["qid"],
            "record_id": service_env["top_id"],
            "assessor_id": "a1",
            "level": "term",
            "relevant": True,
        }
        base.update(kw)
        return base

    def test_stored_and_acknowledged(self, client, service_env):
        r = client.post("/api/feedback", json=self.payload(service_env))
        assert r.status_code == 201
        body = r.json()
        assert body["status"] == "stored"
        assert body["plan_id"] == "plan"
        assert body["event"]["level"] == "term"

    def test_ad_hoc_plan_id_for_unplanned_query(self, client, service_env):
        r = client.post("/api/feedback",
                        json=self.payload(service_env, query_id="freeform"))
        assert r.status_code == 201
        assert r.json()["plan_id"] == "ad-hoc"

    def test_missing_fields_listed(self, client):
        r = client.post("/api/feedback", json={"query_id": "q1"})
        assert r.status_code == 400
        message = r.json()["message"]
        for name in ("record_id", "assessor_id", "level", "relevant"):
            assert name in message

    def test_bad_level(self, client, service_env):
        r = client.post("/api/feedback", json=self.payload(service_env, level="vibe"))
        assert r.status_code == 400

    def test_non_boolean_relevant(self, client, service_env):
        r = client.post("/api/feedback", json=self.payload(service_env, relevant="yes"))
        assert r.status_code == 400

    def test_unknown_record_404(self, client, service_env):
        r = client.post("/api/feedback",
                        json=self.payload(service_env, record_id="rxxxx"))
        assert r.status_code == 404
        assert r.json()["code"] == "unknown_record"

    def test_invalid_body_400(self, client):
        r = client.post("/api/feedback", content=b"{nope",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400
        assert r.json()["code"] == "invalid_body"


class TestExportsAndDurability:
    def test_exports_reflect_fused_votes(self, service_env, tmp_path):
        config = ServiceConfig(
            index_dir=service_env["config"].index_dir,
            feedback_log=str(tmp_path / "fb.jsonl"),
            plan_path=service_env["config"].plan_path,
        )
        client = TestClient(build_app(config))
        rid = service_env["top_id"]
        for assessor in ("a1", "a2"):
            for level in ("term", "phrase"):
                r = client.post("/api/feedback", json={
                    "query_id": service_env["qid"], "record_id": rid,
                    "assessor_id": assessor, "level": level, "relevant": True,
                })
                assert r.status_code == 201
        qrels_text = client.get("/api/export/qrels").text
        assert f"{service_env['qid']} 0 {rid} 4" in qrels_text

        lines = client.get("/api/export/feedback").text.strip().splitlines()
        assert len(lines) == 4
        events = [json.loads(line) for line in lines]
        assert {e["assessor_id"] for e in events} == {"a1", "a2"}

    def test_duplicate_key_keeps_last_write(self, service_env, tmp_path):
        config = ServiceConfig(
            index_dir=service_env["config"].index_dir,
            feedback_log=str(tmp_path / "fb.jsonl"),
        )
        client = TestClient(build_app(config))
        base = {
            "query_id": "q1", "record_id": service_env["top_id"],
            "assessor_id": "a1", "level": "term",
        }
        client.post("/api/feedback", json={**base, "relevant": True})
        client.post("/api/feedback", json={**base, "relevant": False})
        [line] = client.get("/api/export/feedback").text.strip().splitlines()
        assert json.loads(line)["relevant"] is False

    def test_feedback_survives_restart(self, service_env, tmp_path):
        config = ServiceConfig(
            index_dir=service_env["config"].index_dir,
            feedback_log=str(tmp_path / "fb.jsonl"),
        )
        first = TestClient(build_app(config))
        r = first.post("/api/feedback", json={
            "query_id": "q1", "record_id": service_env["top_id"],
            "assessor_id": "a1", "level": "phrase", "relevant": True,
        })
        assert r.status_code == 201

        reborn = TestClient(build_app(config))
        lines = reborn.get("/api/export/feedback").text.strip().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["level"] == "phrase"

    def test_log_timestamps_strictly_increase(self, tmp_path):
        from shiftsearch.evaluation import FeedbackEvent

        log = FeedbackLog(tmp_path / "fb.jsonl")
        stamps = []
        for i in range(5):
            ts = log.next_timestamp()
            log.append(FeedbackEvent(
                assessor_id="a1", query_id="q1", record_id=f"r{i}",
                level="term", relevant=True, timestamp=ts,
            ))
            stamps.append(ts)
        assert all(b > a for a, b in zip(stamps, stamps[1:]))
        fresh = FeedbackLog(tmp_path / "fb.jsonl")
        assert fresh.next_timestamp() > stamps[-1]


class TestServiceConfig:
    def test_file_with_comments_and_overrides(self, tmp_path, monkeypatch):
        path = tmp_path / "svc.conf"
        path.write_text(
            "# search service\n"
            "index_dir = idx\n"
            "port = 9000   # local\n"
            "method = bm25\n"
            "query_expansion = off\n",
            encoding="utf-8",
        )
        config = load_service_config(path)
        assert config.index_dir == "idx"
        assert config.port == 9000
        assert config.method == "bm25"
        assert config.query_expansion is False

        monkeypatch.setenv("SHIFTSEARCH_PORT", "7777")
        monkeypatch.setenv("SHIFTSEARCH_INDEX_DIR", "elsewhere")
        config = load_service_config(path)
        assert config.port == 7777
        assert config.index_dir == "elsewhere"

    def test_unknown_key_reports_line(self, tmp_path):
        path = tmp_path / "svc.conf"
        path.write_text("index_dir = idx\nbogus = 1\n", encoding="utf-8")
        with pytest.raises(ServiceConfigError, match="line 2"):
            load_service_config(path)

    def test_index_dir_required(self, tmp_path):
        path = tmp_path / "svc.conf"
        path.write_text("port = 9000\n", encoding="utf-8")
        with pytest.raises(ServiceConfigError, match="index_dir"):
            load_service_config(path)

    def test_port_bounds(self):
        with pytest.raises(ServiceConfigError):
            ServiceConfig(index_dir="idx", port=0)

    def test_plan_round_trip(self, service_env):
        loaded = load_plan(service_env["root"] / "plan.json")
        assert loaded == service_env["plan"]

    def test_plan_requires_rankings_for_method(self):
        with pytest.raises(ValueError, match="ranking"):
            AssessmentPlan(
                version=1, assessment_method="semantic",
                queries={"q1": "x"}, assignments={"a1": ("q1",)}, rankings={},
            )

    def test_plan_rejects_unknown_assigned_query(self):
        with pytest.raises(ValueError):
            AssessmentPlan(
                version=1, assessment_method="semantic",
                queries={"q1": "x"},
                assignments={"a1": ("q2",)},
                rankings={"semantic": {"q1": ("r1",)}},
            )


class TestStaticMount:
    def test_ui_served_when_present(self, service_env, tmp_path):
        static = tmp_path / "ui"
        static.mkdir()
        (static / "index.html").write_text("<!doctype html><title>s</title>")
        config = ServiceConfig(
            index_dir=service_env["config"].index_dir,
            feedback_log=str(tmp_path / "fb.jsonl"),
            static_dir=str(static),
        )
        client = TestClient(build_app(config))
        r = client.get("/")
        assert r.status_code == 200
        assert "doctype" in r.text
        # API still reachable next to the mount
        assert client.get("/healthz").status_code == 200
