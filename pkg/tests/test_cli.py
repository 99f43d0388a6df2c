"""cli: every subcommand end to end, local and against a live node."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from por_ledger.cli import main
from por_ledger.keys import AuthorKey, Keyring, save_key_file
from por_ledger.ledger import load_chain
from por_ledger.node import NodeConfig, serve

from conftest import SCOPUS_DOC, WOS_DOC
from test_node import FIXED_MS, free_port


def run_cli(capsys, *argv) -> tuple[int, dict | None, dict | None]:
    """Run the CLI in-process; returns (exit code, stdout doc, stderr doc)."""
    code = main(list(argv))
    captured = capsys.readouterr()
    out = json.loads(captured.out) if captured.out.strip() else None
    err = json.loads(captured.err) if captured.err.strip().startswith("{") else None
    return code, out, err


@pytest.fixture()
def workdir(tmp_path, profile, author_key):
    (tmp_path / "scopus_a.json").write_text(json.dumps(SCOPUS_DOC), encoding="utf-8")
    (tmp_path / "wos_a.json").write_text(json.dumps(WOS_DOC), encoding="utf-8")
    (tmp_path / "author.json").write_text(json.dumps(profile.to_doc()), encoding="utf-8")
    save_key_file(tmp_path / "key.json", author_key)
    ring = Keyring()
    ring.add(author_key)
    ring.save(tmp_path / "keyring.json")
    return tmp_path


def make_conflate_file(capsys, workdir: Path) -> Path:
    out = workdir / "result.json"
    code, audit, _ = run_cli(
        capsys,
        "conflate",
        "--scopus", str(workdir / "scopus_a.json"),
        "--wos", str(workdir / "wos_a.json"),
        "--author", str(workdir / "author.json"),
        "--out", str(out),
    )
    assert code == 0, audit
    return out


class TestIngest:
    def test_normalizes_and_reports(self, capsys, workdir):
        out = workdir / "normalized.json"
        code, report, _ = run_cli(
            capsys, "ingest", "--source", "wos", "--in", str(workdir / "wos_a.json"), "--out", str(out)
        )
        assert code == 0
        assert report["schema"] == "por.ingest_report.v1"
        assert report["publications"]["records_in"] == 2
        assert report["citations"]["records_in"] == 5
        doc = json.loads(out.read_text())
        assert doc["schema"] == "por.bib.v1"
        # second pass over its own output is a no-op
        out2 = workdir / "normalized2.json"
        code, _, _ = run_cli(capsys, "ingest", "--source", "wos", "--in", str(out), "--out", str(out2))
        assert code == 0
        assert json.loads(out2.read_text()) == doc

    def test_unreadable_input_fails_with_error_doc(self, capsys, workdir):
        code, _, err = run_cli(
            capsys, "ingest", "--source", "wos", "--in", str(workdir / "absent.json"),
            "--out", str(workdir / "x.json"),
        )
        assert code == 1
        assert err["schema"] == "por.error.v1" and err["error"] == "FileUnreadable"


class TestConflate:
    def test_writes_result_and_prints_audit(self, capsys, workdir):
        out = workdir / "result.json"
        code, audit, _ = run_cli(
            capsys,
            "conflate",
            "--scopus", str(workdir / "scopus_a.json"),
            "--wos", str(workdir / "wos_a.json"),
            "--author", str(workdir / "author.json"),
            "--out", str(out),
        )
        assert code == 0
        assert audit == {
            "schema": "por.audit.v1",
            "common_citation_count": 0,
            "audit_flag": True,
            "rejected_publications": 1,
            "rejected_citations": 2,
        }
        doc = json.loads(out.read_text())
        assert doc["schema"] == "por.conflate.v1"
        assert doc["author"]["scopus_id"] == "57200000001"

    def test_empty_fixtures_still_produce_result(self, capsys, workdir):
        for name, source in (("s0.json", "SCOPUS"), ("w0.json", "WOS")):
            (workdir / name).write_text(
                json.dumps({"schema": "por.bib.v1", "source": source, "publications": [], "citations": []})
            )
        out = workdir / "empty_result.json"
        code, audit, _ = run_cli(
            capsys,
            "conflate",
            "--scopus", str(workdir / "s0.json"),
            "--wos", str(workdir / "w0.json"),
            "--author", str(workdir / "author.json"),
            "--out", str(out),
        )
        assert code == 0
        assert audit["audit_flag"] is False
        result = json.loads(out.read_text())["result"]
        assert result["unified_pub_dois"] == []


class TestSessionRunLocal:
    def test_publish_appends_to_local_chain(self, capsys, workdir):
        conflate_file = make_conflate_file(capsys, workdir)
        code, outcome, _ = run_cli(
            capsys,
            "session", "run",
            "--conflate", str(conflate_file),
            "--self", "yes", "--retracted", "yes", "--publish", "yes",
            "--key", str(workdir / "key.json"),
            "--data-dir", str(workdir / "data"),
            "--clock", f"fixed:{FIXED_MS}",
        )
        assert code == 0
        assert outcome["published"] is True
        assert outcome["metrics"]["h_index"] == 2
        chain = load_chain(workdir / "data" / "chain.json")
        assert len(chain) == 2

    def test_decline_prints_metrics_and_leaves_no_chain(self, capsys, workdir):
        conflate_file = make_conflate_file(capsys, workdir)
        code, outcome, _ = run_cli(
            capsys,
            "session", "run",
            "--conflate", str(conflate_file),
            "--self", "no", "--retracted", "no", "--publish", "no",
            "--key", str(workdir / "key.json"),
            "--data-dir", str(workdir / "data"),
        )
        assert code == 0  # declining is a successful outcome
        assert outcome["published"] is False
        assert outcome["state"] == "DECLINED"
        assert outcome["metrics"]["h_index"] == 1
        assert not (workdir / "data" / "chain.json").exists()

    def test_missing_key_is_an_error(self, capsys, workdir):
        conflate_file = make_conflate_file(capsys, workdir)
        code, _, err = run_cli(
            capsys,
            "session", "run",
            "--conflate", str(conflate_file),
            "--self", "yes", "--retracted", "yes", "--publish", "yes",
        )
        assert code == 1 and err["error"] == "SchemaViolation"


class TestChainCommands:
    def test_show_and_validate_local(self, capsys, workdir):
        conflate_file = make_conflate_file(capsys, workdir)
        run_cli(
            capsys,
            "session", "run",
            "--conflate", str(conflate_file),
            "--self", "yes", "--retracted", "yes", "--publish", "yes",
            "--key", str(workdir / "key.json"),
            "--data-dir", str(workdir / "data"),
            "--clock", f"fixed:{FIXED_MS}",
        )
        code, doc, _ = run_cli(capsys, "chain", "show", "--data-dir", str(workdir / "data"))
        assert code == 0 and len(doc["blocks"]) == 2
        code, verdict, _ = run_cli(
            capsys, "chain", "validate", "--data-dir", str(workdir / "data"),
            "--keyring", str(workdir / "keyring.json"),
        )
        assert code == 0 and verdict["valid"] is True

    def test_validate_tampered_store_prints_violation(self, capsys, workdir):
        conflate_file = make_conflate_file(capsys, workdir)
        run_cli(
            capsys,
            "session", "run",
            "--conflate", str(conflate_file),
            "--self", "yes", "--retracted", "yes", "--publish", "yes",
            "--key", str(workdir / "key.json"),
            "--data-dir", str(workdir / "data"),
            "--clock", f"fixed:{FIXED_MS}",
        )
        chain_file = workdir / "data" / "chain.json"
        doc = json.loads(chain_file.read_text())
        doc["blocks"][1]["payload"]["metrics"]["citation_count"] += 1
        chain_file.write_text(json.dumps(doc))
        code, verdict, err = run_cli(capsys, "chain", "validate", "--chain", str(chain_file))
        assert code == 1
        assert verdict["valid"] is False
        assert verdict["violation"]["index"] == 1
        assert err["error"] == "ChainInvalid"


class TestKeysGenerate:
    def test_generates_and_registers(self, capsys, workdir):
        out = workdir / "newkey.json"
        ring_path = workdir / "newring.json"
        code, doc, _ = run_cli(
            capsys, "keys", "generate", "--author", str(workdir / "author.json"),
            "--out", str(out), "--keyring", str(ring_path),
        )
        assert code == 0
        assert doc["author_ref"] == "scopus:57200000001+wos:A-1234-2019"
        ring = Keyring.load(ring_path)
        assert ring.public_key_for(doc["author_ref"]) == doc["public_key"]
        assert ring.signer_for(doc["author_ref"]).can_sign()


class TestAgainstLiveNode:
    def test_remote_session_and_chain_commands(self, capsys, workdir):
        conflate_file = make_conflate_file(capsys, workdir)
        config = NodeConfig(
            port=free_port(),
            data_dir=workdir / "nodedata",
            keyring_path=workdir / "keyring.json",
            clock_spec=f"fixed:{FIXED_MS}",
        )
        server = serve(config)
        try:
            url = server.base_url
            code, outcome, _ = run_cli(
                capsys,
                "session", "run",
                "--conflate", str(conflate_file),
                "--self", "yes", "--retracted", "yes", "--publish", "yes",
                "--node", url,
            )
            assert code == 0 and outcome["published"] and "block" in outcome

            code, outcome, _ = run_cli(
                capsys,
                "session", "run",
                "--conflate", str(conflate_file),
                "--self", "no", "--retracted", "no", "--publish", "no",
                "--node", url,
            )
            assert code == 0
            assert outcome["published"] is False
            assert outcome["metrics"]["h_index"] == 1

            code, doc, _ = run_cli(capsys, "chain", "show", "--node", url)
            assert code == 0 and len(doc["blocks"]) == 2  # decline added nothing

            code, verdict, _ = run_cli(capsys, "chain", "validate", "--node", url)
            assert code == 0 and verdict["valid"] is True

            code, peers_doc, _ = run_cli(capsys, "peers", "add", "127.0.0.1:9999", "--node", url)
            assert code == 0 and "127.0.0.1:9999" in peers_doc["peers"]
        finally:
            server.stop()
