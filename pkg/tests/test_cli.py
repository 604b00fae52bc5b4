import json

import numpy as np
import pytest

from prompt_retrieval import PromptEmbedding, write_embeddings_file, write_keys_file, write_probe_table
from prompt_retrieval.cli import main
from prompt_retrieval.storage import load_library


@pytest.fixture()
def workspace(tmp_path):
    """keys + embeddings + queries files for a small two-cluster setup."""
    rng = np.random.default_rng(0)
    key_dim = 4
    center_a, center_b = np.zeros(key_dim), np.zeros(key_dim)
    center_a[0] = 6.0
    center_b[1] = 6.0
    embs = [
        PromptEmbedding(id="ds_a/p", matrix=rng.normal(size=(3, 2)), metadata={"prompt_name": "p"}),
        PromptEmbedding(id="ds_b/p", matrix=rng.normal(size=(3, 2)), metadata={"prompt_name": "p"}),
    ]
    keyed = {
        "ds_a/p": center_a + rng.normal(size=(30, key_dim)),
        "ds_b/p": center_b + rng.normal(size=(30, key_dim)),
    }
    keys_path = tmp_path / "keys.json"
    embs_path = tmp_path / "embs.json"
    write_keys_file(keys_path, keyed, key_dim=key_dim)
    write_embeddings_file(embs_path, embs)
    queries = center_a + rng.normal(size=(16, key_dim))
    queries_path = tmp_path / "queries.json"
    queries_path.write_text(json.dumps({"version": 1, "queries": queries.tolist()}))
    return tmp_path, keys_path, embs_path, queries_path


def test_build_retrieve_select_round_trip(workspace, capsys):
    tmp_path, keys_path, embs_path, queries_path = workspace
    lib_path = tmp_path / "lib.splb"
    rc = main(
        [
            "build-library",
            "--keys", str(keys_path),
            "--embeddings", str(embs_path),
            "--n", "20",
            "--method", "random",
            "--seed", "7",
            "--out", str(lib_path),
        ]
    )
    assert rc == 0
    library = load_library(lib_path)
    assert len(library) == 40

    tally_path = tmp_path / "tally.json"
    rc = main(
        [
            "retrieve",
            "--library", str(lib_path),
            "--queries", str(queries_path),
            "--q", "8",
            "--top-n", "5",
            "--out", str(tally_path),
        ]
    )
    assert rc == 0
    tally = json.loads(tally_path.read_text())
    assert tally["version"] == 1
    assert tally["total"] == 40
    assert tally["config"]["top_n"] == 5
    assert tally["counts"]["ds_a/p"] > tally["counts"].get("ds_b/p", 0)

    selection_path = tmp_path / "selection.json"
    rc = main(
        [
            "select",
            "--tally", str(tally_path),
            "--strategy", "freq",
            "--library", str(lib_path),
            "--out", str(selection_path),
        ]
    )
    assert rc == 0
    selection = json.loads(selection_path.read_text())
    assert selection["version"] == 1
    assert selection["chosen"][0]["embedding_id"] == "ds_a/p"
    assert selection["chosen"][0]["weight"] == 1.0
    assert "prompt_matrix" in selection
    assert "config" in selection


def test_select_variance_strategy_with_probes(workspace, tmp_path):
    _, keys_path, embs_path, queries_path = workspace
    lib_path = tmp_path / "lib.splb"
    tally_path = tmp_path / "tally.json"
    main(["build-library", "--keys", str(keys_path), "--embeddings", str(embs_path),
          "--n", "20", "--out", str(lib_path)])
    main(["retrieve", "--library", str(lib_path), "--queries", str(queries_path),
          "--q", "8", "--top-n", "5", "--out", str(tally_path)])

    probes_path = tmp_path / "probes.jsonl"
    write_probe_table(probes_path, [("ds_a/p", "hp0", [0.5, 0.5]), ("ds_b/p", "hp0", [0.9, 0.1])])
    selection_path = tmp_path / "sel.json"
    rc = main(["select", "--tally", str(tally_path), "--strategy", "var",
               "--probes", str(probes_path), "--out", str(selection_path)])
    assert rc == 0
    selection = json.loads(selection_path.read_text())
    assert selection["strategy"] == "variance"
    assert selection["chosen"][0]["embedding_id"] == "ds_a/p"
    assert "scores" in selection

    rc = main(["select", "--tally", str(tally_path), "--strategy", "var-inter",
               "--probes", str(probes_path), "--n-prime", "2", "--out", str(selection_path)])
    assert rc == 0
    selection = json.loads(selection_path.read_text())
    weights = [c["weight"] for c in selection["chosen"]]
    assert sum(weights) == pytest.approx(1.0, abs=1e-9)


def test_select_var_without_probes_is_validation_error(workspace, tmp_path):
    _, keys_path, embs_path, queries_path = workspace
    lib_path, tally_path = tmp_path / "lib.splb", tmp_path / "tally.json"
    main(["build-library", "--keys", str(keys_path), "--embeddings", str(embs_path),
          "--n", "5", "--out", str(lib_path)])
    main(["retrieve", "--library", str(lib_path), "--queries", str(queries_path),
          "--q", "4", "--top-n", "2", "--out", str(tally_path)])
    rc = main(["select", "--tally", str(tally_path), "--strategy", "var", "--out", str(tmp_path / "s.json")])
    assert rc == 2


def test_evaluate_with_synthetic_task(workspace, tmp_path):
    _, keys_path, embs_path, queries_path = workspace
    lib_path = tmp_path / "lib.splb"
    main(["build-library", "--keys", str(keys_path), "--embeddings", str(embs_path),
          "--n", "20", "--out", str(lib_path)])

    rng = np.random.default_rng(3)
    task_keys = (np.array([6.0, 0.0, 0.0, 0.0]) + rng.normal(size=(24, 4))).tolist()
    task_path = tmp_path / "task.json"
    task_path.write_text(
        json.dumps(
            {
                "version": 1,
                "task_id": "toy",
                "option_count": 2,
                "hard_prompt_ids": ["hp0", "hp1"],
                "instance_keys": task_keys,
                "provider": {
                    "type": "synthetic",
                    "seed": 0,
                    "affinities": {"ds_a/p": 0.9, "ds_b/p": 0.2},
                },
            }
        )
    )
    report_path = tmp_path / "report.json"
    rc = main(["evaluate", "--library", str(lib_path), "--task", str(task_path),
               "--strategy", "freq", "--q", "8", "--top-n", "5", "--seeds", "3",
               "--report", str(report_path)])
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert report["version"] == 1
    assert report["config"]["seeds"] == [0, 1, 2]
    assert set(report["per_prompt"]) == {"hp0", "hp1"}
    assert report["per_prompt"]["hp0"]["selected"][0]["embedding_id"] == "ds_a/p"
    mean = np.mean([report["per_prompt"][hp]["accuracy"] for hp in report["per_prompt"]])
    assert report["mean"] == pytest.approx(mean, abs=1e-9)


def test_evaluate_with_record_task(workspace, tmp_path):
    _, keys_path, embs_path, queries_path = workspace
    lib_path = tmp_path / "lib.splb"
    main(["build-library", "--keys", str(keys_path), "--embeddings", str(embs_path),
          "--n", "20", "--out", str(lib_path)])
    records = {
        "hp0": {
            "ds_a/p": [
                {"instance_id": "i0", "option_loglikelihoods": [-1.0, -2.0], "gold_index": 0},
                {"instance_id": "i1", "option_loglikelihoods": [-1.0, -2.0], "gold_index": 0},
            ],
            "ds_b/p": [
                {"instance_id": "i0", "option_loglikelihoods": [-1.0, -2.0], "gold_index": 1},
                {"instance_id": "i1", "option_loglikelihoods": [-1.0, -2.0], "gold_index": 1},
            ],
        }
    }
    rng = np.random.default_rng(3)
    task_keys = (np.array([6.0, 0.0, 0.0, 0.0]) + rng.normal(size=(12, 4))).tolist()
    task_path = tmp_path / "task.json"
    task_path.write_text(
        json.dumps(
            {
                "version": 1,
                "task_id": "records_toy",
                "option_count": 2,
                "hard_prompt_ids": ["hp0"],
                "instance_keys": task_keys,
                "records": records,
            }
        )
    )
    report_path = tmp_path / "report.json"
    rc = main(["evaluate", "--library", str(lib_path), "--task", str(task_path),
               "--strategy", "freq", "--q", "4", "--top-n", "3", "--seeds", "1",
               "--report", str(report_path)])
    assert rc == 0
    report = json.loads(report_path.read_text())
    assert report["per_prompt"]["hp0"]["selected"][0]["embedding_id"] == "ds_a/p"
    assert report["per_prompt"]["hp0"]["accuracy"] == 1.0


def test_ablate_writes_csv(tmp_path):
    grid_path = tmp_path / "grid.json"
    grid_path.write_text(json.dumps({"Q": [2, 4]}))
    base_path = tmp_path / "base.json"
    base_path.write_text(
        json.dumps(
            {
                "world": {"n_embeddings": 3, "key_dim": 4, "n_per_prompt": 10,
                          "n_task_instances": 24, "n_hard_prompts": 2},
                "pipeline": {"N": 3},
                "strategy": "frequency",
                "seeds_per_cell": 2,
            }
        )
    )
    out = tmp_path / "table.csv"
    rc = main(["ablate", "--grid", str(grid_path), "--base", str(base_path), "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("Q,")
    assert len(lines) == 3


def test_exit_code_3_on_missing_or_corrupt_files(tmp_path):
    rc = main(["retrieve", "--library", str(tmp_path / "missing.splb"),
               "--queries", str(tmp_path / "missing.json"), "--out", str(tmp_path / "t.json")])
    assert rc == 3
    bad = tmp_path / "bad.splb"
    bad.write_bytes(b"definitely not a library")
    rc = main(["retrieve", "--library", str(bad), "--queries", str(tmp_path / "missing.json"),
               "--out", str(tmp_path / "t.json")])
    assert rc == 3


def test_exit_code_2_on_validation_error(workspace, tmp_path):
    _, keys_path, embs_path, queries_path = workspace
    lib_path = tmp_path / "lib.splb"
    main(["build-library", "--keys", str(keys_path), "--embeddings", str(embs_path),
          "--n", "5", "--out", str(lib_path)])
    # query dimension mismatch
    bad_queries = tmp_path / "bad_queries.json"
    bad_queries.write_text(json.dumps({"version": 1, "queries": [[1.0, 2.0]]}))
    rc = main(["retrieve", "--library", str(lib_path), "--queries", str(bad_queries),
               "--out", str(tmp_path / "t.json")])
    assert rc == 2
