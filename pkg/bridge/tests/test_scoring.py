import numpy as np
import pytest

from encoder_bridge import BridgeConfig, BridgeError, OptionScorer, TaskInstance, probe_export, record_export
from prompt_retrieval import FileProvider, validate_probe_table, validate_record_table


def test_probe_rows_are_normalized_and_pass_core_validator(random_lm_dir, tmp_path):
    out = tmp_path / "probes.jsonl"
    rng = np.random.default_rng(0)
    matrices = {"ds_a/p": rng.normal(size=(3, 64)).astype(np.float32), "ds_b/p": np.zeros((3, 64), np.float32)}
    probe_export(
        matrices,
        {"hp0": "is the claim true or false?", "hp1": "pick the best option"},
        ["yes", "no"],
        BridgeConfig(lm_checkpoint=random_lm_dir),
        out,
    )
    assert validate_probe_table(out) == []
    provider = FileProvider(probe_path=out)
    probs = provider.probe_options("ds_a/p", "hp0").option_probs
    assert probs.sum() == pytest.approx(1.0, abs=1e-6)
    assert len(probs) == 2


def test_probe_export_double_run_identical_bytes(random_lm_dir, tmp_path):
    rng = np.random.default_rng(1)
    matrices = {"e": rng.normal(size=(2, 64)).astype(np.float32)}
    args = (matrices, {"hp": "choose"}, ["a", "b", "c"], BridgeConfig(lm_checkpoint=random_lm_dir))
    first, second = tmp_path / "p1.jsonl", tmp_path / "p2.jsonl"
    probe_export(*args, first)
    probe_export(*args, second)
    assert first.read_bytes() == second.read_bytes()


def test_zero_prompt_and_no_prompt_are_distinct(random_lm_dir):
    scorer = OptionScorer(BridgeConfig(lm_checkpoint=random_lm_dir))
    text = "the question text"
    options = ["yes", "no"]
    without = scorer.option_loglikelihoods(text, options, None)
    with_zero = scorer.option_loglikelihoods(text, options, np.zeros((4, 64), np.float32))
    assert np.all(np.isfinite(without)) and np.all(np.isfinite(with_zero))
    assert not np.array_equal(without, with_zero)


def test_prompt_width_mismatch_rejected(random_lm_dir):
    scorer = OptionScorer(BridgeConfig(lm_checkpoint=random_lm_dir))
    with pytest.raises(BridgeError, match="width"):
        scorer.option_loglikelihoods("text", ["a", "b"], np.zeros((4, 48), np.float32))


def test_length_normalize_flag_divides_by_token_count(random_lm_dir):
    text = "question"
    options = ["yes", "absolutely certainly"]
    raw = OptionScorer(BridgeConfig(lm_checkpoint=random_lm_dir)).option_loglikelihoods(text, options)
    normed = OptionScorer(
        BridgeConfig(lm_checkpoint=random_lm_dir, length_normalize=True)
    ).option_loglikelihoods(text, options)
    assert normed[0] > raw[0]  # dividing a negative total by token count shrinks it
    assert normed[1] > raw[1]


def test_record_export_echoes_gold_and_passes_validator(random_lm_dir, tmp_path):
    out = tmp_path / "records.jsonl"
    instances = [
        TaskInstance(instance_id="i0", text="first", options=("yes", "no"), gold_index=1),
        TaskInstance(instance_id="i1", text="second", options=("yes", "no"), gold_index=0),
        TaskInstance(instance_id="i2", text="third", options=("yes", "no"), gold_index=1),
    ]
    record_export(instances, None, BridgeConfig(lm_checkpoint=random_lm_dir), out)
    assert validate_record_table(out) == []
    records = FileProvider(record_path=out).records
    assert [r.gold_index for r in records] == [1, 0, 1]
    assert all(len(r.option_loglikelihoods) == 2 for r in records)


def test_scorer_requires_lm_checkpoint():
    with pytest.raises(BridgeError, match="lm_checkpoint"):
        OptionScorer(BridgeConfig())


def test_instance_validation():
    with pytest.raises(BridgeError):
        TaskInstance(instance_id="i", text="t", options=("only",), gold_index=0)
    with pytest.raises(BridgeError):
        TaskInstance(instance_id="i", text="t", options=("a", "b"), gold_index=2)
