"""Ablation grids and transcribed-result fixtures.

More queries sharpen the frequency signal, so mean accuracy rises with Q.
The replay fixtures carry transcribed per-prompt result tables; replaying
one re-derives its reported averages through the same aggregation code the
live pipeline uses.
"""

from prompt_retrieval import (
    AblationBase,
    PipelineConfig,
    WorldConfig,
    load_fixture,
    replay_fixture,
    run_ablation,
)

# Moderate cluster separation, so retrieval is fallible and more queries help.
base = AblationBase(
    world=WorldConfig(n_embeddings=8, key_dim=8, n_per_prompt=30, n_task_instances=64,
                      n_hard_prompts=3, separation=2.5),
    pipeline=PipelineConfig(N=10),
    seeds_per_cell=8,
)

print("query-count ablation (8 seeds per cell):")
for cell in run_ablation({"Q": [1, 4, 8, 32]}, base):
    print(f"  Q={cell.assignment['Q']:3d}  mean acc {cell.report.mean:.4f}  std {cell.report.std:.4f}")

print("\nsampling-method ablation:")
for cell in run_ablation({"sampling_method": ["random", "clustering", "distributed"]}, base):
    print(f"  {cell.assignment['sampling_method']:12s} mean acc {cell.report.mean:.4f}")

# Replay a transcribed per-prompt table and recompute its averages.
report = replay_fixture("rte_replay")
print(f"\nreplayed per-prompt table '{report.task_id}': mean {report.mean:.2f} "
      f"(reported {load_fixture('rte_replay')['reported']['retrieval_mean']})")
for name, outcome in list(report.per_prompt.items())[:3]:
    print(f"  {name:32s} {outcome.accuracy:6.2f}  <- {outcome.selected[0][0]}")
print("  ...")

headline = load_fixture("headline_means")
row = headline["rows"]["baseline"]
print(f"\nheadline baseline row: mean of {len(row['values'])} datasets = "
      f"{sum(row['values']) / len(row['values']):.2f} (reported {row['reported_mean']})")
