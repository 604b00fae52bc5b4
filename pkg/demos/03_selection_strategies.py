"""The four selection strategies, side by side on one tally.

Frequency picks the most-retrieved embedding. Interpolation blends the top
n' by frequency share. Variance rescores candidates by freq / sqrt(Var of
the option distribution each induces without input context) - a flatter
distribution (the model is not prejudging options) ranks higher. The hybrid
blends by that score instead of by frequency.
"""

import numpy as np

from prompt_retrieval import (
    CandidateTally,
    OptionProbeResult,
    PromptEmbedding,
    interpolate,
    interpolate_by_score,
    select_top_frequency,
    select_variance,
    variance_score,
)

rng = np.random.default_rng(2)
ids = ["news/headline_pick", "reviews/good_or_bad", "trivia/choose_one"]
embeddings = {eid: PromptEmbedding(id=eid, matrix=rng.normal(size=(4, 5))) for eid in ids}

tally = CandidateTally(counts={ids[0]: 17, ids[1]: 10, ids[2]: 5}, total=32)
print("tally:", tally.counts)


class DemoProbeProvider:
    """Hand-set option distributions: reviews/* is flattest (best)."""

    probs = {
        "news/headline_pick": [0.75, 0.25],
        "reviews/good_or_bad": [0.52, 0.48],
        "trivia/choose_one": [0.90, 0.10],
    }

    def probe_options(self, embedding_id, hard_prompt_id):
        return OptionProbeResult(embedding_id=embedding_id, hard_prompt_id=hard_prompt_id,
                                 option_probs=np.array(self.probs[embedding_id]))


provider = DemoProbeProvider()

freq = select_top_frequency(tally, embeddings)
print(f"\nfrequency          -> {freq.chosen}")

inter = interpolate(tally, 3, embeddings)
print(f"interpolation      -> {[(eid, round(w, 4)) for eid, w in inter.chosen]}")

var = select_variance(tally, provider, "eval_prompt", embeddings)
print(f"variance           -> {var.chosen}")
print("  scores:", {eid: round(s, 2) for eid, s in tally.scores.items()})
print("  (freq=17 with probs (0.75,0.25):",
      round(variance_score(17, (0.75, 0.25)), 2), "- flat beats frequent)")

var_inter = interpolate_by_score(tally, 3, embeddings)
print(f"score interpolation-> {[(eid, round(w, 4)) for eid, w in var_inter.chosen]}")

blend = var_inter.prompt
by_hand = sum(w * embeddings[eid].matrix.astype(np.float64) for eid, w in var_inter.chosen)
print(f"\nblended prompt matrix {blend.shape}, equals hand-computed weighted sum: "
      f"{np.allclose(blend, by_hand, atol=1e-12)}")
