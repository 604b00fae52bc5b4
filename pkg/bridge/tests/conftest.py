import pytest
import torch

from encoder_bridge import save_tiny_lm, save_tiny_retriever

TOY_WORDS = ("blue", "red")


def toy_input(word):
    return f"the answer is {word} {word} {word}"


@pytest.fixture(scope="session")
def retriever_dir(tmp_path_factory):
    return save_tiny_retriever(tmp_path_factory.mktemp("retriever") / "ckpt", hidden_size=32, seed=0)


@pytest.fixture(scope="session")
def random_lm_dir(tmp_path_factory):
    return save_tiny_lm(tmp_path_factory.mktemp("lm") / "ckpt", d_model=64, seed=0)


@pytest.fixture(scope="session")
def trained_lm_dir(tmp_path_factory):
    """Tiny byte-level seq2seq trained from scratch on a copy-style task.

    After ~300 steps the model assigns the repeated word a far higher
    likelihood than the distractor, making the toy task separable; training
    is seed-fixed, so the checkpoint is reproducible.
    """
    from transformers import ByT5Tokenizer, T5Config, T5ForConditionalGeneration

    torch.manual_seed(7)
    tokenizer = ByT5Tokenizer()
    config = T5Config(
        vocab_size=384,
        d_model=64,
        d_ff=128,
        d_kv=16,
        num_heads=4,
        num_layers=2,
        num_decoder_layers=2,
        decoder_start_token_id=0,
        pad_token_id=0,
        eos_token_id=1,
        dropout_rate=0.0,
        feed_forward_proj="relu",
    )
    model = T5ForConditionalGeneration(config)
    optimizer = torch.optim.Adam(model.parameters(), lr=3e-3)
    model.train()
    for step in range(300):
        words = [TOY_WORDS[i % 2] for i in range(step, step + 8)]
        enc = tokenizer([toy_input(w) for w in words], padding=True, return_tensors="pt")
        labels = tokenizer(list(words), padding=True, return_tensors="pt").input_ids
        labels[labels == 0] = -100
        loss = model(input_ids=enc.input_ids, attention_mask=enc.attention_mask, labels=labels).loss
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
    final_loss = float(loss.detach())
    assert final_loss < 0.1, f"toy training did not converge (loss {final_loss:.4f})"

    path = tmp_path_factory.mktemp("trained_lm") / "ckpt"
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return path
