"""Toy causal language model and byte-level tokenizer.

A small single-block transformer over byte tokens, used for gradient
extraction at desk scale and for finite-difference verification. Checkpoints
are a plain dict of config + state_dict saved with torch.save.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

VOCAB_SIZE = 256  # byte-level: any UTF-8 text tokenizes without a vocab file
MAX_LEN = 256


def tokenize(text: str) -> list[int]:
    return list(text.encode("utf-8"))


class ToyCausalLM(nn.Module):
    """Embedding -> one causal self-attention block -> MLP -> tied-free head."""

    def __init__(self, dim: int = 16, hidden: int = 32, max_len: int = MAX_LEN):
        super().__init__()
        self.dim = dim
        self.tok_emb = nn.Embedding(VOCAB_SIZE, dim)
        self.pos_emb = nn.Embedding(max_len, dim)
        self.attn_qkv = nn.Linear(dim, 3 * dim)
        self.attn_out = nn.Linear(dim, dim)
        self.mlp = nn.Sequential(nn.Linear(dim, hidden), nn.Tanh(), nn.Linear(hidden, dim))
        self.head = nn.Linear(dim, VOCAB_SIZE)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        # tokens: (T,) int64 -> logits (T, VOCAB_SIZE)
        t = tokens.shape[0]
        x = self.tok_emb(tokens) + self.pos_emb(torch.arange(t, device=tokens.device))
        q, k, v = self.attn_qkv(x).chunk(3, dim=-1)
        scores = (q @ k.T) / math.sqrt(self.dim)
        mask = torch.triu(torch.ones(t, t, dtype=torch.bool, device=tokens.device), 1)
        scores = scores.masked_fill(mask, float("-inf"))
        x = x + self.attn_out(F.softmax(scores, dim=-1) @ v)
        x = x + self.mlp(x)
        return self.head(x)

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())


def save_model(model: ToyCausalLM, path) -> None:
    torch.save(
        {
            "config": {
                "dim": model.dim,
                "hidden": model.mlp[0].out_features,
                "max_len": model.pos_emb.num_embeddings,
            },
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_model(path) -> ToyCausalLM:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    model = ToyCausalLM(**blob["config"])
    model.load_state_dict(blob["state_dict"])
    model.double()
    model.eval()
    return model
