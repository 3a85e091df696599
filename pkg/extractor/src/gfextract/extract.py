"""Per-sample gradient feature extraction.

For each (prompt, response) sample: cross-entropy over response tokens only,
divided by the response token count, full-parameter gradient, projected with
the seed-addressable sign matrix, written as a GFS1 feature file with a
scalar sidecar (per-sample loss and mean token probability).

Parameters are flattened in sorted named-parameter order; the order is
recorded in the sidecar so source_dim indexing stays reproducible.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np
import torch

from .model import ToyCausalLM, tokenize
from .projection import ProjectionSpec, project_blocks

GFS_MAGIC = b"GFS1"
_HEADER = struct.Struct("<4sIIIIQQ")


@dataclass
class SampleRecord:
    prompt: str
    response: str
    teacher_id: str = ""
    temperature: float | None = None


def _param_order(model: ToyCausalLM) -> list[str]:
    return sorted(name for name, _ in model.named_parameters())


def response_loss(
    model: ToyCausalLM, prompt_tokens: list[int], response_tokens: list[int]
) -> tuple[torch.Tensor, torch.Tensor]:
    """(averaged loss, per-response-token probabilities).

    The loss is the cross-entropy summed over response positions divided by
    the response length; prompt tokens condition the model but contribute no
    loss terms.
    """
    y_len = len(response_tokens)
    if y_len < 2:
        raise ValueError(f"response has {y_len} tokens, need >= 2")
    tokens = torch.tensor(prompt_tokens + response_tokens, dtype=torch.long)
    logits = model(tokens[:-1])
    # position t predicts token t+1; response tokens start at len(prompt)
    start = len(prompt_tokens)
    targets = tokens[start:]
    log_probs = torch.log_softmax(logits[start - 1 :], dim=-1)
    token_log_probs = log_probs[torch.arange(y_len), targets]
    loss = -token_log_probs.sum() / y_len
    return loss, token_log_probs.detach().exp()


def sample_gradient_blocks(
    model: ToyCausalLM, prompt_tokens: list[int], response_tokens: list[int]
) -> tuple[list[np.ndarray], float, float]:
    """Flattened gradient blocks (sorted parameter order), loss, avg token prob."""
    model.zero_grad(set_to_none=True)
    loss, probs = response_loss(model, prompt_tokens, response_tokens)
    loss.backward()
    params = dict(model.named_parameters())
    blocks = []
    for name in _param_order(model):
        grad = params[name].grad
        if grad is None:
            grad = torch.zeros_like(params[name])
        blocks.append(grad.detach().numpy().ravel().astype(np.float64))
    return blocks, float(loss.detach()), float(probs.detach().mean())


def group_samples(samples: list[SampleRecord]) -> tuple[list[str], int]:
    """(unique prompts in first-seen order, generations per prompt).

    The GFS1 layout is a dense n x m grid, so every prompt must carry the
    same number of generations.
    """
    counts: dict[str, int] = {}
    order: list[str] = []
    for s in samples:
        if s.prompt not in counts:
            counts[s.prompt] = 0
            order.append(s.prompt)
        counts[s.prompt] += 1
    ms = set(counts.values())
    if len(ms) != 1:
        raise ValueError(f"uneven generations per prompt: {sorted(ms)}")
    return order, ms.pop()


def extract(
    model: ToyCausalLM,
    samples: list[SampleRecord],
    spec: ProjectionSpec,
    out_path: str,
) -> None:
    """Write a GFS1 feature file + sidecar for the samples."""
    if not samples:
        raise ValueError("no samples")
    model.double()
    total_params = model.num_parameters()
    if spec.source_dim != total_params:
        raise ValueError(
            f"spec.source_dim={spec.source_dim} but model has {total_params} parameters"
        )
    prompts, m = group_samples(samples)
    n = len(prompts)
    prompt_rank = {p: i for i, p in enumerate(prompts)}
    seen: dict[str, int] = {}

    rows = np.zeros((n * m, spec.target_dim), dtype=np.float32)
    lengths = np.zeros(n * m, dtype=np.uint32)
    losses = np.zeros(n * m)
    avg_probs = np.zeros(n * m)
    for s in samples:
        j = seen.get(s.prompt, 0)
        seen[s.prompt] = j + 1
        idx = prompt_rank[s.prompt] * m + j
        p_tok, y_tok = tokenize(s.prompt), tokenize(s.response)
        blocks, loss, avg_prob = sample_gradient_blocks(model, p_tok, y_tok)
        rows[idx] = project_blocks(spec, blocks).astype(np.float32)
        lengths[idx] = len(y_tok)
        losses[idx] = loss
        avg_probs[idx] = avg_prob

    if (lengths < 2).any():
        raise ValueError("internal: response shorter than 2 tokens slipped through")

    header = _HEADER.pack(
        GFS_MAGIC, 1, n, m, spec.target_dim, spec.seed, spec.source_dim
    )
    with open(out_path, "wb") as f:
        f.write(header)
        f.write(lengths.astype("<u4").tobytes())
        f.write(rows.astype("<f4").tobytes())

    meta = {
        "teacher_id": samples[0].teacher_id,
        "loss": [float(v) for v in losses],
        "avg_prob": [float(v) for v in avg_probs],
        "param_order": _param_order(model),
    }
    if samples[0].temperature is not None:
        meta["temperature"] = samples[0].temperature
    with open(out_path + ".meta.json", "w") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def extract_scalars(
    model: ToyCausalLM, samples: list[SampleRecord]
) -> dict[str, list[float]]:
    """Per-sample mean token log-loss and mean token probability, no gradients."""
    model.double()
    losses, avg_probs = [], []
    with torch.no_grad():
        for s in samples:
            loss, probs = response_loss(model, tokenize(s.prompt), tokenize(s.response))
            losses.append(float(loss))
            avg_probs.append(float(probs.mean()))
    return {"loss": losses, "avg_prob": avg_probs}


def load_samples_jsonl(path: str) -> list[SampleRecord]:
    samples = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            samples.append(
                SampleRecord(
                    prompt=obj["prompt"],
                    response=obj["response"],
                    teacher_id=obj.get("teacher_id", ""),
                    temperature=obj.get("temperature"),
                )
            )
    return samples
