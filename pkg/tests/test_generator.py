import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from menagerie.motiongen import (
    DecodeTrace,
    GeneratorConfig,
    HashedTrigramEncoder,
    MaskSchedule,
    TokenGrid,
    cosine_schedule,
    generate_base,
    generate_residuals,
    load_generator_checkpoint,
    new_generator,
    save_generator_checkpoint,
    train_masked,
    train_residual,
)
from menagerie.motiongen.rvq import ConvDecoder
from menagerie.motiongen.transformers import MaskTransformer


def tiny_config(**over):
    base = dict(
        num_codes=12, residual_depth=1, d_model=32, heads=2, layers=1, ff=48,
        text_dim=16, max_len=12, epochs=120, batch_size=4, lr=5e-3, seed=0,
        iterations=4,
    )
    base.update(over)
    return GeneratorConfig(**base)


def embed(texts, dim=16):
    enc = HashedTrigramEncoder(dim)
    return [enc.encode(t) for t in texts]


# ----------------------------------------------------------- schedules

def test_schedule_validation():
    cosine_schedule(10)  # fine
    with pytest.raises(ValueError):
        MaskSchedule(5, lambda t: 1.0 - t / 2)  # ratio(1) != 0
    with pytest.raises(ValueError):
        MaskSchedule(5, lambda t: t)  # increasing
    with pytest.raises(ValueError):
        MaskSchedule(0, lambda t: 1.0 - t)


# ------------------------------------------------------ masked training

def test_initial_loss_is_log_k():
    config = tiny_config()
    model = new_generator(config)
    tokens = torch.randint(0, config.num_codes, (3, 8))
    text = torch.randn(3, config.text_dim)
    with torch.no_grad():
        logits = model.mask_net(tokens, text)
        loss = F.cross_entropy(logits.reshape(-1, config.num_codes), tokens.reshape(-1))
    assert abs(float(loss) - math.log(config.num_codes)) < 0.05 * math.log(config.num_codes)


def test_masked_training_on_constant_corpus_reaches_full_accuracy():
    config = tiny_config(residual_depth=0, epochs=250)
    model = new_generator(config)
    seq = np.array([3, 5, 1, 7, 2, 9, 4, 6])
    grids = [TokenGrid(seq[None], config.num_codes)] * 4
    texts = embed(["a fox walks"] * 4)
    train_masked(grids, texts, model)
    tokens = torch.as_tensor(seq)[None].clone()
    for pos in range(len(seq)):
        corrupted = tokens.clone()
        corrupted[0, pos] = model.mask_net.mask_id
        pred = model.mask_net(corrupted, torch.as_tensor(np.stack(texts[:1]))).argmax(-1)
        assert int(pred[0, pos]) == seq[pos]


def test_masked_training_is_deterministic():
    config = tiny_config(residual_depth=0, epochs=15)
    grids = [TokenGrid(np.arange(8)[None] % config.num_codes, config.num_codes)] * 3
    texts = embed(["hop", "run", "walk"])
    a = train_masked(grids, texts, new_generator(config))
    b = train_masked(grids, texts, new_generator(config))
    assert a.mask_loss_history == b.mask_loss_history


# ---------------------------------------------------- residual training

def _functional_corpus(config, count=6):
    rng = np.random.default_rng(4)
    perm = rng.permutation(config.num_codes)
    grids, texts = [], []
    for i in range(count):
        base = rng.integers(0, config.num_codes, 8)
        grids.append(TokenGrid(np.stack([base, perm[base]]), config.num_codes))
        texts.append(f"sample {i}")
    return grids, embed(texts), perm


def test_residual_training_learns_functional_layer():
    config = tiny_config(epochs=400, lr=8e-3)
    grids, texts, perm = _functional_corpus(config)
    model = train_residual(grids, texts, new_generator(config))
    rng = np.random.default_rng(9)
    base = rng.integers(0, config.num_codes, 8)
    grid = generate_residuals(base, torch.as_tensor(np.stack(texts[:1])), model)
    assert np.array_equal(grid.layers[1], perm[base])


def test_residual_noop_when_depth_zero():
    config = tiny_config(residual_depth=0)
    model = new_generator(config)
    grids = [TokenGrid(np.arange(8)[None] % config.num_codes, config.num_codes)]
    with pytest.warns(UserWarning, match="no-op"):
        out = train_residual(grids, embed(["x"]), model)
    assert out is model and out.res_loss_history == []


def test_indicator_embeddings_distinguish_layers():
    config = tiny_config(residual_depth=3)
    model = new_generator(config)
    table = model.res_net.indicator_emb.weight.detach()
    for i in range(3):
        for j in range(i + 1, 3):
            assert not torch.allclose(table[i], table[j])


# ---------------------------------------------------------- generation

def test_generate_base_single_iteration_is_argmax_fill():
    config = tiny_config(residual_depth=0)
    model = new_generator(config)
    text = torch.randn(1, config.text_dim)
    out = generate_base(text, 8, cosine_schedule(1), model, seed=0, temperature=0.0)
    with torch.no_grad():
        logits = model.mask_net(
            torch.full((1, 8), model.mask_net.mask_id, dtype=torch.long), text
        )[0]
    assert np.array_equal(out, logits.argmax(-1).numpy())


def test_generate_base_postconditions():
    config = tiny_config(residual_depth=0)
    model = new_generator(config)
    text = torch.randn(1, config.text_dim)
    for seed in range(5):
        out = generate_base(text, 11, cosine_schedule(5), model, seed=seed)
        assert out.shape == (11,)
        assert out.max() < config.num_codes
        assert model.mask_net.mask_id not in out


def test_generate_base_distinct_seeds_is_deterministic():
    config = tiny_config(residual_depth=0)
    model = new_generator(config)
    text = torch.randn(1, config.text_dim)
    a = generate_base(text, 9, cosine_schedule(4), model, seed=7)
    b = generate_base(text, 9, cosine_schedule(4), model, seed=7)
    assert np.array_equal(a, b)


def test_generate_base_mask_bookkeeping_and_softmax():
    config = tiny_config(residual_depth=0)
    model = new_generator(config)
    text = torch.randn(1, config.text_dim)
    n, L = 11, 6
    schedule = cosine_schedule(L)
    trace = DecodeTrace()
    generate_base(text, n, schedule, model, seed=3, trace=trace)
    assert trace.masked_before[0] == n
    for step in range(1, L + 1):
        assert trace.masked_after[step - 1] == schedule.masked_count(step, n)
    assert trace.masked_after[-1] == 0
    assert trace.logits_finite
    for s in trace.prob_sums:
        assert abs(s - 1.0) < 1e-6


def test_generate_residuals_depth_zero_returns_base():
    config = tiny_config(residual_depth=0)
    model = new_generator(config)
    base = np.arange(8) % config.num_codes
    grid = generate_residuals(base, torch.randn(1, config.text_dim), model)
    assert grid.layers.shape == (1, 8)
    assert np.array_equal(grid.layers[0], base)


def test_generate_residuals_shape():
    config = tiny_config(residual_depth=2)
    model = new_generator(config)
    base = np.arange(8) % config.num_codes
    grid = generate_residuals(base, torch.randn(1, config.text_dim), model)
    assert grid.layers.shape == (3, 8)


# ---------------------------------------------------------- gradients

def _central_difference_check(module, loss_fn, num_slices, seed, h=1e-6, tol=1e-4):
    rng = np.random.default_rng(seed)
    params = [p for p in module.parameters() if p.requires_grad]
    module.zero_grad()
    loss_fn().backward()
    checked = 0
    while checked < num_slices:
        p = params[int(rng.integers(len(params)))]
        flat = p.detach().reshape(-1)
        idx = int(rng.integers(flat.numel()))
        grad = p.grad.reshape(-1)[idx].item() if p.grad is not None else 0.0
        with torch.no_grad():
            orig = flat[idx].item()
            flat[idx] = orig + h
            up = float(loss_fn())
            flat[idx] = orig - h
            down = float(loss_fn())
            flat[idx] = orig
        fd = (up - down) / (2 * h)
        denom = max(abs(fd), abs(grad), 1e-8)
        assert abs(fd - grad) / denom <= tol, (
            f"param slice {idx}: autograd {grad} vs central difference {fd}"
        )
        checked += 1


def test_transformer_block_gradients_match_finite_differences():
    torch.manual_seed(0)
    net = MaskTransformer(num_codes=7, max_len=6, d_model=16, heads=2, layers=1,
                          ff=24, text_dim=8).double()
    # non-zero head so its gradient path is exercised
    torch.nn.init.normal_(net.head.weight, std=0.2)
    tokens = torch.randint(0, 7, (2, 5))
    text = torch.randn(2, 8, dtype=torch.float64)
    target = torch.randint(0, 7, (2, 5))

    def loss_fn():
        logits = net(tokens, text)
        return F.cross_entropy(logits.reshape(-1, 7), target.reshape(-1))

    _central_difference_check(net, loss_fn, num_slices=20, seed=1)


def test_decoder_gradients_match_finite_differences():
    torch.manual_seed(0)
    net = ConvDecoder(4, 6, 2, 8).double()
    z = torch.randn(1, 5, 4, dtype=torch.float64)
    target = torch.randn(1, 10, 6, dtype=torch.float64)

    def loss_fn():
        return F.mse_loss(net(z), target)

    _central_difference_check(net, loss_fn, num_slices=20, seed=2)


# --------------------------------------------------------- checkpoints

def test_generator_checkpoint_round_trip(tmp_path):
    config = tiny_config(epochs=30)
    grids, texts, _ = _functional_corpus(config)
    model = train_masked(grids, texts, new_generator(config))
    model = train_residual(grids, texts, model)
    path = tmp_path / "gen.magm"
    save_generator_checkpoint(str(path), model)
    loaded = load_generator_checkpoint(str(path))
    text = model.embed_text("a fox runs")
    a = generate_base(text, 8, model.schedule, model, seed=5)
    b = generate_base(text, 8, loaded.schedule, loaded, seed=5)
    assert np.array_equal(a, b)
    ga = generate_residuals(a, text, model)
    gb = generate_residuals(b, text, loaded)
    assert np.array_equal(ga.layers, gb.layers)
