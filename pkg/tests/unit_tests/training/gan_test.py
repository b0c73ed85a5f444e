# Standard library imports

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.autodiff import Tensor, backward
from pycloudgen.autodiff.ops import mul, sum as tensor_sum
from pycloudgen.networks import Decoder, Discriminator, Encoder, Mapper
from pycloudgen.networks.generator import generate, sample_prior
from pycloudgen.training.autoencoder import ae_adam_state, train_ae_epoch
from pycloudgen.training.configs import StageOneConfig, StageTwoConfig
from pycloudgen.training.gan import (
    GanOptimizers,
    RealBatchStream,
    _check_frozen,
    gradient_penalty,
    prepare_stage_two,
    train_gan_epoch,
)
from pycloudgen.utils.exceptions import FrozenDecoderError, NonFiniteLossError, ShapeMismatchError
from pycloudgen.utils.generation_metrics import CloudSet, jsd


def test_gradient_penalty_linear_critic(rng):
    weight = Tensor(rng.normal(size=(6, 3)), requires_grad=True)

    def critic(x: Tensor) -> Tensor:
        return tensor_sum(mul(x, weight), (1, 2))

    real = rng.normal(size=(4, 6, 3))
    fake = rng.normal(size=(4, 6, 3))
    penalty = gradient_penalty(critic, real, fake, 10.0, rng)

    # the input gradient of a linear critic is its weight for every sample
    norm = np.linalg.norm(weight.data)
    assert penalty.item() == pytest.approx(10.0 * (norm - 1.0) ** 2, rel=1e-12)

    backward(penalty)
    np.testing.assert_allclose(weight.grad, 20.0 * (norm - 1.0) * weight.data / norm, rtol=1e-10)


def test_gradient_penalty_with_validation_data(tiny_config, finite_difference, rng):
    critic = Discriminator(tiny_config, np.random.default_rng(0))
    real = rng.uniform(-1.0, 1.0, size=(3, tiny_config.num_points, 3))
    fake = rng.uniform(-1.0, 1.0, size=(3, tiny_config.num_points, 3))
    param = critic.named_parameters()["disc.fc0.weight"]

    def penalty_of(value: np.ndarray) -> float:
        saved = param.data
        param.data = value
        try:
            return gradient_penalty(critic, real, fake, 10.0, np.random.default_rng(5)).item()
        finally:
            param.data = saved

    critic.zero_grad()
    backward(gradient_penalty(critic, real, fake, 10.0, np.random.default_rng(5)))
    expected = finite_difference(penalty_of, param.data.copy())
    np.testing.assert_allclose(param.grad, expected, rtol=1e-4, atol=1e-7)


def test_gradient_penalty_bad_batches(rng):
    with pytest.raises(ShapeMismatchError):
        gradient_penalty(lambda x: x, np.zeros((2, 4, 3)), np.zeros((3, 4, 3)), 10.0, rng)


def test_gradient_penalty_zero_weight(tiny_config, rng):
    critic = Discriminator(tiny_config)
    real = rng.normal(size=(2, tiny_config.num_points, 3))
    assert gradient_penalty(critic, real, real + 0.1, 0.0, rng).item() == 0.0


def test_real_batch_stream_with_validation_data(tiny_dataset):
    stream = RealBatchStream(tiny_dataset, 2, np.random.default_rng(0))
    assert stream.batches_per_pass == 4

    seen = [next(stream) for _ in range(stream.batches_per_pass)]
    assert all(batch.shape == (2, tiny_dataset.num_points, 3) for batch in seen)
    # one pass shows every cloud exactly once
    flat = np.concatenate(seen)
    assert len({cloud.tobytes() for cloud in flat}) == len(tiny_dataset)

    assert RealBatchStream(tiny_dataset, 100, np.random.default_rng(0)).batch_size == len(tiny_dataset)
    with pytest.raises(ValueError):
        RealBatchStream(tiny_dataset.subset([0]), 2, np.random.default_rng(0))


@pytest.mark.parametrize("d_steps, iterations", [(5, 1), (2, 2), (1, 4)])
def test_train_gan_epoch_step_counts(tiny_config, tiny_dataset, d_steps, iterations):
    cfg = StageTwoConfig(batch=2, d_steps_per_g=d_steps)
    stats = train_gan_epoch(
        Mapper(tiny_config, np.random.default_rng(0)),
        Decoder(tiny_config, np.random.default_rng(1)),
        Discriminator(tiny_config, np.random.default_rng(2)),
        tiny_dataset,
        cfg,
        GanOptimizers.from_config(cfg),
        0,
        np.random.default_rng(3),
    )
    assert stats.g_steps == iterations
    assert stats.d_steps == iterations * d_steps
    assert np.isfinite(stats.d_loss) and np.isfinite(stats.g_loss)


def test_train_gan_epoch_keeps_decoder_frozen(tiny_config, tiny_dataset):
    cfg = StageTwoConfig(batch=2)
    mapper = Mapper(tiny_config, np.random.default_rng(0))
    decoder = Decoder(tiny_config, np.random.default_rng(1))
    critic = Discriminator(tiny_config, np.random.default_rng(2))
    decoder_before = decoder.state_dict()
    mapper_before = mapper.state_dict()
    critic_before = critic.state_dict()

    optimizers = GanOptimizers.from_config(cfg)
    for epoch in range(2):
        train_gan_epoch(mapper, decoder, critic, tiny_dataset, cfg, optimizers, epoch, np.random.default_rng(epoch))

    for name, value in decoder.state_dict().items():
        assert value.tobytes() == decoder_before[name].tobytes(), name
    assert decoder.frozen and decoder.mode == "eval"
    assert any(not np.array_equal(mapper_before[name], value) for name, value in mapper.state_dict().items())
    assert any(not np.array_equal(critic_before[name], value) for name, value in critic.state_dict().items())
    assert optimizers.generator.step == 2
    assert not any(name.startswith("decoder.") for name in optimizers.generator.m)


def test_train_gan_epoch_zero_penalty(tiny_config, tiny_dataset):
    cfg = StageTwoConfig(batch=2, gp_weight=0.0, d_steps_per_g=2)
    stats = train_gan_epoch(
        Mapper(tiny_config, np.random.default_rng(0)),
        Decoder(tiny_config, np.random.default_rng(1)),
        Discriminator(tiny_config, np.random.default_rng(2)),
        tiny_dataset,
        cfg,
        GanOptimizers.from_config(cfg),
        0,
        np.random.default_rng(3),
    )
    # without the penalty the critic loss is minus the Wasserstein estimate
    assert stats.gp == 0.0
    assert stats.d_loss == pytest.approx(-stats.wasserstein, abs=1e-12)


def test_train_gan_epoch_trainable_decoder(tiny_config, tiny_dataset):
    cfg = StageTwoConfig(batch=2, d_steps_per_g=4, use_mapper=False)
    decoder = Decoder(tiny_config, np.random.default_rng(1))
    before = decoder.state_dict()
    optimizers = GanOptimizers.from_config(cfg)
    train_gan_epoch(None, decoder, Discriminator(tiny_config), tiny_dataset, cfg, optimizers, 0, np.random.default_rng(0))

    assert not decoder.frozen
    assert any(not np.array_equal(before[name], value) for name, value in decoder.state_dict().items())
    assert all(name.startswith("decoder.") for name in optimizers.generator.m)


def test_train_gan_epoch_nothing_to_train(tiny_config, tiny_dataset):
    cfg = StageTwoConfig(batch=2)
    with pytest.raises(ValueError):
        train_gan_epoch(
            None,
            Decoder(tiny_config),
            Discriminator(tiny_config),
            tiny_dataset,
            cfg,
            GanOptimizers.from_config(cfg),
            0,
            np.random.default_rng(0),
        )


def test_train_gan_epoch_non_finite_loss(tiny_config, tiny_dataset):
    cfg = StageTwoConfig(batch=2)
    decoder = Decoder(tiny_config, np.random.default_rng(1))
    decoder.head.bias.data = np.full(3, np.nan)
    with pytest.raises(NonFiniteLossError):
        train_gan_epoch(
            Mapper(tiny_config),
            decoder,
            Discriminator(tiny_config),
            tiny_dataset,
            cfg,
            GanOptimizers.from_config(cfg),
            0,
            np.random.default_rng(0),
        )


def test_check_frozen(tiny_config):
    decoder = Decoder(tiny_config)
    prepare_stage_two(decoder, StageTwoConfig())
    _check_frozen(decoder)

    decoder.head.bias.grad = np.ones(3)
    with pytest.raises(FrozenDecoderError):
        _check_frozen(decoder)

    decoder.head.bias.grad = None
    decoder.head.bias.requires_grad = True
    with pytest.raises(FrozenDecoderError):
        _check_frozen(decoder)


@pytest.mark.slow
def test_train_gan_epoch_beats_gaussian_baseline(desk_config, desk_dataset):
    dataset = desk_dataset.subset(np.arange(32))
    encoder = Encoder(desk_config, np.random.default_rng(0))
    decoder = Decoder(desk_config, np.random.default_rng(1))
    ae_cfg = StageOneConfig(lr=0.005, batch=16, epochs=60, decay_epoch=59)
    state = ae_adam_state(ae_cfg)
    for epoch in range(ae_cfg.epochs):
        train_ae_epoch(encoder, decoder, dataset, ae_cfg, state, epoch, np.random.default_rng([7, 1, epoch]))

    cfg = StageTwoConfig(batch=16, epochs=100)
    mapper = Mapper(desk_config, np.random.default_rng(2))
    critic = Discriminator(desk_config, np.random.default_rng(3))
    decoder_before = decoder.state_dict()
    optimizers = GanOptimizers.from_config(cfg)
    stream = RealBatchStream(dataset, cfg.batch, np.random.default_rng(4))
    for epoch in range(cfg.epochs):
        stats = train_gan_epoch(mapper, decoder, critic, dataset, cfg, optimizers, epoch, np.random.default_rng([7, 2, epoch]), stream)
        assert np.isfinite(stats.gp)

    for name, value in decoder.state_dict().items():
        assert value.tobytes() == decoder_before[name].tobytes(), name

    rng = np.random.default_rng(5)
    generated = generate(sample_prior(32, desk_config.latent_dim, rng), mapper, decoder)
    baseline = rng.standard_normal(size=(32, desk_config.num_points, 3))
    reference = CloudSet(dataset.clouds, "ref").normalized()
    generated_jsd = jsd(reference, CloudSet(generated, "gen").normalized(), grid_res=8)
    assert generated_jsd < jsd(reference, CloudSet(baseline, "gauss").normalized(), grid_res=8)
