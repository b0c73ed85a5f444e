# Standard library imports
from typing import Any

# Third party imports
import numpy as np
import pytest

# Local imports
from pycloudgen.autodiff import Tensor, backward
from pycloudgen.autodiff.ops import mul, sum as tensor_sum
from pycloudgen.networks import Decoder, Encoder, Network
from pycloudgen.training.autoencoder import (
    ReconstructionReport,
    ae_adam_state,
    evaluate_reconstruction,
    reconstruct,
    reconstruction_oracle,
    train_ae_epoch,
)
from pycloudgen.training.configs import StageOneConfig
from pycloudgen.utils.distances import chamfer, chamfer_grad, emd_grad, emd_hungarian, matched_cost


class FlattenPoints(Network):
    """Parameter-free encoder whose code is the flattened cloud."""

    def layers(self):
        return []

    def forward(self, points: Any) -> Tensor:
        points = self.as_points(points)
        return Tensor(points.data.reshape(points.shape[0], -1))


class UnflattenPoints(Network):
    def layers(self):
        return []

    def forward(self, z: Any) -> Tensor:
        z = z if isinstance(z, Tensor) else Tensor(np.atleast_2d(z))
        return Tensor(z.data.reshape(z.shape[0], -1, 3))


def test_train_ae_epoch_identity_networks(tiny_dataset):
    cfg = StageOneConfig(batch=4, epochs=2, decay_epoch=1)
    identity = (FlattenPoints("identity"), UnflattenPoints("identity"))
    stats = train_ae_epoch(*identity, tiny_dataset, cfg, ae_adam_state(cfg), 0, np.random.default_rng(0))

    assert stats.cd == 0.0
    # the auction is optimal only up to eps_min = 1/(8N)
    assert stats.emd == pytest.approx(0.0, abs=1.0 / (8 * tiny_dataset.num_points))
    assert stats.loss == pytest.approx(stats.cd + stats.emd)
    assert set(stats.as_row()) == {"epoch", "loss", "cd", "emd", "lr", "seconds"}


def test_train_ae_epoch_with_validation_data(tiny_config, tiny_dataset):
    cfg = StageOneConfig(batch=4, epochs=3, decay_epoch=2)
    encoder = Encoder(tiny_config, np.random.default_rng(0))
    decoder = Decoder(tiny_config, np.random.default_rng(1))
    state = ae_adam_state(cfg)
    before = decoder.state_dict()

    first = train_ae_epoch(encoder, decoder, tiny_dataset, cfg, state, 0, np.random.default_rng(0))
    assert np.isfinite(first.loss) and first.loss > 0.0
    assert first.lr == cfg.lr
    assert state.step == 2
    assert any(not np.array_equal(before[name], value) for name, value in decoder.state_dict().items())

    decayed = train_ae_epoch(encoder, decoder, tiny_dataset, cfg, state, 2, np.random.default_rng(1))
    assert decayed.lr == pytest.approx(cfg.lr * cfg.decay_ratio)


def test_train_ae_epoch_bad_dataset(tiny_config, tiny_dataset):
    cfg = StageOneConfig(batch=4, epochs=2, decay_epoch=1)
    with pytest.raises(ValueError):
        train_ae_epoch(
            Encoder(tiny_config), Decoder(tiny_config), tiny_dataset.subset([0]), cfg, ae_adam_state(cfg), 0, np.random.default_rng(0)
        )


@pytest.mark.parametrize(
    "name",
    [
        "encoder.conv0.weight",
        "encoder.bn0.gamma",
        "encoder.head.weight",
        "decoder.block0.style_scale.weight",
        "decoder.block0.se.fc1.weight",
        "decoder.block1.style_bias.bias",
        "decoder.block1.bn.beta",
        "decoder.head.weight",
    ],
)
def test_reconstruction_gradient_matches_finite_differences(name, tiny_config, tiny_dataset, finite_difference):
    encoder = Encoder(tiny_config, np.random.default_rng(0))
    decoder = Decoder(tiny_config, np.random.default_rng(1))
    targets = tiny_dataset.clouds[:4]
    params = {**encoder.named_parameters(), **decoder.named_parameters()}
    param = params[name]

    # matchings are frozen at the starting point, as they are during a training step
    outputs = decoder(encoder(targets))
    assignments = [emd_hungarian(outputs.data[b], targets[b])[1] for b in range(4)]

    def loss_of(value: np.ndarray) -> float:
        saved = param.data
        param.data = value
        try:
            decoded = decoder(encoder(targets)).data
        finally:
            param.data = saved
        return sum(chamfer(decoded[b], targets[b]) + matched_cost(decoded[b], targets[b], assignments[b].perm) for b in range(4)) / 4

    grad = np.stack(
        [chamfer_grad(outputs.data[b], targets[b]) + emd_grad(outputs.data[b], targets[b], assignments[b]) for b in range(4)]
    ) / 4
    encoder.zero_grad()
    decoder.zero_grad()
    backward(tensor_sum(mul(outputs, Tensor(grad))))

    expected = finite_difference(loss_of, param.data.copy())
    np.testing.assert_allclose(param.grad, expected, rtol=1e-4, atol=1e-7)


def _train_autoencoder(config, dataset, cfg):
    encoder = Encoder(config, np.random.default_rng(0))
    decoder = Decoder(config, np.random.default_rng(1))
    state = ae_adam_state(cfg)
    stats = [
        train_ae_epoch(encoder, decoder, dataset, cfg, state, epoch, np.random.default_rng([7, 1, epoch])) for epoch in range(cfg.epochs)
    ]
    return encoder, decoder, stats


def test_train_ae_epoch_deterministic(tiny_config, tiny_dataset):
    cfg = StageOneConfig(lr=0.005, batch=4, epochs=2, decay_epoch=1)
    first_encoder, first_decoder, first_stats = _train_autoencoder(tiny_config, tiny_dataset, cfg)
    second_encoder, second_decoder, second_stats = _train_autoencoder(tiny_config, tiny_dataset, cfg)

    assert [(s.loss, s.cd, s.emd) for s in first_stats] == [(s.loss, s.cd, s.emd) for s in second_stats]
    for first, second in [(first_encoder, second_encoder), (first_decoder, second_decoder)]:
        second_state = second.state_dict()
        for name, value in first.state_dict().items():
            assert value.tobytes() == second_state[name].tobytes(), name


@pytest.mark.slow
def test_train_ae_epoch_loss_decreases(desk_config, desk_dataset):
    cfg = StageOneConfig(lr=0.005, batch=16, epochs=100, decay_epoch=99, loss_variant="both")
    _, _, stats = _train_autoencoder(desk_config, desk_dataset, cfg)
    assert stats[-1].loss < 0.5 * stats[0].loss


@pytest.mark.slow
def test_train_ae_epoch_loss_variant_ordering(desk_config, desk_dataset):
    dataset = desk_dataset.subset(np.arange(32))
    scores = {}
    for variant in ["both", "cd", "emd"]:
        cfg = StageOneConfig(lr=0.005, batch=16, epochs=60, decay_epoch=59, loss_variant=variant)
        encoder, decoder, _ = _train_autoencoder(desk_config, dataset, cfg)
        outputs = reconstruct(encoder, decoder, dataset.clouds)
        scores[variant] = (
            np.mean([chamfer(output, cloud) for output, cloud in zip(outputs, dataset.clouds)]),
            np.mean([emd_hungarian(output, cloud)[0] for output, cloud in zip(outputs, dataset.clouds)]),
        )

    assert scores["both"][1] <= scores["cd"][1]
    assert scores["both"][0] <= scores["emd"][0]


def test_evaluate_reconstruction_identity_networks(tiny_dataset):
    report = evaluate_reconstruction(FlattenPoints("identity"), UnflattenPoints("identity"), tiny_dataset)
    assert report.count == len(tiny_dataset)
    assert report.cd == pytest.approx(0.0, abs=1e-20)
    assert report.emd < 1.0 / tiny_dataset.num_points


def test_reconstruct_is_batch_independent(tiny_config, tiny_dataset):
    encoder = Encoder(tiny_config, np.random.default_rng(0))
    decoder = Decoder(tiny_config, np.random.default_rng(1))
    together = reconstruct(encoder, decoder, tiny_dataset.clouds)
    alone = reconstruct(encoder, decoder, tiny_dataset.clouds[3:4])
    assert together.shape == tiny_dataset.clouds.shape
    np.testing.assert_allclose(alone[0], together[3], atol=1e-12)


def test_reconstruction_oracle_with_validation_data(tiny_dataset):
    oracle = reconstruction_oracle(tiny_dataset, seed=7)
    assert oracle.cd > 0.0 and oracle.emd > 0.0
    assert oracle == reconstruction_oracle(tiny_dataset, seed=7)


def test_reconstruction_report_scales():
    report = ReconstructionReport(cd=0.0005, emd=0.04, count=3)
    assert report.cd_reported == pytest.approx(5.0)
    assert report.emd_reported == pytest.approx(4.0)
