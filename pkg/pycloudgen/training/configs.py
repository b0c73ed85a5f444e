"""Typed settings of the two training stages."""

# Standard library imports
from dataclasses import dataclass, field

# Third party imports

# Local imports
from pycloudgen.utils.config import RunConfig
from pycloudgen.utils.distances import LOSS_VARIANTS, AuctionConfig
from pycloudgen.utils.exceptions import ConfigError


@dataclass(frozen=True)
class StageOneConfig:
    """Auto-encoder training. Defaults are the full-scale settings."""

    lr: float = 0.001
    betas: tuple[float, float] = (0.9, 0.99)
    decay_epoch: int = 400
    decay_ratio: float = 0.1
    batch: int = 128
    epochs: int = 500
    loss_variant: str = "both"
    auction: AuctionConfig = field(default_factory=AuctionConfig)

    def __post_init__(self) -> None:
        if self.loss_variant not in LOSS_VARIANTS:
            raise ConfigError(f"'loss_variant' must be one of {LOSS_VARIANTS} (gave {self.loss_variant})")
        if not self.decay_epoch < self.epochs:
            raise ConfigError(f"decay_epoch ({self.decay_epoch}) must be smaller than epochs ({self.epochs})")
        if self.batch < 2:
            raise ConfigError(f"'batch' must be at least 2 for batch normalization (gave {self.batch})")
        if self.lr < 0.0 or not 0.0 < self.decay_ratio:
            raise ConfigError("'lr' must be non-negative and 'decay_ratio' positive")

    @classmethod
    def from_run_config(cls, config: RunConfig) -> "StageOneConfig":
        return cls(
            lr=config.get_float("ae_lr"),
            betas=(config.get_float("ae_beta1"), config.get_float("ae_beta2")),
            decay_epoch=config.get_int("ae_decay_epoch"),
            decay_ratio=config.get_float("ae_decay_ratio"),
            batch=config.get_int("ae_batch"),
            epochs=config.get_int("ae_epochs"),
            loss_variant=config.get_str("loss_variant"),
            auction=AuctionConfig(eps_scale_factor=config.get_float("auction_eps_scale_factor")),
        )


@dataclass(frozen=True)
class StageTwoConfig:
    """WGAN-GP training of the generator.

    Attributes:
        pretrained_decoder (bool): start from the stage-one decoder. False trains the
            decoder from its random initialization together with the generator.
        use_mapper (bool): feed prior samples through the mapping network. False makes
            the decoder itself the generator.
    """

    lr: float = 0.0001
    betas: tuple[float, float] = (0.5, 0.9)
    gp_weight: float = 10.0
    batch: int = 64
    epochs: int = 500
    d_steps_per_g: int = 5
    pretrained_decoder: bool = True
    use_mapper: bool = True

    def __post_init__(self) -> None:
        if self.d_steps_per_g < 1:
            raise ConfigError(f"'d_steps_per_g' must be at least 1 (gave {self.d_steps_per_g})")
        if self.batch < 2:
            raise ConfigError(f"'batch' must be at least 2 for batch normalization (gave {self.batch})")
        if self.gp_weight < 0.0:
            raise ConfigError(f"'gp_weight' must be non-negative (gave {self.gp_weight})")

    @property
    def decoder_trainable(self) -> bool:
        """The generator step updates the decoder unless it is the frozen pretrained one."""
        return not (self.pretrained_decoder and self.use_mapper)

    @classmethod
    def from_run_config(cls, config: RunConfig) -> "StageTwoConfig":
        return cls(
            lr=config.get_float("gan_lr"),
            betas=(config.get_float("gan_beta1"), config.get_float("gan_beta2")),
            gp_weight=config.get_float("gp_weight"),
            batch=config.get_int("gan_batch"),
            epochs=config.get_int("gan_epochs"),
            d_steps_per_g=config.get_int("d_steps_per_g"),
            pretrained_decoder=config.get_bool("pretrained_decoder"),
            use_mapper=config.get_bool("use_mapper"),
        )
