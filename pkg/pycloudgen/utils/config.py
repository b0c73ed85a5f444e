"""Flat key-value run configuration: profile defaults, an optional config file and
command-line overrides, merged in that order."""

# Standard library imports
import logging
import os
from pathlib import Path
from typing import Iterable, Optional, Union

# Third party imports

# Local imports
from pycloudgen.utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "STARNET_SEED"
PROFILES = ["desk", "paper"]

_COMMON_DEFAULTS = {
    "latent_dim": "128",
    "encoder_widths": "64,128,256,512",
    "decoder_widths": "64,128,256,512",
    "disc_widths": "64,128,256,512",
    "disc_hidden": "256",
    "disc_batch_norm": "false",
    "mapper_layers": "4",
    "mapper_width": "128",
    "se_reduction": "4",
    "mlp_decoder": "false",
    "se_off": "false",
    "surface_input": "false",
    "loss_variant": "both",
    "ae_lr": "0.001",
    "ae_beta1": "0.9",
    "ae_beta2": "0.99",
    "ae_decay_ratio": "0.1",
    "gan_lr": "0.0001",
    "gan_beta1": "0.5",
    "gan_beta2": "0.9",
    "gp_weight": "10",
    "d_steps_per_g": "5",
    "pretrained_decoder": "true",
    "use_mapper": "true",
    "auction_eps_scale_factor": "0.25",
    "jsd_grid_res": "28",
    "workers": "1",
}

PROFILE_DEFAULTS = {
    "desk": {
        "num_points": "256",
        "ae_batch": "16",
        "ae_epochs": "100",
        "ae_decay_epoch": "80",
        "gan_batch": "16",
        "gan_epochs": "100",
    },
    "paper": {
        "num_points": "2048",
        "ae_batch": "128",
        "ae_epochs": "500",
        "ae_decay_epoch": "400",
        "gan_batch": "64",
        "gan_epochs": "500",
    },
}

KNOWN_KEYS = {"profile", "seed"} | set(_COMMON_DEFAULTS) | set(PROFILE_DEFAULTS["desk"])


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parses `key = value` lines; blank lines and `#` comments are skipped.

    Raises:
        ConfigError: on a line without '=' or an unknown key.

    """
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected 'key = value', got '{raw.strip()}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{number}: unknown config key '{key}'")
        values[key] = value
    return values


class RunConfig:
    """Resolved string-to-string configuration of one command run."""

    def __init__(self, values: dict[str, str]) -> None:
        unknown = sorted(set(values) - KNOWN_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        self.__values = dict(values)

    @classmethod
    def from_sources(
        cls,
        profile: Optional[str] = None,
        config_file: Optional[Union[str, Path]] = None,
        overrides: Iterable[str] = (),
    ) -> "RunConfig":
        """Merges profile defaults, then the config file, then `key=value` overrides.

        The profile itself may be named in the file or by an override; an explicit
        `profile` argument wins over both.

        Args:
            profile (Optional[str]): 'desk' or 'paper'.
            config_file (Optional[Union[str, Path]]): path to a `key = value` file.
            overrides (Iterable[str]): `key=value` strings.

        Returns:
            config (RunConfig)

        Raises:
            ConfigError: if a source is malformed or names an unknown key or profile.

        """
        file_values: dict[str, str] = {}
        if config_file is not None:
            path = Path(config_file)
            if not path.is_file():
                raise ConfigError(f"config file not found: {path}")
            file_values = parse_config_text(path.read_text(encoding="utf-8"), str(path))

        override_values: dict[str, str] = {}
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override must look like key=value (gave '{item}')")
            key, value = (part.strip() for part in item.split("=", 1))
            if key not in KNOWN_KEYS:
                raise ConfigError(f"unknown config key '{key}'")
            override_values[key] = value

        chosen = profile or override_values.get("profile") or file_values.get("profile") or "desk"
        if chosen not in PROFILES:
            raise ConfigError(f"'profile' must be one of {PROFILES} (gave {chosen})")

        values = {"profile": chosen, **_COMMON_DEFAULTS, **PROFILE_DEFAULTS[chosen]}
        values.update(file_values)
        values.update(override_values)
        values["profile"] = chosen
        return cls(values)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        """Rebuilds a config from its `to_text` rendering (as stored in checkpoints)."""
        return cls(parse_config_text(text, "<snapshot>"))

    def __contains__(self, key: str) -> bool:
        return key in self.__values

    def keys(self) -> list[str]:
        return sorted(self.__values)

    def get_str(self, key: str) -> str:
        if key not in self.__values:
            raise ConfigError(f"config key '{key}' is not set")
        return self.__values[key]

    def get_int(self, key: str) -> int:
        value = self.get_str(key)
        try:
            return int(value)
        except ValueError as error:
            raise ConfigError(f"config key '{key}' must be an integer (gave '{value}')") from error

    def get_float(self, key: str) -> float:
        value = self.get_str(key)
        try:
            return float(value)
        except ValueError as error:
            raise ConfigError(f"config key '{key}' must be a number (gave '{value}')") from error

    def get_bool(self, key: str) -> bool:
        value = self.get_str(key).lower()
        if value in ["true", "1", "yes", "on"]:
            return True
        if value in ["false", "0", "no", "off"]:
            return False
        raise ConfigError(f"config key '{key}' must be a boolean (gave '{value}')")

    def get_ints(self, key: str) -> list[int]:
        value = self.get_str(key)
        try:
            return [int(part) for part in value.split(",") if part.strip()]
        except ValueError as error:
            raise ConfigError(f"config key '{key}' must be a comma-separated list of integers (gave '{value}')") from error

    def with_values(self, **values: Union[str, int, float, bool]) -> "RunConfig":
        """Copy with some keys replaced."""
        merged = dict(self.__values)
        for key, value in values.items():
            merged[key] = str(value).lower() if isinstance(value, bool) else str(value)
        return RunConfig(merged)

    def resolve_seed(self, flag_seed: Optional[int] = None) -> int:
        """Seed precedence: explicit flag, config `seed`, the STARNET_SEED variable, then 0."""
        if flag_seed is not None:
            return int(flag_seed)
        if "seed" in self.__values:
            return self.get_int("seed")
        env_seed = os.environ.get(SEED_ENV_VAR)
        if env_seed is not None:
            try:
                return int(env_seed)
            except ValueError as error:
                raise ConfigError(f"{SEED_ENV_VAR} must be an integer (gave '{env_seed}')") from error
        return 0

    def to_text(self) -> str:
        return "".join(f"{key} = {self.__values[key]}\n" for key in self.keys())

    def log(self) -> None:
        logger.info(f"resolved config:\n{self.to_text().rstrip()}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RunConfig) and self.to_text() == other.to_text()

    def __repr__(self) -> str:
        return f"RunConfig(profile={self.__values.get('profile')}, keys={len(self.__values)})"
