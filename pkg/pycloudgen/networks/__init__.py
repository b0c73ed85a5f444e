from pycloudgen.networks.decoder import Decoder
from pycloudgen.networks.discriminator import Discriminator
from pycloudgen.networks.encoder import Encoder
from pycloudgen.networks.mapper import Mapper
from pycloudgen.networks.network import Network, NetworkConfig

__all__ = ["Decoder", "Discriminator", "Encoder", "Mapper", "Network", "NetworkConfig"]
