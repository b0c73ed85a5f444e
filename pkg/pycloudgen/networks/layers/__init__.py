from pycloudgen.networks.layers.layer import Layer
from pycloudgen.networks.layers.linear import BatchNorm, Dense, PointwiseConv
from pycloudgen.networks.layers.style import SELayer, StyleBlock, adain

__all__ = ["BatchNorm", "Dense", "Layer", "PointwiseConv", "SELayer", "StyleBlock", "adain"]
