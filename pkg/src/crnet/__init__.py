"""Complex-reaction networks: activations, networks, radial targets,
explicit constructions, normalized gradient flow and parameter symmetries."""

from .ctensor import kept, phase, relu, zrelu, zrelu_wirtinger
from .networks import (CRNetwork, RNetwork, embed, forward, grad_cr, grad_r, init_cr, init_r,
                       load_network, normalize, denormalize, save_network, unembed,
                       value_and_grad)

__all__ = [
    "CRNetwork", "RNetwork", "denormalize", "embed", "forward", "grad_cr", "grad_r", "init_cr",
    "init_r", "kept", "load_network", "normalize", "phase", "relu", "save_network", "unembed",
    "value_and_grad", "zrelu", "zrelu_wirtinger",
]
