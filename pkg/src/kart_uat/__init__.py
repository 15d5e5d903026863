"""Constructive universal approximation: a lazily evaluated universal activation,
single-neuron approximation of univariate functions, and superposition networks
with 3d+1 hidden neurons built on a Sprecher-type inner system."""

from .activation import ActivationSpec, AnchorPoint, anchor_of, sigma_affine, sigma_eval
from .errors import CertificationError, ConvergenceError, ValidationError
from .harness import (ErrorBudget, ErrorReport, FunctionSpec, GridSpec, budget_split,
                      get_function, modulus_of_continuity, sup_error_on_grid)
from .kart_inner import KartBasis, eval_h, inner_key, make_basis
from .kart_outer import OuterTable, build_outer, eval_superposition
from .network import (ArchitectureShape, BuildConfig, GeneralTwoLayerNet, SuperpositionNet,
                      build_superposition_net, eval_general_net, eval_net, kart_shape)
from .neuron import NeuronCert, approx1d, eval_neuron
from .ratpoly import (CODEC_VERSION, ApproxConfig, RationalPoly, approx_by_rational_poly,
                      decode_poly, encode_poly, eval_poly)

__version__ = "0.1.0"
