"""Discrete scale-equivariant convolution bases.

Integer scale factors are handled exactly by dilation; intermediate
factors by least-squares fits to the discrete scale constraint.
"""
from .basis import (
    MultiScaleBasis,
    Provenance,
    build_basis,
    build_disco_basis,
    build_general_basis,
    build_interp_baseline,
    kernels_from_weights,
    pixel_basis,
)
from .equivariance import EquivarianceReport, constraint_residuals, equivariance_error
from .errors import (
    ConfigurationError,
    DiscoError,
    DomainError,
    ExistenceError,
    FormatError,
    NumericalError,
    SizeError,
)
from .grid import BoundaryMode, convolve, convolve_separable, dilate, outer
from .resample import InterpMethod, InterpOperator, downscale_image, make_downscale
from .scaleconv import (
    RandomNetwork,
    ScaleConvLayer,
    ScaleFeatureMap,
    act,
    lift,
    random_network,
    scale_convolve,
    synthetic_images,
)
from .scales import Scale, ScaleSet
from .solve import SolveConfig, solve_general, solve_intermediate
from .spectral import (
    CirculantMatrix,
    ConstraintResidual,
    dft_matrix,
    embed_kernel_circulant,
    solve_exact,
    solve_lemma_residual,
)

__version__ = "0.1.0"
