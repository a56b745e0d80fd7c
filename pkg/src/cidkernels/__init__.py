"""CID kernels and closed-form kernel mean embeddings."""

from .embed import (
    CONJUGACY,
    GH,
    GHK,
    ClosedForm,
    Empirical,
    EmpiricalSum,
    Gaussian,
    GaussianK,
    InnerProduct,
    Isotropic,
    IsotropicK,
    Kernel,
    KernelMean,
    LaplaceK,
    Level2Spec,
    LinearCombination,
    Model,
    NumericCF,
    PointMass,
    SpectralStable,
    Stable1D,
    Stable1DK,
    StableIID,
    StableIndep,
    SubGaussian,
    SubGaussianK,
    TensorK,
    TripletCPG,
    TripletK,
    expectation_of_function,
    inner_mean_feature,
    inner_mean_mean,
    inner_product,
    kernel_mean,
    level2_kernel,
    mixture_mean,
    mmd2,
)
from .errors import CidError, NotConjugateError, NumericError, SchemaError
from .recover import RecoveryProblem, SimplexSolution, recover_density, solve_simplex_qp

__version__ = "0.1.0"
