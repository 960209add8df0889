"""Fractional time derivatives, spectral evolution and moment analytics for linear diffusion problems."""

__version__ = "0.1.0"

from .dispersion import (
    CharPolynomial,
    ClosedDispersion,
    PolyRootDispersion,
    SolutionBasis,
    TabulatedDispersion,
    WeylDispersion,
    cumulant_rates,
    find_dispersion,
    ode_solution_basis,
    weyl_dispersion,
)
from .errors import ConfigError, NumericalError
from .evolution import (
    EvolutionResult,
    PerturbativeRun,
    caputo_exact_spectral,
    caputo_l1_evolve,
    exact_variance,
    greens_function,
    perturbative_evolve,
    perturbative_sources,
    perturbative_variance,
    propagator_compose_check,
    spectral_propagate,
)
from .fracops import (
    ExpMode,
    ExpSignal,
    FracOrder,
    TimeSignal,
    caputo_derivative,
    commutation_residual,
    rl_derivative,
    translate,
    weyl_derivative_modes,
    weyl_derivative_quadrature,
)
from .grid import (
    DensityField,
    SpatialGrid,
    SpectralField,
    forward_transform,
    inverse_transform,
    make_gaussian,
    quadrature,
)
from .kernels import BACKEND
from .mittag_leffler import mittag_leffler
from .moments import (
    MomentSeries,
    MomentSpec,
    PowerLawFit,
    cumulants,
    fit_power_law,
    polynomial_degree_check,
    raw_moment,
    variance_series,
)
