"""Stratonovich-Weyl phase-space simulation of qubit systems.

States and operators are stored through their Pauli coefficients
``c_P = Tr[A P]``; every ``s``-parametrized quasi-probability function,
bracket and flow is a linear operation on those coefficients.
"""

from ._kernels import BACKEND
from .analysis import (
    MarginalSpec,
    diagnostic_report,
    dilation_check,
    marginalize,
    physicality_residual,
    product_test,
    purity_phase,
    rank_report,
    wehrl_entropy,
)
from .brackets import (
    CoordOperator,
    GridFunction,
    apply_coord_operator,
    cosine_bracket,
    grid_coord_operator_1q,
    j_table,
    jacobi_residual,
    jordan_residual,
    k_table,
    metric_audit,
    poisson_audit,
    sine_bracket,
    string_bracket_via_coords,
    tensor_bracket_check,
)
from .dynamics import (
    GeneratorMatrix,
    Model,
    Trajectory,
    build_imaginary_generator,
    build_lindblad_generator,
    build_tfim_generator,
    build_unitary_generator,
    evolve,
    grid_evolve_1q,
    sigma_minus,
    tfim_hamiltonian,
)
from .errors import (
    CFLError,
    DimensionError,
    ImpossiblePrefixError,
    NumericalError,
    SpinPhaseError,
    StepSizeError,
    UnsupportedRepresentationError,
    ValidationError,
)
from .estimation import (
    McConfig,
    expectation_exact,
    expectation_mc,
    mgf_eval,
    mgf_moment,
    mgf_rep_rescale_check,
    sample_basis,
)
from .pauli import (
    PauliOp,
    PauliPolynomial,
    PauliString,
    anticommutator_poly,
    commutator_poly,
    mul_strings,
    poly_product,
)
from .sw import (
    PhaseSpaceFunction,
    SpherePoint,
    change_representation,
    evaluate,
    kernel_axiom_report,
    kernel_matrix,
    lam,
    star_product,
    state_function,
    state_library,
    symbol_of,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
