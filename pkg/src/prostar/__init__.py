"""Finite-dimensional covariant dilations, crossed products, and towers of
C*-algebras, with every construction certified against its defining identities.
"""

from .algebra import (
    AlgebraElement,
    Check,
    FiniteCStarAlgebra,
    PositivityWitness,
    StarHomomorphism,
    VerificationReport,
    WedderburnDecomposition,
    is_positive,
    psd_sqrt,
    verify_star_homomorphism,
    wedderburn_decompose,
)
from .cpmaps import (
    CompletelyPositiveMap,
    CPCertificate,
    amplify,
    apply_cp,
    choi_matrices,
    verify_completely_positive,
    verify_nondegenerate,
)
from .crossed import (
    ConvolutionElement,
    CovariantExtension,
    CrossedProductRealization,
    IntegratedForm,
    build_crossed_product,
    convolve,
    extend_covariant_cp,
    integrated_form,
    involution,
    l1_seminorm,
)
from .dilation import (
    CovariantDilation,
    CovariantTriple,
    DilationCore,
    covariant_dilation,
    covariant_extend,
    gram_operator,
    minimal_dilation,
    uniqueness_unitary,
    verify_dilation,
)
from .errors import NumericalError, PreconditionError, ProstarError, StructuralError
from .groups import (
    FiniteGroup,
    GroupAction,
    UnitaryRepresentation,
    check_covariance,
    covariant_average,
    verify_action,
    verify_group,
    verify_unitary_representation,
)
from .linalg import DEFAULT_TOL, hermitian_eigendecomposition, jacobi_eigh
from .modules import (
    AdjointableOperator,
    HilbertModule,
    ModuleElement,
    adjoint_op,
    complex_basis,
    compose_adjointable,
    element_norm,
    inner_product,
    is_unitary,
    module_action,
    operator_seminorm,
)
from .report import Report, TaskResult
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario, run_scenario
from .tower import (
    AlgebraTower,
    CoherenceReport,
    CoherentElement,
    DirectedPoset,
    ModuleTower,
    TowerAction,
    induced_map,
    levelwise_integrated_coherence,
    levelwise_dilation_coherence,
    push_cp_map,
    push_representation,
    seminorm_eval,
    verify_tower,
)

__version__ = "0.1.0"
