"""Values for coalitional games on down-sets of a boolean algebra, and Information Attribution."""

__version__ = "0.1.0"

from ._accel import backend_name, numba_enabled, set_numba_enabled
from .axioms import AXIOMS, check_axioms, named_value, positivity_lp, positivity_search
from .errors import (
    CapacityError,
    ConvergenceError,
    DomainError,
    InfoAttribError,
    InvalidElementError,
    ValidationError,
)
from .games import (
    Check,
    DividendTable,
    Game,
    dividend_marginal_decomposition,
    force_null_player,
    harsanyi_transform,
    is_carrier,
    is_monotone,
    is_nonnegative,
    is_submodular,
    is_supermodular,
    mobius_closed_form,
    null_dividend_check,
    null_players,
    random_game,
    random_monotone_game,
    unanimity_game,
    zeta_transform,
)
from .information import (
    Decomposition,
    InformationGame,
    JointDistribution,
    attribute,
    entropy,
    information_game,
    kl_divergence,
    marginalize,
    mutual_information,
    split_distribution,
)
from .lattice import (
    Automorphism,
    BooleanAlgebra,
    DownSet,
    DownSetLattice,
    LinearExtension,
    apply_automorphism,
    boolean_algebra,
    count_extensions_of_subposet,
    count_linear_extensions,
    down_closure,
    enumerate_down_sets,
    enumerate_linear_extensions,
    get_lattice,
    maximal_elements,
    sample_linear_extension,
)
from .selectors import (
    Selector,
    SelectorDistribution,
    SharingSystem,
    enumerate_selectors,
    extension_from_selector,
    hierarchical_sharing_system,
    is_consistent,
    is_consistent_on,
    priority_sharing_system,
    prop4_witness,
    proportional_sharing_system,
    selector_distribution_from_sharing,
    selector_from_extension,
    selector_value,
    sharing_from_selector_distribution,
    sharing_value,
)
from .values import (
    Allocation,
    ExtensionDistribution,
    hierarchical_strength,
    hierarchical_value,
    marginal_contribution,
    predecessor_set,
    random_order_value,
)
