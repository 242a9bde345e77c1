"""Outage-capacity bounds for diversity links under unknown dependence."""

from .capacity import (
    BoundReport,
    SystemConfig,
    bound_report,
    eps_capacity_best,
    eps_capacity_comonotonic,
    eps_capacity_iid_exponential,
    eps_capacity_worst,
    zero_outage_best,
    zero_outage_worst,
)
from .csit import (
    CsitReport,
    csit_report,
    min_expected_convex,
    zero_outage_csit_best,
    zero_outage_csit_iid_exponential,
    zero_outage_csit_worst,
)
from .depbounds import (
    CBranch,
    CminSolution,
    PhiBranch,
    PhiValue,
    big_phi,
    big_phi_minus,
    c_min,
    h_a,
    phi,
    phi_minus,
    worst_case_tail,
    zero_branch_threshold,
)
from .errors import (
    BracketError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    OutageBoundsError,
    UnsupportedDistributionError,
)
from .marginals import (
    ExponentialMarginal,
    Marginal,
    Monotonicity,
    QuantileTableMarginal,
    ShiftedMarginal,
    UniformMarginal,
    cond_expect_above,
    cond_expect_below,
    integrated_quantile,
    negate,
    parse_marginal_spec,
)
from .numerics import Tolerance, find_root, integrate, inv_reg_lower_gamma, reg_lower_gamma

__version__ = "0.1.0"
