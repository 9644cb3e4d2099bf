"""Power allocation for downlink multi-user NOMA with per-user target rates.

The base station knows only target rates and the OMA time fractions it would
otherwise use, not instantaneous channel gains. This package computes the
allocations that match or beat OMA outage per user, checks allocations for
certain-outage and well-behavedness, ranks SIC decoding orders by energy, and
estimates outage probabilities analytically and by Monte Carlo.
"""

from .allocation import (
    AllocationDiagnostics,
    OmaEquivalentAllocation,
    diagnose,
    epsilon_bounds,
    epsilon_upper_bound,
    general_allocation,
    interference_ceiling,
    oma_equivalent,
    proportional_strategy,
    strategy_allocation,
)
from .channel import (
    ChannelModel1,
    ChannelModel2,
    cdf_model1,
    cdf_model2,
    sample_gains_model1,
    sample_gains_model2,
)
from .kernels import BACKEND
from .model import (
    DecodingOrder,
    EpsilonVector,
    NomaError,
    PowerAllocation,
    SystemConfig,
    canonicalize,
    make_config,
    validate_config,
)
from .ordering import OrderEnergyReport, adjacent_swap_delta, allocation_for_order, rank_orders
from .outage import (
    OutageReport,
    OutageThresholds,
    analytic_outage,
    montecarlo_outage,
    noma_thresholds,
    oma_threshold,
    sweep,
)

__version__ = "0.1.0"
