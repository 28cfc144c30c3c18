"""Double-auction market model, digital-goods auctions and oracles."""

from .auctions import (
    NO_THRESHOLD,
    CompetitivenessReport,
    alpha_beta_filter,
    circuit_auction,
    circuit_mechanism,
    measure_competitiveness,
    opt_price_mechanism,
    opt_single_price,
    posted_price_payments,
    threshold_payment,
    uniform_sampler,
    vcg_digital_good,
)
from .club_good import ClubGoodResult, club_good_bruteforce, club_good_mechanism
from .double_auction import DoubleAuctionResult, run_double_auction
from .model import (
    BUYER,
    SELLER,
    Allocation,
    ConcaveOfCardinality,
    FeasibilityReport,
    MarketInstance,
    Violation,
    WeightedCoverage,
    build_gain,
    check_feasibility,
    extremalize,
    random_instance,
)

MECHANISMS = {"circuit": circuit_mechanism, "opt_price": opt_price_mechanism}
