"""Rational secret sharing: simulator, incentive analysis, dominance engine."""

from .analysis import (
    AlphaStar,
    IterationDistribution,
    NashAuditReport,
    alpha_star,
    expected_steps,
    expected_utility_honest,
    expected_utility_withhold,
    iteration_distribution,
    nash_audit,
    verify_running_time,
)
from .dominance import (
    DeletionTrace,
    NormalFormGame,
    PracticalVerdict,
    build_bounded_game,
    build_oneshot_sharing_game,
    check_practical,
    iterate_deletion,
    weakly_dominated_set,
)
from .engine import DEFAULT_CAP, InvariantViolationError, run_mechanism
from .lifts import lift_2_of_n, lift_m_of_n, partition_players
from .protocol import (
    CoinTriple,
    Decision,
    DecisionKind,
    IterationTranscript,
    PlayerRing,
    RoundMessage,
    RunOutcome,
    TerminalCause,
)
from .shamir import (
    DEFAULT_PRIME,
    FieldElement,
    Share,
    ShareIssuer,
    Subshare,
    combine_subshares,
    reconstruct,
)
from .strategies import (
    LocalState,
    Strategy,
    UtilityTable,
    deviation_catalog,
    honest_strategy,
    utility_of_run,
    validate_utilities,
)

__version__ = "0.1.0"
