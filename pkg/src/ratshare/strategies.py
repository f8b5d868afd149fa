"""Player strategies and the who-learned utility model.

A strategy is a decision rule from a player's local view (its own coins,
the bits and shares it has received, the shares it holds) to the action
of the current step.  Strategies can only read the LocalState they are
handed, so locality is structural: nothing about other players' private
coins is reachable from here.

Utilities depend only on the terminal info vector (which players learned
the secret).  A UtilityTable stores one payoff per info vector per
player and is validated against three axioms: payoffs are a function of
the info vector alone, every learning outcome strictly beats every
non-learning outcome, and lowering any other player's bit strictly
raises one's payoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from random import Random
from typing import Callable

from .protocol import (
    RESTART,
    CoinTriple,
    Decision,
    DecisionKind,
    RoundMessage,
    Step,
    TerminalCause,
    broadcast_rule,
    masked_bit_rule,
    restart_rule,
)

# --- local state -------------------------------------------------------------


@dataclass(frozen=True)
class CheatEvidence:
    kind: str
    iteration: int
    step: int
    about: int | None = None
    detail: str = ""


@dataclass
class LocalState:
    """Everything one player has observed; append-only across iterations."""

    player: int
    n_players: int = 3
    threshold: int = 3
    iteration: int = 0
    step: Step = Step.ISSUE
    epoch: int = -1
    coins: CoinTriple | None = None
    bit_from_pred: int | None = None
    bit_from_succ: int | None = None
    masked_from_succ: int | None = None
    parity: int | None = None
    own_payload: object = None
    broadcast_own: bool = False
    observed_broadcasts: set[int] = field(default_factory=set)
    holdings: dict[int, dict[object, object]] = field(default_factory=dict)
    messages_sent: list[RoundMessage] = field(default_factory=list)
    cheat_evidence: list[CheatEvidence] = field(default_factory=list)
    learned_fn: Callable | None = field(default=None, repr=False)

    @property
    def observed_count(self) -> int:
        """Distinct valid broadcasts seen this iteration, own iff sent."""
        return len(self.observed_broadcasts)

    def begin_iteration(self, iteration: int, epoch: int, own_payload: object) -> None:
        self.iteration = iteration
        self.epoch = epoch
        self.step = Step.ISSUE
        self.coins = None
        self.bit_from_pred = None
        self.bit_from_succ = None
        self.masked_from_succ = None
        self.parity = None
        self.own_payload = own_payload
        self.broadcast_own = False
        self.observed_broadcasts = set()
        self.holdings.setdefault(epoch, {})

    def add_holding(self, epoch: int, key: object, item: object) -> None:
        self.holdings.setdefault(epoch, {})[key] = item

    def has_learned(self) -> bool:
        if self.learned_fn is not None:
            return self.learned_fn(self)
        return any(len(items) >= self.threshold for items in self.holdings.values())


# --- strategies --------------------------------------------------------------


class Strategy:
    """Decision rule: (LocalState, randomness) -> action for the current step."""

    name = "strategy"
    # True when the strategy follows the recommended message rules (possibly
    # with different coin distributions), so parity-agreement and
    # all-or-nothing invariants are expected to hold.
    honest_rules = True

    def coins(self, state: LocalState, rng: Random, alpha: float) -> CoinTriple | None:
        raise NotImplementedError

    def masked_bit(self, state: LocalState, rng: Random) -> int | None:
        raise NotImplementedError

    def wants_broadcast(self, state: LocalState, rng: Random) -> bool:
        raise NotImplementedError

    def decide(self, state: LocalState, rng: Random) -> Decision:
        raise NotImplementedError

    def forwards_to_leader(self, state: LocalState, rng: Random) -> bool:
        """Group lifts only: forward the own share/bundle to the group leader."""
        return True

    def act(self, state: LocalState, rng: Random, alpha: float | None = None):
        """Single-rule view: dispatch on the step recorded in the state."""
        if state.step == Step.COIN_EXCHANGE:
            return self.coins(state, rng, alpha)
        if state.step == Step.MASKED_BIT:
            return self.masked_bit(state, rng)
        if state.step == Step.BROADCAST:
            return self.wants_broadcast(state, rng)
        if state.step == Step.DECIDE:
            return self.decide(state, rng)
        raise ValueError(f"no action at step {state.step!r}")


class HonestStrategy(Strategy):
    """The recommended strategy: randomize only in the coin choice."""

    name = "honest"
    honest_rules = True

    def coins(self, state: LocalState, rng: Random, alpha: float) -> CoinTriple:
        c = 1 if rng.random() < alpha else 0
        return CoinTriple.make(c, rng.getrandbits(1))

    def masked_bit(self, state: LocalState, rng: Random) -> int | None:
        return masked_bit_rule(state.bit_from_succ, state.coins.c)

    def wants_broadcast(self, state: LocalState, rng: Random) -> bool:
        return broadcast_rule(state.parity, state.coins.c if state.coins else None)

    def decide(self, state: LocalState, rng: Random) -> Decision:
        if restart_rule(state.parity, state.observed_count):
            return RESTART
        return Decision(DecisionKind.STOP, learned=state.has_learned())


def honest_strategy(alpha: float) -> HonestStrategy:
    """The recommended strategy of the mechanism with coin bias alpha.

    The bias itself lives in the mechanism configuration and is handed to
    the strategy at the coin step; this constructor just validates it.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    return HonestStrategy()


class WithholdShare(HonestStrategy):
    """Never broadcast, even when parity and the own coin are both 1."""

    name = "withhold"
    honest_rules = False

    def wants_broadcast(self, state: LocalState, rng: Random) -> bool:
        return False


class BiasedCoin(HonestStrategy):
    """Honest play with the send-intent coin drawn at a different bias."""

    name = "biased-coin"
    honest_rules = True

    def __init__(self, alpha_prime: float):
        if not 0 < alpha_prime <= 1:
            raise ValueError(f"biased coin needs alpha' in (0, 1], got {alpha_prime}")
        self.alpha_prime = alpha_prime

    def coins(self, state: LocalState, rng: Random, alpha: float) -> CoinTriple:
        return super().coins(state, rng, self.alpha_prime)


class GarbleStep2(HonestStrategy):
    """Flip the forwarded masked bit, corrupting the predecessor's parity."""

    name = "garble-step2"
    honest_rules = False

    def masked_bit(self, state: LocalState, rng: Random) -> int:
        return super().masked_bit(state, rng) ^ 1


class AlwaysSilent(HonestStrategy):
    """Send nothing at any step."""

    name = "always-silent"
    honest_rules = False

    def coins(self, state: LocalState, rng: Random, alpha: float) -> None:
        return None

    def masked_bit(self, state: LocalState, rng: Random) -> None:
        return None

    def wants_broadcast(self, state: LocalState, rng: Random) -> bool:
        return False

    def decide(self, state: LocalState, rng: Random) -> Decision:
        return Decision(DecisionKind.STOP, learned=state.has_learned())


class AlwaysBroadcast(HonestStrategy):
    """Broadcast the share every iteration regardless of parity."""

    name = "always-broadcast"
    honest_rules = False

    def wants_broadcast(self, state: LocalState, rng: Random) -> bool:
        return True


class WithholdFromLeader(HonestStrategy):
    """Group lifts: never forward the own share to the group leader."""

    name = "withhold-from-leader"
    honest_rules = False

    def forwards_to_leader(self, state: LocalState, rng: Random) -> bool:
        return False


class ForcedCoins(Strategy):
    """Test harness: replay scripted coins, delegate everything else.

    The script holds one (c, c_plus) entry per iteration; iterations past
    the end fall back to the inner strategy's own coin draw.
    """

    def __init__(self, script: list[tuple[int, int]], inner: Strategy | None = None):
        self.script = script
        self.inner = inner if inner is not None else HonestStrategy()
        self.honest_rules = self.inner.honest_rules
        self.name = f"forced+{self.inner.name}"

    def coins(self, state: LocalState, rng: Random, alpha: float) -> CoinTriple | None:
        if state.iteration - 1 < len(self.script):
            c, c_plus = self.script[state.iteration - 1]
            return CoinTriple.make(c, c_plus)
        return self.inner.coins(state, rng, alpha)

    def masked_bit(self, state: LocalState, rng: Random) -> int | None:
        return self.inner.masked_bit(state, rng)

    def wants_broadcast(self, state: LocalState, rng: Random) -> bool:
        return self.inner.wants_broadcast(state, rng)

    def decide(self, state: LocalState, rng: Random) -> Decision:
        return self.inner.decide(state, rng)

    def forwards_to_leader(self, state: LocalState, rng: Random) -> bool:
        return self.inner.forwards_to_leader(state, rng)


DEVIATION_NAMES = (
    "withhold",
    "biased-coin",
    "garble-step2",
    "always-silent",
    "always-broadcast",
)


def deviation_catalog(alpha_prime: float = 1.0) -> dict[str, Strategy]:
    """The named deviations used by the incentive audit."""
    return {
        "withhold": WithholdShare(),
        "biased-coin": BiasedCoin(alpha_prime),
        "garble-step2": GarbleStep2(),
        "always-silent": AlwaysSilent(),
        "always-broadcast": AlwaysBroadcast(),
    }


def build_deviation(spec: str) -> Strategy:
    """Parse "name" or "name:param" into a deviation strategy."""
    name, _, param = spec.partition(":")
    if name == "biased-coin":
        return BiasedCoin(float(param) if param else 1.0)
    if param:
        raise ValueError(f"deviation {name!r} takes no parameter")
    try:
        return deviation_catalog()[name]
    except KeyError:
        raise ValueError(f"unknown deviation {name!r}") from None


# --- info vectors and utilities ----------------------------------------------


def info_key(info: tuple[int, ...]) -> str:
    return "".join(str(b) for b in info)


def parse_info_key(key: str) -> tuple[int, ...]:
    if not key or any(ch not in "01" for ch in key):
        raise ValueError(f"info vector key must be a bit string, got {key!r}")
    return tuple(int(ch) for ch in key)


def all_info_vectors(n_players: int) -> list[tuple[int, ...]]:
    return [tuple(bits) for bits in product((0, 1), repeat=n_players)]


@dataclass
class UtilityValidationReport:
    """Violated ordered pairs, empty iff the axioms hold."""

    violations: list[tuple[str, int, tuple[int, ...], tuple[int, ...]]]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class UtilityTable:
    """Per-player payoffs keyed by info vector.

    Keying by the info vector alone bakes in the first axiom; validation
    checks the two strict-preference axioms.
    """

    n_players: int
    payoffs: tuple[dict[tuple[int, ...], float], ...]

    def payoff(self, player: int, info: tuple[int, ...]) -> float:
        try:
            return self.payoffs[player - 1][tuple(info)]
        except KeyError:
            raise ValueError(f"missing vector entry {info_key(info)} for player {player}") from None

    def u_only(self, player: int) -> float:
        vec = tuple(1 if i == player else 0 for i in range(1, self.n_players + 1))
        return self.payoff(player, vec)

    def u_all(self, player: int) -> float:
        return self.payoff(player, (1,) * self.n_players)

    def u_none(self, player: int) -> float:
        return self.payoff(player, (0,) * self.n_players)

    @classmethod
    def from_scalars(
        cls, u_only: float, u_all: float, u_none: float, n_players: int = 3
    ) -> "UtilityTable":
        """Expand the three canonical scalars into a full symmetric table.

        Payoffs fall linearly in the number of other learners, from u_only
        down to u_all while learning and from u_none downward while not;
        both slopes are strictly positive exactly when u_only > u_all >
        u_none, so the expansion satisfies the axioms iff the scalars are
        ordered.
        """
        step_learn = (u_only - u_all) / (n_players - 1)
        step_miss = (u_all - u_none) / (n_players - 1)
        tables = []
        for player in range(1, n_players + 1):
            entries = {}
            for vec in all_info_vectors(n_players):
                others = sum(vec) - vec[player - 1]
                if vec[player - 1]:
                    entries[vec] = u_only - others * step_learn
                else:
                    entries[vec] = u_none - others * step_miss
            tables.append(entries)
        return cls(n_players=n_players, payoffs=tuple(tables))

    @classmethod
    def from_doc(cls, doc: dict) -> "UtilityTable":
        """Load from the document format (scalar aliases or explicit maps)."""
        n = int(doc.get("players", 3))
        if "payoffs" in doc:
            tables = []
            for player in range(1, n + 1):
                raw = doc["payoffs"].get(str(player))
                if raw is None:
                    raise ValueError(f"missing payoff map for player {player}")
                entries = {}
                for key, value in raw.items():
                    vec = parse_info_key(key)
                    if len(vec) != n:
                        raise ValueError(f"key {key!r} has wrong length for {n} players")
                    entries[vec] = float(value)
                tables.append(entries)
            return cls(n_players=n, payoffs=tuple(tables))
        try:
            return cls.from_scalars(
                float(doc["u_only"]), float(doc["u_all"]), float(doc["u_none"]), n
            )
        except KeyError as missing:
            raise ValueError(f"utility document needs payoffs or scalar aliases ({missing})")

    def to_doc(self) -> dict:
        return {
            "players": self.n_players,
            "payoffs": {
                str(player): {info_key(vec): value for vec, value in table.items()}
                for player, table in enumerate(self.payoffs, start=1)
            },
        }

    def validate(self) -> UtilityValidationReport:
        violations = []
        vectors = all_info_vectors(self.n_players)
        for player in range(1, self.n_players + 1):
            values = {vec: self.payoff(player, vec) for vec in vectors}
            i = player - 1
            learning = [v for v in vectors if v[i] == 1]
            missing = [v for v in vectors if v[i] == 0]
            for r in learning:
                for r2 in missing:
                    if not values[r] > values[r2]:
                        violations.append(("U2", player, r, r2))
            # Strict monotonicity on adjacent pairs (one other bit lowered);
            # the general comparisons follow by chaining.
            for vec in vectors:
                for j in range(self.n_players):
                    if j == i or vec[j] == 0:
                        continue
                    lowered = tuple(0 if k == j else b for k, b in enumerate(vec))
                    if not values[lowered] > values[vec]:
                        violations.append(("U3", player, lowered, vec))
        return UtilityValidationReport(violations)


def validate_utilities(table: UtilityTable) -> UtilityValidationReport:
    """Check the strict-preference axioms; empty report iff they hold."""
    return table.validate()


def canonical_table(n_players: int = 3) -> UtilityTable:
    """The running example: u_only=2, u_all=1, u_none=0."""
    return UtilityTable.from_scalars(2.0, 1.0, 0.0, n_players)


def utility_of_run(outcome, table: UtilityTable, player: int) -> float:
    """Payoff of a terminated run: a table lookup on its info vector.

    Runs cut off at the iteration cap count as nobody-learned.
    """
    info = outcome.info
    if outcome.cause == TerminalCause.ITERATION_CAP_HIT:
        info = (0,) * len(info)
    return table.payoff(player, info)
