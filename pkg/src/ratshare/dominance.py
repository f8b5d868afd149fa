"""Finite normal-form games and iterated deletion of weakly dominated strategies.

Payoffs are exact rationals because weak dominance is equality-sensitive:
a float tie would silently turn "never worse, somewhere better" into
"sometimes worse".  Deletion removes, simultaneously for every player,
every strategy that some other pure strategy weakly dominates against
the current restriction sets, and repeats to a fixpoint.  Dominators are
pure strategies only; mixed dominators would need an LP and none of the
desk-scale demonstrations here require them.

The builders materialize tiny two-player share-exchange games: the
one-shot game, where withholding weakly dominates sending outright, and
the two-round bounded game, where the same conclusion needs the full
backward-induction cascade of deletion rounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .strategies import UtilityTable, validate_utilities

Profile = tuple[int, ...]

SEND = "send"
WITHHOLD = "withhold"


@dataclass
class NormalFormGame:
    """Strategy labels per player plus an exact payoff tensor."""

    strategies: tuple[tuple[str, ...], ...]
    payoffs: dict[Profile, tuple[Fraction, ...]]
    name: str = "game"
    # Optional: terminal info vector per profile, for games built from
    # share-exchange outcomes.
    info_map: dict[Profile, tuple[int, ...]] | None = None

    @property
    def n_players(self) -> int:
        return len(self.strategies)

    def __post_init__(self) -> None:
        if not self.strategies or any(len(s) == 0 for s in self.strategies):
            raise ValueError("every player needs a nonempty strategy set")
        expected = set(product(*(range(len(s)) for s in self.strategies)))
        if set(self.payoffs) != expected:
            raise ValueError("payoff tensor must be total over the profile space")
        for profile, us in self.payoffs.items():
            if len(us) != self.n_players:
                raise ValueError(f"profile {profile} needs one payoff per player")

    def payoff(self, profile: Profile, player: int) -> Fraction:
        return self.payoffs[profile][player - 1]

    def label(self, player: int, strategy: int) -> str:
        return self.strategies[player - 1][strategy]

    def index(self, player: int, label: str) -> int:
        return self.strategies[player - 1].index(label)

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "players": self.n_players,
            "strategies": [list(s) for s in self.strategies],
            "payoffs": {
                ",".join(self.label(i + 1, s) for i, s in enumerate(profile)): [
                    str(u) for u in us
                ]
                for profile, us in sorted(self.payoffs.items())
            },
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "NormalFormGame":
        strategies = tuple(tuple(s) for s in doc["strategies"])
        payoffs = {}
        for key, us in doc["payoffs"].items():
            labels = key.split(",")
            profile = tuple(strategies[i].index(lbl) for i, lbl in enumerate(labels))
            payoffs[profile] = tuple(Fraction(u) for u in us)
        return cls(strategies=strategies, payoffs=payoffs, name=doc.get("name", "game"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_doc(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "NormalFormGame":
        with open(path) as fh:
            return cls.from_doc(json.load(fh))


def _opponent_profiles(
    restriction: list[set[int]], player: int
) -> list[tuple[int, ...]]:
    others = [sorted(restriction[j]) for j in range(len(restriction)) if j != player - 1]
    return list(product(*others))


def _full_profile(player: int, own: int, opponents: tuple[int, ...]) -> Profile:
    profile = list(opponents)
    profile.insert(player - 1, own)
    return tuple(profile)


def weakly_dominated(
    game: NormalFormGame, player: int, restriction: list[set[int]]
) -> dict[int, int]:
    """Map each weakly dominated strategy to one pure dominator.

    A strategy is dominated when some other strategy in the player's
    restricted set does at least as well against every restricted opponent
    profile and strictly better against at least one.
    """
    if any(not r for r in restriction):
        raise ValueError("restriction sets must be nonempty")
    opponents = _opponent_profiles(restriction, player)
    mine = sorted(restriction[player - 1])
    dominated: dict[int, int] = {}
    for sigma in mine:
        for tau in mine:
            if tau == sigma:
                continue
            strict = False
            for opp in opponents:
                u_sigma = game.payoff(_full_profile(player, sigma, opp), player)
                u_tau = game.payoff(_full_profile(player, tau, opp), player)
                if u_tau < u_sigma:
                    break
                if u_tau > u_sigma:
                    strict = True
            else:
                if strict:
                    dominated[sigma] = tau
                    break
    return dominated


def weakly_dominated_set(
    game: NormalFormGame, player: int, restriction: list[set[int]] | None = None
) -> set[int]:
    if restriction is None:
        restriction = [set(range(len(s))) for s in game.strategies]
    return set(weakly_dominated(game, player, restriction))


@dataclass
class DeletionRound:
    """One delete-all round: removals (with dominator witnesses) and survivors."""

    deleted: dict[int, dict[int, int]]
    surviving: tuple[frozenset[int], ...]

    @property
    def is_empty(self) -> bool:
        return all(not d for d in self.deleted.values())


@dataclass
class DeletionTrace:
    rounds: list[DeletionRound]
    surviving: tuple[frozenset[int], ...]
    fixpoint: bool
    would_empty: int | None = None

    @property
    def deletion_rounds(self) -> int:
        return sum(1 for r in self.rounds if not r.is_empty)

    def survives(self, player: int, strategy: int) -> bool:
        return strategy in self.surviving[player - 1]


def iterate_deletion(game: NormalFormGame) -> DeletionTrace:
    """Delete all weakly dominated strategies of all players, to a fixpoint.

    If a round would wipe out some player's whole strategy set (provably
    impossible with pure dominators, since weak dominance is a strict
    partial order), the trace stops before applying it and reports the
    player instead of guessing.
    """
    restriction = [set(range(len(s))) for s in game.strategies]
    rounds: list[DeletionRound] = []
    while True:
        doms = {
            player: weakly_dominated(game, player, restriction)
            for player in range(1, game.n_players + 1)
        }
        for player in range(1, game.n_players + 1):
            if len(doms[player]) == len(restriction[player - 1]):
                rounds.append(
                    DeletionRound(
                        deleted=doms, surviving=tuple(frozenset(r) for r in restriction)
                    )
                )
                return DeletionTrace(
                    rounds=rounds,
                    surviving=tuple(frozenset(r) for r in restriction),
                    fixpoint=False,
                    would_empty=player,
                )
        if all(not d for d in doms.values()):
            rounds.append(
                DeletionRound(deleted=doms, surviving=tuple(frozenset(r) for r in restriction))
            )
            return DeletionTrace(
                rounds=rounds,
                surviving=tuple(frozenset(r) for r in restriction),
                fixpoint=True,
            )
        for player in range(1, game.n_players + 1):
            restriction[player - 1] -= set(doms[player])
        rounds.append(
            DeletionRound(deleted=doms, surviving=tuple(frozenset(r) for r in restriction))
        )


@dataclass
class PracticalVerdict:
    """A mechanism is practical iff its recommended profile is a Nash
    equilibrium and survives iterated deletion."""

    is_nash: bool
    survives: bool
    nash_witness: tuple[int, int] | None = None
    dominance_witness: tuple[int, int] | None = None

    @property
    def practical(self) -> bool:
        return self.is_nash and self.survives


def check_practical(game: NormalFormGame, profile: Profile) -> PracticalVerdict:
    """Sweep unilateral pure deviations and replay the deletion trace."""
    for player in range(1, game.n_players + 1):
        if not 0 <= profile[player - 1] < len(game.strategies[player - 1]):
            raise ValueError(f"profile indexes an unknown strategy for player {player}")
    is_nash = True
    nash_witness = None
    for player in range(1, game.n_players + 1):
        here = game.payoff(profile, player)
        for alt in range(len(game.strategies[player - 1])):
            trial = list(profile)
            trial[player - 1] = alt
            if game.payoff(tuple(trial), player) > here:
                is_nash = False
                nash_witness = (player, alt)
                break
        if not is_nash:
            break
    trace = iterate_deletion(game)
    survives = True
    dominance_witness = None
    for player in range(1, game.n_players + 1):
        if not trace.survives(player, profile[player - 1]):
            survives = False
            for rnd in trace.rounds:
                if profile[player - 1] in rnd.deleted.get(player, {}):
                    dominance_witness = (player, rnd.deleted[player][profile[player - 1]])
                    break
            break
    return PracticalVerdict(
        is_nash=is_nash,
        survives=survives,
        nash_witness=nash_witness,
        dominance_witness=dominance_witness,
    )


# --- builders: tiny explicit share-exchange games ----------------------------


def _exact(x) -> Fraction:
    # Fraction(float) is the exact binary value, so ties stay ties.
    return Fraction(x)


def _pair_table(table: UtilityTable) -> UtilityTable:
    if table.n_players != 2:
        raise ValueError("share-exchange game builders need a 2-player table")
    report = validate_utilities(table)
    if not report.ok:
        raise ValueError(f"utility table violates the axioms: {report.violations[:3]}")
    return table


def build_oneshot_sharing_game(table: UtilityTable) -> NormalFormGame:
    """Both players hold one share each; simultaneously send or withhold.

    A player learns exactly when the other sends.
    """
    _pair_table(table)
    labels = (SEND, WITHHOLD)
    payoffs = {}
    info_map = {}
    for a, b in product(range(2), repeat=2):
        info = (1 if b == 0 else 0, 1 if a == 0 else 0)
        payoffs[(a, b)] = (
            _exact(table.payoff(1, info)),
            _exact(table.payoff(2, info)),
        )
        info_map[(a, b)] = info
    return NormalFormGame(
        strategies=(labels, labels), payoffs=payoffs, name="oneshot-2of2", info_map=info_map
    )


# Observation histories after round 1 at which a round-2 action is still
# meaningful: (own round-1 action, other's round-1 action).  Both sending
# ends the game, so that history is omitted; a pure strategy is the round-1
# action plus one action per remaining history.
BOUNDED_HISTORIES = ((SEND, WITHHOLD), (WITHHOLD, SEND), (WITHHOLD, WITHHOLD))


def bounded_strategy_label(a1: str, plan: tuple[str, str, str]) -> str:
    return f"{a1[0].upper()}|{''.join(p[0].upper() for p in plan)}"


def bounded_strategy_sends(label: str) -> bool:
    """Whether the strategy ever sends at a history its own play can reach."""
    a1, plan = label.split("|")
    if a1 == "S":
        return True
    # Round 1 withheld: reachable histories are (W, S) and (W, W).
    return plan[1] == "S" or plan[2] == "S"


def _bounded_outcome(
    s1: tuple[str, tuple[str, str, str]], s2: tuple[str, tuple[str, str, str]]
) -> tuple[int, int]:
    a1, plan1 = s1
    b1, plan2 = s2
    if a1 == SEND and b1 == SEND:
        return (1, 1)
    a2 = plan1[BOUNDED_HISTORIES.index((a1, b1))]
    b2 = plan2[BOUNDED_HISTORIES.index((b1, a1))]
    sent1 = a1 == SEND or a2 == SEND
    sent2 = b1 == SEND or b2 == SEND
    return (1 if sent2 else 0, 1 if sent1 else 0)


def build_bounded_game(rounds: int, table: UtilityTable) -> NormalFormGame:
    """Finite-horizon exchange game with `rounds` in {1, 2}.

    One round is the one-shot game.  With two rounds a pure strategy maps
    each live observation history to an action (2 * 2^3 = 16 strategies
    per player); a player learns iff the other ever sent.
    """
    if rounds == 1:
        return build_oneshot_sharing_game(table)
    if rounds != 2:
        raise ValueError("bounded builder supports 1 or 2 rounds only")
    _pair_table(table)
    pures = [
        (a1, plan)
        for a1 in (SEND, WITHHOLD)
        for plan in product((SEND, WITHHOLD), repeat=len(BOUNDED_HISTORIES))
    ]
    labels = tuple(bounded_strategy_label(a1, plan) for a1, plan in pures)
    payoffs = {}
    info_map = {}
    for i, s1 in enumerate(pures):
        for j, s2 in enumerate(pures):
            info = _bounded_outcome(s1, s2)
            payoffs[(i, j)] = (
                _exact(table.payoff(1, info)),
                _exact(table.payoff(2, info)),
            )
            info_map[(i, j)] = info
    return NormalFormGame(
        strategies=(labels, labels), payoffs=payoffs, name="bounded-r2", info_map=info_map
    )


def prisoners_dilemma() -> NormalFormGame:
    """Reference game: (defect, defect) is practical via strict dominance."""
    c, d = 0, 1
    payoffs = {
        (c, c): (Fraction(2), Fraction(2)),
        (c, d): (Fraction(0), Fraction(3)),
        (d, c): (Fraction(3), Fraction(0)),
        (d, d): (Fraction(1), Fraction(1)),
    }
    return NormalFormGame(
        strategies=(("cooperate", "defect"), ("cooperate", "defect")),
        payoffs=payoffs,
        name="prisoners-dilemma",
    )


def matching_pennies() -> NormalFormGame:
    """Reference game with no weakly dominated strategies."""
    payoffs = {}
    for a, b in product(range(2), repeat=2):
        win = 1 if a == b else -1
        payoffs[(a, b)] = (Fraction(win), Fraction(-win))
    return NormalFormGame(
        strategies=(("heads", "tails"), ("heads", "tails")),
        payoffs=payoffs,
        name="matching-pennies",
    )
