"""Synchronous executor for the randomized secret-sharing mechanism.

One run repeats issue -> coin exchange -> masked bit -> broadcast ->
decide until some player stops or aborts, every player asks for a
restart (fresh shares from a new polynomial), or the iteration cap is
hit.  A player that stops simply goes silent; the others notice the
missing bits one round later and abort, which is the minimal synchronous
realization of stopping.

Runs are deterministic given (seed, trial, profile, config): each player
and the issuer draw from independent derived substreams.
"""

from __future__ import annotations

from random import Random

from .protocol import (
    ISSUER_ID,
    RING,
    Decision,
    DecisionKind,
    IterationTranscript,
    MessageKind,
    RoundMessage,
    RunOutcome,
    Step,
    STEPS_PER_ITERATION,
    TerminalCause,
    parity_rule,
)
from .seeding import derive_bytes, derive_rng
from .shamir import DEFAULT_PRIME, FieldElement, Share, ShareIssuer
from .strategies import (
    CheatEvidence,
    HonestStrategy,
    LocalState,
    Strategy,
)

DEFAULT_CAP = 10**6


class InvariantViolationError(RuntimeError):
    """A protocol invariant that must hold under honest rules was broken."""


class DuplicateEpochError(ValueError):
    """An epoch was issued twice."""


def issue_round(
    issuer: ShareIssuer,
    secret: FieldElement,
    m: int,
    n: int,
    epoch: int,
    rng: Random,
    issued: set[int],
) -> dict[int, Share]:
    """Issue one epoch of shares, one per player, from a fresh polynomial."""
    if epoch in issued:
        raise DuplicateEpochError(f"epoch {epoch} already issued")
    shares = issuer.issue_shares(secret, m, n, epoch, rng)
    issued.add(epoch)
    return {share.holder: share for share in shares}


class _Seat:
    """One ring position: player id, local state, strategy, and stream."""

    __slots__ = ("pos", "pid", "state", "strategy", "rng")

    def __init__(self, pos: int, pid: int, state: LocalState, strategy: Strategy, rng: Random):
        self.pos = pos
        self.pid = pid
        self.state = state
        self.strategy = strategy
        self.rng = rng


def _run_coin_iteration(
    seats: dict[int, _Seat | None],
    pids: dict[int, int],
    alpha: float,
    iteration: int,
    epoch: int,
    accept_broadcast,
    observers: list[LocalState] | None = None,
    record: bool = False,
):
    """Execute steps 1-4 of one iteration among the seated ring members.

    `pids` maps every ring position (vacated or not) to its player id.
    `accept_broadcast(state, sender_pid, payload)` validates a received
    broadcast (tag and epoch), updates holdings, and returns whether it
    counts as received.  Returns (decisions by position, transcript,
    terminal events as (step, kind) pairs).
    """
    msgs: list[RoundMessage] = []
    events: list[tuple[int, str]] = []
    decisions: dict[int, Decision] = {}
    live = {pos: seat for pos, seat in seats.items() if seat is not None}
    inbox_plus: dict[int, int] = {}
    inbox_minus: dict[int, int] = {}
    inbox_masked: dict[int, int] = {}
    broadcasts: list[tuple[int, int, object]] = []

    def pid_of(pos: int) -> int:
        return pids.get(pos, pos)  # the issuer (0) is not seated

    def send(seat: _Seat, receiver_pos: int, step: Step, kind: MessageKind, payload) -> None:
        if record:
            msg = RoundMessage(seat.pid, pid_of(receiver_pos), step, kind, payload, iteration)
            msgs.append(msg)
            seat.state.messages_sent.append(msg)

    def abort(pos: int, step: Step, about_pos: int, detail: str) -> None:
        seat = live.pop(pos)
        seat.state.cheat_evidence.append(
            CheatEvidence("missing-bit", iteration, int(step), pid_of(about_pos), detail)
        )
        decisions[pos] = Decision(DecisionKind.ABORT)
        events.append((int(step), "abort"))

    # Step 1: each player commits coins and sends the masked pieces.
    for pos in sorted(live):
        seat = live[pos]
        seat.state.step = Step.COIN_EXCHANGE
        triple = seat.strategy.coins(seat.state, seat.rng, alpha)
        seat.state.coins = triple
        if triple is None:
            continue
        succ, pred = RING.successor(pos), RING.predecessor(pos)
        inbox_plus[succ] = triple.c_plus
        inbox_minus[pred] = triple.c_minus
        send(seat, succ, Step.COIN_EXCHANGE, MessageKind.COIN_PLUS, triple.c_plus)
        send(seat, pred, Step.COIN_EXCHANGE, MessageKind.COIN_MINUS, triple.c_minus)

    # Step 2: read the step-1 bits (delivered one round later), forward the
    # masked combination to the predecessor.
    for pos in sorted(live):
        seat = live[pos]
        st = seat.state
        st.step = Step.MASKED_BIT
        st.bit_from_pred = inbox_plus.get(pos)
        st.bit_from_succ = inbox_minus.get(pos)
        if st.bit_from_pred is None or st.bit_from_succ is None:
            missing = RING.predecessor(pos) if st.bit_from_pred is None else RING.successor(pos)
            abort(pos, Step.MASKED_BIT, missing, "expected coin bit never arrived")
            continue
        bit = seat.strategy.masked_bit(st, seat.rng)
        if bit is not None:
            pred = RING.predecessor(pos)
            inbox_masked[pred] = bit
            send(seat, pred, Step.MASKED_BIT, MessageKind.MASKED_BIT, bit)

    # Step 3: assemble the parity and decide whether to broadcast.
    for pos in sorted(live):
        seat = live[pos]
        st = seat.state
        st.step = Step.BROADCAST
        masked = inbox_masked.get(pos)
        st.masked_from_succ = masked
        if masked is None:
            abort(pos, Step.BROADCAST, RING.successor(pos), "expected masked bit never arrived")
            continue
        if st.coins is not None:
            st.parity = parity_rule(st.bit_from_pred, masked, st.coins.c)
        if seat.strategy.wants_broadcast(st, seat.rng) and st.own_payload is not None:
            st.broadcast_own = True
            st.observed_broadcasts.add(seat.pid)
            broadcasts.append((seat.pid, pos, st.own_payload))
            for other in sorted(seats):
                if other != pos and seats[other] is not None:
                    send(seat, other, Step.BROADCAST, MessageKind.SHARE_BROADCAST, st.own_payload)
            if record:
                for obs in observers or ():
                    msgs.append(
                        RoundMessage(
                            seat.pid,
                            obs.player,
                            Step.BROADCAST,
                            MessageKind.SHARE_BROADCAST,
                            st.own_payload,
                            iteration,
                        )
                    )

    # Step 4: take delivery of broadcasts, then stop or ask for a restart.
    for sender_pid, sender_pos, payload in broadcasts:
        for pos, seat in live.items():
            if pos == sender_pos:
                continue
            if accept_broadcast(seat.state, sender_pid, payload):
                seat.state.observed_broadcasts.add(sender_pid)
        for obs in observers or ():
            accept_broadcast(obs, sender_pid, payload)
    for pos in sorted(live):
        seat = live[pos]
        st = seat.state
        st.step = Step.DECIDE
        decision = seat.strategy.decide(st, seat.rng)
        decisions[pos] = decision
        if decision.kind == DecisionKind.RESTART:
            send(seat, ISSUER_ID, Step.DECIDE, MessageKind.RESTART_REQUEST, None)
        elif decision.kind == DecisionKind.STOP:
            events.append((int(Step.DECIDE), "stop"))
            if not decision.learned:
                st.cheat_evidence.append(
                    CheatEvidence(
                        "stopped-without-learning",
                        iteration,
                        int(Step.DECIDE),
                        None,
                        f"parity={st.parity} broadcasts={st.observed_count}",
                    )
                )

    transcript = IterationTranscript(
        iteration=iteration,
        epoch=epoch,
        coins={seat.pid: seat.state.coins for seat in seats.values() if seat},
        parities={seat.pid: seat.state.parity for seat in seats.values() if seat},
        broadcasters=tuple(sender for sender, _, _ in broadcasts),
        decisions={pid_of(pos): d for pos, d in decisions.items()},
        messages=msgs,
    )
    return decisions, transcript, events


def normalize_profile(
    profile: dict[int, Strategy] | None, players: tuple[int, ...]
) -> dict[int, Strategy]:
    """Fill a (possibly partial) profile with the honest strategy."""
    profile = dict(profile or {})
    unknown = set(profile) - set(players)
    if unknown:
        raise ValueError(f"profile names unknown players {sorted(unknown)}")
    return {pid: profile.get(pid, HonestStrategy()) for pid in players}


def _resolve_cause(
    info: tuple[int, ...], first_event: tuple[int, int, str] | None
) -> TerminalCause:
    if all(info):
        return TerminalCause.ALL_LEARNED
    if first_event is None:
        return TerminalCause.ITERATION_CAP_HIT
    return (
        TerminalCause.CHEAT_STOP
        if first_event[2] == "stop"
        else TerminalCause.MISSING_BIT_ABORT
    )


def _merge_events(
    first_event: tuple[int, int, str] | None,
    iteration: int,
    events: list[tuple[int, str]],
) -> tuple[int, int, str] | None:
    for step, kind in events:
        candidate = (iteration, step, kind)
        if first_event is None or candidate[:2] < first_event[:2]:
            first_event = candidate
    return first_event


def run_mechanism(
    secret: FieldElement | int,
    alpha: float,
    profile: dict[int, Strategy] | None = None,
    seed: int = 0,
    *,
    cap: int = DEFAULT_CAP,
    prime: int | None = None,
    record: bool = True,
    trial: int = 0,
) -> RunOutcome:
    """Run the 3-of-3 mechanism to termination.

    Deterministic given (seed, trial, profile, config).  The iteration cap
    is a simulation guard, reported as its own terminal cause rather than
    raised.
    """
    outcome, _ = run_mechanism_detailed(
        secret, alpha, profile, seed, cap=cap, prime=prime, record=record, trial=trial
    )
    return outcome


def run_mechanism_detailed(
    secret: FieldElement | int,
    alpha: float,
    profile: dict[int, Strategy] | None = None,
    seed: int = 0,
    *,
    cap: int = DEFAULT_CAP,
    prime: int | None = None,
    record: bool = True,
    trial: int = 0,
) -> tuple[RunOutcome, dict[int, LocalState]]:
    """run_mechanism plus the final per-player local states."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    if cap < 1:
        raise ValueError("iteration cap must be >= 1")
    if prime is None:
        prime = secret.modulus if isinstance(secret, FieldElement) else DEFAULT_PRIME
    if not isinstance(secret, FieldElement):
        secret = FieldElement(secret % prime, prime)

    players = (1, 2, 3)
    strategies = normalize_profile(profile, players)
    honest_profile = all(strategies[p].honest_rules for p in players)
    issuer = ShareIssuer(derive_bytes(seed, trial, "issuer-key"), prime)
    issuer_rng = derive_rng(seed, trial, "issuer")
    seats: dict[int, _Seat | None] = {
        pid: _Seat(
            pid,
            pid,
            LocalState(player=pid, n_players=3, threshold=3),
            strategies[pid],
            derive_rng(seed, trial, "player", pid),
        )
        for pid in players
    }
    all_states = {pid: seats[pid].state for pid in players}

    issued: set[int] = set()
    transcripts: list[IterationTranscript] = []
    first_event: tuple[int, int, str] | None = None
    epoch = 0
    iterations = 0

    while iterations < cap:
        iterations += 1
        shares = issue_round(issuer, secret, 3, 3, epoch, issuer_rng, issued)
        current_epoch = epoch
        for pos, seat in seats.items():
            if seat is not None:
                share = shares[seat.pid]
                seat.state.begin_iteration(iterations, current_epoch, share)
                seat.state.add_holding(current_epoch, ("share", share.x.value), share)

        def accept(state: LocalState, sender_pid: int, payload) -> bool:
            if not isinstance(payload, Share) or payload.epoch != current_epoch:
                state.cheat_evidence.append(
                    CheatEvidence("stale-share", iterations, int(Step.DECIDE), sender_pid)
                )
                return False
            if not issuer.verify_tag(payload):
                state.cheat_evidence.append(
                    CheatEvidence("invalid-tag", iterations, int(Step.DECIDE), sender_pid)
                )
                return False
            state.add_holding(current_epoch, ("share", payload.x.value), payload)
            return True

        decisions, transcript, events = _run_coin_iteration(
            seats, {p: p for p in players}, alpha, iterations, current_epoch, accept, record=record
        )
        first_event = _merge_events(first_event, iterations, events)
        if record:
            transcripts.append(transcript)

        if honest_profile:
            parities = {
                st.parity for st in all_states.values() if st.parity is not None
            }
            if len(parities) > 1:
                raise InvariantViolationError(
                    f"honest players disagree on parity at iteration {iterations}"
                )

        restarters = [pos for pos, d in decisions.items() if d.kind == DecisionKind.RESTART]
        present = [pos for pos, seat in seats.items() if seat is not None]
        if not restarters:
            break
        if len(restarters) < len(present):
            for pos in present:
                if pos not in restarters:
                    seats[pos] = None
        epoch += 1

    info = tuple(1 if all_states[pid].has_learned() else 0 for pid in players)
    cause = _resolve_cause(info, first_event)
    if cause == TerminalCause.ITERATION_CAP_HIT:
        info = (0,) * len(players)
    if honest_profile and any(info) and not all(info):
        raise InvariantViolationError(f"honest run terminated with partial info {info}")

    outcome = RunOutcome(
        iterations=iterations,
        total_steps=STEPS_PER_ITERATION * iterations,
        info=info,
        cause=cause,
        transcripts=transcripts,
    )
    return outcome, all_states
