"""Executable protocol state machines and class reductions.

Three runnable protocols: GLT-2S key distribution over gbits, streaming
deterministic Bell-pair QKD, and permutation-of-particles direct
communication (PoP QSDC). Plus the transformers that move configs
between security classes: block reduction (streaming key protocol to
permuted-block message protocol), key reduction (message protocol doing
key distribution), and the key-agreement derivation.

Every run is a sequential state machine driven by three independent
seeded streams (protocol randomness, adversary randomness, channel
noise), so a (config, seed) pair fixes the result bit-exactly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .adversary import (
    AttackReport,
    GltInterceptResend,
    ProbeAttack,
    QuantumInterceptResend,
    escape_probability_checked,
    permutation_attack,
    pop_eve_information,
    stream_eve_information,
    _POP_ENUMERATION_LIMIT,
)
from .config import (
    ConfigValidationError,
    ProtocolConfig,
    config_digest,
    derive_seed,
    message_capacity,
    protocol_class,
    repetition_length,
)
from .gpt import gbit_pure, sample_outcome
from .metrics import (
    SecurityVerdict,
    binary_entropy,
    check_qkd_condition,
    check_qsdc_condition,
)
from .quantum import BellOutcome, ProbeAttackSpec, QuantumRegistry, singlet
from .transport import (
    Channel,
    EveHook,
    GbitCarrier,
    ParticleCarrier,
    Permutation,
    Transcript,
)

__all__ = [
    "EscapeEstimate",
    "ProtocolError",
    "RESULT_SCHEMA",
    "RunResult",
    "block_reduce",
    "decode_bell_bits",
    "derive_qka",
    "glt_escape_trials",
    "key_reduce",
    "run",
    "run_glt2s",
    "run_pop_qsdc",
    "run_stream_qkd",
]

RESULT_SCHEMA = "orthosim.run-result/v1"

# dense-coding operator per 2-bit message, applied to one half of a singlet
_DENSE_PAULI = {(0, 0): "I", (0, 1): "X", (1, 0): "Z", (1, 1): "XZ"}

# Bell outcome back to the message bits that produce it from a singlet
_BELL_DECODE = {
    BellOutcome.PSI_MINUS: (0, 0),
    BellOutcome.PHI_MINUS: (0, 1),
    BellOutcome.PSI_PLUS: (1, 0),
    BellOutcome.PHI_PLUS: (1, 1),
}


class ProtocolError(ValueError):
    """Raised for protocol-level misuse outside config validation."""


def decode_bell_bits(outcome: BellOutcome) -> tuple[int, int]:
    """Message bits whose dense encoding of a singlet yields outcome."""
    return _BELL_DECODE[outcome]


@dataclass(frozen=True)
class RunResult:
    """Everything one protocol run produced.

    Payloads are empty on abort. The verdict is present whenever both
    information quantities are computable (adversary-free runs score the
    eavesdropper at zero; probe adversaries get exact Holevo values);
    intercept-resend adversaries surface through attack_report only.
    Information rates are per payload bit throughout.
    """

    kind: str
    outcome: str
    error_rate: float
    threshold: float
    alice_payload: tuple[int, ...]
    bob_payload: tuple[int, ...]
    detection_events: tuple[bool, ...]
    transcript: Transcript
    verdict: Optional[SecurityVerdict] = None
    attack_report: Optional[AttackReport] = None
    error_rate_second: Optional[float] = None
    security_class: str = "QKD"

    def __post_init__(self) -> None:
        if self.outcome not in ("completed", "aborted"):
            raise ProtocolError(f"unknown outcome {self.outcome!r}")
        if not 0.0 <= self.error_rate <= 1.0:
            raise ProtocolError(f"error rate out of range: {self.error_rate}")
        first_bad = self.error_rate > self.threshold
        second_bad = self.error_rate_second is not None and self.error_rate_second > max(
            self.error_rate, self.threshold
        )
        if self.outcome == "aborted" and not (first_bad or second_bad):
            raise ProtocolError("aborted without an exceeded threshold")
        if self.outcome == "completed" and (first_bad or second_bad):
            raise ProtocolError("completed despite an exceeded threshold")

    def to_json_dict(self) -> dict:
        doc = {
            "schema": RESULT_SCHEMA,
            "kind": self.kind,
            "security_class": self.security_class,
            "outcome": self.outcome,
            "error_rate": self.error_rate,
            "error_rate_second": self.error_rate_second,
            "threshold": self.threshold,
            "alice_payload": list(self.alice_payload),
            "bob_payload": list(self.bob_payload),
            "detection_events": [bool(e) for e in self.detection_events],
            "verdict": asdict(self.verdict) if self.verdict else None,
            "attack_report": None,
            "transcript": [asdict(r) for r in self.transcript.records],
        }
        if self.attack_report is not None:
            raw = asdict(self.attack_report)
            raw["detection_events"] = [bool(e) for e in raw["detection_events"]]
            doc["attack_report"] = raw
        return doc


# ---------------------------------------------------------------- shared plumbing


def _rng_streams(config: ProtocolConfig, seed: int):
    # independent streams so attaching an adversary or a noise model
    # never perturbs the legitimate parties' randomness; one digest
    # feeds all three because generator seeding dominates short runs
    digest = hashlib.sha256(f"{seed}:streams".encode()).digest()
    main = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    eve = (
        np.random.default_rng(int.from_bytes(digest[8:16], "big"))
        if config.adversary is not None
        else None
    )
    noise = (
        np.random.default_rng(int.from_bytes(digest[16:24], "big"))
        if config.noise is not None
        else None
    )
    return main, eve, noise


def _build_hook(config: ProtocolConfig, rng_eve: np.random.Generator) -> Optional[EveHook]:
    spec = config.adversary
    if spec is None:
        return None
    if spec.kind == "glt-intercept-resend":
        return GltInterceptResend(rng_eve, spec.attack_fraction)
    if spec.kind == "quantum-intercept-resend":
        return QuantumInterceptResend(spec.basis, rng_eve, spec.attack_fraction)
    return ProbeAttack(ProbeAttackSpec(spec.theta))


def _build_channel(config: ProtocolConfig, hook, rng_noise) -> Channel:
    noise = config.noise.to_channel() if config.noise is not None else None
    return Channel(eve_hook=hook, noise=noise, noise_rng=rng_noise if noise else None)


def _mean(events: Sequence[bool]) -> float:
    return sum(events) / len(events) if events else 0.0


# ---------------------------------------------------------------- GLT-2S


@lru_cache(maxsize=256)
def _glt_codewords(theory) -> tuple:
    # the two codeword tables per theory are immutable, share them
    j, k = theory.num_fiducials, theory.num_outcomes
    return gbit_pure(theory, (0,) * j), gbit_pure(theory, (k - 1,) * j)


def _glt_exchange(config: ProtocolConfig, rng, rng_eve):
    """One full gbit exchange plus public check over fresh channel state.

    Returns (channel, hook, bits, outcomes, check_coords, events); the
    callers decide what to package from that.
    """
    hook = _build_hook(config, rng_eve)
    channel = Channel(eve_hook=hook)
    theory = config.fiducial
    j, k = theory.num_fiducials, theory.num_outcomes
    n = config.num_gbits
    codewords = _glt_codewords(theory)

    if n <= 64:
        # raw doubles beat array draws at small n (bias O(2^-53))
        bits = [int(rng.random() * 2) for _ in range(n)]
    else:
        bits = [int(b) for b in rng.integers(0, 2, size=n)]
    carriers = [GbitCarrier(codewords[b]) for b in bits]
    delivered = channel.send_block(carriers, Permutation.identity(n), sender="alice")

    if n <= 64:
        fiducials = [int(rng.random() * j) for _ in range(n)]
    else:
        fiducials = [int(f) for f in rng.integers(0, j, size=n)]
    outcomes = [
        sample_outcome(c.state, f, rng) for c, f in zip(delivered, fiducials)
    ]

    num_checks = round(config.check_fraction * n)
    if num_checks == n:
        check_coords = list(range(n))
    else:
        check_coords = sorted(
            int(c) for c in rng.choice(n, size=num_checks, replace=False)
        )
    channel.broadcast(check_coords, "alice", f"check coords n={num_checks}")
    channel.broadcast(
        [outcomes[c] for c in check_coords], "bob", f"check outcomes n={num_checks}"
    )
    # codewords are deterministic in every fiducial, so expectation is exact
    events = tuple(
        outcomes[c] != (0 if bits[c] == 0 else k - 1) for c in check_coords
    )
    return channel, hook, bits, outcomes, check_coords, events


def run_glt2s(config: ProtocolConfig, seed: Optional[int] = None) -> RunResult:
    """Key distribution over gbits, secured by measurement disturbance.

    Alice encodes each key bit in a codeword gbit assigning that bit's
    outcome in every fiducial (all-zeros vs all-top); Bob measures one
    uniformly random fiducial per gbit, which reads the bit directly, so
    every raw bit is a sifted bit. A public check on a fraction of
    coordinates estimates the mismatch rate against the deterministic
    expectation and aborts above threshold. seed overrides config.seed
    for this run, letting trial loops share one validated config.
    """
    config.ensure_valid()
    if config.kind != "glt2s":
        raise ConfigValidationError([f"run_glt2s got kind {config.kind!r}"])
    rng, rng_eve, _ = _rng_streams(config, config.seed if seed is None else seed)
    channel, hook, bits, outcomes, check_coords, events = _glt_exchange(
        config, rng, rng_eve
    )
    theory = config.fiducial
    j, k = theory.num_fiducials, theory.num_outcomes
    n = config.num_gbits
    num_checks = len(check_coords)
    error_rate = _mean(events)
    aborted = error_rate > config.threshold

    check_set = set(check_coords)
    if aborted:
        alice_key = bob_key = ()
    else:
        alice_key = tuple(bits[i] for i in range(n) if i not in check_set)
        bob_key = tuple(
            int(outcomes[i] == k - 1) for i in range(n) if i not in check_set
        )

    report = None
    eve_info = 0.0
    if hook is not None:
        attacked = len(hook.observations)
        # each attacked codeword is read exactly (separable in any fiducial)
        eve_info = attacked / n
        report = AttackReport(
            strategy=hook.strategy,
            rounds_attacked=attacked,
            detection_events=events,
            empirical_detection=error_rate,
            analytic_escape=escape_probability_checked(j, k, attacked, num_checks / n),
            eve_information=eve_info,
        )
    verdict = check_qkd_condition(
        error_rate, config.threshold, 1.0 - binary_entropy(error_rate), eve_info
    )
    return RunResult(
        kind=config.kind,
        outcome="aborted" if aborted else "completed",
        error_rate=error_rate,
        threshold=config.threshold,
        alice_payload=alice_key,
        bob_payload=bob_key,
        detection_events=events,
        transcript=channel.transcript,
        verdict=verdict,
        attack_report=report,
        security_class=protocol_class(config),
    )


@dataclass(frozen=True)
class EscapeEstimate:
    """Monte Carlo tally of how often an attack passes every public check."""

    trials: int
    escapes: int
    analytic: float

    @property
    def escape_rate(self) -> float:
        return self.escapes / self.trials

    @property
    def std_error(self) -> float:
        return math.sqrt(self.analytic * (1.0 - self.analytic) / self.trials)


def glt_escape_trials(
    config: ProtocolConfig, trials: int, seed: Optional[int] = None
) -> EscapeEstimate:
    """Escape-frequency estimate over repeated full gbit exchanges.

    Each trial executes the complete exchange (encoding, channel with
    any attached adversary, measurement, public check); escape means no
    checked coordinate disagreed, independent of the abort threshold.
    All trials share one stream pair, so the tally is reproducible from
    (config, seed) and large counts stay cheap. The analytic reference
    assumes every round is attacked, with the same partial-check
    approximation the per-run reports use.
    """
    config.ensure_valid()
    if config.kind != "glt2s":
        raise ConfigValidationError([f"glt_escape_trials got kind {config.kind!r}"])
    if trials < 1:
        raise ProtocolError(f"trials must be positive, got {trials}")
    rng, rng_eve, _ = _rng_streams(config, config.seed if seed is None else seed)
    escapes = 0
    for _ in range(trials):
        events = _glt_exchange(config, rng, rng_eve)[5]
        escapes += not any(events)
    theory = config.fiducial
    n = config.num_gbits
    analytic = escape_probability_checked(
        theory.num_fiducials,
        theory.num_outcomes,
        n,
        round(config.check_fraction * n) / n,
    )
    return EscapeEstimate(trials=trials, escapes=escapes, analytic=analytic)


# ---------------------------------------------------------------- streaming QKD


def run_stream_qkd(config: ProtocolConfig, seed: Optional[int] = None) -> RunResult:
    """Deterministic Bell-pair QKD with sequential particle streaming.

    Per round Alice dense-encodes two fresh key bits on one half of a
    singlet and streams both halves one particle at a time with the
    pairing public; Bob Bell-measures and decodes. A public comparison
    on a fraction of rounds estimates the per-bit error rate.
    """
    config.ensure_valid()
    if config.kind != "stream-qkd":
        raise ConfigValidationError([f"run_stream_qkd got kind {config.kind!r}"])
    rng, rng_eve, rng_noise = _rng_streams(config, config.seed if seed is None else seed)
    hook = _build_hook(config, rng_eve)
    channel = _build_channel(config, hook, rng_noise)
    registry = QuantumRegistry()
    rounds = config.block_size

    alice_bits: list[tuple[int, int]] = []
    bob_bits: list[tuple[int, int]] = []
    for _ in range(rounds):
        pair = registry.allocate(singlet())
        bits = (int(rng.integers(0, 2)), int(rng.integers(0, 2)))
        alice_bits.append(bits)
        registry.apply_pauli(pair[0], _DENSE_PAULI[bits])
        sent_first = channel.send_block(
            [ParticleCarrier(registry, pair[0])], Permutation.identity(1)
        )
        sent_second = channel.send_block(
            [ParticleCarrier(registry, pair[1])], Permutation.identity(1)
        )
        outcome = registry.bell_measure(
            sent_first[0].particle, sent_second[0].particle, rng
        )
        bob_bits.append(decode_bell_bits(outcome))

    num_checks = round(config.check_fraction * rounds)
    check_rounds = sorted(
        int(c) for c in rng.choice(rounds, size=num_checks, replace=False)
    )
    channel.broadcast(check_rounds, "alice", f"check rounds n={num_checks}")
    channel.broadcast(
        [bob_bits[c] for c in check_rounds], "bob", f"check bits n={num_checks}"
    )
    events = tuple(bob_bits[c] != alice_bits[c] for c in check_rounds)
    wrong_bits = sum(
        (alice_bits[c][0] != bob_bits[c][0]) + (alice_bits[c][1] != bob_bits[c][1])
        for c in check_rounds
    )
    error_rate = wrong_bits / (2 * num_checks)
    aborted = error_rate > config.threshold

    check_set = set(check_rounds)
    if aborted:
        alice_key = bob_key = ()
    else:
        alice_key = tuple(
            b for i in range(rounds) if i not in check_set for b in alice_bits[i]
        )
        bob_key = tuple(
            b for i in range(rounds) if i not in check_set for b in bob_bits[i]
        )

    report = None
    eve_info: Optional[float] = 0.0
    if hook is not None:
        if isinstance(hook, ProbeAttack):
            attacked = len(hook.probes)
            eve_info = stream_eve_information(hook.spec.theta) / 2.0
        else:
            attacked = len(hook.observations)
            eve_info = None  # no closed form tracked for intercept-resend
        report = AttackReport(
            strategy=hook.strategy,
            rounds_attacked=attacked,
            detection_events=events,
            empirical_detection=_mean(events),
            eve_information=eve_info,
        )
    verdict = None
    if eve_info is not None:
        verdict = check_qkd_condition(
            error_rate, config.threshold, 1.0 - binary_entropy(error_rate), eve_info
        )
    return RunResult(
        kind=config.kind,
        outcome="aborted" if aborted else "completed",
        error_rate=error_rate,
        threshold=config.threshold,
        alice_payload=alice_key,
        bob_payload=bob_key,
        detection_events=events,
        transcript=channel.transcript,
        verdict=verdict,
        attack_report=report,
        security_class=protocol_class(config),
    )


# ---------------------------------------------------------------- PoP QSDC


def _majority(bits: Sequence[int]) -> int:
    return int(sum(bits) * 2 > len(bits))


def run_pop_qsdc(config: ProtocolConfig, seed: Optional[int] = None) -> RunResult:
    """Permutation-of-particles direct communication over singlets.

    (a) Alice prepares 3N singlets, picks N check pairs uniformly, and
    scrambles the 4N-particle block (both halves of every check pair,
    one half of everything else) with a fresh uniform permutation.
    (b) She transmits the block. (c) She reveals where the check pairs
    landed; Bob Bell-measures them and a public comparison on a fraction
    of them estimates the error rate, aborting above threshold.
    (d) Alice repetition-codes the message, dense-encodes the coded bits
    on N of her 2N retained halves, and transmits all retained halves.
    (e) The untouched half of them forms a second check, which must not
    exceed the first estimate (or threshold); then Alice reveals the
    message pairing and code parameters, and Bob decodes.
    """
    config.ensure_valid()
    if config.kind != "pop-qsdc":
        raise ConfigValidationError([f"run_pop_qsdc got kind {config.kind!r}"])
    rng, rng_eve, rng_noise = _rng_streams(config, config.seed if seed is None else seed)
    hook = _build_hook(config, rng_eve)
    channel = _build_channel(config, hook, rng_noise)
    registry = QuantumRegistry()

    n_pairs = config.block_size
    total = 3 * n_pairs
    message = config.message_bits
    code_len = repetition_length(config.threshold)

    pairs = [registry.allocate(singlet()) for _ in range(total)]
    check_pairs = sorted(int(p) for p in rng.choice(total, size=n_pairs, replace=False))
    check_set = set(check_pairs)
    retained = [p for p in range(total) if p not in check_set]

    # canonical block-1 layout: both halves of check pairs, far half otherwise
    block1: list[ParticleCarrier] = []
    origin: list[tuple[int, int]] = []
    for p in range(total):
        if p in check_set:
            block1.append(ParticleCarrier(registry, pairs[p][0]))
            origin.append((p, 0))
        block1.append(ParticleCarrier(registry, pairs[p][1]))
        origin.append((p, 1))
    scramble = Permutation.random(len(block1), rng)
    delivered = channel.send_block(block1, scramble, sender="alice")
    inverse = scramble.inverse().mapping
    position_of = {origin[s]: inverse[s] for s in range(len(block1))}

    # (c) first check: reveal check-pair positions, Bell-check a fraction
    num_compared = round(config.check_fraction * n_pairs)
    compared = set(
        int(check_pairs[i])
        for i in rng.choice(n_pairs, size=num_compared, replace=False)
    )
    reveal = {p: (position_of[(p, 0)], position_of[(p, 1)]) for p in check_pairs}
    channel.broadcast(reveal, "alice", f"check-pair reveal n={n_pairs}")
    events_first = []
    wrong_first = 0
    for p in check_pairs:
        pos0, pos1 = reveal[p]
        outcome = registry.bell_measure(
            delivered[pos0].particle, delivered[pos1].particle, rng
        )
        bits = decode_bell_bits(outcome)
        if p in compared:
            events_first.append(bits != (0, 0))
            wrong_first += bits[0] + bits[1]
    channel.broadcast(sorted(compared), "bob", f"compared checks n={num_compared}")
    error_first = wrong_first / (2 * num_compared)

    def finish(outcome_kind, alice_payload, bob_payload, events, error_second=None):
        report = None
        eve_info = 0.0
        if hook is not None:
            if isinstance(hook, ProbeAttack):
                attacked = len(hook.probes)
                eve_info = (
                    pop_eve_information(hook.spec.theta, n_pairs) / 2.0
                    if n_pairs <= _POP_ENUMERATION_LIMIT
                    else None
                )
            else:
                attacked = len(hook.observations)
                eve_info = None
            report = AttackReport(
                strategy=hook.strategy,
                rounds_attacked=attacked,
                detection_events=tuple(events),
                empirical_detection=_mean(events),
                eve_information=eve_info,
            )
            if config.adversary.guess_pairing and outcome_kind == "completed":
                truth = [
                    (position_of[(p, 1)], len(block1) + retained.index(p))
                    for p in message_pairs
                ]
                guess = permutation_attack(
                    truth,
                    rng_eve,
                    trials=1,
                    theta=hook.spec.theta if isinstance(hook, ProbeAttack) else None,
                )
                report = replace(
                    report,
                    guess_success_analytic=guess.guess_success_analytic,
                    guess_success_empirical=guess.guess_success_empirical,
                )
        verdict = None
        if eve_info is not None:
            verdict = check_qsdc_condition(
                error_first,
                config.threshold,
                1.0 - binary_entropy(error_first),
                eve_info,
                n_pairs,
            )
        return RunResult(
            kind=config.kind,
            outcome=outcome_kind,
            error_rate=error_first,
            threshold=config.threshold,
            alice_payload=alice_payload,
            bob_payload=bob_payload,
            detection_events=tuple(events),
            transcript=channel.transcript,
            verdict=verdict,
            attack_report=report,
            error_rate_second=error_second,
            security_class=protocol_class(config),
        )

    message_pairs: list[int] = []
    if error_first > config.threshold:
        return finish("aborted", (), (), events_first)

    # (d) repetition-code the message and dense-encode on N retained halves
    coded = [b for bit in message for b in (bit,) * code_len]
    coded.extend([0] * (2 * n_pairs - len(coded)))
    message_pairs = sorted(
        int(retained[i]) for i in rng.choice(len(retained), size=n_pairs, replace=False)
    )
    second_pairs = [p for p in retained if p not in set(message_pairs)]
    for slot, p in enumerate(message_pairs):
        two = (coded[2 * slot], coded[2 * slot + 1])
        registry.apply_pauli(pairs[p][0], _DENSE_PAULI[two])
    block2 = [ParticleCarrier(registry, pairs[p][0]) for p in retained]
    block2_index = {p: i for i, p in enumerate(retained)}
    delivered2 = channel.send_block(
        block2, Permutation.identity(len(block2)), sender="alice"
    )

    # (e) second check on the untouched pairs, then message reveal
    compared2 = set(
        int(second_pairs[i])
        for i in rng.choice(len(second_pairs), size=num_compared, replace=False)
    )
    reveal2 = {p: (position_of[(p, 1)], block2_index[p]) for p in second_pairs}
    channel.broadcast(reveal2, "alice", f"second-check reveal n={len(second_pairs)}")
    events_second = []
    wrong_second = 0
    for p in second_pairs:
        pos1, idx2 = reveal2[p]
        outcome = registry.bell_measure(
            delivered[pos1].particle, delivered2[idx2].particle, rng
        )
        bits = decode_bell_bits(outcome)
        if p in compared2:
            events_second.append(bits != (0, 0))
            wrong_second += bits[0] + bits[1]
    error_second = wrong_second / (2 * num_compared)
    events = list(events_first) + events_second
    if error_second > max(error_first, config.threshold):
        return finish("aborted", (), (), events, error_second)

    reveal3 = {
        p: (position_of[(p, 1)], block2_index[p], slot)
        for slot, p in enumerate(message_pairs)
    }
    channel.broadcast(
        {"pairs": reveal3, "repetition": code_len, "length": len(message)},
        "alice",
        f"message reveal n={len(message_pairs)} r={code_len}",
    )
    decoded_stream = [0] * (2 * n_pairs)
    for p, (pos1, idx2, slot) in reveal3.items():
        outcome = registry.bell_measure(
            delivered[pos1].particle, delivered2[idx2].particle, rng
        )
        bits = decode_bell_bits(outcome)
        decoded_stream[2 * slot] = bits[0]
        decoded_stream[2 * slot + 1] = bits[1]
    bob_message = tuple(
        _majority(decoded_stream[i * code_len : (i + 1) * code_len])
        for i in range(len(message))
    )
    return finish("completed", tuple(message), bob_message, events, error_second)


# ---------------------------------------------------------------- dispatch


_RUNNERS = {"glt2s": run_glt2s, "stream-qkd": run_stream_qkd, "pop-qsdc": run_pop_qsdc}


def run(config: ProtocolConfig, seed: Optional[int] = None) -> RunResult:
    """Validate and execute a config with its kind's state machine.

    seed, when given, overrides config.seed for this run only: trial
    loops can reuse one validated config across many seeds.
    """
    runner = _RUNNERS.get(config.kind)
    if runner is None:
        raise ConfigValidationError([f"unknown protocol kind {config.kind!r}"])
    return runner(config, seed)  # each runner validates the config once


# ---------------------------------------------------------------- reductions


def block_reduce(config: ProtocolConfig) -> ProtocolConfig:
    """Turn a streaming key protocol into a permuted-block message one.

    Physical parameters (block size, threshold, check fraction, noise,
    adversary) transport unchanged; the key payload becomes a message
    slot sized to what the repetition code can carry, filled with a
    placeholder all-zeros message; derived_from records the source digest.
    """
    if config.kind != "stream-qkd":
        raise ConfigValidationError(
            [f"block reduction expects a stream-qkd config, got {config.kind!r}"]
        )
    capacity = message_capacity(config.block_size, config.threshold)
    fit = (2 * config.block_size) // repetition_length(config.threshold)
    length = min(capacity, fit)
    return ProtocolConfig(
        kind="pop-qsdc",
        seed=config.seed,
        check_fraction=config.check_fraction,
        threshold=config.threshold,
        block_size=config.block_size,
        message_bits=(0,) * length,
        payload_role="message",
        adversary=config.adversary,
        noise=config.noise,
        derived_from=f"block-reduction:{config_digest(config)}",
    )


def key_reduce(config: ProtocolConfig, key_length: int) -> ProtocolConfig:
    """Turn a message protocol into key distribution.

    The message slot is filled with fresh uniform bits from a dedicated
    seeded stream and relabeled as a key, so the run's delivered payload
    is a shared secret rather than chosen content.
    """
    if config.kind != "pop-qsdc":
        raise ConfigValidationError(
            [f"key reduction expects a pop-qsdc config, got {config.kind!r}"]
        )
    capacity = message_capacity(config.block_size, config.threshold)
    fit = (2 * config.block_size) // repetition_length(config.threshold)
    limit = min(capacity, fit)
    if not 1 <= key_length <= limit:
        raise ConfigValidationError(
            [f"key_length {key_length} outside the runnable range [1, {limit}]"]
        )
    key_rng = np.random.default_rng(derive_seed(config.seed, "key-reduce"))
    bits = tuple(int(b) for b in key_rng.integers(0, 2, size=key_length))
    return ProtocolConfig(
        kind="pop-qsdc",
        seed=config.seed,
        check_fraction=config.check_fraction,
        threshold=config.threshold,
        block_size=config.block_size,
        message_bits=bits,
        payload_role="key",
        adversary=config.adversary,
        noise=config.noise,
        derived_from=f"key-reduction:{config_digest(config)}",
    )


def derive_qka(key_bits: Sequence[int], rng: np.random.Generator) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Key agreement from an established key: keep a random half.

    The receiver announces a uniform subset of half the coordinates; the
    agreed key is the bits at those coordinates, so both parties shape
    the result equally.
    """
    m = len(key_bits)
    if m % 2:
        raise ProtocolError(f"key agreement needs an even key length, got {m}")
    coords = tuple(sorted(int(c) for c in rng.choice(m, size=m // 2, replace=False)))
    return coords, tuple(int(key_bits[c]) for c in coords)
