"""Simulated channel layer.

An authenticated classical channel (readable but not writable by the
adversary), a tamperable carrier channel with an adversary interposition
hook, permuted block transmission, and line-oriented transcript logging.
Carriers are either gbit values or handles into a shared quantum
registry; quantum handles are consumed on transmission so a particle
cannot be sent twice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .gpt import GptState
from .quantum import NoiseChannel, QuantumRegistry

__all__ = [
    "Carrier",
    "Channel",
    "EveHook",
    "GbitCarrier",
    "ParticleCarrier",
    "Permutation",
    "Transcript",
    "TranscriptRecord",
    "TransportError",
    "partial_unscramble",
    "reveal_permutation",
    "unscramble",
]


class TransportError(ValueError):
    """Raised for channel misuse: bad permutations, reused carriers."""


# ---------------------------------------------------------------- permutations


@dataclass(frozen=True)
class Permutation:
    """Bijection on {0..size-1} with gather semantics.

    apply(seq)[i] = seq[mapping[i]], so mapping[i] names which original
    coordinate lands at delivery position i.
    """

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        mapping = tuple(int(v) for v in self.mapping)
        if sorted(mapping) != list(range(len(mapping))):
            raise TransportError(f"mapping is not a bijection: {mapping}")
        object.__setattr__(self, "mapping", mapping)

    @property
    def size(self) -> int:
        return len(self.mapping)

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return _identity_permutation(size)

    @classmethod
    def random(cls, size: int, rng: np.random.Generator) -> "Permutation":
        return cls(tuple(int(v) for v in rng.permutation(size)))

    def apply(self, seq: Sequence) -> list:
        if len(seq) != self.size:
            raise TransportError(f"permutation size {self.size} != sequence length {len(seq)}")
        return [seq[j] for j in self.mapping]

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """Permutation acting as self.apply(other.apply(seq))."""
        if other.size != self.size:
            raise TransportError("cannot compose permutations of different sizes")
        return Permutation(tuple(other.mapping[j] for j in self.mapping))


@lru_cache(maxsize=1024)
def _identity_permutation(size: int) -> Permutation:
    # shared instances: Permutation is frozen and identity blocks recur
    return Permutation(tuple(range(size)))


def reveal_permutation(
    perm: Permutation, coordinates: Optional[Iterable[int]] = None
) -> dict[int, int]:
    """Classical pairing reveal: original coordinate -> delivery position.

    With coordinates given, reveals only those original coordinates
    (partial reveal for check rounds); otherwise the full placement.
    """
    inverse = perm.inverse().mapping
    if coordinates is None:
        return {j: inverse[j] for j in range(perm.size)}
    out = {}
    for j in coordinates:
        if not 0 <= j < perm.size:
            raise TransportError(f"coordinate {j} outside block of size {perm.size}")
        out[int(j)] = inverse[j]
    return out


def unscramble(received: Sequence, perm: Permutation) -> list:
    """Undo a permuted delivery: result[j] is the carrier sent as j."""
    return perm.inverse().apply(received)


def partial_unscramble(
    received: Sequence, perm: Permutation, coordinates: Iterable[int]
) -> dict[int, object]:
    """Recover only the revealed coordinates from a permuted delivery."""
    placement = reveal_permutation(perm, coordinates)
    if len(received) != perm.size:
        raise TransportError("received block does not match permutation size")
    return {j: received[pos] for j, pos in placement.items()}


# ---------------------------------------------------------------- carriers


@dataclass(frozen=True)
class GbitCarrier:
    """A gbit in transit, carried by value."""

    state: GptState


@dataclass(frozen=True)
class ParticleCarrier:
    """A quantum particle in transit, carried as a registry handle."""

    registry: QuantumRegistry
    particle: int


Carrier = Union[GbitCarrier, ParticleCarrier]


# ---------------------------------------------------------------- adversary hook


class EveHook:
    """Adversary interposition point on the carrier channel.

    The channel hands over each carrier in transit (delivery) order and
    never exposes the permutation; classical broadcasts are observed
    read-only. The base class is a transparent wiretap that records its
    inputs so tests can audit exactly what the adversary saw.
    """

    def __init__(self) -> None:
        self.input_trace: list = []

    def intercept(self, carrier: Carrier) -> Carrier:
        self.input_trace.append(carrier)
        return carrier

    def observe_classical(self, payload: object) -> None:
        self.input_trace.append(("classical", payload))


# ---------------------------------------------------------------- transcript


@dataclass(frozen=True)
class TranscriptRecord:
    round_index: int
    channel: str  # "classical" | "carrier"
    sender: str
    payload: str
    tampered: bool

    def __post_init__(self) -> None:
        if self.channel not in ("classical", "carrier"):
            raise TransportError(f"unknown channel kind: {self.channel}")
        if self.channel == "classical" and self.tampered:
            raise TransportError("classical records are authenticated, never tampered")


@dataclass
class Transcript:
    """Ordered protocol log, one record per channel event."""

    records: list[TranscriptRecord] = field(default_factory=list)

    def append(self, record: TranscriptRecord) -> None:
        if self.records and record.round_index <= self.records[-1].round_index:
            raise TransportError("round indices must be strictly increasing")
        self.records.append(record)

    def to_jsonl(self) -> str:
        lines = []
        for r in self.records:
            lines.append(
                json.dumps(
                    {
                        "round_index": r.round_index,
                        "channel": r.channel,
                        "sender": r.sender,
                        "payload": r.payload,
                        "tampered": r.tampered,
                    }
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        transcript = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            transcript.append(
                TranscriptRecord(
                    round_index=raw["round_index"],
                    channel=raw["channel"],
                    sender=raw["sender"],
                    payload=raw["payload"],
                    tampered=raw["tampered"],
                )
            )
        return transcript


# ---------------------------------------------------------------- channel


class Channel:
    """One run's transport fabric: carrier sends, broadcasts, logging.

    An attached EveHook sees every carrier in transit order and every
    classical broadcast. Channel noise, when configured, hits quantum
    carriers after any interception, modeling a noisy final hop.
    """

    def __init__(
        self,
        eve_hook: Optional[EveHook] = None,
        noise: Optional[NoiseChannel] = None,
        noise_rng: Optional[np.random.Generator] = None,
        transcript: Optional[Transcript] = None,
    ) -> None:
        if noise is not None and noise_rng is None:
            raise TransportError("channel noise requires a sampling rng")
        self.eve_hook = eve_hook
        self.noise = noise
        self.noise_rng = noise_rng
        self.transcript = transcript if transcript is not None else Transcript()
        self._round = 0
        self._consumed: set[tuple[int, int]] = set()

    def _next_round(self) -> int:
        self._round += 1
        return self._round

    def _mark_consumed(self, carrier: Carrier) -> None:
        if isinstance(carrier, ParticleCarrier):
            key = (id(carrier.registry), carrier.particle)
            if key in self._consumed:
                raise TransportError(f"particle {carrier.particle} was already transmitted")
            self._consumed.add(key)

    def send_block(
        self, carriers: Sequence[Carrier], perm: Permutation, sender: str = "alice"
    ) -> list[Carrier]:
        """Deliver carriers in permuted order through Eve and noise."""
        if perm.size != len(carriers):
            raise TransportError(
                f"permutation size {perm.size} != block size {len(carriers)}"
            )
        for carrier in carriers:
            self._mark_consumed(carrier)
        transit = perm.apply(list(carriers))
        if self.eve_hook is not None:
            transit = [self.eve_hook.intercept(c) for c in transit]
        if self.noise is not None:
            for carrier in transit:
                if isinstance(carrier, GbitCarrier):
                    raise TransportError("quantum channel noise cannot act on gbit carriers")
                carrier.registry.apply_noise(carrier.particle, self.noise, self.noise_rng)
        kinds = sorted({type(c).__name__ for c in transit})
        self.transcript.append(
            TranscriptRecord(
                round_index=self._next_round(),
                channel="carrier",
                sender=sender,
                payload=f"block len={len(transit)} kinds={','.join(kinds)}",
                tampered=self.eve_hook is not None,
            )
        )
        return transit

    def broadcast(self, payload: object, sender: str, description: str) -> object:
        """Authenticated classical broadcast; Eve reads, cannot write."""
        if self.eve_hook is not None:
            self.eve_hook.observe_classical(payload)
        self.transcript.append(
            TranscriptRecord(
                round_index=self._next_round(),
                channel="classical",
                sender=sender,
                payload=description,
                tampered=False,
            )
        )
        return payload
