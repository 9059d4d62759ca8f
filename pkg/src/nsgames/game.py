"""Referee logic for the hat and baker variants.

Both games share one information structure: the referee draws a root
x_0 in [0, 1], player k sees only the k-fold shifted tail (equivalently,
the hats in front of position k), and must output bit k of the root.
The variants are information-isomorphic, so the referee code is common
and the variant is carried as a label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .bitstream import BitStream
from .oracle import ChoiceOracle
from .seeding import DOMAIN_PLAYER, derive
from .strategies import GuessContext, Strategy

VARIANTS = ("baker", "hat")


@dataclass(frozen=True)
class GameSpec:
    """One trial's full configuration.

    enforce_contracts quarantines trials whose strategy used forbidden
    access; enable_backdoor arms the root backdoor for negative controls
    (off by default, so production runs cannot read targets).
    """

    variant: str
    players: int
    root: BitStream
    strategy: Strategy
    oracle: ChoiceOracle | None = None
    trial_seed: int = 0
    enforce_contracts: bool = True
    enable_backdoor: bool = False

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.players < 1:
            raise ValueError(f"players must be >= 1, got {self.players}")


@dataclass(frozen=True)
class TrialRecord:
    """Scored outcome of one trial.

    trajectory[n-1] holds S_n = sum of the first n success variables.
    threshold is the largest losing player index (0 when everyone won);
    it is None only for quarantined SIGNALING-INVALID trials, which are
    never scored.
    """

    root: dict
    outputs: tuple[int, ...]
    s: tuple[int, ...]
    trajectory: tuple[int, ...]
    threshold: int | None
    valid: bool

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "outputs": list(self.outputs),
            "s": list(self.s),
            "S": list(self.trajectory),
            "threshold": self.threshold,
            "valid": self.valid,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, doc: dict) -> "TrialRecord":
        return cls(
            root=doc["root"],
            outputs=tuple(doc["outputs"]),
            s=tuple(doc["s"]),
            trajectory=tuple(doc["S"]),
            threshold=doc["threshold"],
            valid=doc["valid"],
        )

    @classmethod
    def from_json_line(cls, line: str) -> "TrialRecord":
        return cls.from_json(json.loads(line))


def generate_inputs(root: BitStream, players: int) -> list[BitStream]:
    """Inputs [x_1, ..., x_K]: x_k is the k-fold baker image of the root."""
    inputs = []
    stream = root
    for _ in range(players):
        stream = stream.baker_shift()
        inputs.append(stream)
    return inputs


def target_bit(root: BitStream, k: int) -> int:
    """The bit player k must produce: bit k of the root's expansion."""
    if k < 1:
        raise ValueError(f"player index must be >= 1, got {k}")
    return root.bit_at(k)


def player_view(spec: GameSpec, k: int) -> BitStream:
    """What player k sees: the root's tail from bit k+1 on, nothing earlier.

    The returned stream resolves query i as root bit k+i, so bits <= k of
    the root are unreachable by construction.
    """
    if not 1 <= k <= spec.players:
        raise ValueError(f"player index must lie in 1..{spec.players}, got {k}")
    view = spec.root
    for _ in range(k):
        view = view.baker_shift()
    return view


def winner_threshold(s: Sequence[int]) -> int:
    """Least t with every player k > t successful: the last losing index."""
    t = 0
    for k, sk in enumerate(s, start=1):
        if sk < 0:
            t = k
    return t


def run_trial(spec: GameSpec) -> TrialRecord:
    """Play one full round and score it.

    Each player gets a fresh context over its own view with a private
    (trial, player)-derived generator. If contract enforcement is on and
    any player touched the backdoor, the trial is marked invalid; raw
    outputs and successes are still recorded so harness tests can verify
    the quarantine, but the threshold is withheld.
    """
    root = spec.root
    backdoor_root = root if spec.enable_backdoor else None
    outputs = []
    s = []
    trajectory = []
    running = 0
    forbidden = False
    view = root
    for k in range(1, spec.players + 1):
        view = view.baker_shift()
        ctx = GuessContext(
            player=k,
            view=view,
            rng_seed=derive(spec.trial_seed, DOMAIN_PLAYER, k),
            shared_seed=spec.trial_seed,
            oracle=spec.oracle,
            root=backdoor_root,
        )
        a = spec.strategy.guess(ctx)
        if a not in (0, 1):
            raise ValueError(f"strategy {spec.strategy.name!r} returned non-bit {a!r}")
        forbidden = forbidden or ctx.forbidden_used
        sk = 1 if a == root.bit_at(k) else -1
        outputs.append(a)
        s.append(sk)
        running += sk
        trajectory.append(running)
    valid = not (forbidden and spec.enforce_contracts)
    return TrialRecord(
        root=root.to_json(),
        outputs=tuple(outputs),
        s=tuple(s),
        trajectory=tuple(trajectory),
        threshold=winner_threshold(s) if valid else None,
        valid=valid,
    )
