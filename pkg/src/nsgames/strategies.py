"""Player strategies.

A strategy turns one player's context (its view stream, private randomness,
and optionally the shared choice oracle) into a single output bit.  Each
strategy declares an access contract; the referee quarantines trials in
which a strategy touched anything beyond its contract.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Sequence

from .bitstream import BitStream
from .oracle import ChoiceOracle
from .seeding import DOMAIN_SHARED, SplitRandom, derive

LOCAL_VIEW = "local-view"
LOCAL_VIEW_ORACLE = "local-view+oracle"
FORBIDDEN_ACCESS = "forbidden-access"


class BackdoorDisabledError(RuntimeError):
    """The root backdoor was requested but not enabled for this run."""


class GuessContext:
    """Everything player k may legitimately see while guessing.

    The private generator is unique to (trial, player) and created lazily,
    so deterministic strategies never consume randomness.  ``root_bit`` is a
    test-only backdoor: using it trips the contract flag that marks the
    trial SIGNALING-INVALID.
    """

    __slots__ = ("player", "view", "oracle", "shared_seed", "_rng_seed", "_rng",
                 "_root", "forbidden_used")

    def __init__(
        self,
        player: int,
        view: BitStream,
        rng_seed: int,
        shared_seed: int,
        oracle: ChoiceOracle | None = None,
        root: BitStream | None = None,
    ) -> None:
        self.player = player
        self.view = view
        self.oracle = oracle
        self.shared_seed = shared_seed
        self._rng_seed = rng_seed
        self._rng = None
        self._root = root
        self.forbidden_used = False

    @property
    def rng(self) -> SplitRandom:
        if self._rng is None:
            self._rng = SplitRandom(self._rng_seed)
        return self._rng

    def root_bit(self, i: int) -> int:
        if self._root is None:
            raise BackdoorDisabledError(
                "root backdoor is disabled; enable it explicitly for "
                "negative-control runs"
            )
        self.forbidden_used = True
        return self._root.bit_at(i)


class Strategy:
    """Base strategy: subclasses set `name`, `access` and implement guess."""

    name = "?"
    access = LOCAL_VIEW
    view_bits: int | None = 0

    def guess(self, ctx: GuessContext) -> int:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def spec(self) -> dict:
        return {"name": self.name, **self.params()}


class FnsStrategy(Strategy):
    """Choice-oracle strategy.

    Pads the view back to root alignment with zeros, asks the shared oracle
    for the class representative, and answers with the representative's bit
    at the player's own index.  The padding fixes the class, so the guess
    depends on nothing outside the player's view.
    """

    name = "fns"
    access = LOCAL_VIEW_ORACLE
    view_bits = None

    def guess(self, ctx: GuessContext) -> int:
        if ctx.oracle is None:
            raise ValueError("fns strategy needs a shared oracle")
        padded = ctx.view.pad_prefix_zeros(ctx.player)
        rep = ctx.oracle.representative(padded)
        # Bit k of the representative = first bit after k-1 more shifts.
        return rep.bit_at(ctx.player)


class LocalTableStrategy(Strategy):
    """Deterministic function of the first m view bits."""

    name = "local-table"
    access = LOCAL_VIEW

    def __init__(self, table: Sequence[int]) -> None:
        size = len(table)
        if size == 0 or size & (size - 1):
            raise ValueError(f"table length must be a power of two, got {size}")
        if any(b not in (0, 1) for b in table):
            raise ValueError("table entries must be bits")
        self.table = tuple(int(b) for b in table)
        self.view_bits = size.bit_length() - 1

    def guess(self, ctx: GuessContext) -> int:
        idx = 0
        for j in range(1, self.view_bits + 1):
            idx = (idx << 1) | ctx.view.bit_at(j)
        return self.table[idx]

    def params(self) -> dict:
        return {"m": self.view_bits, "table": list(self.table)}


class LocalRandomStrategy(Strategy):
    """Output 1 with probability p from private randomness; ignores the view."""

    name = "local-random"
    access = LOCAL_VIEW
    view_bits = 0

    def __init__(self, p: float) -> None:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability must lie in [0, 1], got {p}")
        self.p = float(p)

    def guess(self, ctx: GuessContext) -> int:
        return ctx.rng.bernoulli(self.p)

    def params(self) -> dict:
        return {"p": self.p}


class SharedMixtureStrategy(Strategy):
    """Convex combination of deterministic tables via shared randomness.

    All players of a trial draw the same component index from the
    trial-level shared seed, so this models classical shared correlation
    between the players (each still sees only its own view).
    """

    name = "shared-mixture"
    access = LOCAL_VIEW

    def __init__(self, tables: Sequence[Sequence[int]], weights: Sequence[float] | None = None) -> None:
        if not tables:
            raise ValueError("mixture needs at least one component table")
        self.components = tuple(LocalTableStrategy(t) for t in tables)
        if weights is None:
            weights = [1.0] * len(self.components)
        if len(weights) != len(self.components) or any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative, one per component")
        total = float(sum(weights))
        if total <= 0:
            raise ValueError("weights must not all be zero")
        self.weights = tuple(float(w) / total for w in weights)
        self.view_bits = max(c.view_bits for c in self.components)

    def _pick(self, shared_seed: int) -> int:
        # Stateless draw from the shared seed: every player of the trial
        # lands on the same component regardless of evaluation order.
        u = SplitRandom(derive(shared_seed, DOMAIN_SHARED)).random()
        acc = 0.0
        for i, w in enumerate(self.weights):
            acc += w
            if u < acc:
                return i
        return len(self.weights) - 1

    def guess(self, ctx: GuessContext) -> int:
        return self.components[self._pick(ctx.shared_seed)].guess(ctx)

    def params(self) -> dict:
        return {
            "tables": [list(c.table) for c in self.components],
            "weights": list(self.weights),
        }


class CheatStrategy(Strategy):
    """Negative control: reads its own target bit through the backdoor.

    Wins every round, and trips contract enforcement every round; used to
    validate that the harness actually quarantines signaling strategies.
    """

    name = "cheat"
    access = FORBIDDEN_ACCESS
    view_bits = 0

    def guess(self, ctx: GuessContext) -> int:
        return ctx.root_bit(ctx.player)


def build_strategy(spec: dict) -> Strategy:
    """Construct a strategy from its JSON parameter blob."""
    spec = dict(spec)
    name = spec.pop("name", None)
    try:
        if name == "fns":
            return FnsStrategy()
        if name == "cheat":
            return CheatStrategy()
        if name == "constant":
            return LocalTableStrategy([int(spec.get("value", 0))])
        if name == "local-table":
            table = spec["table"]
            m = spec.get("m")
            if m is not None and len(table) != 1 << int(m):
                raise ValueError(f"table length {len(table)} does not match m={m}")
            return LocalTableStrategy(table)
        if name == "local-random":
            return LocalRandomStrategy(float(spec["p"]))
        if name == "shared-mixture":
            return SharedMixtureStrategy(spec["tables"], spec.get("weights"))
    except KeyError as exc:
        raise ValueError(f"strategy {name!r} is missing parameter {exc}") from exc
    raise ValueError(f"unknown strategy name: {name!r}")


def parse_strategy_arg(text: str) -> Strategy:
    """Parse a CLI strategy argument.

    Accepts a JSON blob ({"name": "local-table", "m": 2, "table": [0,1,1,0]})
    or a compact form: "fns", "cheat", "constant:1", "local-random:0.5",
    "local-table:0,1,1,0".
    """
    text = text.strip()
    if text.startswith("{"):
        return build_strategy(json.loads(text))
    name, _, arg = text.partition(":")
    if name == "constant":
        return build_strategy({"name": name, "value": int(arg or 0)})
    if name == "local-random":
        return build_strategy({"name": name, "p": float(arg or 0.5)})
    if name == "local-table":
        table = [int(b) for b in arg.split(",") if b != ""]
        return build_strategy({"name": name, "table": table})
    if arg:
        raise ValueError(f"strategy {name!r} takes no inline argument")
    return build_strategy({"name": name})


def exact_table_win_probability(table: Sequence[int]) -> Fraction:
    """Analytic per-player win probability of a lookup-table strategy.

    Enumerates every assignment of the target bit and the m view bits it
    reads, all uniform and independent, with exact rational weights: no
    sampling, and no reliance on the trial harness.
    """
    size = len(table)
    if size == 0 or size & (size - 1):
        raise ValueError(f"table length must be a power of two, got {size}")
    m = size.bit_length() - 1
    wins = 0
    for target in (0, 1):
        for window in range(size):
            if table[window] == target:
                wins += 1
    return Fraction(wins, 2 << m)


def all_tables(max_bits: int):
    """Yield every lookup table reading at most max_bits view bits."""
    for m in range(max_bits + 1):
        size = 1 << m
        for code in range(1 << size):
            yield [(code >> i) & 1 for i in range(size)]
