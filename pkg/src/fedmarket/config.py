"""Scenario configuration files.

A scenario is a TOML document with ``[mechanism]``, ``[[clients]]`` and
``[experiment]`` tables. Unknown keys are rejected and every error names
the offending field path and, where it can be found, the file line.
"""

from __future__ import annotations

import hashlib
import json
import re
from importlib import resources
from pathlib import Path
from typing import Any, Literal, Optional

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import functions
from .clients import BidStrategy, ClientState, EvalStrategy, LearningCurve
from .errors import InvalidConfigError
from .mechanism import MechanismConfig


class ConfigParseError(InvalidConfigError):
    """The file is not valid TOML (including duplicate keys)."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MechanismSection(_Strict):
    num_clients: int = Field(ge=2)
    num_rounds: int = Field(ge=1)
    thresh: dict[str, Any] = {"kind": "constant", "value": 0.0}
    punish: dict[str, Any] = {"kind": "zero"}
    aggr: Literal["max", "weighted_mean"] = "max"
    matching_mode: Literal["uniform_permutation", "derangement"] = "uniform_permutation"
    payment_rule: Literal["peer_gain", "own_gain"] = "peer_gain"
    rng_seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("thresh")
    @classmethod
    def _thresh(cls, v):
        fn = functions.build(functions.THRESH_KINDS, v, "mechanism.thresh")
        if not 0.0 <= fn(0.0) <= 1.0:
            raise ValueError("transmission probability must lie in [0, 1]")
        return v

    @field_validator("punish")
    @classmethod
    def _punish(cls, v):
        fn = functions.build(functions.PUNISH_KINDS, v, "mechanism.punish")
        if fn(0.0) != 0:
            raise ValueError("punishment of a zero deviation must be 0")
        return v


class StrategySection(_Strict):
    kind: str = "truthful"
    value: float = 0.0


class CurveSection(_Strict):
    rate: float = Field(0.4, gt=0, le=1)
    base: float = Field(0.6, ge=0, le=1)
    slope: float = Field(0.35, ge=0)


class ClientSection(_Strict):
    valuation: float = Field(ge=0)
    data_share: float = Field(gt=0, le=1)
    initial_quality: float = Field(0.0, ge=0, le=1)
    bid_strategy: StrategySection = StrategySection()
    eval_strategy: StrategySection = StrategySection()
    curve: CurveSection = CurveSection()

    @field_validator("bid_strategy")
    @classmethod
    def _bid(cls, v):
        if v.kind not in ("truthful", "fixed", "shaded"):
            raise ValueError(f"unknown bid strategy {v.kind!r}")
        return v

    @field_validator("eval_strategy")
    @classmethod
    def _eval(cls, v):
        if v.kind not in ("truthful", "noisy", "adversarial"):
            raise ValueError(f"unknown eval strategy {v.kind!r}")
        return v


class SweepSection(_Strict):
    client: int = Field(ge=0)
    grid: list[float] = Field(min_length=1)


class BenchSection(_Strict):
    mechanisms: list[str] = Field(default=["circuit"], min_length=1)
    num_agents: int = Field(100, ge=2)
    trials: int = Field(10_000, ge=1)
    low: float = 0.0
    high: float = 1.0
    alpha: Optional[float] = Field(None, ge=0)

    @field_validator("mechanisms")
    @classmethod
    def _known(cls, v):
        from .market import MECHANISMS

        unknown = [m for m in v if m not in MECHANISMS]
        if unknown:
            raise ValueError(f"unknown mechanism(s) {unknown}; expected one of {sorted(MECHANISMS)}")
        return v


class RobustnessSection(_Strict):
    evaluators: int = Field(5, ge=1)
    offset: float = 0.4
    honest_quality: float = Field(0.5, ge=0, le=1)
    honest_noise: float = Field(0.0, ge=0)
    trials: int = Field(1, ge=1)


class MarketSection(_Strict):
    buyers: Optional[list[float]] = None
    sellers: Optional[list[float]] = None
    gain: dict[str, Any] = {"kind": "concave", "marginals": [1.0]}
    random_instances: int = Field(0, ge=0)
    max_buyers: int = Field(6, ge=2)
    max_sellers: int = Field(6, ge=1)

    @model_validator(mode="after")
    def _paired(self):
        if (self.buyers is None) != (self.sellers is None):
            raise ValueError("buyers and sellers must be given together")
        if self.buyers is None and self.random_instances == 0:
            raise ValueError("give buyers/sellers or random_instances > 0")
        return self


class ExperimentSection(_Strict):
    mode: Literal["simulate", "sweep-bids", "bench-competitive", "eval-robustness", "market"] = "simulate"
    seeds: list[int] = Field(default=[0], min_length=1)
    output_dir: str = "results"
    sweep: Optional[SweepSection] = None
    bench: Optional[BenchSection] = None
    robustness: Optional[RobustnessSection] = None
    market: Optional[MarketSection] = None

    @field_validator("seeds")
    @classmethod
    def _u64(cls, v):
        if any(not 0 <= s < 2**64 for s in v):
            raise ValueError("seeds must be unsigned 64-bit integers")
        return v


class ScenarioConfig(_Strict):
    mechanism: Optional[MechanismSection] = None
    clients: list[ClientSection] = []
    experiment: ExperimentSection = ExperimentSection()

    @model_validator(mode="after")
    def _consistent(self):
        if self.mechanism is not None and len(self.clients) != self.mechanism.num_clients:
            raise ValueError(
                f"clients: {len(self.clients)} client entries but mechanism.num_clients={self.mechanism.num_clients}"
            )
        sweep = self.experiment.sweep
        if sweep is not None and sweep.client >= len(self.clients):
            raise ValueError(f"experiment.sweep.client: index {sweep.client} out of range for {len(self.clients)} clients")
        return self

    def scenario_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def require(self, section: str):
        if section == "mechanism":
            if self.mechanism is None:
                raise InvalidConfigError("section is required for this command", "mechanism")
            return self.mechanism
        value = getattr(self.experiment, section)
        if value is None:
            raise InvalidConfigError("section is required for this command", f"experiment.{section}")
        return value

    def mechanism_config(self, seed: int | None = None) -> MechanismConfig:
        m = self.require("mechanism")
        return MechanismConfig(
            num_clients=m.num_clients,
            num_rounds=m.num_rounds,
            thresh_fn=functions.build(functions.THRESH_KINDS, m.thresh, "mechanism.thresh"),
            punish_fn=functions.build(functions.PUNISH_KINDS, m.punish, "mechanism.punish"),
            aggr_fn=functions.AGGR_KINDS[m.aggr],
            matching_mode=m.matching_mode,
            payment_rule=m.payment_rule,
            rng_seed=m.rng_seed if seed is None else seed,
        )

    def client_states(self) -> list[ClientState]:
        return [
            ClientState(
                valuation=c.valuation,
                data_share=c.data_share,
                quality=c.initial_quality,
                bid_strategy=BidStrategy(c.bid_strategy.kind, c.bid_strategy.value),
                eval_strategy=EvalStrategy(c.eval_strategy.kind, c.eval_strategy.value),
                curve=LearningCurve(c.curve.rate, c.curve.base, c.curve.slope),
            )
            for c in self.clients
        ]


def _find_line(text: str, path: tuple) -> int | None:
    """Best-effort line of the last key in ``path``."""
    for key in reversed(path):
        if isinstance(key, str):
            pattern = re.compile(rf"^\s*{re.escape(key)}\s*=|^\s*\[+[^\]]*\b{re.escape(key)}\]+", re.M)
            match = pattern.search(text)
            if match:
                return text.count("\n", 0, match.start()) + 1
    return None


def bundled_scenarios() -> list[str]:
    root = resources.files("fedmarket") / "scenarios"
    return sorted(p.name[: -len(".toml")] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_path(path) -> Path:
    """Accept a file path or the name of a bundled scenario."""
    p = Path(path)
    if p.exists() or p.suffix:
        return p
    bundled = resources.files("fedmarket") / "scenarios" / f"{path}.toml"
    if bundled.is_file():
        return Path(str(bundled))
    return p


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        loc = f"{source}:{m.group(1)}" if m else source
        raise ConfigParseError(str(exc), location=loc) from None
    try:
        return ScenarioConfig.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(err["loc"])
        field_path = ".".join(str(x) for x in loc) or "<root>"
        msg = err["msg"]
        if not loc:
            # model-level validators prefix their message with the field path
            head, _, rest = msg.removeprefix("Value error, ").partition(": ")
            if rest and re.fullmatch(r"[\w.]+", head):
                field_path, msg = head, rest
                loc = tuple(head.split("."))
        line = _find_line(text, loc)
        location = f"{source}:{line}" if line else source
        raise InvalidConfigError(msg, field_path, location) from None


def load_config(path) -> ScenarioConfig:
    p = resolve_path(path)
    text = p.read_text(encoding="utf-8")
    return parse_config(text, str(p))
