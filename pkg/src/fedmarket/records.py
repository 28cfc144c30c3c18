"""Machine-readable outputs: run records (JSON) and CSV tables."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import FedMarketError, SchemaVersionError
from .mechanism import RoundOutcome, SimulationResult
from .money import format_nanos

SCHEMA_VERSION = 1

TRAJECTORY_COLUMNS = ("round", "client", "quality", "bid", "winner", "transfer", "punishment", "utility")
RATIO_COLUMNS = ("instance_id", "mechanism", "revenue", "opt", "ratio")


class InvariantViolation(FedMarketError):
    """A stored record disagrees with what its own fields imply."""


def fmt_float(x) -> str:
    """Shortest round-tripping decimal; independent of locale."""
    if x is None:
        return ""
    return repr(float(x))


def fmt_money(x) -> str:
    return "" if x is None else f"{float(x):.9f}"


def recompute_utilities(rounds) -> tuple:
    k = len(rounds[0].utilities) if rounds else 0
    totals = [0.0] * k
    for r in rounds:
        for i, u in enumerate(r.utilities):
            totals[i] += u
    return tuple(totals)


@dataclass(frozen=True)
class RunRecord:
    scenario_hash: str
    seed: int
    rounds: tuple
    ledger_transfers: tuple
    ledger_punishments: tuple
    cumulative_utilities: tuple
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_result(cls, result: SimulationResult, scenario_hash: str, seed: int) -> "RunRecord":
        return cls(
            scenario_hash=scenario_hash,
            seed=seed,
            rounds=tuple(result.rounds),
            ledger_transfers=tuple(result.ledger.transfers),
            ledger_punishments=tuple(result.ledger.punishments),
            cumulative_utilities=tuple(result.cumulative_utilities),
        )

    @property
    def revenue(self):
        return sum(self.ledger_transfers)

    def validate(self):
        if recompute_utilities(self.rounds) != tuple(self.cumulative_utilities):
            raise InvariantViolation("cumulative utilities do not match the per-round utilities")
        for r in self.rounds:
            if r.winner_predicate() != tuple(r.winners):
                raise InvariantViolation(f"round {r.round_index}: winner set does not match the allocation rule")
        return self

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "scenario_hash": self.scenario_hash,
            "seed": self.seed,
            "rounds": [r.to_dict() for r in self.rounds],
            "ledger": {
                "transfers": list(self.ledger_transfers),
                "punishments": list(self.ledger_punishments),
                "revenue": self.revenue,
            },
            "cumulative_utilities": list(self.cumulative_utilities),
        }

    @classmethod
    def from_dict(cls, data) -> "RunRecord":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(f"record schema_version {version!r}, expected {SCHEMA_VERSION}")
        ledger = data["ledger"]
        return cls(
            scenario_hash=data["scenario_hash"],
            seed=int(data["seed"]),
            rounds=tuple(RoundOutcome.from_dict(r) for r in data["rounds"]),
            ledger_transfers=tuple(int(x) for x in ledger["transfers"]),
            ledger_punishments=tuple(int(x) for x in ledger["punishments"]),
            cumulative_utilities=tuple(float(x) for x in data["cumulative_utilities"]),
        ).validate()

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "RunRecord":
        return cls.from_dict(json.loads(text))


def read_run_record(path) -> RunRecord:
    return RunRecord.loads(Path(path).read_text(encoding="utf-8"))


def trajectory_rows(rounds):
    for r in rounds:
        winners = set(r.winners)
        for i in range(len(r.bids)):
            yield (
                r.round_index,
                i,
                fmt_float(r.qualities[i]),
                fmt_float(r.bids[i]),
                int(i in winners),
                format_nanos(r.transfers[i]),
                format_nanos(r.punishments[i]),
                fmt_money(r.utilities[i]),
            )


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_manifest(out_dir, command, scenario_hash, files):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "scenario_hash": scenario_hash,
        "files": sorted(str(Path(f).name) for f in files),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_manifest(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionError(f"manifest schema_version {data.get('schema_version')!r}, expected {SCHEMA_VERSION}")
    return data
