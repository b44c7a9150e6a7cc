"""Synthetic corpus generator with planted, ledgered contamination.

Background cell values are UUID-like hex tokens drawn from a seeded RNG,
so they cannot collide with any evaluation fixture, which makes scanner
precision measurable exactly. Plants insert known contamination of each
taxonomy class as new table files ("chunks") and record every planted
location in a ledger the scanner is scored against.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .data import Cell, Dataset
from .errors import InputError
from .contam.search import (
    STRATEGY_ASSOCIATION,
    STRATEGY_ROW_MATCH,
    MatchEvidence,
)

PLANT_COMPLETE = "complete"
PLANT_DIRECT_DUP = "direct_dup"
PLANT_ASSOCIATION = "association"

_KIND_STRATEGY = {
    PLANT_COMPLETE: STRATEGY_ROW_MATCH,
    PLANT_DIRECT_DUP: STRATEGY_ROW_MATCH,
    PLANT_ASSOCIATION: STRATEGY_ASSOCIATION,
}


@dataclass(frozen=True)
class Plant:
    kind: str
    dataset_id: str
    locations: tuple[tuple[str, int], ...]
    transforms: dict


@dataclass
class PlantLedger:
    seed: int
    corpus_id: str
    plants: list[Plant] = field(default_factory=list)

    def save(self, path: str | Path) -> None:
        doc = {
            "seed": self.seed,
            "corpus_id": self.corpus_id,
            "plants": [
                {
                    "kind": p.kind,
                    "dataset_id": p.dataset_id,
                    "locations": [[t, r] for t, r in p.locations],
                    "transforms": p.transforms,
                }
                for p in self.plants
            ],
        }
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PlantLedger":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        ledger = cls(seed=doc["seed"], corpus_id=doc["corpus_id"])
        for p in doc["plants"]:
            ledger.plants.append(
                Plant(
                    kind=p["kind"],
                    dataset_id=p["dataset_id"],
                    locations=tuple((t, r) for t, r in p["locations"]),
                    transforms=p["transforms"],
                )
            )
        return ledger


@dataclass(frozen=True)
class CorpusSpec:
    tables: int = 10
    rows_per_table: int = 100
    cols_per_table: int = 4
    corpus_id: str = "testbed"


def _token(rng: random.Random) -> str:
    return f"{rng.getrandbits(64):016x}"


def generate_corpus(spec: CorpusSpec, seed: int, out_dir: str | Path) -> Path:
    """Write a deterministic background corpus of hex-token CSV tables."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create corpus directory {out}: {exc}") from exc
    for t in range(spec.tables):
        rng = random.Random(f"{seed}:table:{t}")
        columns = [f"c{j}_{_token(rng)[:8]}" for j in range(spec.cols_per_table)]
        path = out / f"bg_{t:05d}.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(",".join(columns) + "\n")
            for _ in range(spec.rows_per_table):
                handle.write(",".join(_token(rng) for _ in range(spec.cols_per_table)) + "\n")
    return out


_ABBREV_SUFFIXES = ("_v2", "_x", "2")
_VOWELS = set("aeiouAEIOU")


def _mutate_name(name: str, rng: random.Random, taken: set[str] | None = None) -> str:
    """Rename a column the way web re-uploads do (kids618 -> k618, etc.)."""
    style = rng.randrange(4)
    if style == 0:
        # Keep the first letter and any trailing digits.
        head = name[0] if name else "c"
        tail = name.rstrip("0123456789")
        digits = name[len(tail):]
        mutated = head + digits
    elif style == 1:
        mutated = "".join(ch for ch in name if ch not in _VOWELS) or name[:1]
    elif style == 2:
        mutated = name + rng.choice(_ABBREV_SUFFIXES)
    else:
        mutated = "col_" + name
    if mutated == name:
        mutated = name + "_r"
    if taken is not None:
        while mutated in taken:
            mutated += "_r"
        taken.add(mutated)
    return mutated


def plant_complete_overlap(
    corpus_dir: str | Path,
    dataset: Dataset,
    rename_fraction: float = 1.0,
    permute: bool = True,
    seed: int = 0,
) -> PlantLedger:
    """Insert every dataset row (labels included) as one corpus chunk.

    ``rename_fraction`` of the columns get mutated names and ``permute``
    shuffles column order, mimicking re-uploads of the same data under a
    drifted schema. The ledger records every planted (table, row).
    """
    corpus_dir = Path(corpus_dir)
    rng = random.Random(f"{seed}:complete:{dataset.id}")
    columns = list(dataset.columns)
    n_rename = round(rename_fraction * len(columns))
    rename_idx = set(rng.sample(range(len(columns)), n_rename)) if n_rename else set()
    taken = set(columns)
    renames = {
        columns[i]: _mutate_name(columns[i], rng, taken) for i in sorted(rename_idx)
    }
    order = list(range(len(columns)))
    if permute:
        rng.shuffle(order)
    out_columns = [renames.get(columns[i], columns[i]) for i in order]

    table_name = f"plant_complete_{dataset.id}.csv"
    _write_csv_rows(
        corpus_dir / table_name,
        out_columns,
        ([row[i] for i in order] for row in dataset.rows),
    )
    ledger = PlantLedger(seed=seed, corpus_id=corpus_dir.name)
    ledger.plants.append(
        Plant(
            kind=PLANT_COMPLETE,
            dataset_id=dataset.id,
            locations=tuple((table_name, i) for i in range(dataset.row_count)),
            transforms={
                "rename_fraction": rename_fraction,
                "permute": permute,
                "renames": renames,
            },
        )
    )
    return ledger


def plant_direct_duplicates(
    corpus_dir: str | Path,
    rows: Sequence[tuple[Mapping[str, Cell], str]],
    target_column: str,
    copies: int = 1,
    seed: int = 0,
    dataset_id: str = "",
) -> PlantLedger:
    """Insert each labeled row into ``copies`` distinct corpus tables."""
    if copies < 1:
        raise InputError("plant_direct_duplicates: copies must be >= 1")
    if not rows:
        raise InputError("plant_direct_duplicates: no rows to plant")
    corpus_dir = Path(corpus_dir)
    rng = random.Random(f"{seed}:direct")
    columns = list(rows[0][0].keys())
    if target_column not in columns:
        columns = columns + [target_column]
    locations = []
    for copy in range(copies):
        # Each copy gets its own mild schema drift, like real re-posts.
        taken = set(columns)
        renames = {
            c: _mutate_name(c, rng, taken) if rng.random() < 0.5 else c for c in columns
        }
        table_name = f"plant_direct_{copy:03d}.csv"
        out_rows = []
        for row, label in rows:
            merged = dict(row)
            merged[target_column] = label
            out_rows.append([merged.get(c) for c in columns])
        _write_csv_rows(corpus_dir / table_name, [renames[c] for c in columns], out_rows)
        locations.extend((table_name, i) for i in range(len(rows)))
    ledger = PlantLedger(seed=seed, corpus_id=corpus_dir.name)
    ledger.plants.append(
        Plant(
            kind=PLANT_DIRECT_DUP,
            dataset_id=dataset_id,
            locations=tuple(locations),
            transforms={"copies": copies, "target_column": target_column},
        )
    )
    return ledger


def plant_association(
    corpus_dir: str | Path,
    pairs: Sequence[tuple[str, str]],
    tables: int = 1,
    rows_per_table: int = 1,
    seed: int = 0,
) -> PlantLedger:
    """Make each (key, target) pair co-occur in otherwise-unrelated rows.

    Only the pair values are planted (never a full evaluation row), so a
    scan sees association evidence with zero row-level matches.
    """
    if tables < 1:
        raise InputError("plant_association: tables must be >= 1")
    corpus_dir = Path(corpus_dir)
    rng = random.Random(f"{seed}:assoc")
    locations = []
    for t in range(tables):
        table_name = f"plant_assoc_{t:03d}.csv"
        columns = [f"a{j}_{_token(rng)[:8]}" for j in range(3)] + ["k", "v"]
        out_rows = []
        for key, target in pairs:
            for _ in range(rows_per_table):
                out_rows.append([_token(rng), _token(rng), _token(rng), key, target])
        _write_csv_rows(corpus_dir / table_name, columns, out_rows)
        locations.extend((table_name, i) for i in range(len(out_rows)))
    ledger = PlantLedger(seed=seed, corpus_id=corpus_dir.name)
    ledger.plants.append(
        Plant(
            kind=PLANT_ASSOCIATION,
            dataset_id="",
            locations=tuple(locations),
            transforms={
                "pairs": [[k, v] for k, v in pairs],
                "tables": tables,
                "rows_per_table": rows_per_table,
            },
        )
    )
    return ledger


def merge_ledgers(corpus_id: str, seed: int, *ledgers: PlantLedger) -> PlantLedger:
    merged = PlantLedger(seed=seed, corpus_id=corpus_id)
    for ledger in ledgers:
        merged.plants.extend(ledger.plants)
    return merged


def scanner_prf(
    ledger: PlantLedger,
    evidence_by_dataset: Mapping[str, Sequence[MatchEvidence]],
) -> dict[str, tuple[float, float]]:
    """Precision/recall of scanner evidence against planted ground truth.

    Evidence is keyed by the dataset that was scanned; each plant kind is
    scored against the evidence of its matching strategy. Hits at
    unplanted locations count against precision.
    """
    results: dict[str, tuple[float, float]] = {}
    kinds = {p.kind for p in ledger.plants}
    for kind in sorted(kinds):
        strategy = _KIND_STRATEGY[kind]
        planted: set[tuple[str, int]] = set()
        datasets: set[str] = set()
        for p in ledger.plants:
            if p.kind == kind:
                planted.update(p.locations)
                datasets.add(p.dataset_id)
        hits: set[tuple[str, int]] = set()
        for dataset_id, evidence in evidence_by_dataset.items():
            if datasets != {""} and dataset_id not in datasets:
                continue
            for ev in evidence:
                if ev.strategy == strategy:
                    hits.update(ev.matched)
        if not planted:
            raise InputError(f"scanner_prf: ledger has no locations for kind {kind!r}")
        recall = len(hits & planted) / len(planted)
        precision = len(hits & planted) / len(hits) if hits else 0.0
        results[kind] = (precision, recall)
    return results


def _write_csv_rows(path: Path, columns: Sequence[str], rows) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(columns))
        for row in rows:
            writer.writerow(["" if cell is None else cell for cell in row])
