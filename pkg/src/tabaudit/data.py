"""Core data model: datasets, task manifests, and prediction files.

Cells keep their source lexical form (``str``) so prompts can be
serialized byte-exactly; typed interpretation (number / boolean) is done
on demand by :func:`parse_cell`. ``None`` is the missing-cell value and
is never conflated with the empty string.

Loaded objects are immutable and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InputError
from .tableio import Cell, read_table, write_table

NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")

# Predicted-label slot for model outputs that matched no known label.
INVALID = None


class TaskType(str, Enum):
    BINARY = "binary"
    CATEGORICAL = "categorical"
    QUARTILE = "quartile"


def parse_cell(cell: Cell) -> str | float | bool | None:
    """Typed view of a lexical cell: bool, float, or the original string."""
    if cell is None:
        return None
    s = cell.strip()
    low = s.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    if NUMBER_RE.fullmatch(s):
        return float(s)
    return cell


def is_numeric_cell(cell: Cell) -> bool:
    return cell is not None and NUMBER_RE.fullmatch(cell.strip()) is not None


@dataclass(frozen=True)
class Dataset:
    """A table: ordered columns plus rows of lexical cells."""

    id: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self) -> None:
        if len(set(self.columns)) != len(self.columns):
            raise InputError(f"dataset {self.id!r}: duplicate column names")
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise InputError(
                    f"dataset {self.id!r} row {i}: {len(row)} cells for "
                    f"{len(self.columns)} columns"
                )

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise InputError(f"dataset {self.id!r}: no column {name!r}") from None

    def column(self, name: str) -> tuple[Cell, ...]:
        idx = self.column_index(name)
        return tuple(row[idx] for row in self.rows)

    def record(self, row_id: int) -> dict[str, Cell]:
        """Row as a column -> cell mapping, preserving column order."""
        if not 0 <= row_id < len(self.rows):
            raise InputError(f"dataset {self.id!r}: row_id {row_id} out of range")
        return dict(zip(self.columns, self.rows[row_id]))


@dataclass(frozen=True)
class TaskSpec:
    """Prediction task over one dataset.

    Binary and categorical tasks carry an explicit label set; quartile
    tasks carry three ascending bin boundaries from which the four bin
    labels are generated (see :mod:`tabaudit.quartile`).
    """

    dataset_id: str
    task_type: TaskType
    target_column: str
    class_labels: tuple[str, ...] | None = None
    quartile_boundaries: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.task_type is TaskType.QUARTILE:
            if self.quartile_boundaries is None:
                raise InputError(
                    f"task {self.dataset_id!r}: quartile task requires boundaries"
                )
            if len(self.quartile_boundaries) != 3:
                raise InputError(
                    f"task {self.dataset_id!r}: boundary count must be 3, "
                    f"got {len(self.quartile_boundaries)}"
                )
            b1, b2, b3 = self.quartile_boundaries
            if not (b1 <= b2 <= b3):
                raise InputError(
                    f"task {self.dataset_id!r}: boundaries must be ascending"
                )
        else:
            if self.class_labels is None:
                raise InputError(f"task {self.dataset_id!r}: class labels required")
            n = len(self.class_labels)
            if len(set(self.class_labels)) != n:
                raise InputError(f"task {self.dataset_id!r}: duplicate class labels")
            if self.task_type is TaskType.BINARY and n != 2:
                raise InputError(
                    f"task {self.dataset_id!r}: binary task needs exactly 2 labels, got {n}"
                )
            if self.task_type is TaskType.CATEGORICAL and n < 3:
                raise InputError(
                    f"task {self.dataset_id!r}: categorical task needs >= 3 labels, got {n}"
                )

    def labels(self) -> tuple[str, ...]:
        """The full label set, generating quartile bin labels as needed."""
        if self.task_type is TaskType.QUARTILE:
            from .quartile import bin_labels

            return bin_labels(self.quartile_boundaries)
        assert self.class_labels is not None
        return self.class_labels


@dataclass(frozen=True)
class PredictionRecord:
    row_id: int
    true_label: str
    predicted: str | None  # None = invalid marker, scored as incorrect


@dataclass(frozen=True)
class PredictionSet:
    """Per-row predictions of one model on one dataset, joined to truth."""

    dataset_id: str
    model_id: str
    records: tuple[PredictionRecord, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for rec in self.records:
            if rec.row_id in seen:
                raise InputError(
                    f"predictions {self.dataset_id!r}/{self.model_id!r}: "
                    f"duplicate row_id {rec.row_id}"
                )
            seen.add(rec.row_id)

    def true_labels(self) -> list[str]:
        return [rec.true_label for rec in self.records]


def load_dataset(manifest_path: str | Path, *, allow_unbound_quartile: bool = False) -> tuple[Dataset, TaskSpec]:
    """Load a dataset and its task spec from a manifest JSON file.

    The manifest is one JSON object:
    ``{"id", "task_type", "target_column", "class_labels" |
    "quartile_boundaries", "table_path"}``. ``table_path`` is resolved
    relative to the manifest file.

    ``allow_unbound_quartile`` admits quartile manifests without
    boundaries (used by quartile task generation, which computes them).
    """
    manifest_path = Path(manifest_path)
    manifest = _read_manifest(manifest_path)

    table_path = Path(manifest["table_path"])
    if not table_path.is_absolute():
        table_path = manifest_path.parent / table_path
    columns, rows = read_table(table_path)
    dataset = Dataset(
        id=manifest["id"],
        columns=tuple(columns),
        rows=tuple(tuple(row) for row in rows),
    )

    task_type = _parse_task_type(manifest)
    boundaries = manifest.get("quartile_boundaries")
    if task_type is TaskType.QUARTILE and boundaries is None and allow_unbound_quartile:
        task = None
    else:
        task = _build_task(manifest, task_type)

    target = manifest["target_column"]
    if target not in dataset.columns:
        raise InputError(
            f"manifest {manifest_path}: target column {target!r} absent from table"
        )
    if task is None:
        # Unbound quartile manifests get placeholder boundaries; callers
        # compute the real ones from the data.
        task = TaskSpec(
            dataset_id=manifest["id"],
            task_type=TaskType.QUARTILE,
            target_column=target,
            quartile_boundaries=(0.0, 0.0, 0.0),
        )
    return dataset, task


def _read_manifest(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from exc
    try:
        manifest = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed manifest {path}: {exc}") from exc
    if not isinstance(manifest, dict):
        raise InputError(f"malformed manifest {path}: expected a JSON object")
    for key in ("id", "task_type", "target_column", "table_path"):
        if key not in manifest:
            raise InputError(f"manifest {path}: missing field {key!r}")
    return manifest


def _parse_task_type(manifest: Mapping) -> TaskType:
    raw = manifest["task_type"]
    try:
        return TaskType(raw)
    except ValueError:
        raise InputError(f"unknown task_type {raw!r}") from None


def _build_task(manifest: Mapping, task_type: TaskType) -> TaskSpec:
    labels = manifest.get("class_labels")
    boundaries = manifest.get("quartile_boundaries")
    if task_type is TaskType.QUARTILE:
        if boundaries is None:
            raise InputError(
                f"manifest for {manifest['id']!r}: quartile task requires "
                "quartile_boundaries"
            )
        if not isinstance(boundaries, (list, tuple)) or len(boundaries) != 3:
            raise InputError(
                f"manifest for {manifest['id']!r}: boundary count must be 3"
            )
        return TaskSpec(
            dataset_id=manifest["id"],
            task_type=task_type,
            target_column=manifest["target_column"],
            quartile_boundaries=tuple(float(b) for b in boundaries),
        )
    if labels is None:
        raise InputError(
            f"manifest for {manifest['id']!r}: {task_type.value} task requires "
            "class_labels"
        )
    return TaskSpec(
        dataset_id=manifest["id"],
        task_type=task_type,
        target_column=manifest["target_column"],
        class_labels=tuple(str(lab) for lab in labels),
    )


def write_manifest(path: str | Path, dataset_id: str, task: TaskSpec, table_path: str) -> None:
    """Write a manifest JSON in the same schema load_dataset consumes."""
    doc: dict = {
        "id": dataset_id,
        "task_type": task.task_type.value,
        "target_column": task.target_column,
        "table_path": table_path,
    }
    if task.task_type is TaskType.QUARTILE:
        doc["quartile_boundaries"] = list(task.quartile_boundaries)
    else:
        doc["class_labels"] = list(task.class_labels)
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_dataset(dataset: Dataset, table_path: str | Path) -> None:
    """Write a dataset to a table file (CSV or TBIN by suffix)."""
    write_table(table_path, dataset.columns, dataset.rows)


def load_predictions(path: str | Path, task: TaskSpec) -> PredictionSet:
    """Load a JSON Lines prediction file and validate it against a task.

    Each line is ``{"dataset_id", "row_id", "true_label",
    "predicted_label", "model_id"}``. Predicted labels outside the task's
    label set are retained with the invalid marker rather than dropped;
    true labels outside the set are an error.
    """
    path = Path(path)
    labels = set(task.labels())
    records: list[PredictionRecord] = []
    dataset_id: str | None = None
    model_id: str | None = None
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read predictions {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
        for key in ("dataset_id", "row_id", "true_label", "predicted_label", "model_id"):
            if key not in obj:
                raise InputError(f"{path}:{lineno}: missing field {key!r}")
        if dataset_id is None:
            dataset_id = obj["dataset_id"]
            model_id = obj["model_id"]
        elif obj["dataset_id"] != dataset_id or obj["model_id"] != model_id:
            raise InputError(
                f"{path}:{lineno}: mixed dataset/model ids in one prediction file"
            )
        if dataset_id != task.dataset_id:
            raise InputError(
                f"{path}:{lineno}: predictions for {dataset_id!r} loaded against "
                f"task {task.dataset_id!r}"
            )
        true_label = str(obj["true_label"])
        if true_label not in labels:
            raise InputError(
                f"{path}:{lineno}: true_label {true_label!r} outside task label set"
            )
        raw_pred = obj["predicted_label"]
        predicted = str(raw_pred) if raw_pred is not None else None
        if predicted not in labels:
            predicted = INVALID
        records.append(
            PredictionRecord(
                row_id=int(obj["row_id"]), true_label=true_label, predicted=predicted
            )
        )
    if dataset_id is None:
        raise InputError(f"{path}: no prediction records")
    return PredictionSet(
        dataset_id=dataset_id, model_id=model_id, records=tuple(records)
    )


def write_predictions(path: str | Path, preds: PredictionSet) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for rec in preds.records:
            handle.write(
                json.dumps(
                    {
                        "dataset_id": preds.dataset_id,
                        "row_id": rec.row_id,
                        "true_label": rec.true_label,
                        "predicted_label": rec.predicted,
                        "model_id": preds.model_id,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def class_distribution(labels: Sequence[str] | Iterable[str]) -> dict[str, int]:
    """Count labels. Counts sum to the input length; order-insensitive."""
    counts: dict[str, int] = {}
    n = 0
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
        n += 1
    if n == 0:
        raise InputError("class_distribution: empty label sequence")
    return counts
