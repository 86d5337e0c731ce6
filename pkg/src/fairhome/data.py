"""Dataset ingestion, attribute schema, encoding, splitting, and subgroup enumeration."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SchemaError, UsageError

CATEGORICAL = "categorical"
NUMERIC = "numeric"


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str


@dataclass(frozen=True)
class Schema:
    """Attribute names/kinds, the protected subset, and the favorable-label mapping.

    Protected attributes must be categorical; the label column is separate from
    the attributes. Raw labels equal to ``favorable_value`` map to decision 1.
    """

    attributes: tuple[AttributeSpec, ...]
    protected: tuple[str, ...]
    label_column: str
    favorable_value: str

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names in schema")
        for a in self.attributes:
            if a.kind not in (CATEGORICAL, NUMERIC):
                raise SchemaError(f"unknown kind {a.kind!r} for attribute {a.name!r}")
        if not self.protected:
            raise SchemaError("schema needs at least one protected attribute")
        if len(set(self.protected)) != len(self.protected):
            raise SchemaError("duplicate names in protected list")
        for p in self.protected:
            if p not in names:
                raise SchemaError(f"protected attribute {p!r} is not a schema attribute")
        if self.label_column in names:
            raise SchemaError(f"label column {self.label_column!r} must not be an attribute")
        for p in self.protected:
            if self.kind_of(p) != CATEGORICAL:
                raise SchemaError(f"protected attribute {p!r} must be categorical")

    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def index_of(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise SchemaError(f"unknown attribute {name!r}")

    def kind_of(self, name: str) -> str:
        return self.attributes[self.index_of(name)].kind

    @property
    def protected_indices(self) -> tuple[int, ...]:
        return tuple(self.index_of(p) for p in self.protected)

    @property
    def non_protected(self) -> tuple[str, ...]:
        return tuple(n for n in self.names() if n not in self.protected)

    def to_dict(self) -> dict:
        return {
            "attributes": [{"name": a.name, "kind": a.kind} for a in self.attributes],
            "protected": list(self.protected),
            "label_column": self.label_column,
            "favorable_value": self.favorable_value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        try:
            attrs = tuple(AttributeSpec(a["name"], a["kind"]) for a in d["attributes"])
            return cls(
                attributes=attrs,
                protected=tuple(d["protected"]),
                label_column=d["label_column"],
                favorable_value=str(d["favorable_value"]),
            )
        except KeyError as e:
            raise SchemaError(f"schema config missing key: {e}") from e

    @classmethod
    def from_json(cls, path) -> "Schema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Instance:
    """One input row: categorical cells are str, numeric cells are float."""

    values: tuple


@dataclass
class Dataset:
    schema: Schema
    rows: list[tuple]
    labels: list[int]

    def __len__(self) -> int:
        return len(self.rows)

    def instance(self, i: int) -> Instance:
        return Instance(self.rows[i])

    def instances(self) -> list[Instance]:
        return [Instance(r) for r in self.rows]


def _parse_cell(raw: str, attr: AttributeSpec, line_no: int):
    if raw == "":
        raise DataError(f"line {line_no}: missing value for {attr.name!r}")
    if attr.kind == NUMERIC:
        try:
            value = float(raw)
        except ValueError:
            raise DataError(f"line {line_no}: non-numeric cell {raw!r} for {attr.name!r}") from None
        if not math.isfinite(value):
            raise DataError(f"line {line_no}: non-finite value for {attr.name!r}")
        return value
    return raw


def load_dataset(path, schema: Schema) -> Dataset:
    """Read a headered CSV into a Dataset, binarizing labels against the schema.

    Raises SchemaError when the header does not carry exactly the schema
    attributes plus the label column, and DataError for malformed rows or a
    label column with more than one non-favorable value (multi-class).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        expected = set(schema.names()) | {schema.label_column}
        got = set(header)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise SchemaError(f"{path}: header mismatch (missing {missing}, unexpected {extra})")
        col = {name: header.index(name) for name in header}
        label_col = col[schema.label_column]

        rows: list[tuple] = []
        raw_labels: list[str] = []
        for line_no, cells in enumerate(reader, start=2):
            if len(cells) != len(header):
                raise DataError(f"line {line_no}: expected {len(header)} cells, got {len(cells)}")
            parsed = tuple(
                _parse_cell(cells[col[a.name]], a, line_no) for a in schema.attributes
            )
            rows.append(parsed)
            raw_labels.append(cells[label_col])

    non_favorable = {v for v in raw_labels if v != schema.favorable_value}
    if len(non_favorable) > 1:
        raise DataError(
            f"{path}: label column has multiple non-favorable values {sorted(non_favorable)}; "
            "binary labels required"
        )
    labels = [1 if v == schema.favorable_value else 0 for v in raw_labels]
    return Dataset(schema=schema, rows=rows, labels=labels)


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded disjoint train/test partition; test gets floor(n * fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise UsageError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    if n == 0:
        raise UsageError("cannot split an empty dataset")
    order = np.random.default_rng(seed).permutation(n)
    n_test = int(n * test_fraction)
    test_idx, train_idx = order[:n_test], order[n_test:]

    def take(idx):
        return Dataset(
            schema=dataset.schema,
            rows=[dataset.rows[i] for i in idx],
            labels=[dataset.labels[i] for i in idx],
        )

    return take(train_idx), take(test_idx)


@dataclass(frozen=True)
class ProtectedDomains:
    """Observed value domains of the protected attributes in a training set.

    ``joint_combos`` holds only combinations observed in training, which is
    what keeps generated mutants inside the valid input domain.
    """

    schema: Schema
    per_attribute: dict
    joint_combos: tuple

    def combo_of(self, instance: Instance) -> tuple:
        return tuple(instance.values[i] for i in self.schema.protected_indices)


def protected_domains(train: Dataset) -> ProtectedDomains:
    if len(train) == 0:
        raise UsageError("cannot extract protected domains from an empty dataset")
    schema = train.schema
    idx = schema.protected_indices
    per_attribute = {}
    for name, i in zip(schema.protected, idx):
        values = tuple(sorted({row[i] for row in train.rows}))
        if len(values) == 1:
            warnings.warn(
                f"protected attribute {name!r} has a single observed value; "
                "no mutation is possible along it",
                stacklevel=2,
            )
        per_attribute[name] = values
    combos = tuple(sorted({tuple(row[i] for i in idx) for row in train.rows}))
    return ProtectedDomains(schema=schema, per_attribute=per_attribute, joint_combos=combos)


@dataclass(frozen=True)
class SubgroupKey:
    """One value per protected attribute, identifying an intersectional subgroup."""

    assignment: tuple

    @classmethod
    def from_combo(cls, protected: tuple, combo: tuple) -> "SubgroupKey":
        return cls(tuple(zip(protected, combo)))

    def label(self) -> str:
        return ",".join(f"{a}={v}" for a, v in self.assignment)


def enumerate_subgroups(domains: ProtectedDomains) -> list[SubgroupKey]:
    """One SubgroupKey per observed joint combination, in lexicographic order."""
    if not domains.joint_combos:
        raise UsageError("no joint combinations observed")
    return [
        SubgroupKey.from_combo(domains.schema.protected, combo)
        for combo in domains.joint_combos
    ]


@dataclass(frozen=True)
class CategoricalBlock:
    name: str
    levels: tuple
    offsets: dict  # value -> position within the block


@dataclass(frozen=True)
class NumericBlock:
    name: str
    lo: float
    hi: float


@dataclass(frozen=True)
class EncodingMap:
    """Training-derived encoder: one-hot categorical blocks, min-max scaled numerics."""

    blocks: tuple
    dim: int


def build_encoding(train: Dataset) -> EncodingMap:
    if len(train) == 0:
        raise UsageError("cannot build an encoding from an empty dataset")
    blocks = []
    dim = 0
    for i, attr in enumerate(train.schema.attributes):
        column = [row[i] for row in train.rows]
        if attr.kind == CATEGORICAL:
            levels = tuple(sorted(set(column)))
            blocks.append(
                CategoricalBlock(attr.name, levels, {v: j for j, v in enumerate(levels)})
            )
            dim += len(levels)
        else:
            blocks.append(NumericBlock(attr.name, min(column), max(column)))
            dim += 1
    return EncodingMap(blocks=tuple(blocks), dim=dim)


def encode(instance: Instance, schema: Schema, encoding: EncodingMap) -> np.ndarray:
    """Encode one instance; unseen categorical levels become an all-zero block,
    numerics are clamped to the training range."""
    out = np.zeros(encoding.dim)
    pos = 0
    for value, block in zip(instance.values, encoding.blocks):
        if isinstance(block, CategoricalBlock):
            j = block.offsets.get(value)
            if j is not None:
                out[pos + j] = 1.0
            pos += len(block.levels)
        else:
            span = block.hi - block.lo
            scaled = 0.0 if span == 0 else (float(value) - block.lo) / span
            out[pos] = min(1.0, max(0.0, scaled))
            pos += 1
    return out


def encode_matrix(instances, schema: Schema, encoding: EncodingMap) -> np.ndarray:
    if not instances:
        return np.zeros((0, encoding.dim))
    return np.stack([encode(inst, schema, encoding) for inst in instances])
