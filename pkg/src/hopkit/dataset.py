"""Dataset pipeline: ingestion, bridge-entity partitioning, relation-pair
capping, the three-hop extension, overlap statistics, and fine-tuning corpus
assembly.

All operations are pure functions over value data and deterministic given
their seed, so whole pipelines are reproducible byte for byte.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .kg import Entity, Relation, ReasoningInstance, Triplet
from .prompts import DatasetStyle
from .render import RepresentationTag, render as render_instance

TSV_COLUMNS = ["id", "e1", "r1", "e2", "r2", "e3", "r3", "e4"]


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class SourceRecord:
    """One two- or three-hop row from the input dataset."""

    id: str
    e1: str
    r1: str
    e2: str
    r2: str
    e3: str
    r3: str | None = None
    e4: str | None = None

    def __post_init__(self):
        if (self.r3 is None) != (self.e4 is None):
            raise ValueError(f"record {self.id}: r3 and e4 must be present together")
        for name in ("e1", "r1", "e2", "r2", "e3"):
            if not getattr(self, name).strip():
                raise ValueError(f"record {self.id}: empty field {name}")
        if self.r3 is not None and not (self.r3.strip() and self.e4.strip()):
            raise ValueError(f"record {self.id}: empty third-hop field")

    @property
    def n_hops(self) -> int:
        return 3 if self.r3 is not None else 2

    def to_chain(self) -> ReasoningInstance:
        hops = [
            Triplet(Entity(self.e1), Relation(self.r1), Entity(self.e2)),
            Triplet(Entity(self.e2), Relation(self.r2), Entity(self.e3)),
        ]
        if self.r3 is not None:
            hops.append(Triplet(Entity(self.e3), Relation(self.r3), Entity(self.e4)))
        return ReasoningInstance(hops=tuple(hops), source_id=self.id)

    def to_dict(self) -> dict:
        d = {"id": self.id, "e1": self.e1, "r1": self.r1, "e2": self.e2,
             "r2": self.r2, "e3": self.e3}
        if self.r3 is not None:
            d["r3"] = self.r3
            d["e4"] = self.e4
        return d


@dataclass(frozen=True)
class SplitSpec:
    """Round-robin partition count plus which partitions become train/test."""

    num_partitions: int = 8
    train_partition_index: int = 2
    test_partition_index: int = 4

    def __post_init__(self):
        if self.num_partitions < 2:
            raise ValueError("need at least 2 partitions to pick train and test")
        for idx in (self.train_partition_index, self.test_partition_index):
            if not 0 <= idx < self.num_partitions:
                raise ValueError(f"partition index {idx} out of range")
        if self.train_partition_index == self.test_partition_index:
            raise ValueError("train and test partitions must differ")


@dataclass(frozen=True)
class OverlapStats:
    """Train/test intersection counts, one field per report row."""

    train_size: int
    test_size: int
    bridge_entities_train: int
    bridge_entities_test: int
    bridge_overlap: int
    relation_pairs_train: int
    relation_pairs_test: int
    relation_pair_overlap: int
    rows_covered_by_shared_pairs: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def to_table(self) -> str:
        rows = [
            ("Dataset Size", self.train_size, self.test_size, "-"),
            ("Bridge Entities (e2)", self.bridge_entities_train,
             self.bridge_entities_test, self.bridge_overlap),
            ("Relations (r1, r2)", self.relation_pairs_train,
             self.relation_pairs_test, self.relation_pair_overlap),
            ("No. of row with (r1, r2)", self.train_size, self.test_size,
             self.rows_covered_by_shared_pairs),
        ]
        header = f"{'':28} {'Train':>8} {'Test':>8} {'Intersection':>14}"
        lines = [header]
        for label, train, test, inter in rows:
            lines.append(f"{label:28} {train:>8} {test:>8} {str(inter):>14}")
        return "\n".join(lines)


@dataclass(frozen=True)
class FinetuneRecord:
    """One prompt/response training pair."""

    prompt: str
    response: str
    hops: int
    representation: str

    def to_dict(self) -> dict:
        return {"prompt": self.prompt, "response": self.response,
                "hops": self.hops, "representation": self.representation}


@dataclass
class IngestResult:
    """Accepted records plus per-row rejection bookkeeping."""

    records: list[SourceRecord]
    invalid_rows: list[tuple[int, str]] = field(default_factory=list)
    conflicting_rows: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.invalid_rows) + len(self.conflicting_rows)


def _record_from_fields(fields: dict) -> SourceRecord:
    clean = {k: v for k, v in fields.items() if v not in (None, "")}
    missing = [c for c in TSV_COLUMNS[:6] if c not in clean]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    return SourceRecord(**{k: clean[k] for k in TSV_COLUMNS if k in clean})


def _iter_rows(path: Path, format: str):
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if format == "tsv":
        if not lines:
            return
        header = lines[0].split("\t")
        unknown = set(header) - set(TSV_COLUMNS)
        if unknown:
            raise IngestError(f"unknown TSV columns: {sorted(unknown)}")
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            values = line.split("\t")
            if len(values) != len(header):
                yield lineno, None, f"expected {len(header)} fields, got {len(values)}"
                continue
            yield lineno, dict(zip(header, values)), None
    elif format == "json_lines":
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, None, f"bad JSON: {exc}"
                continue
            if not isinstance(obj, dict):
                yield lineno, None, "row is not an object"
                continue
            yield lineno, obj, None
    else:
        raise IngestError(f"unknown format {format!r}")


def ingest(path: str | Path, format: str = "tsv") -> IngestResult:
    """Read source records from a TSV or line-delimited JSON file.

    Invalid rows and rows whose facts conflict with an earlier accepted row
    (same (head, relation) key, different tail) are counted and reported.
    More than 50% invalid rows aborts with a diagnostic.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    result = IngestResult(records=[])
    facts: dict[tuple[str, str], str] = {}
    seen_ids: set[str] = set()
    total = 0
    for lineno, fields, problem in _iter_rows(path, format):
        total += 1
        if problem is not None:
            result.invalid_rows.append((lineno, problem))
            continue
        try:
            record = _record_from_fields(fields)
        except (ValueError, TypeError) as exc:
            result.invalid_rows.append((lineno, str(exc)))
            continue
        if record.id in seen_ids:
            result.invalid_rows.append((lineno, f"duplicate id {record.id!r}"))
            continue
        hops = [(record.e1, record.r1, record.e2), (record.e2, record.r2, record.e3)]
        if record.r3 is not None:
            hops.append((record.e3, record.r3, record.e4))
        conflict = None
        for head, rel, tail in hops:
            existing = facts.get((head, rel))
            if existing is not None and existing != tail:
                conflict = f"({head!r}, {rel!r}) already maps to {existing!r}, not {tail!r}"
                break
        if conflict is not None:
            result.conflicting_rows.append((lineno, conflict))
            continue
        for head, rel, tail in hops:
            facts[(head, rel)] = tail
        seen_ids.add(record.id)
        result.records.append(record)
    if total and len(result.invalid_rows) > total / 2:
        raise IngestError(
            f"{len(result.invalid_rows)} of {total} rows invalid; "
            f"first problem at line {result.invalid_rows[0][0]}: {result.invalid_rows[0][1]}"
        )
    return result


def write_records(records: list[SourceRecord], path: str | Path, format: str = "tsv") -> None:
    path = Path(path)
    if format == "tsv":
        three_hop = any(r.n_hops == 3 for r in records)
        columns = TSV_COLUMNS if three_hop else TSV_COLUMNS[:6]
        lines = ["\t".join(columns)]
        for r in records:
            d = r.to_dict()
            lines.append("\t".join(d.get(c, "") for c in columns))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif format == "json_lines":
        path.write_text(
            "".join(json.dumps(r.to_dict()) + "\n" for r in records), encoding="utf-8"
        )
    else:
        raise IngestError(f"unknown format {format!r}")


def partition_by_bridge(
    records: list[SourceRecord], spec: SplitSpec
) -> tuple[list[SourceRecord], list[SourceRecord], dict[str, int]]:
    """Split records into round-robin partitions keyed by the bridge entity.

    Records are grouped by e2; groups are ordered by descending size with an
    ascending label tiebreak, then dealt to partitions round-robin, so every
    unique bridge entity lands in exactly one partition.  Returns the
    partitions at the spec's train/test indices plus the full e2 -> partition
    map.
    """
    if not records:
        raise ValueError("no records to partition")
    groups: dict[str, list[SourceRecord]] = defaultdict(list)
    for record in records:
        groups[record.e2].append(record)
    ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    partition_map = {e2: k % spec.num_partitions for k, (e2, _) in enumerate(ordered)}
    partitions: list[list[SourceRecord]] = [[] for _ in range(spec.num_partitions)]
    for e2, members in ordered:
        partitions[partition_map[e2]].extend(members)
    return (
        partitions[spec.train_partition_index],
        partitions[spec.test_partition_index],
        partition_map,
    )


def all_partitions(
    records: list[SourceRecord], num_partitions: int
) -> list[list[SourceRecord]]:
    """Every partition under the same grouping rule as partition_by_bridge."""
    spec = SplitSpec(num_partitions=max(num_partitions, 2),
                     train_partition_index=0, test_partition_index=1)
    groups: dict[str, list[SourceRecord]] = defaultdict(list)
    for record in records:
        groups[record.e2].append(record)
    ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    partitions: list[list[SourceRecord]] = [[] for _ in range(num_partitions)]
    for k, (_, members) in enumerate(ordered):
        partitions[k % num_partitions].extend(members)
    return partitions


def cap_relation_pairs(
    records: list[SourceRecord], cap: int, seed: int
) -> list[SourceRecord]:
    """Keep at most ``cap`` records per (r1, r2) pair, sampled without
    replacement with a seeded RNG.  Output preserves input order.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    by_pair: dict[tuple[str, str], list[int]] = defaultdict(list)
    for i, record in enumerate(records):
        by_pair[(record.r1, record.r2)].append(i)
    rng = random.Random(seed)
    keep: set[int] = set()
    for pair in sorted(by_pair):
        indices = by_pair[pair]
        if len(indices) <= cap:
            keep.update(indices)
        else:
            keep.update(rng.sample(indices, cap))
    return [record for i, record in enumerate(records) if i in keep]


def extend_to_three_hops(
    two_hop: list[SourceRecord],
    extra_facts: list[Triplet],
    e3_whitelist: set[Entity],
) -> list[SourceRecord]:
    """Extend two-hop records with a third hop (e3, r3, e4) from extra_facts.

    Only records whose e3 is in the whitelist and has at least one outgoing
    fact are emitted; among multiple candidate third hops the
    lexicographically smallest (r3, e4) label pair wins.
    """
    whitelist = {e.label for e in e3_whitelist}
    candidates: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for fact in extra_facts:
        candidates[fact.head.label].append((fact.relation.label, fact.tail.label))
    out = []
    for record in two_hop:
        if record.n_hops != 2:
            raise ValueError(f"record {record.id} is not two-hop")
        if record.e3 not in whitelist or record.e3 not in candidates:
            continue
        r3, e4 = min(candidates[record.e3])
        out.append(SourceRecord(id=record.id, e1=record.e1, r1=record.r1,
                                e2=record.e2, r2=record.r2, e3=record.e3,
                                r3=r3, e4=e4))
    return out


def compute_overlap_stats(
    train: list[SourceRecord], test: list[SourceRecord]
) -> OverlapStats:
    """Distinct bridge-entity and relation-pair counts plus intersections."""
    train_bridges = {r.e2 for r in train}
    test_bridges = {r.e2 for r in test}
    train_pairs = {(r.r1, r.r2) for r in train}
    test_pairs = {(r.r1, r.r2) for r in test}
    shared_pairs = train_pairs & test_pairs
    return OverlapStats(
        train_size=len(train),
        test_size=len(test),
        bridge_entities_train=len(train_bridges),
        bridge_entities_test=len(test_bridges),
        bridge_overlap=len(train_bridges & test_bridges),
        relation_pairs_train=len(train_pairs),
        relation_pairs_test=len(test_pairs),
        relation_pair_overlap=len(shared_pairs),
        rows_covered_by_shared_pairs=sum(
            1 for r in test if (r.r1, r.r2) in shared_pairs
        ),
    )


def build_finetune_corpus(
    records: list[SourceRecord],
    representation: RepresentationTag,
    style: DatasetStyle,
) -> list[FinetuneRecord]:
    """Training pairs: per record, one one-hop example built from the first
    hop and one two-hop example for the full chain.  Responses are answer
    envelopes whose body is the record rendered in ``representation``.
    """
    out = []
    for record in records:
        if record.n_hops != 2:
            raise ValueError(f"record {record.id} is not two-hop")
        chain = record.to_chain()
        one_hop = ReasoningInstance(hops=chain.hops[:1], source_id=record.id)
        for sub_chain, hops in ((one_hop, 1), (chain, 2)):
            try:
                example = render_instance(sub_chain, representation)
                prompt = prompts.build_prompt(
                    sub_chain, mode=prompts.PromptMode.ZERO_SHOT, style=style,
                    representation=representation,
                ).full_prompt
            except ValueError as exc:
                raise ValueError(f"record {record.id}: {exc}") from exc
            out.append(FinetuneRecord(
                prompt=prompt,
                response=example.envelope,
                hops=hops,
                representation=representation.value,
            ))
    return out


def write_finetune_corpus(corpus: list[FinetuneRecord], path: str | Path) -> None:
    Path(path).write_text(
        "".join(json.dumps(r.to_dict()) + "\n" for r in corpus), encoding="utf-8"
    )
