"""Diagnosis-category tree: code mapping, root paths, and label propagation.

The hierarchy is a forest of category nodes.  Leaves carry diagnosis-code
patterns, either an exact code (``"432.0"``) or an inclusive integer range
(``"420-429"``).  A range covers every code whose integer part (the token
before the first ``.``) falls inside the span, so ``"420-429"`` claims
``424`` as well as ``424.5``.  Exact patterns win over range patterns when
both could match a code.

Hierarchies are immutable after :func:`load_hierarchy` and safe to share
across threads.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional

logger = logging.getLogger(__name__)

FORMAT_NAME = "chartsift-hierarchy"
FORMAT_VERSION = 1

_RANGE_RE = re.compile(r"^(\d+)\s*-\s*(\d+)$")


class HierarchyError(ValueError):
    """A hierarchy document violates a structural invariant."""


class CodeSystem(str, Enum):
    ICD9 = "ICD9"
    ICD10 = "ICD10"


class CategoryLabel(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class CategoryNode:
    id: str
    name: str
    description: str
    parent: Optional[str]
    children: tuple[str, ...] = ()
    codes: tuple[str, ...] = ()
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children


def normalize_code(code: str) -> str:
    return code.strip().upper()


def _expand_pattern(pattern: str) -> tuple[str, list[str]]:
    """Return (kind, keys) for a code pattern.

    ``kind`` is ``"exact"`` or ``"range"``.  Range keys are the integer
    codes of the span, zero-padded to the width of the range start.
    """
    norm = normalize_code(pattern)
    m = _RANGE_RE.match(norm)
    if m is None:
        return "exact", [norm]
    lo, hi = m.group(1), m.group(2)
    if int(lo) > int(hi):
        raise HierarchyError(f"range pattern {pattern!r} is descending")
    width = len(lo)
    return "range", [str(i).zfill(width) for i in range(int(lo), int(hi) + 1)]


@dataclass
class DiagnosisHierarchy:
    """Forest of diagnosis categories with a code lookup index."""

    nodes: dict[str, CategoryNode]
    top_level: tuple[str, ...]
    exact_index: dict[str, str]
    range_index: dict[str, str]
    gem_map: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, category_id: str) -> CategoryNode:
        try:
            return self.nodes[category_id]
        except KeyError:
            raise KeyError(f"unknown category {category_id!r}") from None

    def leaves(self) -> Iterable[CategoryNode]:
        return (n for n in self.nodes.values() if n.is_leaf)

    def leaf_ids(self) -> list[str]:
        return [n.id for n in self.nodes.values() if n.is_leaf]

    def depth_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for n in self.nodes.values():
            hist[n.depth] = hist.get(n.depth, 0) + 1
        return dict(sorted(hist.items()))

    def path_to(self, category_id: str) -> list[str]:
        """Ordered node ids from a top-level node down to ``category_id``."""
        node = self.node(category_id)
        path = [node.id]
        while node.parent is not None:
            node = self.nodes[node.parent]
            path.append(node.id)
        path.reverse()
        return path

    def map_code(self, code: str, system: CodeSystem | str = CodeSystem.ICD9) -> Optional[str]:
        """Map a raw diagnosis code to a leaf category id, or None.

        ICD-10 codes are first translated through the GEM table when an
        entry exists; the raw code is tried as a fallback either way.
        Unmappable codes are a normal outcome, not an error.
        """
        if not code or not code.strip():
            raise ValueError("code string must be non-empty")
        system = CodeSystem(system)
        norm = normalize_code(code)
        candidates = []
        if system is CodeSystem.ICD10 and norm in self.gem_map:
            candidates.append(self.gem_map[norm])
        candidates.append(norm)
        for cand in candidates:
            hit = self._lookup(cand)
            if hit is not None:
                return hit
        return None

    def _lookup(self, norm: str) -> Optional[str]:
        if norm in self.exact_index:
            return self.exact_index[norm]
        integer_part = norm.split(".", 1)[0]
        return self.range_index.get(integer_part)

    def propagate_labels(
        self, leaf_labels: Mapping[str, CategoryLabel | str]
    ) -> dict[str, CategoryLabel]:
        """Propagate leaf labels up the tree.

        A non-leaf is positive iff it has at least one positive descendant,
        negative iff it has a negative descendant and no positive one, and
        excluded otherwise.  Unlabeled leaves are excluded.
        """
        labels: dict[str, CategoryLabel] = {}
        for leaf_id, value in leaf_labels.items():
            node = self.node(leaf_id)
            if not node.is_leaf:
                raise HierarchyError(f"label for non-leaf category {leaf_id!r}")
            value = CategoryLabel(value)
            if value is CategoryLabel.EXCLUDED:
                raise HierarchyError("leaf labels must be positive or negative")
            labels[leaf_id] = value

        result: dict[str, CategoryLabel] = {}

        def visit(node_id: str) -> CategoryLabel:
            node = self.nodes[node_id]
            if node.is_leaf:
                label = labels.get(node_id, CategoryLabel.EXCLUDED)
            else:
                child_labels = [visit(c) for c in node.children]
                if CategoryLabel.POSITIVE in child_labels:
                    label = CategoryLabel.POSITIVE
                elif CategoryLabel.NEGATIVE in child_labels:
                    label = CategoryLabel.NEGATIVE
                else:
                    label = CategoryLabel.EXCLUDED
            result[node_id] = label
            return label

        for root in self.top_level:
            visit(root)
        return result


def build_hierarchy(
    records: Iterable[Mapping],
    gem_map: Optional[Mapping[str, str]] = None,
) -> DiagnosisHierarchy:
    """Assemble and validate a hierarchy from parsed node records."""
    raw: dict[str, dict] = {}
    order: list[str] = []
    for rec in records:
        node_id = rec.get("id")
        if not node_id:
            raise HierarchyError(f"node record missing id: {rec!r}")
        if node_id in raw:
            raise HierarchyError(f"duplicate category id {node_id!r}")
        raw[node_id] = {
            "name": rec.get("name", node_id),
            "description": rec.get("description", ""),
            "parent": rec.get("parent"),
            "codes": tuple(rec.get("codes") or ()),
        }
        order.append(node_id)

    children: dict[str, list[str]] = {node_id: [] for node_id in order}
    top_level: list[str] = []
    for node_id in order:
        parent = raw[node_id]["parent"]
        if parent is None:
            top_level.append(node_id)
        else:
            if parent not in raw:
                raise HierarchyError(f"unknown parent {parent!r} of {node_id!r}")
            children[parent].append(node_id)

    # Depths via BFS from the roots; anything unreached sits on a cycle.
    depth: dict[str, int] = {}
    frontier = list(top_level)
    for node_id in frontier:
        depth[node_id] = 1
    while frontier:
        nxt: list[str] = []
        for node_id in frontier:
            for child in children[node_id]:
                depth[child] = depth[node_id] + 1
                nxt.append(child)
        frontier = nxt
    if len(depth) != len(order):
        missing = [node_id for node_id in order if node_id not in depth]
        raise HierarchyError(f"cycle detected involving {missing[:5]!r}")

    nodes: dict[str, CategoryNode] = {}
    exact_index: dict[str, str] = {}
    range_index: dict[str, str] = {}
    for node_id in order:
        info = raw[node_id]
        is_leaf = not children[node_id]
        if info["codes"] and not is_leaf:
            raise HierarchyError(f"codes on non-leaf category {node_id!r}")
        nodes[node_id] = CategoryNode(
            id=node_id,
            name=info["name"],
            description=info["description"],
            parent=info["parent"],
            children=tuple(children[node_id]),
            codes=info["codes"],
            depth=depth[node_id],
        )
        for pattern in info["codes"]:
            kind, keys = _expand_pattern(pattern)
            index = exact_index if kind == "exact" else range_index
            for key in keys:
                claimed = index.get(key)
                if claimed is not None and claimed != node_id:
                    raise HierarchyError(
                        f"code {key!r} claimed by both {claimed!r} and {node_id!r}"
                    )
                index[key] = node_id

    return DiagnosisHierarchy(
        nodes=nodes,
        top_level=tuple(top_level),
        exact_index=exact_index,
        range_index=range_index,
        gem_map=dict(gem_map or {}),
    )


def load_hierarchy(path: str | Path, gem_path: str | Path | None = None) -> DiagnosisHierarchy:
    """Load a line-delimited hierarchy document, optionally with a GEM table.

    The first line may be a header record ``{"format": ..., "version": ...}``;
    unknown fields on node records are ignored.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise HierarchyError(f"{path}:{lineno}: invalid record: {exc}") from exc
            if lineno == 1 and "format" in rec and "id" not in rec:
                if rec.get("version", FORMAT_VERSION) > FORMAT_VERSION:
                    raise HierarchyError(
                        f"unsupported hierarchy format version {rec.get('version')}"
                    )
                continue
            records.append(rec)
    gem_map = load_gem(gem_path) if gem_path is not None else None
    return build_hierarchy(records, gem_map=gem_map)


def save_hierarchy(hierarchy: DiagnosisHierarchy, path: str | Path) -> None:
    """Write a hierarchy back to the line-delimited document format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION}) + "\n")
        for node in hierarchy.nodes.values():
            rec = {
                "id": node.id,
                "name": node.name,
                "description": node.description,
                "parent": node.parent,
                "codes": list(node.codes),
            }
            fh.write(json.dumps(rec) + "\n")


def load_gem(path: str | Path) -> dict[str, str]:
    """Load a two-column general-equivalence mapping (source -> target).

    Repeated source codes keep the first listed target; later rows are
    dropped with a warning.
    """
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = re.split(r"[,\t ]+", line)
            if len(parts) < 2:
                raise HierarchyError(f"{path}:{lineno}: expected two columns")
            src, dst = normalize_code(parts[0]), normalize_code(parts[1])
            if src in mapping:
                if mapping[src] != dst:
                    logger.warning(
                        "gem source %s maps to both %s and %s; keeping the first",
                        src, mapping[src], dst,
                    )
                continue
            mapping[src] = dst
    return mapping
