"""Rooted labeled topic trees.

Built either from a parsed hierarchy reply (root = micro-category topic)
or from a SemEval-style child/parent edge list, validated, serialized as
flat JSON, and rendered into the "Childs of X: [...]" prompt context.

Labels are unique under normalization within one taxonomy; the first
occurrence of a duplicate label wins and later ones collapse into it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import normalize_term
from .llm import HierarchyResult, render

log = logging.getLogger(__name__)


class TaxonomyError(Exception):
    pass


class EmptyHierarchy(TaxonomyError):
    pass


class MultipleRoots(TaxonomyError):
    pass


class CycleDetected(TaxonomyError):
    pass


class OrphanEdge(TaxonomyError):
    pass


class EdgeFileError(TaxonomyError):
    """Edge file is structurally unreadable (wrong column count etc.)."""


@dataclass(frozen=True, slots=True)
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


@dataclass
class TaxonomyNode:
    node_id: int
    label: str
    normalized_label: str
    parent_id: int | None
    children: list[int] = field(default_factory=list)


@dataclass
class Taxonomy:
    root_id: int
    topic: str
    nodes: dict[int, TaxonomyNode]
    provenance: str = "constructed"

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> TaxonomyNode:
        return self.nodes[node_id]

    @property
    def root(self) -> TaxonomyNode:
        return self.nodes[self.root_id]

    def labels(self) -> list[str]:
        return [n.label for n in self.nodes.values()]

    def find(self, label: str) -> TaxonomyNode | None:
        wanted = normalize_term(label)
        for node in self.nodes.values():
            if node.normalized_label == wanted:
                return node
        return None

    def leaves(self) -> list[TaxonomyNode]:
        """Childless non-root nodes, in insertion (ascending-id) order."""
        return [
            n
            for n in self.nodes.values()
            if not n.children and n.node_id != self.root_id
        ]

    def internal_nodes(self) -> list[TaxonomyNode]:
        return [n for n in self.nodes.values() if n.children]

    def save(self, path: str | Path) -> None:
        payload = {
            "topic": self.topic,
            "nodes": [
                {"id": n.node_id, "label": n.label, "parent": n.parent_id}
                for n in self.nodes.values()
            ],
        }
        Path(path).write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "Taxonomy":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        nodes: dict[int, TaxonomyNode] = {}
        root_id = None
        for item in payload["nodes"]:
            node = TaxonomyNode(
                node_id=item["id"],
                label=item["label"],
                normalized_label=normalize_term(item["label"]),
                parent_id=item["parent"],
            )
            nodes[node.node_id] = node
            if node.parent_id is None:
                root_id = node.node_id
        if root_id is None:
            raise TaxonomyError(f"{path}: no root node (parent null) found")
        for node in nodes.values():
            if node.parent_id is not None:
                parent = nodes.get(node.parent_id)
                if parent is None:
                    raise TaxonomyError(
                        f"{path}: node {node.node_id} references missing parent "
                        f"{node.parent_id}"
                    )
                parent.children.append(node.node_id)
        taxonomy = cls(
            root_id=root_id,
            topic=payload["topic"],
            nodes=nodes,
            provenance="loaded_json",
        )
        problems = validate(taxonomy)
        if problems:
            raise TaxonomyError(f"{path}: " + "; ".join(str(p) for p in problems))
        return taxonomy


def from_hierarchy_result(topic: str, result: HierarchyResult) -> Taxonomy:
    """Materialize a parsed hierarchy reply as a tree rooted at the topic.

    Mapping keys become internal nodes, leaf terms become leaves, unplaced
    terms hang directly under the root. A key whose normalized label
    already exists merges its children into the existing node; a duplicate
    leaf label is dropped. Both cases are logged.
    """
    if not result.tree and not result.unplaced:
        raise EmptyHierarchy("hierarchy result has no keys and no terms")

    nodes: dict[int, TaxonomyNode] = {}
    by_norm: dict[str, int] = {}
    next_id = 0

    def create(label: str, parent_id: int | None) -> int:
        nonlocal next_id
        node = TaxonomyNode(
            node_id=next_id,
            label=label,
            normalized_label=normalize_term(label),
            parent_id=parent_id,
        )
        nodes[next_id] = node
        by_norm[node.normalized_label] = next_id
        if parent_id is not None:
            nodes[parent_id].children.append(next_id)
        next_id += 1
        return node.node_id

    root_id = create(topic, None)

    def add_leaf(term: str, parent_id: int) -> None:
        if normalize_term(term) in by_norm:
            log.info("duplicate label %r dropped (kept first placement)", term)
            return
        create(term, parent_id)

    def place(subtree: dict, parent_id: int) -> None:
        for key, value in subtree.items():
            existing = by_norm.get(normalize_term(key))
            if existing is not None:
                log.info("duplicate key %r collapsed into node %d", key, existing)
                key_id = existing
            else:
                key_id = create(key, parent_id)
            if isinstance(value, dict):
                place(value, key_id)
            else:
                for term in value:
                    add_leaf(term, key_id)

    place(result.tree, root_id)
    for term in result.unplaced:
        add_leaf(term, root_id)

    return Taxonomy(root_id=root_id, topic=topic, nodes=nodes, provenance="constructed")


def load_semeval_edges(path: str | Path) -> Taxonomy:
    """Build a taxonomy from a child<TAB>parent edge list.

    A leading numeric id column (SemEval dump style) is detected and
    dropped when every row carries one. The unique term never appearing
    as a child becomes the root. When the child-first reading is
    structurally broken but swapping the columns yields a valid tree, the
    swapped orientation is used.
    """
    rows = []
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        columns = [c.strip() for c in stripped.split("\t")]
        if len(columns) not in (2, 3) or any(not c for c in columns):
            raise EdgeFileError(f"{path}:{lineno}: expected 2 or 3 tab-separated columns")
        rows.append((lineno, columns))
    if not rows:
        raise EdgeFileError(f"{path}: no edges")

    if all(len(cols) == 3 and cols[0].isdigit() for _, cols in rows):
        edges = [(cols[1], cols[2]) for _, cols in rows]
    elif all(len(cols) == 2 for _, cols in rows):
        edges = [(cols[0], cols[1]) for _, cols in rows]
    else:
        raise EdgeFileError(f"{path}: inconsistent column counts")

    try:
        return _tree_from_edges(edges, str(path))
    except (MultipleRoots, CycleDetected, OrphanEdge) as original:
        flipped = [(parent, child) for child, parent in edges]
        try:
            taxonomy = _tree_from_edges(flipped, str(path))
        except TaxonomyError:
            raise original from None
        log.info("%s: child-first reading invalid (%s); using parent-first", path, original)
        return taxonomy


def _tree_from_edges(edges: Sequence[tuple[str, str]], source: str) -> Taxonomy:
    surface: dict[str, str] = {}
    parent_of: dict[str, str] = {}
    children_of: dict[str, list[str]] = {}
    order: list[str] = []

    def intern(term: str) -> str:
        norm = normalize_term(term)
        if norm not in surface:
            surface[norm] = term
            order.append(norm)
        return norm

    for child, parent in edges:
        child_n, parent_n = intern(child), intern(parent)
        if child_n in parent_of:
            if parent_of[child_n] == parent_n:
                continue
            raise OrphanEdge(
                f"{source}: term {surface[child_n]!r} has two parents "
                f"({surface[parent_of[child_n]]!r} and {surface[parent_n]!r})"
            )
        parent_of[child_n] = parent_n
        children_of.setdefault(parent_n, []).append(child_n)

    roots = [t for t in order if t not in parent_of]
    if not roots:
        raise CycleDetected(f"{source}: every term has a parent (cycle)")
    if len(roots) > 1:
        raise MultipleRoots(
            f"{source}: {len(roots)} parentless terms: "
            + ", ".join(surface[r] for r in roots[:5])
        )
    root_norm = roots[0]

    nodes: dict[int, TaxonomyNode] = {}
    id_of: dict[str, int] = {}
    queue = [root_norm]
    while queue:
        norm = queue.pop(0)
        node_id = len(nodes)
        id_of[norm] = node_id
        parent_norm = parent_of.get(norm)
        parent_id = id_of[parent_norm] if parent_norm is not None else None
        node = TaxonomyNode(
            node_id=node_id,
            label=surface[norm],
            normalized_label=norm,
            parent_id=parent_id,
        )
        nodes[node_id] = node
        if parent_id is not None:
            nodes[parent_id].children.append(node_id)
        queue.extend(children_of.get(norm, []))

    if len(nodes) != len(order):
        unreachable = [surface[t] for t in order if t not in id_of]
        raise CycleDetected(
            f"{source}: {len(unreachable)} terms unreachable from root "
            f"(cyclic component), e.g. {unreachable[0]!r}"
        )

    return Taxonomy(
        root_id=0,
        topic=surface[root_norm],
        nodes=nodes,
        provenance="loaded_semeval",
    )


def to_prompt_context(taxonomy: Taxonomy) -> str:
    """One "Childs of X: [...]" line per internal node, breadth-first.

    The root line is always present (even childless, with empty brackets);
    every other node only appears when it has children. No trailing
    newline, so the context can be concatenated with a query line.
    """
    lines = []
    queue = [taxonomy.root_id]
    while queue:
        node = taxonomy.nodes[queue.pop(0)]
        if node.children or node.node_id == taxonomy.root_id:
            children = [taxonomy.nodes[c].label for c in node.children]
            lines.append(
                render("taxonomy_context", {"node": node.label, "children": children})
            )
        queue.extend(node.children)
    return "\n".join(lines)


def validate(taxonomy: Taxonomy) -> list[Violation]:
    """Tree invariants as violation values; an empty list means valid."""
    violations: list[Violation] = []
    nodes = taxonomy.nodes

    roots = [n for n in nodes.values() if n.parent_id is None]
    if len(roots) != 1:
        violations.append(
            Violation("RootCount", f"expected exactly 1 root, found {len(roots)}")
        )
    if taxonomy.root_id not in nodes:
        violations.append(Violation("RootCount", "root_id not in node collection"))

    seen_norms: dict[str, int] = {}
    for node in nodes.values():
        if node.parent_id is not None:
            parent = nodes.get(node.parent_id)
            if parent is None:
                violations.append(
                    Violation(
                        "DanglingParent",
                        f"node {node.node_id} points at missing parent {node.parent_id}",
                    )
                )
            elif node.node_id not in parent.children:
                violations.append(
                    Violation(
                        "LinkInconsistency",
                        f"node {node.node_id} missing from children of {node.parent_id}",
                    )
                )
        for child_id in node.children:
            child = nodes.get(child_id)
            if child is None or child.parent_id != node.node_id:
                violations.append(
                    Violation(
                        "LinkInconsistency",
                        f"child {child_id} of node {node.node_id} does not point back",
                    )
                )
        if node.normalized_label in seen_norms:
            violations.append(
                Violation(
                    "DuplicateLabel",
                    f"nodes {seen_norms[node.normalized_label]} and {node.node_id} "
                    f"share label {node.label!r}",
                )
            )
        else:
            seen_norms[node.normalized_label] = node.node_id

    if taxonomy.root_id in nodes:
        reached = set()
        queue = [taxonomy.root_id]
        while queue:
            current = queue.pop(0)
            if current in reached:
                violations.append(
                    Violation("Cycle", f"node {current} reached twice from root")
                )
                continue
            reached.add(current)
            queue.extend(nodes[current].children)
        if len(reached) != len(nodes):
            missing = sorted(set(nodes) - reached)
            violations.append(
                Violation(
                    "Disconnected",
                    f"{len(missing)} nodes unreachable from root, e.g. {missing[0]}",
                )
            )
    return violations


def prune_leaves(taxonomy: Taxonomy, remove_ids: Iterable[int]) -> Taxonomy:
    """Copy of the taxonomy without the given leaf nodes, ids renumbered
    densely in the surviving insertion order."""
    remove = set(remove_ids)
    for node_id in remove:
        node = taxonomy.nodes[node_id]
        if node.children:
            raise TaxonomyError(f"node {node_id} ({node.label!r}) is not a leaf")
        if node_id == taxonomy.root_id:
            raise TaxonomyError("cannot prune the root")

    new_id: dict[int, int] = {}
    nodes: dict[int, TaxonomyNode] = {}
    for node in taxonomy.nodes.values():
        if node.node_id in remove:
            continue
        assigned = len(nodes)
        new_id[node.node_id] = assigned
        nodes[assigned] = TaxonomyNode(
            node_id=assigned,
            label=node.label,
            normalized_label=node.normalized_label,
            parent_id=None,
        )
    for node in taxonomy.nodes.values():
        if node.node_id in remove:
            continue
        copy = nodes[new_id[node.node_id]]
        if node.parent_id is not None:
            copy.parent_id = new_id[node.parent_id]
        copy.children = [new_id[c] for c in node.children if c not in remove]
    return Taxonomy(
        root_id=new_id[taxonomy.root_id],
        topic=taxonomy.topic,
        nodes=nodes,
        provenance=taxonomy.provenance,
    )
