"""Open-tree data model: validation, JSON (de)serialization, corpora.

A tree is a set of instance nodes (mask + open-vocabulary label + parent
reference) over one image canvas, rooted at an artificial root vertex that
carries no mask or label.  The root is represented by the reserved id
``ROOT_ID`` so that depth and ancestor computations have a concrete vertex.

Wire format, one JSON document per image::

    {"image_id": str, "width": int, "height": int,
     "nodes": [{"id": int, "label": str, "parent": int|null, "rle": str}]}

``parent: null`` means child-of-root.  A corpus is a JSONL file of such
documents with unique image ids.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusError, RleError, SchemaError, ValidationError
from .masks import Mask

ROOT_ID = -1


def normalize_label(label: str) -> str:
    """Canonical label form: Unicode NFC, lowercased."""
    return unicodedata.normalize("NFC", label).lower()


@dataclass(frozen=True)
class ImageCanvas:
    image_id: str
    width: int
    height: int


@dataclass(frozen=True, eq=False)
class InstanceNode:
    node_id: int
    label: str
    mask: Mask
    parent_id: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InstanceNode):
            return NotImplemented
        return (self.node_id == other.node_id and self.label == other.label
                and self.parent_id == other.parent_id and self.mask == other.mask)


class OpenTree:
    """Validated, effectively immutable rooted tree of instance nodes.

    Construction normalizes labels and checks every structural invariant:
    unique ids, nonempty labels and masks, parents resolvable, acyclicity.
    Children lists, depths and root-to-node label paths are precomputed.
    """

    __slots__ = ("canvas", "nodes", "children", "depths", "label_paths")

    def __init__(self, canvas: ImageCanvas, nodes: Iterable[InstanceNode]) -> None:
        if canvas.width < 1 or canvas.height < 1:
            raise ValidationError(
                f"canvas must be at least 1x1, got {canvas.width}x{canvas.height}")
        by_id: dict[int, InstanceNode] = {}
        for node in nodes:
            if node.node_id == ROOT_ID:
                raise ValidationError(
                    f"node id {ROOT_ID} is reserved for the artificial root")
            if node.node_id in by_id:
                raise ValidationError(f"duplicate node id {node.node_id}")
            label = normalize_label(node.label)
            if not label:
                raise ValidationError(f"empty label at node {node.node_id}")
            if node.mask.width != canvas.width or node.mask.height != canvas.height:
                raise ValidationError(
                    f"mask of node {node.node_id} is {node.mask.width}x"
                    f"{node.mask.height}, canvas is {canvas.width}x{canvas.height}")
            if node.mask.area == 0:
                raise ValidationError(f"empty mask at node {node.node_id}")
            if label != node.label:
                node = InstanceNode(node.node_id, label, node.mask, node.parent_id)
            by_id[node.node_id] = node

        for node in by_id.values():
            if node.parent_id != ROOT_ID and node.parent_id not in by_id:
                raise ValidationError(
                    f"node {node.node_id} references unknown parent {node.parent_id}")

        depths: dict[int, int] = {ROOT_ID: 0}
        for start in by_id:
            chain = []
            cur = start
            while cur not in depths:
                if cur in chain:
                    raise ValidationError(f"cycle at node {cur}")
                chain.append(cur)
                cur = by_id[cur].parent_id
            base = depths[cur]
            for offset, nid in enumerate(reversed(chain), start=1):
                depths[nid] = base + offset
        del depths[ROOT_ID]

        children: dict[int, list[int]] = {ROOT_ID: []}
        for nid in by_id:
            children[nid] = []
        for nid in sorted(by_id):
            children[by_id[nid].parent_id].append(nid)

        label_paths: dict[int, tuple[str, ...]] = {ROOT_ID: ()}
        stack = list(reversed(children[ROOT_ID]))
        while stack:
            nid = stack.pop()
            node = by_id[nid]
            label_paths[nid] = label_paths[node.parent_id] + (node.label,)
            stack.extend(reversed(children[nid]))

        self.canvas = canvas
        self.nodes = {nid: by_id[nid] for nid in sorted(by_id)}
        self.children = {nid: tuple(kids) for nid, kids in children.items()}
        self.depths = depths
        self.label_paths = label_paths

    @property
    def n_nodes(self) -> int:
        """Number of instance nodes (the artificial root is not counted)."""
        return len(self.nodes)

    def node_ids(self) -> tuple[int, ...]:
        return tuple(self.nodes)

    def depth(self, node_id: int) -> int:
        """Edge distance from the artificial root; the root itself has depth 0."""
        if node_id == ROOT_ID:
            return 0
        try:
            return self.depths[node_id]
        except KeyError:
            raise ValidationError(f"unknown node id {node_id}") from None

    def ancestors(self, node_id: int) -> Iterator[int]:
        """Proper ancestors, innermost first, excluding the artificial root."""
        cur = self.nodes[node_id].parent_id
        while cur != ROOT_ID:
            yield cur
            cur = self.nodes[cur].parent_id

    def descendants(self, node_id: int) -> set[int]:
        out: set[int] = set()
        stack = list(self.children[node_id])
        while stack:
            nid = stack.pop()
            out.add(nid)
            stack.extend(self.children[nid])
        return out

    def leaves(self) -> tuple[int, ...]:
        return tuple(nid for nid in self.nodes if not self.children[nid])

    def internal_ids(self) -> tuple[int, ...]:
        return tuple(nid for nid in self.nodes if self.children[nid])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OpenTree):
            return NotImplemented
        return self.canvas == other.canvas and self.nodes == other.nodes

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (f"OpenTree({self.canvas.image_id!r}, "
                f"{self.canvas.width}x{self.canvas.height}, {self.n_nodes} nodes)")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def _is_int(value: object) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def parse_tree(document: str | bytes) -> OpenTree:
    """Parse and fully validate one per-image JSON document."""
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(
                f"invalid UTF-8 at byte offset {exc.start}") from exc
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"malformed JSON at byte offset {exc.pos}: {exc.msg}") from exc

    _require(isinstance(payload, dict), "document must be a JSON object")
    _require(isinstance(payload.get("image_id"), str), "image_id must be a string")
    _require(_is_int(payload.get("width")), "width must be an integer")
    _require(_is_int(payload.get("height")), "height must be an integer")
    _require(isinstance(payload.get("nodes"), list), "nodes must be a list")

    canvas = ImageCanvas(payload["image_id"], payload["width"], payload["height"])
    nodes = []
    for i, raw in enumerate(payload["nodes"]):
        _require(isinstance(raw, dict), f"nodes[{i}] must be an object")
        _require(_is_int(raw.get("id")), f"nodes[{i}].id must be an integer")
        nid = raw["id"]
        _require(isinstance(raw.get("label"), str), f"node {nid}: label must be a string")
        parent = raw.get("parent")
        _require(parent is None or _is_int(parent),
                 f"node {nid}: parent must be an integer or null")
        _require(isinstance(raw.get("rle"), str), f"node {nid}: rle must be a string")
        try:
            mask = Mask.from_rle(raw["rle"], canvas.width, canvas.height)
        except RleError as exc:
            raise ValidationError(f"node {nid}: {exc}") from exc
        nodes.append(InstanceNode(
            node_id=nid,
            label=raw["label"],
            mask=mask,
            parent_id=ROOT_ID if parent is None else parent,
        ))
    return OpenTree(canvas, nodes)


def serialize_tree(tree: OpenTree) -> str:
    """One-line JSON document; parse_tree(serialize_tree(t)) == t."""
    payload = {
        "image_id": tree.canvas.image_id,
        "width": tree.canvas.width,
        "height": tree.canvas.height,
        "nodes": [
            {
                "id": node.node_id,
                "label": node.label,
                "parent": None if node.parent_id == ROOT_ID else node.parent_id,
                "rle": node.mask.to_rle(),
            }
            for node in tree.nodes.values()
        ],
    }
    return json.dumps(payload, separators=(",", ":"))


def iter_corpus(path: str | Path) -> Iterator[OpenTree]:
    """Stream trees from a JSONL corpus file, enforcing unique image ids."""
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                tree = parse_tree(line)
            except (SchemaError, ValidationError) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc
            if tree.canvas.image_id in seen:
                raise CorpusError(
                    f"{path}:{lineno}: duplicate image_id "
                    f"'{tree.canvas.image_id}'")
            seen.add(tree.canvas.image_id)
            yield tree


def write_corpus(trees: Iterable[OpenTree], path: str | Path) -> int:
    """Write a JSONL corpus atomically (temp file + rename). Returns the count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8") as fh:
        for tree in trees:
            fh.write(serialize_tree(tree))
            fh.write("\n")
            n += 1
    tmp.replace(path)
    return n


def corpus_index(path: str | Path) -> dict[str, str]:
    """Map image_id to raw document line without decoding masks.

    Used to pair prediction and reference corpora cheaply; full validation
    happens when the lines are actually parsed.
    """
    index: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(
                    f"{path}:{lineno}: malformed JSON at byte offset "
                    f"{exc.pos}: {exc.msg}") from exc
            image_id = payload.get("image_id") if isinstance(payload, dict) else None
            if not isinstance(image_id, str):
                raise SchemaError(f"{path}:{lineno}: image_id must be a string")
            if image_id in index:
                raise CorpusError(f"{path}:{lineno}: duplicate image_id '{image_id}'")
            index[image_id] = line
    return index


def project_flat(tree: OpenTree) -> OpenTree:
    """Reattach every node directly under the artificial root.

    Masks and labels are untouched; this is how conventional flat
    segmentation references are compared against deep trees.
    """
    nodes = [InstanceNode(n.node_id, n.label, n.mask, ROOT_ID)
             for n in tree.nodes.values()]
    return OpenTree(tree.canvas, nodes)
