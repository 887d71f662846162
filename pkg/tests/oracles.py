"""Independent brute-force implementations used to cross-check the library.

Everything here is deliberately naive: assignments by exhaustive
enumeration, depths by BFS over an adjacency list, LCA by ancestor-set
intersection, skeletons by a direct reading of the climbing rule on full
mask arrays.  Nothing imports the modules under test beyond data types.
"""

from __future__ import annotations

import itertools

import numpy as np

from otq import ROOT_ID, OpenTree


def brute_force_max_total(weights: np.ndarray) -> int:
    """Maximum total weight over all one-to-one assignments (integer matrix)."""
    n_rows, n_cols = weights.shape
    best = 0
    if n_rows <= n_cols:
        for perm in itertools.permutations(range(n_cols), n_rows):
            total = sum(int(weights[i, perm[i]]) for i in range(n_rows))
            best = max(best, total)
    else:
        for perm in itertools.permutations(range(n_rows), n_cols):
            total = sum(int(weights[perm[j], j]) for j in range(n_cols))
            best = max(best, total)
    return best


def bfs_depths(tree: OpenTree) -> dict[int, int]:
    """Depths recomputed by BFS over an adjacency list built from scratch."""
    children: dict[int, list[int]] = {ROOT_ID: []}
    for nid, node in tree.nodes.items():
        children.setdefault(nid, [])
        children.setdefault(node.parent_id, []).append(nid)
    depths = {ROOT_ID: 0}
    frontier = [ROOT_ID]
    while frontier:
        nxt = []
        for cur in frontier:
            for kid in children[cur]:
                depths[kid] = depths[cur] + 1
                nxt.append(kid)
        frontier = nxt
    del depths[ROOT_ID]
    return depths


def _label_path(tree: OpenTree, nid: int) -> tuple[str, ...]:
    labels = []
    while nid != ROOT_ID:
        labels.append(tree.nodes[nid].label)
        nid = tree.nodes[nid].parent_id
    return tuple(reversed(labels))


def _pixel_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    return inter / union if union else 0.0


def naive_skeleton_parents(tree: OpenTree, tp_ids: set[int]) -> dict[int, int]:
    """Skeleton parents by direct rule application on full arrays."""
    parents: dict[int, int] = {}
    for nid in tp_ids:
        pixels = tree.nodes[nid].mask.pixels
        chosen = ROOT_ID
        anc = tree.nodes[nid].parent_id
        while anc != ROOT_ID:
            anc_path = _label_path(tree, anc)
            best = None
            for cand in sorted(tp_ids):
                if _label_path(tree, cand) != anc_path:
                    continue
                cand_pixels = tree.nodes[cand].mask.pixels
                if not np.any(pixels & cand_pixels):
                    continue
                score = _pixel_iou(pixels, cand_pixels)
                if best is None or score > best[0]:
                    best = (score, cand)
            if best is not None:
                chosen = best[1]
                break
            anc = tree.nodes[anc].parent_id
        parents[nid] = chosen
    return parents


def ancestor_set_lca(parents: dict[int, int], a: int, b: int) -> int:
    """LCA by intersecting root-paths; deepest common vertex wins."""

    def chain(x: int) -> list[int]:
        out = [x]
        while x != ROOT_ID:
            x = parents[x]
            out.append(x)
        return out

    chain_a = chain(a)
    common = set(chain_a) & set(chain(b))
    for x in chain_a:  # ordered deepest-first
        if x in common:
            return x
    return ROOT_ID


def naive_bq(pred: OpenTree, ref: OpenTree,
             tp_pairs: list[tuple[int, int]]) -> float:
    """Branch quality via naive skeletons and all-pairs ancestor-set LCA."""
    if len(tp_pairs) < 2:
        return 1.0
    pred_parents = naive_skeleton_parents(pred, {p for p, _ in tp_pairs})
    ref_parents = naive_skeleton_parents(ref, {r for _, r in tp_pairs})
    ref_to_pred = {r: p for p, r in tp_pairs}
    ref_to_pred[ROOT_ID] = ROOT_ID
    consistent = total = 0
    for (p1, r1), (p2, r2) in itertools.combinations(tp_pairs, 2):
        lca_ref = ancestor_set_lca(ref_parents, r1, r2)
        lca_pred = ancestor_set_lca(pred_parents, p1, p2)
        consistent += ref_to_pred[lca_ref] == lca_pred
        total += 1
    return consistent / total


def tree_lca(tree: OpenTree, a: int, b: int) -> int:
    """LCA in the original tree (not a skeleton)."""
    parents = {nid: node.parent_id for nid, node in tree.nodes.items()}
    return ancestor_set_lca(parents, a, b)


def root_lca_pair_fraction(ref: OpenTree, tp_ref_ids: list[int]) -> float:
    """Fraction of unordered TP pairs whose reference-tree LCA is the root."""
    if len(tp_ref_ids) < 2:
        return 1.0
    at_root = total = 0
    for a, b in itertools.combinations(sorted(tp_ref_ids), 2):
        at_root += tree_lca(ref, a, b) == ROOT_ID
        total += 1
    return at_root / total
