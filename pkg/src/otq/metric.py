"""Open Tree Quality scoring.

Per image, the score composes four stages:

1. one-to-one node matching by mask IoU with a TP threshold (``matching``),
2. matched-node quality: the TP-average of IoU times label similarity
   (``meanNQ``), with IoU-only (``MQ``) and label-only (``LQ``) diagnostics,
3. branch quality (``BQ``): the fraction of unordered TP pairs whose nearest
   matched common parents agree across the two TP skeletons,
4. tree quality ``TQ = BQ * |TP| / (|TP| + |FP|/2 + |FN|/2)`` and the final
   score ``OTQ = TQ * meanNQ``.

The TP skeleton of a tree keeps only TP nodes plus the artificial root.
Each TP node is re-parented by climbing its original ancestor chain one
level at a time: at the first ancestor level whose semantic identity (the
root-to-node label path) has TP member masks with positive pixel overlap,
the node attaches to the highest-IoU such mask; with no qualifying level it
attaches to the root.  Ties break toward the smaller node id.

With zero TP matches the per-image report is all zeros except the counts.
Corpus records average TQ/BQ/meanNQ/MQ/LQ per image (macro) or weight them
by TP and pair counts (micro); corpus OTQ is always the product of corpus
TQ and corpus meanNQ.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import CorpusError, ValidationError
from .labels import SimilarityProtocol, similarity
from .masks import intersection_area, iou
from .matching import MatchResult, match_trees
from .tree import ROOT_ID, OpenTree, corpus_index, parse_tree

METRIC_FIELDS = ("otq", "tq", "bq", "mean_nq", "mq", "lq")
COUNT_FIELDS = ("tp", "fp", "fn", "n_pairs")


@dataclass
class OtqReport:
    """Metric bundle for one image or a whole corpus."""

    otq: float
    tq: float
    bq: float
    mean_nq: float
    mq: float
    lq: float
    tp: int
    fp: int
    fn: int
    n_pairs: int
    image_id: str | None = None
    per_image: list["OtqReport"] | None = field(default=None, repr=False)

    def to_record(self) -> dict:
        record: dict = {}
        if self.image_id is not None:
            record["image_id"] = self.image_id
        for name in METRIC_FIELDS:
            record[name] = getattr(self, name)
        for name in COUNT_FIELDS:
            record[name] = getattr(self, name)
        return record

    def to_payload(self) -> dict:
        """Full report shape: {"corpus": {...}, "images": [...]}."""
        payload = {"corpus": self.to_record()}
        if self.per_image is not None:
            payload["images"] = [r.to_record() for r in self.per_image]
        return payload


@dataclass
class Skeleton:
    """Parent map over TP nodes plus the artificial root."""

    parent: dict[int, int]
    depth: dict[int, int]

    def lca(self, a: int, b: int) -> int:
        da, db = self.depth[a], self.depth[b]
        while da > db:
            a = self.parent[a]
            da -= 1
        while db > da:
            b = self.parent[b]
            db -= 1
        while a != b:
            a = self.parent[a]
            b = self.parent[b]
        return a


def matched_node_quality(match: MatchResult, pred: OpenTree, ref: OpenTree,
                         proto: SimilarityProtocol) -> tuple[float, float, float]:
    """(meanNQ, MQ, LQ) over TP pairs; all zeros with no TP matches."""
    if not match.tp:
        return 0.0, 0.0, 0.0
    nq_sum = mq_sum = lq_sum = 0.0
    for pred_id, ref_id, pair_iou in match.tp:
        sim = similarity(proto, pred.nodes[pred_id].label, ref.nodes[ref_id].label)
        nq_sum += pair_iou * sim
        mq_sum += pair_iou
        lq_sum += sim
    n = len(match.tp)
    return nq_sum / n, mq_sum / n, lq_sum / n


def build_skeleton(tree: OpenTree, match: MatchResult, side: str) -> Skeleton:
    """TP skeleton of one side ("pred" or "ref") under the climbing rule."""
    if side == "pred":
        tp_ids = [p for p, _, _ in match.tp]
    elif side == "ref":
        tp_ids = [r for _, r, _ in match.tp]
    else:
        raise ValueError(f"side must be 'pred' or 'ref', got {side!r}")
    tp_ids = sorted(tp_ids)

    # Semantic identity of a node is its root-to-node label path; a TP node
    # can only attach to members of a strictly shorter path, so the result
    # is acyclic by construction.
    groups: dict[tuple[str, ...], list[int]] = {}
    for nid in tp_ids:
        groups.setdefault(tree.label_paths[nid], []).append(nid)

    parent: dict[int, int] = {ROOT_ID: ROOT_ID}
    for nid in tp_ids:
        mask = tree.nodes[nid].mask
        chosen = ROOT_ID
        for anc in tree.ancestors(nid):
            candidates = groups.get(tree.label_paths[anc])
            if not candidates:
                continue
            best_id = None
            best_iou = 0.0
            for cand in candidates:
                if intersection_area(mask, tree.nodes[cand].mask) == 0:
                    continue
                cand_iou = iou(mask, tree.nodes[cand].mask)
                if best_id is None or cand_iou > best_iou or (
                        cand_iou == best_iou and cand < best_id):
                    best_id, best_iou = cand, cand_iou
            if best_id is not None:
                chosen = best_id
                break
        parent[nid] = chosen

    depth: dict[int, int] = {ROOT_ID: 0}
    # Skeleton parents always have a strictly shorter label path, so original
    # depth order resolves every parent before its children.
    for nid in sorted(tp_ids, key=lambda n: tree.depths[n]):
        depth[nid] = depth[parent[nid]] + 1
    return Skeleton(parent=parent, depth=depth)


def branch_quality(skel_pred: Skeleton, skel_ref: Skeleton,
                   match: MatchResult) -> float:
    """Fraction of unordered TP pairs with agreeing nearest matched common
    parents; 1.0 with fewer than two TP nodes."""
    tp = sorted(match.tp)
    if len(tp) < 2:
        return 1.0
    ref_to_pred = {r: p for p, r, _ in tp}
    ref_to_pred[ROOT_ID] = ROOT_ID
    consistent = 0
    total = 0
    for i in range(len(tp)):
        for j in range(i + 1, len(tp)):
            lca_ref = skel_ref.lca(tp[i][1], tp[j][1])
            lca_pred = skel_pred.lca(tp[i][0], tp[j][0])
            if ref_to_pred[lca_ref] == lca_pred:
                consistent += 1
            total += 1
    return consistent / total


def tree_quality(bq: float, match: MatchResult) -> float:
    """BQ scaled by the PQ-style recovery ratio; 0 with no TP matches."""
    tp, fp, fn = match.tp_count, match.fp_count, match.fn_count
    if tp == 0:
        return 0.0
    return bq * tp / (tp + 0.5 * fp + 0.5 * fn)


def evaluate_image(pred: OpenTree, ref: OpenTree, proto: SimilarityProtocol,
                   tau: float = 0.5) -> OtqReport:
    """Full per-image OTQ report for a prediction against its reference."""
    if pred.canvas != ref.canvas:
        raise ValidationError(
            f"canvas mismatch: {pred.canvas} vs {ref.canvas}")
    match = match_trees(pred, ref, tau)
    image_id = ref.canvas.image_id
    tp, fp, fn = match.tp_count, match.fp_count, match.fn_count
    n_pairs = tp * (tp - 1) // 2
    if tp == 0:
        return OtqReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                         tp=tp, fp=fp, fn=fn, n_pairs=n_pairs, image_id=image_id)
    mean_nq, mq, lq = matched_node_quality(match, pred, ref, proto)
    skel_pred = build_skeleton(pred, match, "pred")
    skel_ref = build_skeleton(ref, match, "ref")
    bq = branch_quality(skel_pred, skel_ref, match)
    tq = tree_quality(bq, match)
    return OtqReport(otq=tq * mean_nq, tq=tq, bq=bq, mean_nq=mean_nq,
                     mq=mq, lq=lq, tp=tp, fp=fp, fn=fn, n_pairs=n_pairs,
                     image_id=image_id)


def aggregate_reports(records: list[OtqReport],
                      aggregate: str = "macro") -> OtqReport:
    """Corpus record from per-image records (sorted by image_id first).

    macro: unweighted per-image means of TQ/BQ/meanNQ/MQ/LQ.
    micro: meanNQ/MQ/LQ weighted by TP counts, BQ by TP pair counts, and the
    recovery ratio computed from summed counts.
    Either way the corpus OTQ is corpus TQ times corpus meanNQ, and counts
    are summed.
    """
    records = sorted(records, key=lambda r: r.image_id or "")
    tp = sum(r.tp for r in records)
    fp = sum(r.fp for r in records)
    fn = sum(r.fn for r in records)
    n_pairs = sum(r.n_pairs for r in records)
    if not records:
        return OtqReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0, per_image=[])
    if aggregate == "macro":
        n = len(records)
        tq = sum(r.tq for r in records) / n
        bq = sum(r.bq for r in records) / n
        mean_nq = sum(r.mean_nq for r in records) / n
        mq = sum(r.mq for r in records) / n
        lq = sum(r.lq for r in records) / n
    elif aggregate == "micro":
        if tp > 0:
            mean_nq = sum(r.mean_nq * r.tp for r in records) / tp
            mq = sum(r.mq * r.tp for r in records) / tp
            lq = sum(r.lq * r.tp for r in records) / tp
            if n_pairs > 0:
                bq = sum(r.bq * r.n_pairs for r in records) / n_pairs
            else:
                bq = 1.0
            tq = bq * tp / (tp + 0.5 * fp + 0.5 * fn)
        else:
            mean_nq = mq = lq = bq = tq = 0.0
    else:
        raise ValueError(f"aggregate must be 'macro' or 'micro', got {aggregate!r}")
    return OtqReport(otq=tq * mean_nq, tq=tq, bq=bq, mean_nq=mean_nq,
                     mq=mq, lq=lq, tp=tp, fp=fp, fn=fn, n_pairs=n_pairs,
                     per_image=records)


def evaluate_corpus(pairs: Iterable[tuple[OpenTree, OpenTree]],
                    proto: SimilarityProtocol, tau: float = 0.5,
                    aggregate: str = "macro") -> OtqReport:
    """Evaluate (prediction, reference) tree pairs and aggregate."""
    records: list[OtqReport] = []
    seen: set[str] = set()
    for pred, ref in pairs:
        if ref.canvas.image_id in seen:
            raise CorpusError(f"duplicate image_id '{ref.canvas.image_id}'")
        seen.add(ref.canvas.image_id)
        records.append(evaluate_image(pred, ref, proto, tau))
    return aggregate_reports(records, aggregate)


_WORKER_PROTO: SimilarityProtocol | None = None
_WORKER_TAU: float = 0.5


def _init_worker(proto: SimilarityProtocol, tau: float) -> None:
    global _WORKER_PROTO, _WORKER_TAU
    _WORKER_PROTO = proto
    _WORKER_TAU = tau


def _evaluate_lines(task: tuple[str, str]) -> OtqReport:
    pred_line, ref_line = task
    assert _WORKER_PROTO is not None
    return evaluate_image(parse_tree(pred_line), parse_tree(ref_line),
                          _WORKER_PROTO, _WORKER_TAU)


def evaluate_corpus_files(pred_path: str | Path, ref_path: str | Path,
                          proto: SimilarityProtocol, tau: float = 0.5,
                          jobs: int = 1, aggregate: str = "macro") -> OtqReport:
    """Evaluate two JSONL corpora paired by image_id.

    The image id sets of the two files must match exactly.  With jobs > 1,
    images are scored in a process pool; the aggregate is reduced in sorted
    image_id order, so the report is identical at any parallelism level.
    """
    pred_index = corpus_index(pred_path)
    ref_index = corpus_index(ref_path)
    missing_ref = sorted(set(pred_index) - set(ref_index))
    missing_pred = sorted(set(ref_index) - set(pred_index))
    if missing_ref or missing_pred:
        parts = []
        if missing_ref:
            parts.append(f"predictions without references: {missing_ref[:10]}")
        if missing_pred:
            parts.append(f"references without predictions: {missing_pred[:10]}")
        raise CorpusError("; ".join(parts))

    tasks = [(pred_index[image_id], ref_index[image_id])
             for image_id in sorted(pred_index)]
    if jobs <= 1 or len(tasks) <= 1:
        _init_worker(proto, tau)
        records = [_evaluate_lines(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (jobs * 4))
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(proto, tau)) as pool:
            records = list(pool.map(_evaluate_lines, tasks, chunksize=chunk))
    return aggregate_reports(records, aggregate)


def report_to_json(report: OtqReport) -> str:
    return json.dumps(report.to_payload(), indent=2, sort_keys=True) + "\n"


def report_to_csv(report: OtqReport) -> str:
    """Per-image rows plus a final aggregate row labeled ``corpus``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("image_id",) + METRIC_FIELDS + COUNT_FIELDS)
    for rec in report.per_image or []:
        writer.writerow([rec.image_id]
                        + [repr(getattr(rec, f)) for f in METRIC_FIELDS]
                        + [getattr(rec, f) for f in COUNT_FIELDS])
    writer.writerow(["corpus"]
                    + [repr(getattr(report, f)) for f in METRIC_FIELDS]
                    + [getattr(report, f) for f in COUNT_FIELDS])
    return buf.getvalue()


def report_to_table(report: OtqReport) -> str:
    """Aligned text table of the corpus record and per-image records."""
    header = ("image_id",) + tuple(f.upper() for f in METRIC_FIELDS) + COUNT_FIELDS
    rows = []
    for rec in (report.per_image or []) + [report]:
        name = rec.image_id if rec.image_id is not None else "corpus"
        rows.append([name] + [f"{getattr(rec, f):.4f}" for f in METRIC_FIELDS]
                    + [str(getattr(rec, f)) for f in COUNT_FIELDS])
    widths = [max(len(str(h)), *(len(r[i]) for r in rows))
              for i, h in enumerate(header)]
    lines = ["  ".join(str(h).ljust(widths[i]) for i, h in enumerate(header))]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(row))))
    return "\n".join(lines) + "\n"
