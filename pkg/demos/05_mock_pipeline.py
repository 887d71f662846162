"""Drive the geometric annotation pipeline with scripted mocks.

Writes the scene script used by ``otq pipeline --script`` to
demos/fixtures/scene.json, runs the same decomposition in-process, and
prints the semantic tree (with residual regions) plus the materialized
instance tree.
"""

import json
from pathlib import Path

from otq import (
    Mask,
    decompose,
    load_scene_script,
    materialize_instances,
    serialize_tree,
)

W, H = 48, 32
FIXTURE = Path(__file__).with_name("fixtures") / "scene.json"


def rle(row, col, h, w):
    return Mask.from_rect(W, H, row, col, h, w).to_rle()


script = {
    "image_id": "kitchen",
    "width": W,
    "height": H,
    "children": {
        "": ["counter", "cabinet"],
        "cabinet": ["door"],
        "cabinet/door": ["handle"],
    },
    "masks": {
        "counter": [{"rle": rle(20, 0, 10, 48), "confidence": 0.9}],
        "cabinet": [{"rle": rle(2, 4, 16, 16), "confidence": 0.8},
                    {"rle": rle(2, 26, 16, 16), "confidence": 0.75}],
        "door": [{"rle": rle(4, 6, 12, 10), "confidence": 0.7},
                 {"rle": rle(4, 28, 12, 10), "confidence": 0.7}],
        "handle": [{"rle": rle(9, 14, 3, 1), "confidence": 0.6},
                   {"rle": rle(9, 36, 3, 1), "confidence": 0.55}],
    },
}
FIXTURE.parent.mkdir(exist_ok=True)
FIXTURE.write_text(json.dumps(script, indent=2))
print(f"wrote {FIXTURE} (try: otq pipeline --script {FIXTURE})\n")

canvas, proposer, grounder, limits = load_scene_script(FIXTURE)
semantic = decompose(canvas, proposer, grounder, limits)

print("semantic tree (grouped instances per label):")


def show(sem_id: int) -> None:
    node = semantic.nodes[sem_id]
    flag = " [residual]" if node.is_residual else ""
    print(f"  {'  ' * node.depth}{node.label}: {len(node.masks)} mask(s), "
          f"union area {node.union_mask.area}{flag}")
    for child in semantic.children(sem_id):
        show(child)


for top in semantic.children(-1):
    show(top)
if semantic.root_others is not None:
    print(f"  scene residual: {semantic.root_others.area} px\n")

tree = materialize_instances(semantic)
print("materialized instance tree:")
for nid, node in tree.nodes.items():
    print(f"  {'  ' * tree.depth(nid)}{nid} {node.label} "
          f"(parent {node.parent_id}, area {node.mask.area})")
print()
print("one JSONL line, ready for evaluation:")
print(serialize_tree(tree)[:120] + "...")
