"""Dataset statistics and flat-mask compatibility on a synthetic corpus.

Shows the scale/density summary, the depth-by-size-bin distribution (each
bin column sums to 100%), and the average-recall style compatibility report
of the corpus against an eroded copy of itself.
"""

from otq import DegradeSpec, compat_eval, corpus_stats, degrade_tree, synthetic_corpus

trees = list(synthetic_corpus(40, seed=5))
stats = corpus_stats(trees)
print(stats.render())

# Deeper levels hold the small masks, exactly like real part hierarchies.
xs_deep = stats.depth_by_bin["XS"]["3"] + stats.depth_by_bin["XS"]["4+"]
big_shallow = stats.depth_by_bin["M"]["1"] + stats.depth_by_bin["L"]["1"]
print(f"XS masks at depth >= 3: {xs_deep:.1f}%   "
      f"largest-bin masks at depth 1: {big_shallow:.1f}%\n")

worn = [degrade_tree(t, DegradeSpec("mask_erosion", 0.75, seed=1)) for t in trees]
report = compat_eval(worn, trees)
print("compatibility of an eroded copy against the original masks:")
print(report.render())
