"""Show why cut edges become self-loops when a graph is split into blocks.

On a path 0-1-2-3 split into blocks {0, 1} and {2, 3}, the cut sub-graphs see
nodes 1 and 2 as endpoints. Without self-loops both nodes of a block look
alike, so the choice falls to the lowest index. Keeping the lost edge weight
as a node weight makes each block operator equal to the matching rows of the
global one, and the better-connected inner nodes win.
"""

import numpy as np

from pcsampling import PointCloud, SamplingBudget, build_z, graph_from_adjacency, rabs_sample
from pcsampling.block import block_graph, octree_partition

a = np.zeros((4, 4))
for i in range(3):
    a[i, i + 1] = a[i + 1, i] = 1.0
g = graph_from_adjacency(a)
pc = PointCloud(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]), np.zeros((4, 3), np.uint8), depth=2)
part = octree_partition(pc, 2)

np.set_printoptions(precision=4, suppress=True)
print("global Z:\n", build_z(g).dense())
for loops in (False, True):
    zb = build_z(block_graph(g, part, 0, selfloops=loops), with_selfloops=True).dense()
    res = rabs_sample(pc, g, SamplingBudget(0.5, p=1), block_size=2, selfloops=loops)
    print(f"\nself-loops {'on' if loops else 'off'}: block {{0, 1}} operator\n", zb)
    print("selected:", sorted(res.indices.tolist()))
