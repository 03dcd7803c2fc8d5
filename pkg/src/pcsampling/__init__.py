"""Reconstruction-aware sampling of point cloud attributes on KNN graphs."""

from .block import BlockPartition, octree_partition, rabs_sample
from .graph import SparseGraph, build_knn_graph, connected_components, graph_from_adjacency
from .metrics import psnr, psnr_rgb, psnr_y
from .operator import build_gram, build_q, build_z
from .pc_io import PointCloud, read_ply, rgb_to_yuv, write_ply, yuv_to_rgb
from .recon import glr_reconstruct, neumann_reconstruct
from .sampler import SamplingBudget, SamplingResult, rags_sample, random_sample, uniform_sample

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "PointCloud",
    "SamplingBudget",
    "SamplingResult",
    "SparseGraph",
    "build_gram",
    "build_knn_graph",
    "build_q",
    "build_z",
    "connected_components",
    "glr_reconstruct",
    "graph_from_adjacency",
    "neumann_reconstruct",
    "octree_partition",
    "psnr",
    "psnr_rgb",
    "psnr_y",
    "rabs_sample",
    "rags_sample",
    "random_sample",
    "read_ply",
    "rgb_to_yuv",
    "uniform_sample",
    "write_ply",
    "yuv_to_rgb",
    "__version__",
]
