"""Strassen-based computation of the Gram product C = A^T A.

Provides dense/packed matrix types with zero-copy quadrant views, a
recursive lower-triangle Gram algorithm with a rectangular Strassen
subroutine, exact multiplication counting, a process-tree scheduler, a
multiprocess runtime reproducing the tree's group-reduction
communication, and a benchmark CLI.
"""

from .bench import (BenchReport, gen_matrix, karp_flatt, run_bench, sweep_workers,
                    verify_gram, write_csv, write_json)
from .gram import (GramConfig, MultCounter, classical_gram, gram, gram_base,
                   gram_frobenius_error, gram_mult_count, gram_tolerance)
from .matrix import (DenseMatrix, MatrixView, PackedLowerTriangular, SplitDims,
                     add, load_matrix, pack_lower, read_binary_matrix,
                     read_text_matrix, split_dims, split_quadrants, sub,
                     transpose, write_binary_matrix, write_text_matrix)
from .runtime import (CommStats, CostModel, WorkerGroup, predict_comm_cost,
                      reduce_sum, run_parallel, stats_from_trace)
from .schedule import (GRAM, STRASSEN, TaskNode, TaskTree, build_tree, child_ranks,
                       helper_rounds, max_complete_levels, ranks_required,
                       tree_to_json)
from .strassen import (StrassenConfig, classical_matmul, strassen_matmul,
                       strassen_mult_count)

__version__ = "0.1.0"
