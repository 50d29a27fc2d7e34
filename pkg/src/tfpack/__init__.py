"""Pack vertex-disjoint subdivisions of a small pattern into near-regular graphs."""

from .finder import FinderBudget, NotFound, find_subdivision
from .generators import GenSpec, gen_lower_bound_gadget, gen_named, gen_random_regular, generate, named_pattern
from .graph_core import (
    HostGraph,
    Packing,
    PatternGraph,
    SubdivisionWitness,
    build_graph,
    read_edge_list,
    validate_packing,
    validate_witness,
    write_edge_list,
)
from .harness import ExperimentSpec, calibrate, run_experiment
from .oracle import OracleLimits, cross_check, enumerate_subdivisions, optimal_packing
from .packer import PackerConfig, pack_core, pack_full
from .partitioner import PartitionRequest, partition, split_V_W
from .path_cover import PathCover, build_path_cover

__version__ = "0.1.0"
