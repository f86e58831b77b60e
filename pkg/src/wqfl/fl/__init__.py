"""Learning stack: data, the MLP, local updates and aggregation."""
from .data import (DATA_DIR_ENV, DataShard, Dataset, aggregation_weights, load_mnist,
                   make_synthetic, partition, read_idx, write_idx)
from .model import MLP
from .schedule import epsilon_schedule
from .train import AdamState, TrainerConfig, aggregate, evaluate, local_update

__all__ = [
    "DATA_DIR_ENV", "AdamState", "DataShard", "Dataset", "MLP", "TrainerConfig", "aggregate",
    "aggregation_weights", "epsilon_schedule", "evaluate", "load_mnist", "local_update",
    "make_synthetic", "partition", "read_idx", "write_idx",
]
