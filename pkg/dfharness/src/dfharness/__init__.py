"""Deep Fingerprinting CNN harness over exported trace representations."""

__version__ = "0.1.0"

from .config import DfConfig, InputKind
from .data import UNMONITORED, load_dataset, read_labels, read_matrix
from .evaluate import PRPoint, evaluate_closed, evaluate_open, predict
from .model import DfModel, build_model
from .train import LabelCodec, TrainResult, load_checkpoint, train
