"""Kernel-based prediction of adverse reactions to drug combinations."""

from .core import (
    ContingencyTable,
    Drug,
    DrugCombination,
    DrugRegistry,
    EventRecord,
    KernelMatrix,
    LabeledInstance,
    Source,
    SymmetricMatrix,
    canonicalize,
)
from .dataset import PruneConfig, Preset, SynthConfig, build_dataset, mine, partition, synth_generate
from .estimators import CombinationKernel
from .exceptions import ComboKernelError, ComputationError, ValidationError
from .kernels import KernelFamily, KernelSpec, kernel_matrix, psd_repair, similarity_matrix
from .lsap import solve_lsap
from .pipeline import CvReport, PsdMode, RunConfig, cv_run, emit_report
from .sds import Fingerprint, SdsKind, sds_matrix
from .svm import PrecomputedKernelSVC, TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "CombinationKernel", "ComboKernelError", "ComputationError", "ContingencyTable", "CvReport",
    "Drug", "DrugCombination", "DrugRegistry", "EventRecord", "Fingerprint", "KernelFamily",
    "KernelMatrix", "KernelSpec", "LabeledInstance", "PrecomputedKernelSVC", "Preset", "PruneConfig",
    "PsdMode", "RunConfig", "SdsKind", "Source", "SymmetricMatrix", "SynthConfig", "TrainConfig",
    "ValidationError", "build_dataset", "canonicalize", "cv_run", "emit_report", "kernel_matrix",
    "mine", "partition", "psd_repair", "sds_matrix", "similarity_matrix", "solve_lsap",
    "synth_generate", "train",
]
