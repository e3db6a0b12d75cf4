"""Verification harness: history checking, probes, audits, step bounds."""

from .checker import DEFAULT_MAX_OPS, HistoryTooLargeError, check_linearizable
from .history import CompletedOp, MapSpec, Recorder, RegisterSpec
from .probes import progress_probe, torn_read_probe
from .stepping import CountingHook, StepController
from .stress import run_history, stress_linearizability

__all__ = [
    "DEFAULT_MAX_OPS",
    "HistoryTooLargeError",
    "check_linearizable",
    "CompletedOp",
    "MapSpec",
    "Recorder",
    "RegisterSpec",
    "progress_probe",
    "torn_read_probe",
    "CountingHook",
    "StepController",
    "run_history",
    "stress_linearizability",
]
