"""Audit hook for class-probability vectors.

Forests, cascade layers, and ensemble predictions all emit (real, fake)
probability pairs. When a watch is active, every such pair produced
anywhere in the package is checked for non-negativity and unit sum, and
counted. The default state is off, in which case check_batch is a single
boolean test.

Usage:

    with probcheck.watch() as audit:
        model = train_ensemble(...)
        predict_ensemble(model, ...)
    print(audit.count)  # number of vectors that were checked
"""

import contextlib

import numpy as np

_active = None


class ProbAudit:
    """Counter for checked probability vectors."""

    def __init__(self, tol=1e-9):
        self.tol = tol
        self.count = 0


@contextlib.contextmanager
def watch(tol=1e-9):
    """Enable checking for the duration of the block."""
    global _active
    prev = _active
    audit = ProbAudit(tol)
    _active = audit
    try:
        yield audit
    finally:
        _active = prev


def check_batch(probs):
    """Validate an (n, 2) block of probability pairs if a watch is active.

    Raises AssertionError on the first violating row; passes the input
    through unchanged so it can wrap return statements.
    """
    if _active is None:
        return probs
    arr = np.asarray(probs)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.shape[1] % 2 != 0:
        raise AssertionError(f"probability block width {arr.shape[1]} is not a pair multiple")
    tol = _active.tol
    pairs = arr.reshape(arr.shape[0], -1, 2)
    sums = pairs.sum(axis=2)
    if not np.all(np.isfinite(pairs)):
        raise AssertionError("non-finite probability value")
    if np.any(pairs < -tol) or np.any(pairs > 1 + tol):
        raise AssertionError("probability component outside [0, 1]")
    if np.any(np.abs(sums - 1.0) > tol):
        worst = float(np.abs(sums - 1.0).max())
        raise AssertionError(f"probability pair sum off by {worst:.3e}")
    _active.count += int(pairs.shape[0] * pairs.shape[1])
    return probs
