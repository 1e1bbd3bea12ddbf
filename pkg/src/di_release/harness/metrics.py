"""Utility and privacy metrics of a release."""

from __future__ import annotations

import numpy as np
from sklearn.metrics import confusion_matrix

from di_release.errors import ContractViolationError, DomainError


def nrmse(y_set: np.ndarray, z_set: np.ndarray) -> float:
    """Normalized root mean-square error over an evaluation set.

    .. math::

        \\sqrt{\\sum\\|y - z\\|^2 \\Big/ \\sum\\|y\\|^2}

    >>> y = np.array([1.0, 2.0, 3.0])
    >>> nrmse(y, y), nrmse(y, np.zeros(3)), nrmse(y, 2 * y)
    (0.0, 1.0, 1.0)
    """
    if y_set.shape != z_set.shape:
        msg = f"Cannot compare signals of shapes {y_set.shape} and {z_set.shape}"
        raise ContractViolationError(msg)
    energy = float(np.sum(y_set**2))
    if energy == 0:
        msg = "NRMSE is undefined for an all-zero reference signal"
        raise DomainError(msg)
    return float(np.sqrt(np.sum((y_set - z_set) ** 2) / energy))


def predicted_labels(probabilities: np.ndarray) -> np.ndarray:
    """Most likely label per time step of predictions with shape :code:`(T, |X|, B)`."""
    return np.argmax(probabilities, axis=1)


def balanced_accuracy(
    pred_labels: np.ndarray, true_labels: np.ndarray, alphabet_size: int
) -> float:
    """Mean recall over the classes that occur in the truth, in percent.

    All time steps of all sequences count as separate predictions.

    >>> truth = np.array([0] * 9 + [1])
    >>> balanced_accuracy(np.zeros(10, dtype=int), truth, alphabet_size=2)
    50.0
    """
    pred = np.ravel(pred_labels)
    true = np.ravel(true_labels)
    if true.size == 0:
        msg = "Cannot compute the accuracy of an empty set of predictions"
        raise ContractViolationError(msg)
    if pred.shape != true.shape:
        msg = f"Got {pred.size} predictions for {true.size} labels"
        raise ContractViolationError(msg)
    for labels in (pred, true):
        if labels.min() < 0 or labels.max() >= alphabet_size:
            msg = f"Labels must lie in [0, {alphabet_size})"
            raise ContractViolationError(msg)
    matrix = confusion_matrix(true, pred, labels=np.arange(alphabet_size))
    support = matrix.sum(axis=1)
    present = support > 0
    recall = np.diag(matrix)[present] / support[present]
    return float(100 * recall.mean())


def majority_vote(labels: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Most frequent label of each sequence in an array of shape :code:`(T, B)`.

    Ties go to the smallest label.

    >>> majority_vote(np.array([[0, 1], [1, 1], [1, 0]]), alphabet_size=2)
    array([1, 1])
    """
    counts = np.stack([np.sum(labels == c, axis=0) for c in range(alphabet_size)])
    return np.argmax(counts, axis=0)


def sequence_accuracy(
    pred_labels: np.ndarray, true_labels: np.ndarray, alphabet_size: int
) -> float:
    """Balanced accuracy of the majority vote over each sequence, in percent."""
    return balanced_accuracy(
        majority_vote(pred_labels, alphabet_size),
        majority_vote(true_labels, alphabet_size),
        alphabet_size,
    )
