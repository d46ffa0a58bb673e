"""Evaluation metrics for onsets, beats, and tempo.

Annotation files are plain text with one event time (seconds) per line;
tempo annotations hold a single BPM value.
"""

import numpy as np

from .errors import (EmptyDetections, InvalidParameter, ParseError,
                     TypeMismatch, UnsortedInput)
from .pipeline import Processor, register


class MatchResult:
    """Outcome of matching detections against annotations."""

    def __init__(self, true_positives, false_positives, false_negatives,
                 pairs):
        self.true_positives = int(true_positives)
        self.false_positives = int(false_positives)
        self.false_negatives = int(false_negatives)
        self.pairs = list(pairs)

    def __repr__(self):
        return ("MatchResult(tp=%d, fp=%d, fn=%d)"
                % (self.true_positives, self.false_positives,
                   self.false_negatives))


def _checked_events(events, name):
    events = np.asarray(events, dtype=np.float64)
    if events.ndim != 1:
        raise TypeMismatch("%s must be a 1-D list of times" % name)
    if len(events) > 1 and np.any(np.diff(events) < 0):
        raise UnsortedInput("%s must be sorted ascending" % name)
    return events


def match_events(detections, annotations, window):
    """Greedy one-to-one matching of detections to annotations.

    Annotations are resolved in time order; each one takes the nearest
    unmatched detection within ``+-window`` seconds, ties broken toward
    the earlier detection.

    Returns
    -------
    MatchResult
        Pairs hold (detection time, annotation time).
    """
    if window < 0:
        raise InvalidParameter("window must be >= 0")
    detections = _checked_events(detections, "detections")
    annotations = _checked_events(annotations, "annotations")
    used = np.zeros(len(detections), dtype=bool)
    pairs = []
    for annotation in annotations:
        candidates = np.flatnonzero(
            ~used & (np.abs(detections - annotation) <= window))
        if candidates.size == 0:
            continue
        distances = np.abs(detections[candidates] - annotation)
        best = candidates[np.argmin(distances)]  # argmin takes the earlier tie
        used[best] = True
        pairs.append((float(detections[best]), float(annotation)))
    tp = len(pairs)
    return MatchResult(tp, len(detections) - tp, len(annotations) - tp, pairs)


def f_measure(result):
    """Precision, recall, and F1 of a match result.

    With no events on either side all three are 1; otherwise a measure
    with a zero denominator is 0.
    """
    tp = result.true_positives
    fp = result.false_positives
    fn = result.false_negatives
    if tp == fp == fn == 0:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def evaluate_onsets(detections, annotations, window=0.025):
    """Onset detection scores: (MatchResult, precision, recall, f1)."""
    result = match_events(detections, annotations, window)
    precision, recall, f1 = f_measure(result)
    return result, precision, recall, f1


def evaluate_beats(detections, annotations, window=0.07, cemgil_sigma=0.04):
    """Beat tracking scores.

    Returns
    -------
    (f1, cemgil)
        ``f1`` uses one-to-one matching at ``+-window`` seconds.
        ``cemgil`` is the Gaussian-weighted accuracy: every detection is
        paired with its nearest annotation and accuracies
        ``exp(-delta^2 / (2 sigma^2))`` are summed and divided by
        ``max(num_detections, num_annotations)``.
    """
    detections = _checked_events(detections, "detections")
    annotations = _checked_events(annotations, "annotations")
    _, _, f1 = f_measure(match_events(detections, annotations, window))
    if len(detections) == 0 and len(annotations) == 0:
        return f1, 1.0
    if len(detections) == 0 or len(annotations) == 0:
        return f1, 0.0
    deltas = detections[:, np.newaxis] - annotations
    nearest = np.abs(deltas).min(axis=1)
    accuracies = np.exp(-nearest ** 2 / (2.0 * cemgil_sigma ** 2))
    cemgil = accuracies.sum() / max(len(detections), len(annotations))
    return f1, float(cemgil)


TEMPO_FACTORS = (1.0, 2.0, 3.0, 0.5, 1.0 / 3.0)


def evaluate_tempo(detected, annotated_bpm, tolerance=0.04):
    """Tempo accuracies of the strongest detected tempo.

    Parameters
    ----------
    detected : list of (bpm, strength)
        Strongest first, as returned by tempo detection.
    annotated_bpm : float
    tolerance : float
        Relative tolerance.

    Returns
    -------
    (acc1, acc2)
        ``acc1``: within tolerance of the annotation. ``acc2``: within
        tolerance of 1x, 2x, 3x, 1/2x, or 1/3x the annotation.
    """
    detected = list(detected)
    if not detected:
        raise EmptyDetections("no detected tempi")
    if annotated_bpm <= 0:
        raise InvalidParameter("annotated_bpm must be positive")
    top = float(detected[0][0])
    acc1 = abs(top - annotated_bpm) <= tolerance * annotated_bpm
    acc2 = any(abs(top - factor * annotated_bpm)
               <= tolerance * factor * annotated_bpm
               for factor in TEMPO_FACTORS)
    return bool(acc1), bool(acc2)


def read_events(source):
    """Read one event time per line; blank lines are skipped."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source) as fh:
            lines = fh.read().splitlines()
    events = []
    for number, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            events.append(float(line.split()[0]))
        except ValueError as exc:
            raise ParseError("line %d: not an event time: %r"
                             % (number, line)) from exc
    return np.asarray(events)


@register
class EvaluatorProcessor(Processor):
    """Computes metric rows from (task, detections, annotations) inputs.

    ``process`` takes a mapping with keys ``task`` ("onsets", "beats" or
    "tempo"), ``detections`` and ``annotations`` and returns an ordered
    (column, value) row for the report table.
    """

    kind = "evaluator"

    def __init__(self, task="auto", window=0.025, beat_window=0.07,
                 cemgil_sigma=0.04, tolerance=0.04):
        if task not in ("auto", "onsets", "beats", "tempo"):
            raise InvalidParameter("unknown evaluation task %r" % (task,))
        if window < 0 or beat_window < 0:
            raise InvalidParameter("windows must be >= 0")
        if cemgil_sigma <= 0:
            raise InvalidParameter("cemgil_sigma must be positive")
        if tolerance < 0:
            raise InvalidParameter("tolerance must be >= 0")
        self._task = task
        self._window = float(window)
        self._beat_window = float(beat_window)
        self._cemgil_sigma = float(cemgil_sigma)
        self._tolerance = float(tolerance)

    def params(self):
        return {"task": self._task, "window": self._window,
                "beat_window": self._beat_window,
                "cemgil_sigma": self._cemgil_sigma,
                "tolerance": self._tolerance}

    def process(self, data):
        if not isinstance(data, dict):
            raise TypeMismatch("evaluator expects a mapping")
        task = self._task if self._task != "auto" else data.get("task")
        detections = data.get("detections")
        annotations = data.get("annotations")
        if task == "onsets":
            result, precision, recall, f1 = evaluate_onsets(
                detections, annotations, window=self._window)
            return [("tp", result.true_positives),
                    ("fp", result.false_positives),
                    ("fn", result.false_negatives),
                    ("precision", precision), ("recall", recall), ("f1", f1)]
        if task == "beats":
            f1, cemgil = evaluate_beats(detections, annotations,
                                        window=self._beat_window,
                                        cemgil_sigma=self._cemgil_sigma)
            return [("f1", f1), ("cemgil", cemgil)]
        if task == "tempo":
            acc1, acc2 = evaluate_tempo(detections, float(annotations),
                                        tolerance=self._tolerance)
            return [("acc1", float(acc1)), ("acc2", float(acc2))]
        raise InvalidParameter("unknown evaluation task %r" % (task,))
