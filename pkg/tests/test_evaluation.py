"""Tests for neuron labeling, voting, scoring and receptive-field analytics."""

from dataclasses import replace

import numpy as np
import pytest

from app.analytics.receptive_fields import class_prototypes, field_similarity, summarize_fields
from app.core.config import load_config
from app.learning.evaluation import (
    ABSTAIN,
    UNASSIGNED,
    NeuronLabels,
    assign_labels,
    evaluate,
    label_neurons,
    predict,
    score,
)
from app.network.engine import Topology, build_network


class TestAssignLabels:
    def test_strongest_mean_response(self):
        """Each neuron takes the class with the highest mean count."""
        counts = np.array([[5, 0, 1], [4, 0, 0], [0, 3, 2], [0, 5, 0]])
        labels = assign_labels(counts, np.array([0, 0, 1, 1]))
        assert labels.labels.tolist() == [0, 1, 1]
        assert labels.classes == (0, 1)

    def test_silent_neuron_unassigned(self):
        """A neuron that never fired gets no label."""
        counts = np.array([[2, 0], [0, 0]])
        labels = assign_labels(counts, np.array([3, 4]))
        assert labels.labels.tolist() == [3, UNASSIGNED]
        assert labels.assigned == 1

    def test_tie_takes_lowest_class(self):
        """Equal mean responses resolve to the lowest class id."""
        counts = np.array([[2], [2]])
        assert assign_labels(counts, np.array([7, 2])).labels.tolist() == [2]

    def test_no_samples(self):
        with pytest.raises(ValueError):
            assign_labels(np.zeros((0, 3)), np.array([]))


class TestPredict:
    LABELS = NeuronLabels(labels=np.array([0, 0, 1, UNASSIGNED]), classes=(0, 1))

    def test_summed_votes(self):
        """The class with the most spikes from its neurons wins."""
        assert predict(np.array([1, 1, 3, 9]), self.LABELS) == 1

    def test_silence_abstains(self):
        """No spikes at all is an abstention."""
        assert predict(np.zeros(4), self.LABELS) == ABSTAIN

    def test_only_unassigned_abstains(self):
        """Spikes from unlabeled neurons carry no vote."""
        assert predict(np.array([0, 0, 0, 4]), self.LABELS) == ABSTAIN

    def test_tie_takes_lowest_class(self):
        assert predict(np.array([1, 1, 2, 0]), self.LABELS) == 0


class TestScore:
    def test_abstentions_count_as_errors(self):
        """Accuracy divides by every sample, abstained or not."""
        result = score([0, ABSTAIN, 1, 1], [0, 0, 1, 0], classes=(0, 1))
        assert result.accuracy == pytest.approx(0.5)
        assert result.abstentions == 1
        assert result.per_class == {0: pytest.approx(1 / 3), 1: 1.0}
        assert result.n_samples == 4

    def test_confusion_has_abstain_column(self):
        """Rows are true classes; the last column collects abstentions."""
        result = score([0, ABSTAIN, 1, 1], [0, 0, 1, 0], classes=(0, 1))
        assert result.confusion.tolist() == [[1, 1, 1], [0, 1, 0]]

    def test_class_without_samples(self):
        """A class with no test samples scores 0."""
        result = score([0], [0], classes=(0, 1))
        assert result.per_class[1] == 0.0


class TestFrozenEvaluation:
    def test_labeling_leaves_network_untouched(self):
        """Labeling presentations change neither weights nor thresholds."""
        cfg = load_config()
        net = build_network(Topology(n_input=9, n_exc=3), replace(cfg.snn, input_gain=0.3), cfg.neuron, 4)
        net.theta[:] = [0.01, 0.02, 0.0]
        weights, theta = net.weights.copy(), net.theta.copy()
        enc = replace(cfg.encoding, presentation_time=0.02, rest_time=0.005)
        images = np.full((2, 9), 255, dtype=np.uint8)
        labels = label_neurons(net, images, np.array([0, 1]), enc)
        np.testing.assert_array_equal(net.weights, weights)
        np.testing.assert_array_equal(net.theta, theta)
        assert labels.labels.shape == (3,)

    def test_evaluation_keeps_no_events(self):
        """Frozen presentations fire but leave the event log as it was."""
        cfg = load_config()
        net = build_network(Topology(n_input=9, n_exc=3), replace(cfg.snn, input_gain=0.3), cfg.neuron, 4)
        net.events.record(0, "exc", np.array([1]))
        enc = replace(cfg.encoding, presentation_time=0.1, rest_time=0.005)
        images = np.full((2, 9), 255, dtype=np.uint8)
        labels = label_neurons(net, images, np.array([0, 1]), enc)
        evaluate(net, labels, images, np.array([0, 1]), enc)
        assert net.fired_count.sum() > 0
        assert [(e.layer, e.index) for e in net.events.events()] == [("exc", 1)]


class TestReceptiveFields:
    def test_prototypes(self):
        """Class prototypes are mean images scaled to [0, 1]."""
        images = np.array([[255, 0], [0, 0], [0, 255]])
        protos = class_prototypes(images, np.array([0, 0, 1]), (0, 1))
        np.testing.assert_allclose(protos, [[0.5, 0.0], [0.0, 1.0]])

    def test_missing_class(self):
        with pytest.raises(ValueError, match="class 2"):
            class_prototypes(np.zeros((2, 4)), np.array([0, 1]), (0, 2))

    def test_matching_fields_dominate(self):
        """Weights equal to a prototype are most similar to that class."""
        protos = np.array([[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]])
        weights = np.array([[0.9, 0.1, 0.0], [0.0, 0.8, 0.1], [0.1, 0.9, 0.0], [1.0, 0.0, 0.2]])
        sim = field_similarity(weights, protos)
        assert sim.shape == (3, 2)
        summary = summarize_fields(weights, protos, (0, 1))
        assert summary["dominant"] == [0, 1, 0]
        assert summary["dominant_counts"] == {0: 2, 1: 1}
        assert summary["mean_margin"] > 0
        assert summary["mean_weight"] == pytest.approx(weights.mean())
