"""The gated prediction workflow: score the image, pass or discard, and
diagnose only what passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierModel, input_batch, predict_batch
from .decode import load_planar
from .imaging import normalize_colors, resize_bilinear
from .quality import IqaModel, gate, score_tensor

REJECTED = "rejected"
DIAGNOSED = "diagnosed"


@dataclass
class WorkflowResult:
    status: str
    score: float
    threshold: float
    class_name: str | None = None
    probabilities: np.ndarray | None = None

    def __post_init__(self):
        if self.status == REJECTED and self.class_name is not None:
            raise ValueError("a rejected result cannot carry a diagnosis")


def run_workflow(image, iqa_model: IqaModel, classifier_model: ClassifierModel,
                 threshold: float) -> WorkflowResult:
    """Decode, preprocess once, gate, and (on pass) classify.

    ``image`` is a path or an already decoded planar image.  Both stages
    resize the same normalized image to their own input sizes, so neither
    ever sees a differently preprocessed pixel.
    """
    planar = image if isinstance(image, np.ndarray) else load_planar(image)
    shared = normalize_colors(planar)

    iqa_in = resize_bilinear(shared, iqa_model.input_size, iqa_model.input_size)
    score = float(score_tensor(iqa_model, input_batch(iqa_in[None]))[0])
    decision = gate(score, threshold)
    if not decision.passed:
        return WorkflowResult(REJECTED, decision.score, decision.threshold)

    cls_in = resize_bilinear(shared, classifier_model.input_size,
                             classifier_model.input_size)
    indices, probs = predict_batch(classifier_model, input_batch(cls_in[None]))
    name = classifier_model.registry.names[int(indices[0])]
    return WorkflowResult(DIAGNOSED, decision.score, decision.threshold,
                          name, probs[0])
