# Pseudo-label sharpening and KL self-training.
#
# Sharpening squares the predicted probabilities and corrects by the batch
# class mass, peaking confident predictions; self-training then pulls the
# model toward its own sharpened predictions on unlabeled data, propagating
# signal to tokens the weak labels never covered.

import numpy as np

from ruleboost import TrainConfig, self_train, sharpen_pseudo_labels, train_ce
from ruleboost.data import Dataset, LabelSpace, WeakLabelRecord, make_instance
from ruleboost.learner import predict_labels, to_design_matrix

probs = np.array([[0.9, 0.1], [0.5, 0.5], [0.6, 0.4]])
print("before sharpening:\n", probs)
print("after sharpening:\n", np.round(sharpen_pseudo_labels(probs), 3))

# Weak labels only ever mention "alpha"/"beta" tokens; the unlabeled pool
# pairs them with "gamma"/"delta" siblings the weak set never saw.
labels = LabelSpace(("one", "two"))
SPACE = 256
weak_rows = [(f"w{i}", "alpha common", 1) for i in range(8)]
weak_rows += [(f"v{i}", "beta common", 2) for i in range(8)]
weak = Dataset(
    tuple(make_instance(i, t, SPACE) for i, t, _ in weak_rows),
    "weak_labeled",
    {i: WeakLabelRecord(i, label, "seed", 1.0, 0) for i, _, label in weak_rows},
)
unlabeled = Dataset(
    tuple(
        make_instance(f"u{i}", text, SPACE)
        for i, text in enumerate(["alpha gamma", "alpha gamma", "beta delta", "beta delta"])
    ),
    "unlabeled",
)
test = Dataset(
    (
        make_instance("t0", "gamma alone", SPACE, gold_label=1),
        make_instance("t1", "delta alone", SPACE, gold_label=2),
    ),
    "dev",
)

cfg = TrainConfig(learning_rate=1.0, epochs=30, batch_size=8, l2=0.0,
                  self_train_epochs=25, seed=0)
model = train_ce(weak, cfg, labels)
x_test = to_design_matrix(test.instances, SPACE)
print("\nbefore self-training, predictions on unseen-token docs:",
      predict_labels(model, x_test))

refined = self_train(model, unlabeled, cfg)
print("after self-training:                                  ",
      predict_labels(refined, x_test))
print("(gamma/delta were never weak-labeled; co-occurrence with alpha/beta "
      "taught the refined model what they mean)")
