# Instance reweighting and large-error selection.
#
# A tiny clean set is scored by a pretend model; weights concentrate on the
# examples it keeps getting wrong, and those examples are what the rule
# discovery stage looks at next.

import math

from ruleboost import (
    Dataset,
    init_weights,
    make_instance,
    model_coefficient,
    top_n_large_error,
    update_weights,
    weighted_error,
)

clean = Dataset(
    tuple(
        make_instance(f"doc{i}", text, 256, gold_label=label)
        for i, (text, label) in enumerate(
            [
                ("market rally lifts tech shares", 1),
                ("quarterly earnings beat forecasts", 1),
                ("midfielder scores twice in derby", 2),
                ("champions league final tonight", 2),
                ("court rules on merger appeal", 1),
                ("sprinter breaks national record", 2),
            ]
        )
    ),
    "clean_labeled",
)
gold = [inst.gold_label for inst in clean]

state = init_weights(len(clean))
print("initial weights:", [round(w, 3) for w in state.weights])

# Round 1: the model confuses the two court/record documents.
predictions = [1, 1, 2, 2, 2, 1]
err = weighted_error(state, predictions, gold)
alpha = model_coefficient(err, k=2)
print(f"round 1: err={err:.3f} alpha={alpha:.3f}")

state = update_weights(state, alpha, predictions, gold)
print("after update:", [round(w, 3) for w in state.weights])

# The same two documents stay wrong; their weight keeps growing.
state = update_weights(state, alpha, predictions, gold)
print("after round 2:", [round(w, 3) for w in state.weights])

hard = top_n_large_error(state, clean, predictions, n=2)
print("large-error instances:", [inst.id for inst in hard])
print("  texts:", [inst.text for inst in hard])

# Sanity: the two-class coefficient is the classic log((1-err)/err).
for e in (0.1, 0.3, 0.5):
    print(f"coefficient({e}, K=2) = {model_coefficient(e, 2):.4f}"
          f"  (classic {math.log((1 - e) / e):.4f})")
