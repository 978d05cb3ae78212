# Soft rule matching: embedding cosine + predicted-vocabulary overlap.
#
# The combined score alpha*s_a + (1-alpha)*s_b decides whether a rule labels
# an instance; raising the threshold trades coverage for precision, which is
# exactly what the dev-set sweep below shows.

from ruleboost import (
    MatchConfig,
    apply_rules,
    embedding_similarity,
    make_instance,
    matching_score,
    sweep_sigma,
    vocab_similarity,
)
from ruleboost.data import Dataset, Rule, featurize
from ruleboost.rulegen import MaskPrediction


class TokenFiller:
    """Instance-side vocabulary: the first k distinct tokens, alphabetically."""

    def fill(self, prompt, source, k):
        toks = sorted(set(source.tokens))[:k]
        return [MaskPrediction(t, 0.5 / (j + 1)) for j, t in enumerate(toks)]


rule = Rule(
    id="sports-kw",
    template_id="news",
    mask_vocabulary=frozenset({"goal", "striker", "derby"}),
    label=2,
    source_instance_id="seed",
    iteration=0,
    status="accepted",
)

doc = make_instance("d1", "late goal wins the derby for the hosts", 256)
e_rule = featurize(sorted(rule.mask_vocabulary), 256)
s_a = embedding_similarity(doc.features, e_rule)
v_u = {p.token for p in TokenFiller().fill("", doc, 4)}
s_b = vocab_similarity(v_u, rule.mask_vocabulary, 4)
print(f"s_a (cosine)  = {s_a:.3f}")
print(f"s_b (overlap) = {s_b:.3f}")
for alpha in (0.25, 0.5, 0.75):
    print(f"  combined score @ alpha={alpha}: {matching_score(s_a, s_b, alpha):.3f}")

# Coverage falls monotonically as the threshold rises.
docs = Dataset(
    tuple(
        make_instance(f"u{i}", text, 256, gold_label=label)
        for i, (text, label) in enumerate(
            [
                ("goal and derby drama", 2),
                ("striker injured before derby", 2),
                ("earnings call surprises analysts", 1),
                ("market slips on rate fears", 1),
                ("derby ends level", 2),
            ]
        )
    ),
    "unlabeled",
)
print("\nsigma -> coverage / rule accuracy")
for sigma in (0.1, 0.2, 0.3, 0.5):
    cfg = MatchConfig(alpha=0.5, sigma=sigma, k=4)
    _, coverage, accuracy = apply_rules(docs, [rule], cfg, TokenFiller())
    print(f"  {sigma:.2f} -> {coverage:.2f} / {accuracy}")

dev = Dataset(docs.instances, "dev")
best, table = sweep_sigma(dev, [rule], MatchConfig(alpha=0.5, sigma=0.2, k=4), TokenFiller())
print("\ndev sweep:")
for row in table[:5]:
    print(f"  sigma={row['sigma']:.2f} f1={row['f1']:.3f} coverage={row['coverage']:.2f}")
print("best sigma:", best)
