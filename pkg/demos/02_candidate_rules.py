# From a hard instance to candidate labeling rules.
#
# A template turns the instance into a prompt with a [MASK] slot; the
# corpus-statistics filler proposes tokens for the slot, and each proposed
# token becomes one singleton candidate rule carrying the instance's label.

from ruleboost import (
    CorpusStatsFiller,
    Dataset,
    LabelSpace,
    RuleTemplate,
    assemble_candidates,
    make_instance,
    render_prompt,
)

labels = LabelSpace(("business", "sports"))

corpus_rows = [
    ("shares rally as earnings surge", 1),
    ("profit outlook lifts the market", 1),
    ("central bank holds rates steady", 1),
    ("striker seals win with late goal", 2),
    ("coach praises squad after derby", 2),
    ("record crowd watches the final", 2),
] * 5
corpus = Dataset(
    tuple(
        make_instance(f"bg{i}", text, 256, gold_label=label)
        for i, (text, label) in enumerate(corpus_rows)
    ),
    "clean_labeled",
)

filler = CorpusStatsFiller(
    [(inst.tokens, inst.gold_label) for inst in corpus], labels.k, lexicon_size=8
)

template = RuleTemplate(id="news", pattern="[MASK] news: [INPUT]")
hard = make_instance("hard1", "goal drought ends as striker shines", 256, gold_label=2)

prompt = render_prompt(template, hard)
print("prompt:", prompt)

print("\ntop mask predictions:")
for pred in filler.fill(prompt, hard, k=5):
    print(f"  {pred.token:<10} p={pred.probability:.3f}")

candidates = assemble_candidates(
    [hard], template, filler, k=10, per_instance=5, iteration=1, labels=labels
)
print("\ncandidate rules:")
for rule in candidates:
    print(f"  {rule.id:<22} {rule.rule_text}")
