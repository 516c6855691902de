"""Approximate randomization significance testing between two systems.

Run:  python demos/05_significance_testing.py
"""

from infostat import randomization_test
from infostat.corpus import ISLabel
from infostat.rng import SplitMix64

OLD, NEW = ISLabel.OLD, ISLabel.NEW

# Simulated paired outputs of two systems on 400 mentions.
rng = SplitMix64(2)
gold = [OLD if rng.uniform() < 0.4 else NEW for _ in range(400)]

def noisy_system(accuracy: float, stream: SplitMix64) -> list[ISLabel]:
    out = []
    for g in gold:
        if stream.uniform() < accuracy:
            out.append(g)
        else:
            out.append(NEW if g is OLD else OLD)
    return out

strong = noisy_system(0.85, SplitMix64(10))
weak = noisy_system(0.78, SplitMix64(11))
similar = noisy_system(0.84, SplitMix64(12))

def acc(preds):
    return sum(p == g for p, g in zip(preds, gold)) / len(gold)

print(f"strong system accuracy:  {acc(strong):.3f}")
print(f"weak system accuracy:    {acc(weak):.3f}")
print(f"similar system accuracy: {acc(similar):.3f}")

p_clear = randomization_test(strong, weak, gold, rounds=20000, seed=0)
p_close = randomization_test(strong, similar, gold, rounds=20000, seed=0)
p_self = randomization_test(strong, strong, gold, rounds=20000, seed=0)
print(f"\np-value strong vs weak:    {p_clear:.4f}   (difference is real)")
print(f"p-value strong vs similar: {p_close:.4f}   (could be chance)")
print(f"p-value strong vs itself:  {p_self:.4f}   (identical outputs)")

# The same comparison on the per-class F1 of `old`.
p_f1 = randomization_test(strong, weak, gold, rounds=5000, seed=0,
                          statistic="f1", f1_label=OLD)
print(f"p-value strong vs weak on F1(old): {p_f1:.4f}")
