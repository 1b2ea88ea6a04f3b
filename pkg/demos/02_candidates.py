"""Pruning the action space with influence capacity and a GraphSAGE classifier.

Influence capacity scores every node by its two-hop activation mass and its
coreness-weighted degree.  The top 20% become "candidates".  A node classifier
learns to predict that label from local structure, so new graphs can be pruned
without computing the centrality.

    python3 demos/02_candidates.py
"""
import numpy as np

from aimkit import (ClassifierConfig, assign_activation_params, evaluate_classifier, generate, influence_capacity,
                    label_candidates, predict_candidates, train_classifier)


def labelled(family, n, seed):
    g = assign_activation_params(generate(family, n, seed), rng_seed=seed + 1000)
    return g, label_candidates(influence_capacity(g), 0.2)


g, labels = labelled("ba", 300, 0)
scores = influence_capacity(g)
top = np.argsort(-scores.capacity)[:5]
print("highest-capacity nodes:", top.tolist())
print("their degrees:", g.degree()[top].tolist(), " capacity:", np.round(scores.capacity[top], 3).tolist())

train = [labelled(f, n, s) for s, (f, n) in enumerate((f, n) for f in ("ba", "plc", "sbm") for n in (200, 300))]
print(f"training the classifier on {len(train)} graphs (a few seconds)...")
params = train_classifier(train, ClassifierConfig(seed=0))

for i, family in enumerate(("ba", "plc", "sbm")):
    test, truth = labelled(family, 600, 100 + i)
    cand = predict_candidates(test, params)
    pred = np.isin(np.arange(test.node_count), cand)
    m = evaluate_classifier(pred, truth)
    print(f"held-out {family} (600 nodes): {len(cand)} candidates, recall {m['recall']:.3f}, "
          f"accuracy {m['accuracy']:.3f}")
