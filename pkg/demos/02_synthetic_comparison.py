"""Train the three heads on synthetic cosine-similarity data and compare test MALE.

Takes a minute or two on a laptop. ``python demos/02_synthetic_comparison.py``
"""

import logging

import numpy as np

from ordinal_sim.bucketing import bucket_counts, derive_quantile_scheme
from ordinal_sim.data import SynthConfig, feature_matrix, generate_synthetic, split_622
from ordinal_sim.metrics import evaluate
from ordinal_sim.training import TrainConfig, fit, output_to_similarity, predict_outputs

logging.basicConfig(level=logging.INFO)

# %% Query pairs whose similarity is the cosine of their mean-pooled token vectors.
table, pairs = generate_synthetic(SynthConfig(vocab_size=1000, d=32, n_pairs=30_000, skew=0.95, seed=0))
train, val, test = split_622(pairs, seed=0)
y_train = np.array([p.y for p in train])
print(f"median similarity {np.median(y_train):.3f}, 5th percentile {np.percentile(y_train, 5):.3f}")

# %% Equal-frequency buckets from the training similarities.
scheme = derive_quantile_scheme(y_train, 5)
print("boundaries", np.round(scheme.boundaries, 4), "counts", bucket_counts(scheme, y_train))

splits = {}
for name, part in (("train", train), ("val", val), ("test", test)):
    X, kept = feature_matrix(table, part)
    splits[name] = (X, np.array([part[i].y for i in kept]))

# %% Same features, same network body, three different output layers and losses.
for kind in ("atmsel", "coral", "mse", "mse-linear"):
    cfg = TrainConfig(hidden=(64, 32), dropout=(0.1, 0.1), kind=kind, max_epochs=200, patience=20)
    params, log = fit(cfg, *splits["train"], *splits["val"], scheme)
    X, y = splits["test"]
    report = evaluate(output_to_similarity(params, predict_outputs(params, X), scheme), y, scheme)
    print(f"{kind:>10}: test MALE {report.male:.3f}  MSE {report.mse:.5f}  "
          f"(best epoch {log.best_epoch}, {log.stop_reason})")
    print(report.confusion)
