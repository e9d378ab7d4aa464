"""Buckets, the midpoint loss and why a plain squared error is not enough.

Run with ``python demos/01_buckets_and_losses.py``.
"""

import numpy as np

from ordinal_sim import atmsel, coral_decode, coral_encode, male, map_to_label, mse_loss, paper_scheme

# %% The fixed five-bucket scheme: narrow buckets near 1.0, one wide bucket below 0.82.
scheme = paper_scheme()
for j, (lo, hi) in enumerate(zip(scheme.boundaries, scheme.boundaries[1:])):
    print(f"label {j}: ({lo:.2f}, {hi:.2f}]  midpoint {scheme.midpoints[j]}")

# %% Right endpoints are inclusive.
for y in (0.95, 0.950001, 0.97, 1.0):
    print(f"H({y}) = {map_to_label(scheme, y)}")

# %% Two errors of the same size 0.04. Squared error cannot tell them apart...
print("MSE 0.97 -> 0.93:", mse_loss([0.93], [0.97])[0])
print("MSE 0.70 -> 0.74:", mse_loss([0.74], [0.70])[0])

# ...but in label space the first one crosses a bucket and the second does not.
for y, yhat in ((0.97, 0.93), (0.70, 0.74)):
    print(f"y={y} yhat={yhat}: label error {male([map_to_label(scheme, y)], [map_to_label(scheme, yhat)])}")

# %% The midpoint loss pulls each prediction towards the centre of its true bucket.
loss, grad = atmsel([0.901], [map_to_label(scheme, 0.95)], scheme)
print(f"midpoint loss for yhat=0.901, y=0.95: {loss:.6g} (gradient {grad[0]:.4f})")

# %% Cumulative-binary encoding of labels and what a single flipped bit does.
print("encode(3) =", coral_encode(3, 5).tolist())
broken = np.array([1, 0, 1, 0])
print("decode([1,0,1,0]) =", coral_decode(broken, 5), "-> label error", male([3], [coral_decode(broken, 5)]))
