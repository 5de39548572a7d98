"""Score patches with the closed-form moire prior.

The prior multiplies two cheap statistics: opponent-color colorfulness and
the mean magnitude of a Gaussian high-pass on luminance. Moire patterns are
colored AND high-frequency, so the product separates them from content that
is only one or the other.

Run: python3 demos/01_prior_scoring.py
"""

import numpy as np

from dda import colorfulness, gen_pair, highpass, moire_score

clean, moire, params = gen_pair(seed=7, index=0, h=64, w=64, moire_free_rate=0.0)
print(f"pattern amplitude {params.amplitude:.3f}, coverage {params.coverage!r}")

for name, patch in (("clean", clean), ("moire", moire)):
    result = moire_score(patch)
    print(
        f"{name:6s} colorfulness {result.colorfulness:.4f}"
        f"  high-pass mean {result.frequency_mean:.5f}"
        f"  score {result.score:.6f}"
    )

# the multiplicative gate: kill either factor and the score is exactly zero
flat = np.full((64, 64, 3), 0.5)
ramp = 0.5 + 0.4 * np.sin(0.8 * np.arange(64))
gray_grating = np.broadcast_to(ramp[None, :, None], (64, 64, 3)).copy()
uniform_red = np.broadcast_to(np.array([0.9, 0.2, 0.2]), (64, 64, 3)).copy()

print("\ndegenerate patches:")
for name, patch in (("constant", flat), ("gray grating", gray_grating), ("uniform color", uniform_red)):
    result = moire_score(patch)
    print(f"  {name:14s} score {result.score}")

# the factors are available standalone as well
print(f"\nstandalone: colorfulness(moire) = {colorfulness(moire):.4f}")
print(f"high-pass response range: {highpass(moire).min():.5f} .. {highpass(moire).max():.5f}")
