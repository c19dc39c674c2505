"""Compare the three matching cost functions on a synthetic stereogram.

Builds a random-dot scene with a known uniform shift, computes the SAD,
Birchfield-Tomasi and AD-Census cost volumes, and reports how often the
per-pixel winner-take-all disparity (no aggregation yet) hits the truth.
Then demonstrates Birchfield-Tomasi's advantage on a half-pixel-shifted
intensity ramp, where plain absolute differences cannot reach zero.
"""

import numpy as np

from aerostereo import CostParams, ad_census_cost, bt_cost, generate_synthetic, sad_cost

SHIFT = 6
left, right, gt = generate_synthetic("random-dot", 96, 96, {"disparity": SHIFT}, seed=1)
params = CostParams(num_disparities=16, window_radius=2)

print(f"random-dot scene 96x96, true disparity {SHIFT}\n")
print(f"{'cost function':<16} {'raw WTA accuracy':>18} {'volume range':>24}")
for name, fn in (("sad", sad_cost), ("bt", bt_cost), ("ad-census", ad_census_cost)):
    volume = fn(left, right, params)
    wta = volume.argmin(axis=2)
    interior = wta[4:-4, SHIFT + 4 : -4]
    accuracy = (interior == SHIFT).mean()
    print(f"{name:<16} {accuracy:>17.1%} {volume.min():>12.3f} .. {volume.max():<8.3f}")

print("\nhalf-pixel shifted ramp (true disparity 0.5):")
xs = np.arange(64, dtype=np.float64)
ramp_l = np.tile(20.0 + 3.0 * xs, (8, 1)).astype(np.float32)
ramp_r = np.tile(np.clip(20.0 + 3.0 * (xs + 0.5), 0, 255), (8, 1)).astype(np.float32)
p0 = CostParams(num_disparities=1, window_radius=0)
sad0 = sad_cost(ramp_l, ramp_r, p0)[:, 1:, 0].mean()
bt0 = bt_cost(ramp_l, ramp_r, p0)[:, 1:, 0].mean()
print(f"  mean per-pixel cost at d=0:  SAD {sad0:.3f}   BT {bt0:.3f}")
print("  BT's interpolated samples absorb the sub-pixel shift; SAD pays for it.")
