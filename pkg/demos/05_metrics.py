"""Image quality metrics: PSNR, SSIM, and CIEDE2000 color difference.

All three operate on [0, 1] float RGB images. PSNR reports +inf for
identical inputs; SSIM of an image with itself is exactly 1.0; the color
difference is the mean CIEDE2000 over pixels after sRGB -> Lab conversion.

CLI equivalent: dda metrics A.png B.png

Run: python3 demos/05_metrics.py
"""

import numpy as np

from dda import ciede2000, delta_e_image, gen_clean, psnr, ssim

rng = np.random.default_rng(1)
img = gen_clean(9, 48, 48)

print("degenerate reference points:")
print(f"  psnr(x, x)        = {psnr(img, img)}")
print(f"  ssim(x, x)        = {ssim(img, img)}")
print(f"  delta_e(x, x)     = {delta_e_image(img, img)}")
print(f"  psnr(x + 0.1, x)  = {psnr(np.clip(img, 0.0, 0.9) + 0.1, np.clip(img, 0.0, 0.9))} dB")

print("\ndegradation sweep (Gaussian noise):")
for sigma in (0.01, 0.05, 0.1):
    noisy = np.clip(img + rng.normal(0.0, sigma, img.shape), 0.0, 1.0)
    print(f"  sigma {sigma:.2f}: psnr {psnr(noisy, img):6.2f} dB  "
          f"ssim {ssim(noisy, img):.4f}  deltaE {delta_e_image(noisy, img):.3f}")

print("\nCIEDE2000 on published verification pairs (expected 2.0425, 1.0, 27.1492):")
for lab1, lab2 in [
    ((50.0, 2.6772, -79.7751), (50.0, 0.0, -82.7485)),
    ((50.0, -1.3802, -84.2814), (50.0, 0.0, -82.7485)),
    ((50.0, 2.5, 0.0), (73.0, 25.0, -18.0)),
]:
    print(f"  dE00{lab1} vs {lab2} = {ciede2000(lab1, lab2):.4f}")
