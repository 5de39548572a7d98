"""Independent reference implementations used as test oracles.

Everything here is written the slow, obvious way (explicit loops, direct
formulas) on purpose: these functions must not share code or structure
with the package so that agreement between the two is meaningful.
"""

import math

import numpy as np


def blur2d_reference(plane, sigma, radius):
    """Dense 2-D Gaussian convolution with mirror padding, one pixel at a time."""
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    taps /= taps.sum()
    window = np.outer(taps, taps)
    h, w = plane.shape
    padded = np.pad(plane, radius, mode="reflect")
    out = np.empty_like(plane, dtype=np.float64)
    for i in range(h):
        for j in range(w):
            out[i, j] = np.sum(padded[i : i + 2 * radius + 1, j : j + 2 * radius + 1] * window)
    return out


def highpass_reference(image, sigma, radius):
    """|luminance - dense blur| with the same luminance weights."""
    lum = 0.299 * image[:, :, 0] + 0.587 * image[:, :, 1] + 0.114 * image[:, :, 2]
    return np.abs(lum - blur2d_reference(lum, sigma, radius))


def colorfulness_reference(image):
    """Opponent-channel statistic computed per pixel with python loops."""
    rgs, ybs = [], []
    for row in image:
        for (r, g, b) in row:
            rgs.append(r - g)
            ybs.append(0.5 * (r + g) - b)
    n = len(rgs)
    mu_rg = sum(rgs) / n
    mu_yb = sum(ybs) / n
    var_rg = sum((v - mu_rg) ** 2 for v in rgs) / n
    var_yb = sum((v - mu_yb) ** 2 for v in ybs) / n
    return math.sqrt(var_rg + var_yb) + 0.3 * math.sqrt(mu_rg**2 + mu_yb**2)


def conv2d_reference(x_hwc, kernel, bias):
    """Direct stride-1 same-zero-padded convolution, loops over everything.

    x_hwc is [H, W, c_in]; kernel is [c_out, c_in, k, k]; returns [H, W, c_out].
    """
    h, w, c_in = x_hwc.shape
    c_out, _, k, _ = kernel.shape
    pad = k // 2
    out = np.zeros((h, w, c_out), dtype=np.float64)
    for oy in range(h):
        for ox in range(w):
            for co in range(c_out):
                acc = bias[co]
                for ci in range(c_in):
                    for ky in range(k):
                        for kx in range(k):
                            iy, ix = oy + ky - pad, ox + kx - pad
                            if 0 <= iy < h and 0 <= ix < w:
                                acc += kernel[co, ci, ky, kx] * x_hwc[iy, ix, ci]
                out[oy, ox, co] = acc
    return out


def network_reference(weights, channel_plan, patch):
    """Forward pass of the residual conv stack using conv2d_reference only."""
    acts = np.asarray(patch, dtype=np.float64)
    last = len(channel_plan) - 1
    for layer, (c_in, c_out) in enumerate(channel_plan):
        kernel = np.asarray(weights.kernels[layer][:c_out, :c_in], dtype=np.float64)
        bias = np.asarray(weights.biases[layer][:c_out], dtype=np.float64)
        acts = conv2d_reference(acts, kernel, bias)
        if layer < last:
            acts = np.maximum(acts, 0.0)
    if weights.spec.residual:
        acts = np.asarray(patch, dtype=np.float64) + acts
    return acts


def group_sizes_reference(n, m):
    """Group populations from first principles: enumerate ranks, cap the group id."""
    per = -(-n // m)  # ceil
    sizes = [0] * m
    for rank in range(n):
        sizes[min(rank // per, m - 1)] += 1
    return sizes


def quantile_reference(values, q):
    """Linear-interpolation quantile on a sorted copy, textbook definition."""
    data = sorted(float(v) for v in values)
    if len(data) == 1:
        return data[0]
    pos = q * (len(data) - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(data) - 1)
    frac = pos - lo
    return data[lo] * (1.0 - frac) + data[hi] * frac


def flops_reference(num_layers, base_channels, kernel_size, residual, width, h, w):
    """Layer-by-layer FLOP count written directly from the counting rule."""
    hidden = max(1, int(math.floor(width * base_channels + 0.5)))
    total = 0
    for layer in range(num_layers):
        c_in = 3 if layer == 0 else hidden
        c_out = 3 if layer == num_layers - 1 else hidden
        total += 2 * h * w * c_in * c_out * kernel_size * kernel_size
        total += h * w * c_out
    if residual:
        total += 3 * h * w
    return total


def ssim_reference(img_a, img_b):
    """Windowed SSIM on luminance with explicit per-position loops."""
    lum_a = 0.299 * img_a[:, :, 0] + 0.587 * img_a[:, :, 1] + 0.114 * img_a[:, :, 2]
    lum_b = 0.299 * img_b[:, :, 0] + 0.587 * img_b[:, :, 1] + 0.114 * img_b[:, :, 2]
    h, w = lum_a.shape
    size = 11
    if min(h, w) >= size:
        offsets = np.arange(-5, 6, dtype=np.float64)
        taps = np.exp(-(offsets**2) / (2.0 * 1.5 * 1.5))
        taps /= taps.sum()
        window = np.outer(taps, taps)
    else:
        size = None
        window = np.full((h, w), 1.0 / (h * w))
    c1, c2 = 0.01**2, 0.03**2
    values = []
    wh, ww = window.shape
    for i in range(h - wh + 1):
        for j in range(w - ww + 1):
            pa = lum_a[i : i + wh, j : j + ww]
            pb = lum_b[i : i + wh, j : j + ww]
            mu_a = np.sum(window * pa)
            mu_b = np.sum(window * pb)
            var_a = np.sum(window * pa * pa) - mu_a * mu_a
            var_b = np.sum(window * pb * pb) - mu_b * mu_b
            cov = np.sum(window * pa * pb) - mu_a * mu_b
            values.append(
                ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
            )
    return float(np.mean(values))


def ciede2000_reference(lab1, lab2):
    """Scalar CIEDE2000 following the published stepwise procedure."""
    l1, a1, b1 = (float(v) for v in lab1)
    l2, a2, b2 = (float(v) for v in lab2)
    c1 = math.hypot(a1, b1)
    c2 = math.hypot(a2, b2)
    c_bar = (c1 + c2) / 2.0
    g = 0.5 * (1.0 - math.sqrt(c_bar**7 / (c_bar**7 + 25.0**7)))
    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = math.hypot(a1p, b1)
    c2p = math.hypot(a2p, b2)

    def hue(ap, b):
        if ap == 0.0 and b == 0.0:
            return 0.0
        h = math.degrees(math.atan2(b, ap))
        return h + 360.0 if h < 0 else h

    h1p = hue(a1p, b1)
    h2p = hue(a2p, b2)

    dl = l2 - l1
    dc = c2p - c1p
    if c1p * c2p == 0.0:
        dh_angle = 0.0
    else:
        diff = h2p - h1p
        if diff > 180.0:
            diff -= 360.0
        elif diff < -180.0:
            diff += 360.0
        dh_angle = diff
    dh = 2.0 * math.sqrt(c1p * c2p) * math.sin(math.radians(dh_angle / 2.0))

    l_bar = (l1 + l2) / 2.0
    cp_bar = (c1p + c2p) / 2.0
    if c1p * c2p == 0.0:
        h_bar = h1p + h2p
    elif abs(h1p - h2p) <= 180.0:
        h_bar = (h1p + h2p) / 2.0
    elif h1p + h2p < 360.0:
        h_bar = (h1p + h2p + 360.0) / 2.0
    else:
        h_bar = (h1p + h2p - 360.0) / 2.0

    t = (
        1.0
        - 0.17 * math.cos(math.radians(h_bar - 30.0))
        + 0.24 * math.cos(math.radians(2.0 * h_bar))
        + 0.32 * math.cos(math.radians(3.0 * h_bar + 6.0))
        - 0.20 * math.cos(math.radians(4.0 * h_bar - 63.0))
    )
    d_theta = 30.0 * math.exp(-(((h_bar - 275.0) / 25.0) ** 2))
    r_c = 2.0 * math.sqrt(cp_bar**7 / (cp_bar**7 + 25.0**7))
    s_l = 1.0 + (0.015 * (l_bar - 50.0) ** 2) / math.sqrt(20.0 + (l_bar - 50.0) ** 2)
    s_c = 1.0 + 0.045 * cp_bar
    s_h = 1.0 + 0.015 * cp_bar * t
    r_t = -math.sin(math.radians(2.0 * d_theta)) * r_c
    return math.sqrt(
        (dl / s_l) ** 2
        + (dc / s_c) ** 2
        + (dh / s_h) ** 2
        + r_t * (dc / s_c) * (dh / s_h)
    )


# Published CIEDE2000 verification pairs: (L1, a1, b1, L2, a2, b2, expected dE00).
CIEDE2000_CASES = [
    (50.0, 2.6772, -79.7751, 50.0, 0.0, -82.7485, 2.0425),
    (50.0, 3.1571, -77.2803, 50.0, 0.0, -82.7485, 2.8615),
    (50.0, 2.8361, -74.02, 50.0, 0.0, -82.7485, 3.4412),
    (50.0, -1.3802, -84.2814, 50.0, 0.0, -82.7485, 1.0),
    (50.0, -1.1848, -84.8006, 50.0, 0.0, -82.7485, 1.0),
    (50.0, -0.9009, -85.5211, 50.0, 0.0, -82.7485, 1.0),
    (50.0, 0.0, 0.0, 50.0, -1.0, 2.0, 2.3669),
    (50.0, -1.0, 2.0, 50.0, 0.0, 0.0, 2.3669),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.0009, 7.1792),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.001, 7.1792),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.0011, 7.2195),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.0012, 7.2195),
    (50.0, -0.001, 2.49, 50.0, 0.0009, -2.49, 4.8045),
    (50.0, -0.001, 2.49, 50.0, 0.001, -2.49, 4.8045),
    (50.0, -0.001, 2.49, 50.0, 0.0011, -2.49, 4.7461),
    (50.0, 2.5, 0.0, 50.0, 0.0, -2.5, 4.3065),
    (50.0, 2.5, 0.0, 73.0, 25.0, -18.0, 27.1492),
    (50.0, 2.5, 0.0, 61.0, -5.0, 29.0, 22.8977),
    (50.0, 2.5, 0.0, 56.0, -27.0, -3.0, 31.9030),
    (50.0, 2.5, 0.0, 58.0, 24.0, 15.0, 19.4535),
    (50.0, 2.5, 0.0, 50.0, 3.1736, 0.5854, 1.0),
    (50.0, 2.5, 0.0, 50.0, 3.2972, 0.0, 1.0),
    (50.0, 2.5, 0.0, 50.0, 1.8634, 0.5757, 1.0),
    (50.0, 2.5, 0.0, 50.0, 3.2592, 0.335, 1.0),
    (60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644),
    (63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630),
    (61.2901, 3.7196, -5.3901, 61.4292, 2.248, -4.962, 1.8731),
    (35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645),
    (22.7233, 20.0904, -46.694, 23.0331, 14.973, -42.5619, 2.0373),
    (36.4612, 47.858, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146),
    (90.8027, -2.0831, 1.441, 91.1528, -1.6435, 0.0447, 1.4441),
    (90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381),
    (6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377),
    (2.0776, 0.0795, -1.135, 0.9033, -0.0636, -0.5514, 0.9082),
]


def finite_difference_gradients(weights, view, patch, target, step=1e-5):
    """Central-difference gradient of the package's own loss for each sliced parameter.

    Imports locally so the module stays import-safe for oracle-only use.
    """
    from dda import forward, loss

    grads = []
    for layer, (c_in, c_out) in enumerate(view.channels):
        pieces = []
        for full, sliced_shape in (
            (weights.kernels[layer], (c_out, c_in) + weights.kernels[layer].shape[2:]),
            (weights.biases[layer], (c_out,)),
        ):
            grad = np.zeros(sliced_shape, dtype=np.float64)
            it = np.nditer(grad, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                original = full[idx]
                full[idx] = original + step
                plus = loss(forward(weights, view, patch), target)
                full[idx] = original - step
                minus = loss(forward(weights, view, patch), target)
                full[idx] = original
                grad[idx] = (plus - minus) / (2.0 * step)
            pieces.append(grad)
        grads.append(tuple(pieces))
    return grads


def max_relative_error(analytic, numeric, floor=1e-12):
    """Worst elementwise relative deviation between two gradient sets."""
    worst = 0.0
    for (ak, ab), (nk, nb) in zip(analytic, numeric):
        for a, n in ((ak, nk), (ab, nb)):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
