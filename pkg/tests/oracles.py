"""Independent brute-force references used as test oracles.

Nothing here imports the package's numerical code; every routine is a
straight-line loop or closed form.
"""

import cmath
import math

import numpy as np


def naive_dft_power(frame, n_fft=None):
    x = list(frame)
    n = n_fft or len(x)
    x = x + [0.0] * (n - len(x))
    out = []
    for k in range(n // 2 + 1):
        acc = 0j
        for t, v in enumerate(x):
            acc += v * cmath.exp(-2j * math.pi * k * t / n)
        out.append(abs(acc) ** 2)
    return np.array(out)


def dft_matrix_power(frames, n_fft):
    """O(N^2) DFT as an explicit cos/sin matrix product (no FFT)."""
    frames = np.atleast_2d(frames)
    padded = np.zeros((len(frames), n_fft))
    padded[:, : frames.shape[1]] = frames
    k = np.arange(n_fft // 2 + 1)[:, None]
    t = np.arange(n_fft)[None, :]
    ang = 2 * np.pi * k * t / n_fft
    re = padded @ np.cos(ang).T
    im = -padded @ np.sin(ang).T
    return re**2 + im**2


def nested_loop_convolution(x, h, length=None):
    n = len(x) + len(h) - 1
    y = [0.0] * n
    for i, xv in enumerate(x):
        for j, hv in enumerate(h):
            y[i + j] += xv * hv
    return np.array(y[: length if length is not None else n])


def brute_confusion(preds, labels):
    tp = fp = tn = fn = 0
    for p, t in zip(preds, labels):
        if p == 1 and t == 1:
            tp += 1
        elif p == 1 and t == -1:
            fp += 1
        elif p == -1 and t == -1:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def series_tanh(z, terms=60):
    """tanh from exponential series, independent of math.tanh."""
    def exp(u):
        total, term = 1.0, 1.0
        for n in range(1, terms):
            term *= u / n
            total += term
        return total

    return (exp(z) - exp(-z)) / (exp(z) + exp(-z))


def butterworth_bandpass_gain_db(f_hz, lo_hz, hi_hz, order, fs):
    """Analytic magnitude of the bilinear-mapped Butterworth band-pass."""
    warp = lambda f: 2 * fs * math.tan(math.pi * f / fs)
    w, wl, wh = warp(f_hz), warp(lo_hz), warp(hi_hz)
    w0sq = wl * wh
    if w == 0:
        return -math.inf
    mapped = (w * w - w0sq) / (w * (wh - wl))
    return -10 * math.log10(1 + mapped ** (2 * order))


def objective_ref(w, lam, X, y):
    total = 0.0
    for xi, yi in zip(X, y):
        score = sum(wj * xj for wj, xj in zip(w, list(xi) + [1.0]))
        total += max(0.0, 1 - yi * score)
    return lam / 2 * sum(v * v for v in w) + total / len(y)


def finite_difference_grad(f, w, step=1e-6):
    w = np.array(w, dtype=float)
    g = np.zeros_like(w)
    for j in range(len(w)):
        e = np.zeros_like(w)
        e[j] = step
        g[j] = (f(w + e) - f(w - e)) / (2 * step)
    return g


def reference_mfcc(samples, sr, frame_ms=25.0, hop_ms=10.0, n_mels=40, n_coeffs=40,
                   fmin=20.0, fmax=7600.0, floor=1e-10):
    """Straight-line MFCC: loops for framing, filterbank and DCT; naive DFT."""
    flen = int(round(frame_ms * sr / 1000))
    hop = int(round(hop_ms * sr / 1000))
    n_fft = 1
    while n_fft < flen:
        n_fft *= 2
    n_bins = n_fft // 2 + 1
    window = [0.54 - 0.46 * math.cos(2 * math.pi * i / (flen - 1)) for i in range(flen)]

    frames = []
    start = 0
    while start + flen <= len(samples):
        frames.append([samples[start + i] * window[i] for i in range(flen)])
        start += hop
    power = dft_matrix_power(np.array(frames), n_fft)

    mel = lambda f: 2595 * math.log10(1 + f / 700)
    inv = lambda m: 700 * (10 ** (m / 2595) - 1)
    m_lo, m_hi = mel(fmin), mel(fmax)
    pts = [inv(m_lo + (m_hi - m_lo) * i / (n_mels + 1)) for i in range(n_mels + 2)]
    bank = []
    for i in range(n_mels):
        lo, mid, hi = pts[i], pts[i + 1], pts[i + 2]
        row = []
        for b in range(n_bins):
            f = b * sr / n_fft
            if lo < f <= mid:
                row.append((f - lo) / (mid - lo))
            elif mid < f < hi:
                row.append((hi - f) / (hi - mid))
            else:
                row.append(0.0)
        bank.append(row)
    bank = np.array(bank)

    coeffs = []
    for p in power:
        logmel = [math.log(float(np.dot(bank[i], p)) + floor) for i in range(n_mels)]
        c = []
        for k in range(n_coeffs):
            s = sum(logmel[n] * math.cos(math.pi * k * (2 * n + 1) / (2 * n_mels)) for n in range(n_mels))
            scale = math.sqrt(1 / n_mels) if k == 0 else math.sqrt(2 / n_mels)
            c.append(scale * s)
        coeffs.append(c)
    return np.mean(np.array(coeffs), axis=0)
