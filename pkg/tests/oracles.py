"""Independent reference implementations used to derive expected test values.

Everything here is deliberately naive (plain loops, direct formulas) and
shares no code path with the package under test.
"""

import numpy as np


def stft_magnitudes(x, fft_size, hop):
    """Loop-based Hann STFT magnitude frames (periodic window)."""
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(fft_size) / fft_size)
    frames = []
    start = 0
    while start + fft_size <= len(x):
        frames.append(np.abs(np.fft.rfft(x[start : start + fft_size] * window)))
        start += hop
    return np.array(frames)


def peak_bin(clip, fft_size):
    """Bin index with the largest mean magnitude over the clip's STFT."""
    mags = stft_magnitudes(clip, fft_size, fft_size // 2)
    return int(np.argmax(mags.mean(axis=0)))


def snr_db(clean, contaminated):
    """SNR of `contaminated` against the known clean component."""
    residual = np.asarray(contaminated) - np.asarray(clean)
    return 10.0 * np.log10(np.sum(np.asarray(clean) ** 2) / np.sum(residual**2))


def single_frame_centroid_hz(frame, sample_rate):
    """Spectral centroid of one Hamming-windowed frame, in Hz."""
    mags = np.abs(np.fft.rfft(frame * np.hamming(len(frame))))
    freqs = np.arange(len(mags)) * sample_rate / len(frame)
    return float(np.sum(freqs * mags) / np.sum(mags))


def window_stats(matrix, start, count):
    """Mean and population std of rows [start, start+count) per column."""
    chunk = np.asarray(matrix)[start : start + count]
    means = [float(np.sum(chunk[:, j]) / chunk.shape[0]) for j in range(chunk.shape[1])]
    stds = []
    for j in range(chunk.shape[1]):
        m = means[j]
        stds.append(float(np.sqrt(np.sum((chunk[:, j] - m) ** 2) / chunk.shape[0])))
    return np.array(means), np.array(stds)


def column_means(matrix):
    matrix = np.asarray(matrix)
    return np.array([float(np.sum(matrix[:, j]) / matrix.shape[0]) for j in range(matrix.shape[1])])


def per_dim_extremes(vectors):
    vectors = [np.asarray(v) for v in vectors]
    dims = vectors[0].size
    lo = np.array([min(v[j] for v in vectors) for j in range(dims)])
    hi = np.array([max(v[j] for v in vectors) for j in range(dims)])
    return lo, hi


def rmse_per_column(pred, target):
    pred = np.asarray(pred)
    target = np.asarray(target)
    out = []
    for j in range(pred.shape[1]):
        total = 0.0
        for i in range(pred.shape[0]):
            total += (pred[i, j] - target[i, j]) ** 2
        out.append(float(np.sqrt(total / pred.shape[0])))
    return np.array(out)


def bce_with_l2(probs, targets, weight_matrices, l2_coefficient, eps=1e-12):
    total = 0.0
    for p, y in zip(probs, targets):
        p = min(max(p, eps), 1.0 - eps)
        total += y * np.log(p) + (1.0 - y) * np.log(1.0 - p)
    loss = -total / len(probs)
    penalty = l2_coefficient * sum(float(np.sum(np.asarray(w) ** 2)) for w in weight_matrices)
    return loss + penalty


def confusion_counts(pred, true):
    tp = fp = tn = fn = 0
    for p, t in zip(pred, true):
        if p == 1 and t == 1:
            tp += 1
        elif p == 1 and t == 0:
            fp += 1
        elif p == 0 and t == 0:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def weight_grid_size():
    """Integer triples (a, b, c) in [1, 10]^3 with a + b + c <= 10."""
    count = 0
    for a in range(1, 11):
        for b in range(1, 11):
            for c in range(1, 11):
                if a + b + c <= 10:
                    count += 1
    return count


def finite_difference_grads(loss_fn, params, h=1e-5):
    """Central-difference gradients for a list of live parameter arrays."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            original = flat_p[i]
            flat_p[i] = original + h
            plus = loss_fn()
            flat_p[i] = original - h
            minus = loss_fn()
            flat_p[i] = original
            flat_g[i] = (plus - minus) / (2 * h)
        grads.append(g)
    return grads
