"""Independent straight-line reimplementations used as test oracles."""

import math


def npnn_f(freqs, w, b, x):
    D = len(freqs)
    total = 0.0
    for i in range(D):
        a = sum(freqs[i][j] * x[j] for j in range(len(x)))
        total += w[2 * i] * math.cos(a) / math.sqrt(D) + w[2 * i + 1] * math.sin(a) / math.sqrt(D)
    return total + b


def sigmoid_loss(m):
    return 1.0 / (1.0 + math.exp(m))


def npnn_loss(freqs, w, b, x, y):
    return sigmoid_loss(y * npnn_f(freqs, w, b, x))


def central_diff(fn, params, h=1e-5):
    """Central differences of ``fn(params)`` with respect to each entry of a flat list."""
    out = []
    for k in range(len(params)):
        up = list(params)
        dn = list(params)
        up[k] += h
        dn[k] -= h
        out.append((fn(up) - fn(dn)) / (2 * h))
    return out


def rel_close(got, want, rel=1e-4, floor=1e-9):
    return abs(got - want) <= rel * max(abs(got), abs(want)) + floor
