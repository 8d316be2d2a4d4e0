"""Independent reference implementations used only by the tests.

Plain Python loops over flat lists; they never call into the package, and
accept ``fractions.Fraction`` inputs for exact arithmetic.
"""
import math


def relaxed_counts(pred, gt):
    tp = sum(p * y for p, y in zip(pred, gt))
    fp = sum(p * (1 - y) for p, y in zip(pred, gt))
    fn = sum((1 - p) * y for p, y in zip(pred, gt))
    return tp, fp, fn


def relaxed_f(pred, gt, beta2):
    tp, fp, fn = relaxed_counts(pred, gt)
    h = beta2 * (tp + fn) + (tp + fp)
    return (1 + beta2) * tp / h if h else 0


def floss_grad(pred, gt, beta2):
    """Derivative of 1 - F by the quotient rule, written out per pixel."""
    tp, fp, fn = relaxed_counts(pred, gt)
    h = beta2 * (tp + fn) + (tp + fp)
    out = []
    for y in gt:
        d_tp, d_h = y, 1  # dTP/dp_i and dH/dp_i
        d_f = (1 + beta2) * (d_tp * h - tp * d_h) / (h * h)
        out.append(-d_f)
    return out


def ce_loss(pred, gt):
    return -sum(y * math.log(p) + (1 - y) * math.log(1 - p) for p, y in zip(pred, gt))


def discrete_counts(binpred, gt):
    tp = sum(1 for b, y in zip(binpred, gt) if b == 1 and y == 1)
    fp = sum(1 for b, y in zip(binpred, gt) if b == 1 and y == 0)
    fn = sum(1 for b, y in zip(binpred, gt) if b == 0 and y == 1)
    return tp, fp, fn


def prf_at(pred, gt, t, beta2):
    """Precision, recall and F of ``pred > t`` from first principles."""
    tp, fp, fn = discrete_counts([1 if p > t else 0 for p in pred], gt)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = (1 + beta2) * p * r / (beta2 * p + r) if beta2 * p + r else 0.0
    return p, r, f


def box_mean(img, r):
    """Edge-clamped (2r+1)^2 box mean of a list-of-lists image."""
    h, w = len(img), len(img[0])
    out = [[0.0] * w for _ in range(h)]
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for di in range(-r, r + 1):
                for dj in range(-r, r + 1):
                    ii = min(max(i + di, 0), h - 1)
                    jj = min(max(j + dj, 0), w - 1)
                    acc += img[ii][jj]
            out[i][j] = acc / (2 * r + 1) ** 2
    return out


def central_difference(f, x, h):
    """Central difference of a scalar function of a list, coordinate by coordinate."""
    out = []
    for i in range(len(x)):
        up = list(x)
        dn = list(x)
        up[i] += h
        dn[i] -= h
        out.append((f(up) - f(dn)) / (2 * h))
    return out
