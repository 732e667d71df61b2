"""Independent reference computations used as test oracles.

Deliberately written without numpy and without importing trackboost, so a bug
in the package cannot leak into the expected values.
"""

import math


def _matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def _transpose(a):
    return [list(row) for row in zip(*a)]


def _add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _eye(n, scale=1.0):
    return [[scale if i == j else 0.0 for j in range(n)] for i in range(n)]


def _inv2(m):
    (a, b), (c, d) = m
    det = a * d - b * c
    return [[d / det, -b / det], [-c / det, a / det]]


F = [[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
H = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]


def kalman_predict(x, P, q):
    """Textbook constant-velocity predict on plain lists."""
    x = [sum(F[i][k] * x[k] for k in range(4)) for i in range(4)]
    P = _add(_matmul(_matmul(F, P), _transpose(F)), _eye(4, q))
    return x, P


def kalman_update(x, P, z, r):
    """Textbook update: K = P H^T S^-1, x += K y, P = (I - K H) P."""
    hx = [x[0], x[1]]
    y = [z[0] - hx[0], z[1] - hx[1]]
    S = _add(_matmul(_matmul(H, P), _transpose(H)), _eye(2, r))
    K = _matmul(_matmul(P, _transpose(H)), _inv2(S))
    x = [x[i] + K[i][0] * y[0] + K[i][1] * y[1] for i in range(4)]
    P = _matmul(_sub(_eye(4), _matmul(K, H)), P)
    return x, P


def kalman_1d(zs, q, r, x0, p0):
    """Scalar-position / scalar-velocity filter, written out by hand.

    Returns the list of (mean, cov) after each predict+update step.
    State is (p, v); cov is [[a, b], [b, c]].
    """
    p, v = x0
    a, b, c = p0
    out = []
    for z in zs:
        # predict
        p, v = p + v, v
        a, b, c = a + 2 * b + c + q, b + c, c + q
        # update
        s = a + r
        k0, k1 = a / s, b / s
        innov = z - p
        p, v = p + k0 * innov, v + k1 * innov
        a, b, c = (1 - k0) * a, (1 - k0) * b, c - k1 * b
        out.append(((p, v), ((a, b), (b, c))))
    return out


def gaussian_2d_patch(sigma, radius):
    """Normalized 2-D Gaussian weights on a (2r+1)^2 grid, evaluated directly."""
    w = [[math.exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) for dx in range(-radius, radius + 1)]
         for dy in range(-radius, radius + 1)]
    total = sum(sum(row) for row in w)
    return [[v / total for v in row] for row in w]


def boost_formula(scores):
    return [(s + max(scores)) / 2 for s in scores]


def uniform_sample_indices(n, k):
    if k >= n:
        return list(range(n))
    return [(i * n) // k for i in range(k)]
