"""Central finite differences on vectorized callables."""

import numpy as np

# offsets and weights of second-order central stencils, derivative order -> (offsets, weights)
STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def stencil_reach(order):
    return max(abs(o) for o in STENCILS[order][0])


def directional(f, points, direction, order, step):
    """order-th derivative of f along the unit vector ``direction`` at ``points`` (n, d)."""
    offsets, weights = STENCILS[order]
    direction = np.asarray(direction, dtype=float)
    total = np.zeros(points.shape[:-1])
    for offset, weight in zip(offsets, weights):
        total += weight * f(points + offset * step * direction)
    return total / step**order


def hessian(f, points, step):
    """Finite-difference Hessian of f at ``points`` (n, d), shape (n, d, d)."""
    d = points.shape[-1]
    eye = np.eye(d) * step
    out = np.empty(points.shape[:-1] + (d, d))
    center = f(points)
    for i in range(d):
        out[..., i, i] = (f(points + eye[i]) - 2.0 * center + f(points - eye[i])) / step**2
        for j in range(i + 1, d):
            mixed = (
                f(points + eye[i] + eye[j])
                - f(points + eye[i] - eye[j])
                - f(points - eye[i] + eye[j])
                + f(points - eye[i] - eye[j])
            ) / (4.0 * step**2)
            out[..., i, j] = out[..., j, i] = mixed
    return out


def probe_directions(d):
    """Coordinate axes plus the main diagonal."""
    axes = list(np.eye(d))
    if d > 1:
        axes.append(np.ones(d) / np.sqrt(d))
    return axes


def derivative_envelope(f, points, max_order, step):
    """Largest directional derivative magnitude of each order, shape (max_order + 1, n)."""
    out = np.zeros((max_order + 1,) + points.shape[:-1])
    for order in range(max_order + 1):
        for direction in probe_directions(points.shape[-1]):
            out[order] = np.maximum(out[order], np.abs(directional(f, points, direction, order, step)))
    return out
