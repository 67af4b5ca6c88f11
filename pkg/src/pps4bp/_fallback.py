"""Pure-Python kernels with the same entry points as the compiled core.

Used when the extension is not built.  Roughly two orders of magnitude
slower; results agree with the compiled core to rounding.
"""

import numpy as np

from . import model


class KernelError(ArithmeticError):
    """Singular configuration or non-finite value met inside an integration loop."""


def derivatives(z, m, E, hessian=True):
    try:
        return model._derivatives(np.asarray(z, dtype=float), m, E, hessian)
    except model.SingularConfigurationError as exc:
        raise KernelError(f"singular configuration at step 0: {exc}") from None


def _dtds(z):
    return (z[0] * z[0] + z[1] * z[1]) * (z[2] * z[2] + z[3] * z[3])


def _field(z, m, E):
    g, _ = model._derivatives(z, m, E, False)
    return np.concatenate([g[4:], -g[:4]])


def _coupled(z, Y, m, E):
    g, H = model._derivatives(z, m, E, True)
    HY = H @ Y
    dY = np.vstack([HY[4:], -HY[:4]])
    if Y.shape[1] == 9:
        a = z[0] * z[0] + z[1] * z[1]
        b = z[2] * z[2] + z[3] * z[3]
        dY[4:, 8] += 2.0 * np.array([z[0] * b, z[1] * b, z[2] * a, z[3] * a])
    return np.concatenate([g[4:], -g[:4]]), dY


def _matrix(Y):
    Y = np.array(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != 8 or Y.shape[1] not in (8, 9):
        raise ValueError(f"variational matrix must be 8x8 or 8x9, got {Y.shape}")
    return Y


def _step_state(z, t, h, m, E):
    k1 = _field(z, m, E)
    w2 = z + 0.5 * h * k1
    k2 = _field(w2, m, E)
    w3 = z + 0.5 * h * k2
    k3 = _field(w3, m, E)
    w4 = z + h * k3
    k4 = _field(w4, m, E)
    t = t + h / 6.0 * (_dtds(z) + 2.0 * _dtds(w2) + 2.0 * _dtds(w3) + _dtds(w4))
    return z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t


def _step_coupled(z, Y, t, h, m, E):
    kz1, kY1 = _coupled(z, Y, m, E)
    w2, W2 = z + 0.5 * h * kz1, Y + 0.5 * h * kY1
    kz2, kY2 = _coupled(w2, W2, m, E)
    w3, W3 = z + 0.5 * h * kz2, Y + 0.5 * h * kY2
    kz3, kY3 = _coupled(w3, W3, m, E)
    w4, W4 = z + h * kz3, Y + h * kY3
    kz4, kY4 = _coupled(w4, W4, m, E)
    t = t + h / 6.0 * (_dtds(z) + 2.0 * _dtds(w2) + 2.0 * _dtds(w3) + _dtds(w4))
    z = z + h / 6.0 * (kz1 + 2.0 * kz2 + 2.0 * kz3 + kz4)
    Y = Y + h / 6.0 * (kY1 + 2.0 * kY2 + 2.0 * kY3 + kY4)
    return z, Y, t


def _guard(step, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise KernelError(f"non-finite state at step {step}")


def rk4_step(z, Y, t, h, m, E):
    z = np.array(z, dtype=float)
    try:
        if Y is None:
            z, t = _step_state(z, t, h, m, E)
        else:
            z, Y, t = _step_coupled(z, _matrix(Y), t, h, m, E)
    except model.SingularConfigurationError:
        raise KernelError("singular configuration at step 0") from None
    return z, Y, t


def flow(z0, m, E, h, steps, t0=0.0):
    z = np.array(z0, dtype=float)
    t = t0
    for n in range(steps):
        try:
            z, t = _step_state(z, t, h, m, E)
        except model.SingularConfigurationError:
            raise KernelError(f"singular configuration at step {n}") from None
        _guard(n, z)
    return z, t


def flow_variational(z0, Y0, m, E, h, steps, t0=0.0):
    z = np.array(z0, dtype=float)
    Y = _matrix(Y0)
    t = t0
    for n in range(steps):
        try:
            z, Y, t = _step_coupled(z, Y, t, h, m, E)
        except model.SingularConfigurationError:
            raise KernelError(f"singular configuration at step {n}") from None
        _guard(n, z, Y)
    return z, Y, t


def sample(z0, m, E, h, steps, stride, t0=0.0):
    if stride < 1:
        raise ValueError("stride must be >= 1")
    idx = list(range(0, steps + 1, stride))
    if idx[-1] != steps:
        idx.append(steps)
    out_z = np.empty((len(idx), 8))
    out_t = np.empty(len(idx))
    z = np.array(z0, dtype=float)
    t = t0
    n = 0
    for j, target in enumerate(idx):
        while n < target:
            try:
                z, t = _step_state(z, t, h, m, E)
            except model.SingularConfigurationError:
                raise KernelError(f"singular configuration at step {n}") from None
            _guard(n, z)
            n += 1
        out_z[j] = z
        out_t[j] = t
    return np.asarray(idx, dtype=np.int64), out_z, out_t
