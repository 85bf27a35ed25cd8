"""Three small reference models with known steady-state structure.

1. Three qubits under collective decoherence (Lindblad, jump operators
   sqrt(gamma_k) S_k with S_k the collective spin operators), rho0 = I/8.
2. Two qubits under a time-dependent mixture of the identity and a Pauli
   channel, sampled at several values of the integrated rate F, rho0 = I/4.
3. Three qubits under a non-unital map that pumps |1> into |0> on the first
   qubit, rho0 = |0><0| (x) I (x) I / 4.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import InputError
from .model import ChannelSpec, DensityMatrix

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
P00 = np.outer(KET0, KET0)
P01 = np.outer(KET0, KET1)


def tensor(*ops):
    return reduce(np.kron, ops)


def site_op(op, site, n):
    """``op`` acting on qubit ``site`` (0-based) of ``n`` qubits."""
    return tensor(*[op if k == site else I2 for k in range(n)])


def collective_spin(op, n=3):
    return sum(site_op(op, k, n) for k in range(n))


def spin_dot(i, j, n=3):
    """sigma_i . sigma_j on n qubits."""
    return sum(site_op(p, i, n) @ site_op(p, j, n) for p in (SX, SY, SZ))


def example1(gamma=(1.0, 1.0, 1.0)):
    gamma = tuple(float(g) for g in gamma)
    if len(gamma) != 3 or any(not g > 0 for g in gamma):
        raise InputError("example 1 needs three positive rates gamma_x, gamma_y, gamma_z")
    ops = [np.sqrt(g) * collective_spin(s) for g, s in zip(gamma, (SX, SY, SZ))]
    spec = ChannelSpec.from_lindblad(np.zeros((8, 8)), ops, label="collective decoherence, 3 qubits")
    return spec, DensityMatrix(np.eye(8) / 8)


def example2_pauli_kraus():
    return [
        0.5 * tensor(I2, I2),
        0.5 * tensor(SX, I2),
        0.5 * tensor(SY, SZ),
        0.5 * tensor(SZ, SZ),
    ]


def example2_kraus(f):
    """Kraus family of rho -> (1 - F) rho + F P(rho)."""
    f = float(f)
    if not 0.0 <= f <= 1.0:
        raise InputError(f"integrated rate F must lie in [0, 1], got {f}")
    ops = [np.sqrt(1.0 - f) * np.eye(4, dtype=complex)]
    ops += [np.sqrt(f) * e for e in example2_pauli_kraus()]
    return [e for e in ops if np.any(e != 0)]


def example2(fs=(0.25, 0.5, 0.75)):
    if np.isscalar(fs):
        fs = (fs,)
    spec = ChannelSpec.from_samples(
        [(f, example2_kraus(f)) for f in fs], label="two qubits, time-dependent Pauli mixture"
    )
    return spec, DensityMatrix(np.eye(4) / 4)


def example3_kraus(p):
    p = float(p)
    if not 0.0 <= p <= 0.5:
        raise InputError(f"p must lie in [0, 1/2], got {p}")
    ops = [
        np.sqrt(1 - 2 * p) * tensor(I2, I2, I2),
        np.sqrt(p) * tensor(P00, SX, SX),
        np.sqrt(p) * tensor(P00, SZ, I2),
        np.sqrt(2 * p) * tensor(P01, I2, I2),
    ]
    return [e for e in ops if np.any(e != 0)]


def example3(p=0.25):
    spec = ChannelSpec.from_kraus(example3_kraus(p), label="three qubits, non-unital pumping")
    return spec, DensityMatrix(tensor(P00, I2, I2) / 4)


def builtin_model(n, **params):
    """(ChannelSpec, rho0) for reference model ``n``."""
    if n == 1:
        gamma = params.pop("gamma", None)
        if gamma is None:
            gamma = tuple(params.pop(k, 1.0) for k in ("gamma_x", "gamma_y", "gamma_z"))
        out = example1(gamma)
    elif n == 2:
        if "f" in params:
            fs = (params.pop("f"),)
        else:
            fs = params.pop("fs", (0.25, 0.5, 0.75))
        out = example2(fs)
    elif n == 3:
        out = example3(params.pop("p", 0.25))
    else:
        raise InputError(f"no built-in example {n!r}; choose 1, 2 or 3")
    if params:
        raise InputError(f"unknown parameter(s) for example {n}: {', '.join(sorted(params))}")
    return out
