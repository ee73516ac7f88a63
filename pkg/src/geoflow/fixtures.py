"""Worked-example data.

``paper-polar``
    ``A = P_inf Q_inf`` with ``P_inf = [[3, -1], [-1, 2]]`` and ``Q_inf`` the
    rotation by ``pi/3``; ``Sigma1 = A A^T = [[10, -5], [-5, 5]]``.
``paper-qr``
    ``A = Q_inf R_inf`` with ``R_inf = [[3, -1], [0, 2]]`` and the same
    rotation; ``W1 = R_inf^T R_inf = [[9, -3], [-3, 5]]``.
``paper-eigen``
    A symmetric matrix with spectrum ``{5, 1/2, 1}``.
"""

from __future__ import annotations

import numpy as np


def rotation(theta) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def paper_polar() -> dict:
    P = np.array([[3.0, -1.0], [-1.0, 2.0]])
    Q = rotation(np.pi / 3)
    A = P @ Q
    return {"A": A, "P_inf": P, "Q_inf": Q, "Sigma0": np.eye(2),
            "Sigma1": np.array([[10.0, -5.0], [-5.0, 5.0]]), "spd": np.array([[10.0, -5.0], [-5.0, 5.0]])}


def paper_qr() -> dict:
    R = np.array([[3.0, -1.0], [0.0, 2.0]])
    Q = rotation(np.pi / 3)
    W1 = np.array([[9.0, -3.0], [-3.0, 5.0]])
    return {"A": Q @ R, "R_inf": R, "Q_inf": Q, "W1": W1, "spd": W1}


def paper_eigen() -> dict:
    W = np.diag([5.0, 0.5, 1.0])
    return {"A": W, "W1": W, "spd": W, "limit": np.array([0.5, 1.0, 5.0])}


FIXTURES = {
    "paper-polar": paper_polar,
    "paper-qr": paper_qr,
    "paper-eigen": paper_eigen,
}


def load(name) -> dict:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(sorted(FIXTURES))}") from None
