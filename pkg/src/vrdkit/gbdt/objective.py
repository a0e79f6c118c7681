"""Binary boosting objectives: cross-entropy and focal loss.

Gradients and Hessians are taken with respect to the logit z, with
p = sigmoid(z). The focal-loss Hessian is not positive everywhere; the
functions here return the exact analytic values (they must match finite
differences), and the trainer floors per-sample Hessians at HESS_FLOOR
before any leaf-value division.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HESS_FLOOR = 1e-16

OBJECTIVE_KINDS = ("cross_entropy", "focal")


@dataclass(frozen=True)
class Objective:
    """Loss configuration. focal(gamma=0, alpha=0.5) is half of cross_entropy."""

    kind: str = "cross_entropy"
    gamma: float = 2.0
    alpha: float = 0.25

    def __post_init__(self):
        if self.kind not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma, "alpha": self.alpha}

    @staticmethod
    def from_dict(d: dict) -> "Objective":
        return Objective(kind=d["kind"], gamma=float(d["gamma"]), alpha=float(d["alpha"]))


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    t = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + t), t / (1.0 + t))


def cross_entropy_loss(p, y):
    """Plain binary cross-entropy -(y log p + (1-y) log(1-p)); p in (0,1)."""
    p = _check_probability(p)
    y = np.asarray(y, dtype=np.float64)
    loss = np.where(y == 1, -np.log(p), -np.log(1.0 - p))
    return loss if loss.ndim else float(loss)


def focal_loss(p, y, gamma: float = 2.0, alpha: float = 0.25):
    """Focal loss on probabilities.

    -alpha (1-p)^gamma log(p) for y = 1, -(1-alpha) p^gamma log(1-p)
    for y = 0. Down-weights well-classified examples so training
    concentrates on the hard ones.
    """
    p = _check_probability(p)
    y = np.asarray(y, dtype=np.float64)
    loss = np.where(
        y == 1,
        -alpha * (1.0 - p) ** gamma * np.log(p),
        -(1.0 - alpha) * p**gamma * np.log(1.0 - p),
    )
    return loss if loss.ndim else float(loss)


def _check_probability(p):
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("probability must lie strictly inside (0, 1)")
    return p


def loss_from_logit(z, y, objective: Objective):
    """Per-sample loss evaluated from logits, numerically stable."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    log_p = -np.logaddexp(0.0, -z)
    log_q = -np.logaddexp(0.0, z)
    if objective.kind == "cross_entropy":
        return np.where(y == 1, -log_p, -log_q)
    g, a = objective.gamma, objective.alpha
    p = sigmoid(z)
    q = sigmoid(-z)
    return np.where(y == 1, -a * q**g * log_p, -(1.0 - a) * p**g * log_q)


def grad_hess(z, y, objective: Objective):
    """Exact first and second derivatives of the loss w.r.t. the logit.

    For cross-entropy: grad = p - y, hess = p(1-p). The focal-loss
    derivatives follow from the chain rule with dp/dz = p(1-p); the test
    suite verifies them against central finite differences.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = sigmoid(z)
    q = sigmoid(-z)
    if objective.kind == "cross_entropy":
        return p - y, p * q

    g, a = objective.gamma, objective.alpha
    log_p = -np.logaddexp(0.0, -z)
    log_q = -np.logaddexp(0.0, z)

    pos = y == 1
    grad = np.where(
        pos,
        a * q**g * (g * p * log_p - q),
        (1.0 - a) * p**g * (p - g * q * log_q),
    )
    hess = np.where(
        pos,
        a * p * q**g * (g * (q - g * p) * log_p + (2.0 * g + 1.0) * q),
        (1.0 - a) * q * p**g * (g * (p - g * q) * log_q + (2.0 * g + 1.0) * p),
    )
    return grad, hess
