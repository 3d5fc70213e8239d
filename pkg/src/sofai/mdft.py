"""Multi-alternative Decision Field Theory.

Preferences over ``k`` options start at zero and accumulate as
``P(t+1) = S @ P(t) + C @ M @ W(t+1)`` where ``W(t)`` is a one-hot draw over
the ``J`` attributes with probabilities ``w``. The contrast matrix ``C``
compares each option to the mean of the others and the feedback matrix ``S``
carries self-excitation on the diagonal and distance-dependent lateral
inhibition off it.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np


class MdftError(ValueError):
    pass


@dataclass(frozen=True)
class FixedHorizon:
    T: int = 30

    def __post_init__(self):
        if self.T < 1:
            raise MdftError("horizon must be at least one iteration")


@dataclass(frozen=True)
class Threshold:
    theta: float
    max_iterations: int = 1000

    def __post_init__(self):
        if self.max_iterations < 1:
            raise MdftError("max_iterations must be positive")


Policy = Union[FixedHorizon, Threshold]

DEFAULT_PHI1 = 0.022
DEFAULT_PHI2 = 0.05


class Deliberation(NamedTuple):
    choice: int
    iterations: int
    converged: bool


def contrast_matrix(k: int) -> np.ndarray:
    """Ones on the diagonal, ``-1/(k-1)`` elsewhere."""
    if k < 2:
        raise MdftError("contrast needs at least two options")
    C = np.full((k, k), -1.0 / (k - 1))
    np.fill_diagonal(C, 1.0)
    return C


def feedback_matrix(M: np.ndarray, phi1: float = DEFAULT_PHI1, phi2: float = DEFAULT_PHI2) -> np.ndarray:
    """Gaussian lateral inhibition: ``S_ij = delta_ij - phi2 * exp(-phi1 * d_ij**2)``.

    ``d_ij`` is the Euclidean distance between rows ``i`` and ``j`` of ``M``,
    so identical options inhibit each other the most.
    """
    M = np.asarray(M, dtype=float)
    if not np.isfinite(M).all():
        raise MdftError("evaluation matrix must be finite")
    if not phi1 > 0:
        raise MdftError("phi1 must be positive")
    if not 0 < phi2 < 1:
        raise MdftError("phi2 must lie in (0, 1)")
    diff = M[:, None, :] - M[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    return np.eye(len(M)) - phi2 * np.exp(-phi1 * d2)


def sample_attention(w, rng: np.random.Generator) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    W = np.zeros_like(w)
    W[rng.choice(len(w), p=w)] = 1.0
    return W


def _check_weights(w: np.ndarray) -> None:
    if (w < 0).any() or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
        raise MdftError(f"attention weights must be a distribution, got {w}")


def contrast(X: np.ndarray) -> np.ndarray:
    """``C @ X`` computed as each row minus the mean of the other rows.

    Avoids the rounding of ``-1/(k-1)`` so equal rows contrast to exactly 0.
    """
    k = X.shape[0]
    return X - (X.sum(axis=0) - X) / (k - 1)


def _checksum(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a, dtype="<f8").tobytes()).hexdigest()


class MdftModel:
    """Evaluation matrix, attention distribution and deliberation policy.

    ``C`` and ``S`` are derived from ``M`` at construction; pass ``S``
    explicitly to study other feedback structures.
    """

    def __init__(
        self,
        M,
        w,
        policy: Policy = FixedHorizon(),
        phi1: float = DEFAULT_PHI1,
        phi2: float = DEFAULT_PHI2,
        S=None,
    ):
        self.M = np.array(M, dtype=float)
        if self.M.ndim != 2:
            raise MdftError("M must be a k x J matrix")
        k, J = self.M.shape
        self.w = np.array(w, dtype=float)
        if self.w.shape != (J,):
            raise MdftError(f"attention vector has {self.w.shape} entries, M has {J} attributes")
        _check_weights(self.w)
        self.policy = policy
        self.phi1 = phi1
        self.phi2 = phi2
        self.C = contrast_matrix(k)
        self.S = feedback_matrix(self.M, phi1, phi2) if S is None else np.array(S, dtype=float)
        if self.S.shape != (k, k):
            raise MdftError("S must be k x k")
        if not np.allclose(self.S, self.S.T):
            raise MdftError("S must be symmetric")
        # identical options put an eigenvalue at exactly 1; their valence
        # difference is zero so that direction never grows
        if np.abs(np.linalg.eigvalsh(self.S)).max() > 1 + 1e-12:
            raise MdftError("spectral radius of S exceeds 1")
        self.CM = contrast(self.M)
        for a in (self.M, self.w, self.C, self.S, self.CM):
            a.setflags(write=False)

    @property
    def k(self) -> int:
        return self.M.shape[0]

    @property
    def J(self) -> int:
        return self.M.shape[1]

    def to_dict(self) -> dict:
        if isinstance(self.policy, FixedHorizon):
            policy = {"mode": "fixed", "T": self.policy.T}
        else:
            policy = {
                "mode": "threshold",
                "theta": self.policy.theta,
                "max_iterations": self.policy.max_iterations,
            }
        return {
            "M": self.M.tolist(),
            "w": self.w.tolist(),
            "phi1": self.phi1,
            "phi2": self.phi2,
            "policy": policy,
            "checksums": {"C": _checksum(self.C), "S": _checksum(self.S)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MdftModel":
        p = d["policy"]
        if p["mode"] == "fixed":
            policy: Policy = FixedHorizon(int(p["T"]))
        elif p["mode"] == "threshold":
            policy = Threshold(float(p["theta"]), int(p["max_iterations"]))
        else:
            raise MdftError(f"unknown deliberation mode {p['mode']!r}")
        model = cls(d["M"], d["w"], policy, float(d["phi1"]), float(d["phi2"]))
        sums = d.get("checksums")
        if sums is not None:
            if sums["C"] != _checksum(model.C) or sums["S"] != _checksum(model.S):
                raise MdftError("recomputed C or S does not match the stored checksum")
        return model

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MdftModel":
        return cls.from_dict(json.loads(text))


def valence(model: MdftModel, W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != (model.J,):
        raise MdftError(f"attention vector of length {W.shape} for {model.J} attributes")
    return contrast(model.M) @ W


def _argmax_ties(P: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Row-wise argmax, exact ties split uniformly at random."""
    best = P.max(axis=1, keepdims=True)
    keys = np.where(P == best, rng.random(P.shape), -1.0)
    return keys.argmax(axis=1)


def accumulate(model: MdftModel, n: int, rng: np.random.Generator, attention=None):
    """Run ``n`` independent deliberations at once.

    Returns ``(choices, iterations, converged, P)`` arrays of length ``n``
    (``P`` is ``n x k``). ``attention`` fixes the attended attribute indices
    as an ``n x T`` array for fixed-horizon runs instead of sampling them.
    """
    CMt = model.CM.T  # J x k
    St = model.S.T
    k, J = model.k, model.J
    policy = model.policy
    P = np.zeros((n, k))
    if isinstance(policy, FixedHorizon):
        if attention is None:
            attn = rng.choice(J, size=(n, policy.T), p=model.w)
        else:
            attn = np.asarray(attention, dtype=int).reshape(n, policy.T)
        for t in range(policy.T):
            P = P @ St + CMt[attn[:, t]]
        iters = np.full(n, policy.T)
        converged = np.ones(n, dtype=bool)
    else:
        if attention is not None:
            raise MdftError("explicit attention sequences need a fixed horizon")
        iters = np.zeros(n, dtype=int)
        converged = np.zeros(n, dtype=bool)
        active = np.arange(n)
        for t in range(1, policy.max_iterations + 1):
            attn = rng.choice(J, size=len(active), p=model.w)
            P[active] = P[active] @ St + CMt[attn]
            hit = P[active].max(axis=1) >= policy.theta
            done = active[hit]
            converged[done] = True
            iters[done] = t
            active = active[~hit]
            if len(active) == 0:
                break
        iters[active] = policy.max_iterations
    return _argmax_ties(P, rng), iters, converged, P


def deliberate(model: MdftModel, rng: np.random.Generator) -> Deliberation:
    """One deliberation from ``P(0) = 0``.

    A threshold run that never reaches ``theta`` returns the argmax at
    ``max_iterations`` with ``converged=False``.
    """
    choices, iters, converged, _ = accumulate(model, 1, rng)
    return Deliberation(int(choices[0]), int(iters[0]), bool(converged[0]))


def choice_distribution(model: MdftModel, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Empirical choice frequencies over ``n_samples`` deliberations."""
    if n_samples < 1:
        raise MdftError("n_samples must be positive")
    choices, _, _, _ = accumulate(model, n_samples, rng)
    return np.bincount(choices, minlength=model.k) / n_samples
