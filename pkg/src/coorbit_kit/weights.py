"""Closed-form weights on H of the form |det h|^a * (1 + ||h||)^b, optionally conjugated."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Weight:
    """``v(h) = |det h|^det_power * (1 + ||h||_2)^norm_power``.

    With ``conjugate = g`` the weight is evaluated at ``g h g^{-1}``.
    """

    det_power: float = 0.0
    norm_power: float = 0.0
    conjugate: np.ndarray | None = None

    def __call__(self, h) -> float:
        h = np.atleast_2d(np.asarray(h, dtype=float))
        if self.conjugate is not None:
            g = np.atleast_2d(self.conjugate)
            h = g @ h @ np.linalg.inv(g)
        val = 1.0
        if self.det_power:
            val *= abs(np.linalg.det(h)) ** self.det_power
        if self.norm_power:
            val *= (1.0 + np.linalg.norm(h, 2)) ** self.norm_power
        return float(val)

    @property
    def is_trivial(self) -> bool:
        return self.det_power == 0 and self.norm_power == 0

    def conjugated(self, g) -> "Weight":
        g = np.atleast_2d(np.asarray(g, dtype=float))
        if self.conjugate is not None:
            g = g @ self.conjugate
        return Weight(self.det_power, self.norm_power, g)

    def __mul__(self, other: "Weight") -> "Weight":
        if self.conjugate is not None or other.conjugate is not None:
            raise ValueError("products of conjugated weights are not closed-form")
        return Weight(self.det_power + other.det_power, self.norm_power + other.norm_power)

    def to_dict(self) -> dict:
        out = {"det_power": self.det_power, "norm_power": self.norm_power}
        if self.conjugate is not None:
            out["conjugate"] = np.asarray(self.conjugate).tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict | None) -> "Weight":
        if not d:
            return cls()
        conj = d.get("conjugate")
        return cls(float(d.get("det_power", 0.0)), float(d.get("norm_power", 0.0)),
                   None if conj is None else np.asarray(conj, dtype=float))


def submultiplicativity(v: Weight, mats, rng=None, pairs: int = 200) -> float:
    """Largest observed ``v(h1 h2) / (v(h1) v(h2))`` over random pairs from ``mats``."""
    rng = np.random.default_rng(rng)
    mats = list(mats)
    worst = 0.0
    for _ in range(pairs):
        a, b = rng.integers(len(mats), size=2)
        worst = max(worst, v(mats[a] @ mats[b]) / (v(mats[a]) * v(mats[b])))
    return worst
