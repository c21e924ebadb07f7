"""Twist profiles theta_dot(x1) = beta + alpha * eps(x1)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("indicator", "tent", "tabulated", "zero")


@dataclass(frozen=True)
class TwistProfile:
    """Periodic twist ``beta`` plus a compactly supported perturbation ``alpha * eps``.

    ``kind`` selects ``eps``:

    * ``indicator``: 1 on ``|x1| <= support``, 0 elsewhere;
    * ``tent``: ``1 - |x1|/support`` on ``|x1| <= support``, 0 elsewhere;
    * ``tabulated``: piecewise-linear interpolation of ``samples = (x, eps)``,
      zero outside the sampled range;
    * ``zero``: no perturbation.
    """

    beta: float
    alpha: float = 0.0
    kind: str = "zero"
    support: float = 1.0
    samples: tuple = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.support <= 0:
            raise ValueError("support half-width must be positive")
        if self.kind == "tabulated":
            if self.samples is None:
                raise ValueError("tabulated profile needs samples=(x, eps)")
            x, e = (np.asarray(v, dtype=float) for v in self.samples)
            if x.ndim != 1 or x.shape != e.shape or x.size < 2 or np.any(np.diff(x) <= 0):
                raise ValueError("tabulated samples need increasing x and matching eps")
            object.__setattr__(self, "samples", (tuple(x), tuple(e)))

    # the perturbation -----------------------------------------------------

    def eps(self, x1):
        x = np.asarray(x1, dtype=float)
        s = self.support
        if self.kind == "indicator":
            out = np.where(np.abs(x) <= s, 1.0, 0.0)
        elif self.kind == "tent":
            out = np.maximum(0.0, 1.0 - np.abs(x) / s)
        elif self.kind == "tabulated":
            xs, es = (np.asarray(v) for v in self.samples)
            out = np.interp(x, xs, es, left=0.0, right=0.0)
        else:
            out = np.zeros_like(x)
        return out if out.ndim else float(out)

    def theta_dot(self, x1):
        return self.beta + self.alpha * self.eps(x1)

    def with_alpha(self, alpha: float) -> "TwistProfile":
        return TwistProfile(self.beta, alpha, self.kind, self.support, self.samples)

    def with_beta(self, beta: float) -> "TwistProfile":
        return TwistProfile(beta, self.alpha, self.kind, self.support, self.samples)

    def negated(self) -> "TwistProfile":
        """The mirrored profile ``-theta_dot`` (flips beta and alpha)."""
        return TwistProfile(-self.beta, -self.alpha, self.kind, self.support, self.samples)

    # derived quantities ------------------------------------------------------

    @property
    def eps_sup(self) -> float:
        """sup |eps|."""
        if self.kind in ("indicator", "tent"):
            return 1.0
        if self.kind == "tabulated":
            return float(np.max(np.abs(self.samples[1])))
        return 0.0

    @property
    def support_interval(self):
        if self.kind == "tabulated":
            return (self.samples[0][0], self.samples[0][-1])
        if self.kind == "zero":
            return (0.0, 0.0)
        return (-self.support, self.support)

    @property
    def breakpoints(self) -> np.ndarray:
        """Points where eps is not smooth (jumps or kinks)."""
        s = self.support
        if self.kind == "indicator":
            return np.array([-s, s])
        if self.kind == "tent":
            return np.array([-s, 0.0, s])
        if self.kind == "tabulated":
            return np.asarray(self.samples[0])
        return np.zeros(0)

    def moments(self):
        """Exact ``(int eps, int eps^2)`` over the real line."""
        s = self.support
        if self.kind == "indicator":
            return 2.0 * s, 2.0 * s
        if self.kind == "tent":
            return s, 2.0 * s / 3.0
        if self.kind == "tabulated":
            x, e = (np.asarray(v) for v in self.samples)
            dx = np.diff(x)
            a, b = e[:-1], e[1:]
            m1 = float(np.sum(dx * (a + b) / 2.0))
            m2 = float(np.sum(dx * (a * a + a * b + b * b) / 3.0))
            # linear ramps to zero outside the table are not part of eps
            return m1, m2
        return 0.0, 0.0

    def product_sign(self, x1) -> np.ndarray:
        """Sign of ``beta * alpha * eps`` at the given points."""
        return np.sign(self.beta * self.alpha * np.asarray(self.eps(x1)))

    def to_dict(self) -> dict:
        d = {"beta": self.beta, "alpha": self.alpha, "kind": self.kind, "support": self.support}
        if self.samples is not None:
            d["samples"] = [list(self.samples[0]), list(self.samples[1])]
        return d


def theta_dot(profile: TwistProfile, x1):
    """Twist rate ``beta + alpha * eps(x1)``.

    >>> theta_dot(TwistProfile(1.0, 2.0, "indicator"), 0.5)
    3.0
    >>> theta_dot(TwistProfile(1.0, 2.0, "tent"), 0.5)
    2.0
    """
    return profile.theta_dot(x1)
