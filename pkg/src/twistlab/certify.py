"""Sufficient-condition chains that certify Hardy inequalities for twisted tubes.

Notation follows :mod:`twistlab.profiles`: the perturbation of the twist is
``alpha * eps(x1)``, so the sup norm of the perturbation is ``|alpha| * sup|eps|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .crosssec import (CrossSection, build_grid, estimate_lemma_constants, solve_mu, solve_nu,
                       solve_transverse)
from .errors import (EmptyInterval, NonPositiveChi, NonPositiveNu, TwistlabError, ZeroBeta)
from .profiles import TwistProfile

VERDICTS = ("global_hardy", "local_hardy", "positivity_only", "not_certified")


def check_small_positivity(beta: float, eps_sup: float, a: float):
    """``(||beta eps|| a^2 <= 2, ||beta eps|| a^2 < 2)``.

    >>> check_small_positivity(1.0, 1.0, 2 ** -0.5)
    (True, True)
    """
    if not a > 0:
        raise ValueError("a must be positive")
    s = abs(beta) * eps_sup * a * a
    return bool(s <= 2.0), bool(s < 2.0)


def constants_c1_c2(beta: float, eps_sup: float, a: float):
    """``c1 = 1 - a^2 (3 beta^2 + 4 |eps|^2 + 10 |beta eps|)``, ``c2 = 1 - 4 |eps| / |beta|``
    and whether ``4 |eps| < |beta| < 2 / (a sqrt(23))``."""
    if beta == 0:
        raise ZeroBeta("c2 needs a nonzero periodic twist")
    b = abs(beta)
    c1 = 1.0 - a * a * (3 * b * b + 4 * eps_sup ** 2 + 10 * b * eps_sup)
    c2 = 1.0 - 4 * eps_sup / b
    ass_ok = 4 * eps_sup < b < 2.0 / (a * math.sqrt(23.0))
    return c1, c2, bool(ass_ok)


def local_hardy_weight(beta: float, eps_at, chi, tau_chi, small_norm: float) -> np.ndarray:
    """Sampled weight ``(2 - ||beta eps|| a^2) beta eps(x1) (d_tau chi / chi)^2``.

    ``eps_at`` holds the perturbation at the longitudinal nodes; the result has
    shape ``(len(eps_at), len(chi))``.
    """
    chi = np.asarray(chi, dtype=float)
    if np.any(chi <= 0):
        raise NonPositiveChi("the transverse ground state must be positive on every node")
    if not small_norm < 2.0:
        raise ValueError("the weight needs ||beta eps|| a^2 < 2")
    be = beta * np.asarray(eps_at, dtype=float)
    if np.any(be < 0):
        raise ValueError("the weight needs beta * eps >= 0")
    ratio = (np.asarray(tau_chi, dtype=float) / chi) ** 2
    return (2.0 - small_norm) * np.outer(be, ratio)


def _interval_samples(I, breakpoints, n: int):
    a, b = I
    if not b > a:
        raise EmptyInterval(f"interval ({a}, {b}) is empty")
    x = np.linspace(a, b, n)[1:-1]
    bp = np.asarray(breakpoints, dtype=float)
    if bp.size:
        x = x[np.min(np.abs(x[:, None] - bp[None, :]), axis=1) > 1e-12]
    return x


def check_ass_better(beta: float, profile: TwistProfile, I, c1: float, c2: float,
                     epsilon0: float, n_samples: int = 4001) -> bool:
    """``0 < beta alpha eps(x1) < (c1/c2) eps0^2`` at every sample of ``I``
    (profile breakpoints excluded)."""
    if not (c1 > 0 and c2 > 0):
        return False
    x = _interval_samples(I, profile.breakpoints, n_samples)
    be = beta * profile.alpha * np.asarray(profile.eps(x))
    bound = (c1 / c2) * epsilon0 ** 2
    return bool(np.all(be > 0) and np.all(be < bound))


def min_shift_factor(x1_0: float) -> float:
    """``min over x of (1 + x^2) / (1 + (x - x1_0)^2)`` from the critical points
    ``x^2 - x1_0 x - 1 = 0`` (the limit at infinity is 1)."""
    if x1_0 == 0:
        return 1.0
    disc = math.sqrt(x1_0 * x1_0 + 4.0)
    vals = [1.0]
    for x in ((x1_0 + disc) / 2, (x1_0 - disc) / 2):
        vals.append((1 + x * x) / (1 + (x - x1_0) ** 2))
    return min(vals)


def global_chain(nu: float, I, x1_0: float = 0.0):
    """``delta = min(1, 32 nu / (1 + 32/|I|^2))``, ``c' = delta/64`` and ``c = c' * min factor``."""
    if not nu > 0:
        raise NonPositiveNu(f"nu must be positive, got {nu}")
    length = I[1] - I[0]
    if not length > 0:
        raise EmptyInterval(f"interval {I} is empty")
    delta = min(1.0, 32.0 * nu / (1.0 + 32.0 / length ** 2))
    c_prime = delta / 64.0
    return delta, c_prime, c_prime * min_shift_factor(x1_0)


@dataclass
class CertifySettings:
    cross_section: CrossSection = field(default_factory=CrossSection.square)
    h: float = 1.0 / 32
    beta: float = 0.5
    kind: str = "indicator"
    alpha: float = 0.1
    support: float = 1.0
    samples: tuple = None
    interval: tuple = None
    x1_0: float = None
    c0: float = 0.25
    epsilon0: float = None
    nu_samples: int = 41
    tol: float = 1e-10

    def profile(self) -> TwistProfile:
        return TwistProfile(self.beta, self.alpha, self.kind, self.support, self.samples)


@dataclass
class HardyCertificate:
    inputs: dict
    sign_ok: bool = False
    small_ok: bool = False
    strict_small_ok: bool = False
    ass_ok: bool = False
    ass_better_ok: bool = False
    c1: float = math.nan
    c2: float = math.nan
    epsilon0: float = math.nan
    interval: tuple = None
    x1_0: float = math.nan
    nu: float = math.nan
    delta: float = math.nan
    c_prime: float = math.nan
    c_global: float = 0.0
    verdict: str = "not_certified"
    reason: list = field(default_factory=list)
    lemma: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return d

    def to_json(self, **extra) -> str:
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2, default=_json_default)

    def report(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        for k in ("sign_ok", "small_ok", "strict_small_ok", "ass_ok", "ass_better_ok"):
            lines.append(f"  {k:16s} {getattr(self, k)}")
        for k in ("c1", "c2", "epsilon0", "nu", "delta", "c_prime", "c_global"):
            lines.append(f"  {k:16s} {getattr(self, k):.6g}")
        for r in self.reason:
            lines.append(f"  note: {r}")
        return "\n".join(lines)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def default_interval(profile: TwistProfile):
    """Where the perturbation is strictly positive in magnitude, away from zeros.

    Indicator: its support.  Tent: the middle half, which keeps eps >= 1/2.
    """
    s = profile.support
    if profile.kind == "indicator":
        return (-s, s)
    if profile.kind == "tent":
        return (-s / 2, s / 2)
    if profile.kind == "tabulated":
        x, e = (np.asarray(v) for v in profile.samples)
        nz = np.nonzero(e)[0]
        return (float(x[nz[0]]), float(x[nz[-1]])) if nz.size else (0.0, 0.0)
    return (0.0, 0.0)


def certify_pipeline(settings: CertifySettings) -> HardyCertificate:
    """Run every check and constant chain; mathematical failures end up in ``reason``."""
    prof = settings.profile()
    beta = settings.beta
    eps_sup = abs(settings.alpha) * prof.eps_sup
    cert = HardyCertificate(inputs={
        "beta": beta, "alpha": settings.alpha, "kind": settings.kind, "support": settings.support,
        "eps_sup": eps_sup, "cross_section": settings.cross_section.label(), "h": settings.h,
        "c0": settings.c0})
    try:
        grid = build_grid(settings.cross_section, settings.h)
        gs = solve_transverse(grid, beta, tol=settings.tol)
    except TwistlabError as exc:
        cert.reason.append(f"cross-section: {exc}")
        return cert
    a = gs.a
    cert.inputs.update(a=a, lambda1=gs.lambda1, C_omega=gs.C_omega, E1=gs.E1)

    xs = np.linspace(*prof.support_interval, 2001) if prof.kind != "zero" else np.zeros(1)
    be = beta * np.asarray(prof.eps(xs)) * settings.alpha
    cert.sign_ok = bool(np.all(be >= 0) and np.any(be > 0))
    if not cert.sign_ok:
        cert.reason.append("beta*eps >= 0 with beta*eps != 0 fails")
    cert.small_ok, cert.strict_small_ok = check_small_positivity(beta, eps_sup, a)
    try:
        cert.c1, cert.c2, cert.ass_ok = constants_c1_c2(beta, eps_sup, a)
    except ZeroBeta as exc:
        cert.reason.append(str(exc))
    if not cert.ass_ok:
        cert.reason.append(f"4|eps| < |beta| < 2/(a sqrt 23) fails (|eps|={eps_sup:g}, "
                           f"|beta|={abs(beta):g}, bound={2 / (a * math.sqrt(23)):.6g})")

    if settings.epsilon0 is not None:
        cert.epsilon0 = settings.epsilon0
    else:
        try:
            lemma = estimate_lemma_constants(grid, gs.chi, gs.lambda1, beta, settings.c0)
            cert.epsilon0 = lemma.epsilon0
            cert.lemma = lemma.to_dict()
        except TwistlabError as exc:
            cert.reason.append(f"lemma constants: {exc}")

    I = tuple(settings.interval) if settings.interval is not None else default_interval(prof)
    cert.interval = I
    cert.x1_0 = 0.5 * (I[0] + I[1]) if settings.x1_0 is None else settings.x1_0
    if cert.ass_ok and cert.sign_ok and math.isfinite(cert.c1):
        try:
            cert.ass_better_ok = check_ass_better(beta, prof, I, cert.c1, cert.c2, cert.epsilon0)
        except EmptyInterval as exc:
            cert.reason.append(str(exc))
        if not cert.ass_better_ok:
            cert.reason.append("0 < beta*eps < (c1/c2) eps0^2 fails somewhere on I")

    if cert.sign_ok and cert.ass_ok and cert.ass_better_ok:
        xs = np.linspace(I[0], I[1], settings.nu_samples)
        be_I = np.maximum(beta * settings.alpha * np.asarray(prof.eps(xs)), 0.0)
        eps_loc = np.sqrt(cert.c2 / cert.c1 * be_I)
        cache = {}
        mu = np.empty_like(eps_loc)
        for i, e in enumerate(eps_loc):
            key = round(float(e), 14)
            if key not in cache:
                cache[key] = solve_mu(grid, gs.chi, float(e), tol=settings.tol)
            mu[i] = cert.c1 * cache[key]
        cert.nu = solve_nu(mu, I, quarter=True)
        try:
            cert.delta, cert.c_prime, cert.c_global = global_chain(cert.nu, I, cert.x1_0)
        except (NonPositiveNu, EmptyInterval) as exc:
            cert.reason.append(str(exc))
            cert.c_global = 0.0

    if cert.sign_ok and cert.ass_ok and cert.ass_better_ok and cert.nu > 0 and cert.c_global > 0:
        cert.verdict = "global_hardy"
    elif cert.sign_ok and cert.ass_ok:
        cert.verdict = "local_hardy"
    elif cert.sign_ok and cert.small_ok:
        cert.verdict = "positivity_only"
    else:
        cert.verdict = "not_certified"
    return cert
