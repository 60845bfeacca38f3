"""Damping laws for p'' + D p' + c^2 K p = g.

Every supported law is a function of K (or a multiple of the identity), so
each one has both a matrix form for direct integration and a per-mode
coefficient for the modal solver.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgument
from .fem import check_spd
from .matfun import fractional_power

KINDS = ("fractional", "two_term", "rayleigh", "viscous_fluid", "single_freq")

_REQUIRED = {
    "fractional": ("alpha0", "y"),
    "two_term": ("alpha1", "alpha0", "y"),
    "rayleigh": ("alpha", "beta"),
    "viscous_fluid": ("gamma", "rho"),
    "single_freq": ("alpha0", "y"),
}


@dataclass(frozen=True)
class DampingSpec:
    """Tagged damping law; only the fields of the active ``kind`` are used.

    fractional     D = 2 alpha0 c K^(y/2)
    two_term       D = 2 c (alpha1 I + alpha0 K^(y/2))
    rayleigh       D = c^2 (alpha I + beta K)
    viscous_fluid  D = 4 gamma / (3 rho) K
    single_freq    D = 2 alpha0 c f^y I, f taken from a tone-burst carrier
    """

    kind: str
    alpha0: float = 0.0
    y: float = 0.0
    alpha1: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    rho: float = 1.0
    f: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown damping kind {self.kind!r}; expected one of {KINDS}")
        for name in ("alpha0", "alpha1", "alpha", "beta", "gamma", "rho"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidArgument(f"damping coefficient {name} must be a nonnegative number, got {v}")
        if not 0.0 <= self.y <= 2.0:
            raise InvalidArgument(f"power-law exponent y must lie in [0, 2], got {self.y}")
        if self.kind == "viscous_fluid" and self.rho <= 0:
            raise InvalidArgument("viscous_fluid needs a positive density rho")
        if self.f is not None and not self.f > 0:
            raise InvalidArgument(f"single_freq carrier f must be positive, got {self.f}")

    @classmethod
    def fractional(cls, alpha0, y):
        return cls("fractional", alpha0=alpha0, y=y)

    @classmethod
    def two_term(cls, alpha1, alpha0, y):
        return cls("two_term", alpha1=alpha1, alpha0=alpha0, y=y)

    @classmethod
    def rayleigh(cls, alpha, beta):
        return cls("rayleigh", alpha=alpha, beta=beta)

    @classmethod
    def viscous_fluid(cls, gamma, rho):
        return cls("viscous_fluid", gamma=gamma, rho=rho)

    @classmethod
    def single_freq(cls, alpha0, y, f=None):
        return cls("single_freq", alpha0=alpha0, y=y, f=f)

    def as_dict(self) -> dict:
        keep = ("kind",) + _REQUIRED[self.kind] + (("f",) if self.kind == "single_freq" else ())
        d = asdict(self)
        return {k: d[k] for k in keep}

    @classmethod
    def from_dict(cls, d: dict) -> "DampingSpec":
        if "kind" not in d:
            raise InvalidArgument("damping.kind is required")
        kind = d["kind"]
        if kind not in KINDS:
            raise InvalidArgument(f"damping.kind: unknown kind {kind!r}; expected one of {KINDS}")
        missing = [k for k in _REQUIRED[kind] if k not in d]
        if missing:
            raise InvalidArgument(f"damping.{missing[0]} is required for kind {kind!r}")
        unknown = set(d) - {"kind", "f", *_REQUIRED[kind]}
        if unknown:
            raise InvalidArgument(f"damping.{sorted(unknown)[0]} is not a field of kind {kind!r}")
        kwargs = {}
        for k in _REQUIRED[kind] + ("f",):
            if k in d and d[k] is not None:
                try:
                    kwargs[k] = float(d[k])
                except (TypeError, ValueError):
                    raise InvalidArgument(f"damping.{k} must be a number, got {d[k]!r}") from None
        return cls(kind, **kwargs)


def _pow0(x, y):
    # 0**0 == 1, matching K^0 = I on the null space
    return np.power(np.asarray(x, dtype=float), y)


def build_damping_matrix(K, spec: DampingSpec, c: float) -> np.ndarray:
    K = check_spd(K, name="K")
    n = K.shape[0]
    I = np.eye(n)
    kind = spec.kind
    if kind == "fractional":
        D = 2.0 * spec.alpha0 * c * _matrix_power(K, spec.y, spec.alpha0)
    elif kind == "two_term":
        D = 2.0 * c * (spec.alpha1 * I + spec.alpha0 * _matrix_power(K, spec.y, spec.alpha0))
    elif kind == "rayleigh":
        D = c**2 * (spec.alpha * I + spec.beta * K)
    elif kind == "viscous_fluid":
        D = (4.0 * spec.gamma / (3.0 * spec.rho)) * K
    else:
        if spec.f is None:
            raise InvalidArgument("single_freq damping needs the tone-burst carrier f")
        D = 2.0 * spec.alpha0 * c * spec.f**spec.y * I
    return 0.5 * (D + D.T)


def _matrix_power(K, y, coeff):
    if coeff == 0.0:
        return np.zeros_like(K)
    if y == 2.0:
        return K.copy()
    if y == 0.0:
        return np.eye(K.shape[0])
    return fractional_power(K, y / 2.0).value


def modal_damping(spec: DampingSpec, omegas, c: float) -> np.ndarray:
    """Eigenvalue of D on each mode with eigen-wavenumber ``omegas``."""
    w = np.asarray(omegas, dtype=float)
    kind = spec.kind
    if kind == "fractional":
        return 2.0 * spec.alpha0 * c * _pow0(w, spec.y)
    if kind == "two_term":
        return 2.0 * c * (spec.alpha1 + spec.alpha0 * _pow0(w, spec.y))
    if kind == "rayleigh":
        return c**2 * (spec.alpha + spec.beta * w**2)
    if kind == "viscous_fluid":
        return (4.0 * spec.gamma / (3.0 * spec.rho)) * w**2
    if spec.f is None:
        raise InvalidArgument("single_freq damping needs the tone-burst carrier f")
    return np.full_like(w, 2.0 * spec.alpha0 * c * spec.f**spec.y)
