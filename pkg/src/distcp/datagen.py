"""Seeded generators for the simulated examples.

Each generator accepts ``seed`` as an int or a :class:`numpy.random.Generator`.
:func:`make_scenario` draws every segment from its own keyed stream, so the
order in which segments are generated never changes the output.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln

from ._rng import as_generator, stream


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Cov:
    """Covariance of a Gaussian draw.

    ``identity`` has ``scale * I``, ``diagonal`` has ``diag(values)`` and
    ``ar1`` has entries ``scale * rho**|i-j|``.
    """

    form: str = "identity"
    scale: float = 1.0
    values: tuple = None
    rho: float = 0.0

    @classmethod
    def identity(cls, scale=1.0):
        return cls("identity", scale=float(scale))

    @classmethod
    def diagonal(cls, values):
        return cls("diagonal", values=tuple(float(v) for v in values))

    @classmethod
    def ar1(cls, rho, scale=1.0):
        if not abs(rho) < 1:
            raise ScenarioError(f"AR(1) coefficient must satisfy |rho| < 1, got {rho}")
        return cls("ar1", scale=float(scale), rho=float(rho))

    def __post_init__(self):
        if self.form not in ("identity", "diagonal", "ar1"):
            raise ScenarioError(f"unknown covariance form {self.form!r}")
        if self.form == "ar1" and not abs(self.rho) < 1:
            raise ScenarioError(f"AR(1) coefficient must satisfy |rho| < 1, got {self.rho}")
        if self.form == "diagonal" and min(self.values) <= 0:
            raise ScenarioError("diagonal covariance entries must be positive")
        if self.scale <= 0:
            raise ScenarioError("covariance scale must be positive")

    def transform(self, eps):
        """Map iid standard normal rows ``eps`` (k, d) to rows with this covariance."""
        if self.form == "identity":
            return math.sqrt(self.scale) * eps
        if self.form == "diagonal":
            if len(self.values) != eps.shape[1]:
                raise ScenarioError("diagonal covariance length does not match d")
            return np.sqrt(np.asarray(self.values)) * eps
        # X_1 = e_1, X_k = rho X_{k-1} + sqrt(1 - rho^2) e_k along coordinates
        drive = math.sqrt(1.0 - self.rho**2) * eps
        drive[:, 0] = eps[:, 0]
        return math.sqrt(self.scale) * lfilter([1.0], [1.0, -self.rho], drive, axis=1)


def _mean(mu, d):
    mu = np.zeros(d) if mu is None else np.broadcast_to(np.asarray(mu, dtype=float), (d,))
    return mu


def gaussian(n, d, mu=None, cov=None, seed=None):
    rng = as_generator(seed)
    cov = cov or Cov.identity()
    return _mean(mu, d) + cov.transform(rng.standard_normal((n, d)))


def iid_t(n, d, df, seed=None):
    """Rows with iid Student-t(df) coordinates."""
    if df <= 0:
        raise ScenarioError("degrees of freedom must be positive")
    return as_generator(seed).standard_t(df, size=(n, d))


def multivariate_t(n, d, df, seed=None):
    """Standard multivariate t: ``X / sqrt(W/df)`` with one chi-square per row."""
    if df <= 0:
        raise ScenarioError("degrees of freedom must be positive")
    rng = as_generator(seed)
    x = rng.standard_normal((n, d))
    w = rng.chisquare(df, size=n)
    return x / np.sqrt(w / df)[:, None]


def mgsn(n, d, p, mu=None, cov=None, seed=None, return_counts=False):
    """Geometric random sums of iid Gaussian vectors.

    Each row is ``X_1 + ... + X_N`` with ``N`` geometric on ``{1, 2, ...}``
    (``P(N=k) = p (1-p)**(k-1)``) and ``X_i`` iid ``N(mu, cov)``. With
    ``p = 1`` this reproduces :func:`gaussian` draw for draw.
    """
    if not 0 < p <= 1:
        raise ScenarioError(f"p must lie in (0, 1], got {p}")
    rng = as_generator(seed)
    cov = cov or Cov.identity()
    counts = np.ones(n, dtype=int) if p == 1 else rng.geometric(p, size=n)
    draws = _mean(mu, d) + cov.transform(rng.standard_normal((int(counts.sum()), d)))
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    rows = np.add.reduceat(draws, starts, axis=0)
    return (rows, counts) if return_counts else rows


def uniform_cube(n, d, half_width=1.0, seed=None):
    if half_width <= 0:
        raise ScenarioError("half_width must be positive")
    return as_generator(seed).uniform(-half_width, half_width, size=(n, d))


def l2_ball_radius(d, half_width=1.0):
    """Radius of the Euclidean ball with the volume of ``[-h, h]**d``."""
    # vol = pi^(d/2) r^d / Gamma(d/2 + 1) = (2h)^d
    return 2.0 * half_width * math.exp(gammaln(d / 2 + 1) / d) / math.sqrt(math.pi)


def l1_ball_radius(d, half_width=1.0):
    """Radius of the l1 ball with the volume of ``[-h, h]**d``."""
    # vol = 2^d r^d / d! = (2h)^d
    return half_width * math.exp(gammaln(d + 1) / d)


def _radius(radius, d, volume_fn):
    if radius is None or radius == "volume_match_cube":
        return volume_fn(d)
    r = float(radius)
    if r <= 0:
        raise ScenarioError("radius must be positive")
    return r


def uniform_l2_ball(n, d, radius=None, seed=None):
    """Uniform rows in a Euclidean ball; ``radius=None`` matches the cube volume."""
    r = _radius(radius, d, l2_ball_radius)
    rng = as_generator(seed)
    g = rng.standard_normal((n, d))
    u = rng.random(n)
    direction = g / np.linalg.norm(g, axis=1, keepdims=True)
    return direction * (r * u ** (1.0 / d))[:, None]


def uniform_l1_ball(n, d, radius=None, seed=None):
    """Uniform rows in an l1 ball; ``radius=None`` matches the cube volume."""
    r = _radius(radius, d, l1_ball_radius)
    rng = as_generator(seed)
    e = rng.standard_exponential((n, d))
    u = rng.random(n)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(n, d))
    simplex = e / e.sum(axis=1, keepdims=True)
    return signs * simplex * (r * u ** (1.0 / d))[:, None]


# --------------------------------------------------------------------------
# scenario registry


@dataclass(frozen=True)
class ScenarioSpec:
    example_id: int
    n: int = None
    d: int = None
    tau: tuple = None
    beta: float = None
    seed: int = 0

    def __post_init__(self):
        if self.example_id not in EXAMPLES:
            raise ScenarioError(f"unknown example id {self.example_id}")
        if self.beta is not None and not 0 < self.beta < 1:
            raise ScenarioError(f"beta must lie in (0, 1), got {self.beta}")
        if self.tau is not None:
            tau = (self.tau,) if np.ndim(self.tau) == 0 else tuple(self.tau)
            object.__setattr__(self, "tau", tuple(int(t) for t in tau))

    def resolved(self):
        """Copy with every unset field filled from the example defaults."""
        ex = EXAMPLES[self.example_id]
        return replace(
            self,
            n=self.n if self.n is not None else ex.n,
            d=self.d if self.d is not None else ex.d,
            tau=self.tau if self.tau is not None else ex.tau,
            beta=self.beta if self.beta is not None else ex.beta,
        )


@dataclass
class Scenario:
    data: np.ndarray
    change_points: tuple
    spec: ScenarioSpec
    description: str

    def metadata(self):
        s = self.spec
        return {"example_id": s.example_id, "n": s.n, "d": s.d,
                "change_points": list(self.change_points), "beta": s.beta,
                "seed": s.seed, "description": self.description}


@dataclass(frozen=True)
class _Example:
    description: str
    segments: tuple  # callables (k, d, beta, rng) -> (k, d) array
    n: int = 50
    d: int = 200
    tau: tuple = (25,)
    beta: float = None
    tags: tuple = field(default=())


def _sparse_count(d, beta):
    # floor(d**beta) with protection against 1024**0.6 = 63.999...
    return int(math.floor(round(d**beta, 9)))


def _half_diag(first, rest):
    def f(k, d, beta, rng):
        h = d // 2
        return gaussian(k, d, cov=Cov.diagonal([first] * h + [rest] * (d - h)), seed=rng)
    return f


def _sparse_mean(k, d, beta, rng):
    mu = np.zeros(d)
    mu[:_sparse_count(d, beta)] = 1.0
    return gaussian(k, d, mu=mu, seed=rng)


def _sparse_scale(k, d, beta, rng):
    v = np.ones(d)
    v[:_sparse_count(d, beta)] = 3.0
    return gaussian(k, d, cov=Cov.diagonal(v), seed=rng)


def _normal(mean=0.0, scale=1.0, rho=None):
    def f(k, d, beta, rng):
        cov = Cov.identity(scale) if rho is None else Cov.ar1(rho, scale)
        return gaussian(k, d, mu=mean, cov=cov, seed=rng)
    return f


_AR = 0.9

EXAMPLES = {
    1: _Example("N(0, I) -> N(0.3*1, I)", (_normal(), _normal(0.3))),
    2: _Example("N(0, I) -> N(0, 1.3 I)", (_normal(), _normal(scale=1.3))),
    3: _Example("N(0, 2I) -> iid t(4)",
                (_normal(scale=2.0), lambda k, d, b, r: iid_t(k, d, 4, seed=r))),
    4: _Example("N(0, diag(1,..,3,..)) -> N(0, 2I)",
                (_half_diag(1.0, 3.0), _normal(scale=2.0))),
    5: _Example("N(0, I) -> N(mu, I), mu has floor(d^beta) ones",
                (_normal(), _sparse_mean), beta=0.6),
    6: _Example("N(0, I) -> N(0, S), S has floor(d^beta) threes",
                (_normal(), _sparse_scale), beta=0.6),
    7: _Example("Unif(cube) -> Unif(l2 ball of equal volume)",
                (lambda k, d, b, r: uniform_cube(k, d, seed=r),
                 lambda k, d, b, r: uniform_l2_ball(k, d, seed=r))),
    8: _Example("N(0, I) -> MGSN(p=0.2, 0, I)",
                (_normal(), lambda k, d, b, r: mgsn(k, d, 0.2, seed=r))),
    9: _Example("N(0, diag(1,..,3,..)) -> N(0, diag(3,..,1,..))",
                (_half_diag(1.0, 3.0), _half_diag(3.0, 1.0))),
    10: _Example("N(0, 3I) -> iid t(4)",
                 (_normal(scale=3.0), lambda k, d, b, r: iid_t(k, d, 4, seed=r))),
    11: _Example("AR(0.9): N(0, S0) -> N(0.3*1, S0)",
                 (_normal(rho=_AR), _normal(0.3, rho=_AR))),
    12: _Example("AR(0.9): N(0, S0) -> N(0, 1.3 S0)",
                 (_normal(rho=_AR), _normal(scale=1.3, rho=_AR))),
    13: _Example("AR(0.9) mean ladder 0 -> 1 -> 1/2",
                 (_normal(rho=_AR), _normal(1.0, rho=_AR), _normal(0.5, rho=_AR)),
                 n=60, tau=(20, 40)),
    14: _Example("scale ladder N(0, 5^-(i-1) I), i = 1..4",
                 tuple(_normal(scale=0.2**i) for i in range(4)),
                 n=60, tau=(15, 30, 45)),
    15: _Example("Unif(cube) -> Unif(l2 ball) -> Unif(l1 ball), equal volumes",
                 (lambda k, d, b, r: uniform_cube(k, d, seed=r),
                  lambda k, d, b, r: uniform_l2_ball(k, d, seed=r),
                  lambda k, d, b, r: uniform_l1_ball(k, d, seed=r)),
                 n=60, tau=(20, 40)),
    16: _Example("MGSN(p=0.2) -> N(0, I) -> multivariate t(3)",
                 (lambda k, d, b, r: mgsn(k, d, 0.2, seed=r), _normal(),
                  lambda k, d, b, r: multivariate_t(k, d, 3, seed=r)),
                 n=60, tau=(20, 40)),
}


def make_scenario(spec):
    """Generate the observations of a registered example.

    Returns a :class:`Scenario` whose ``change_points`` are the true split
    sizes (1-based index of the last observation before each change).
    """
    spec = spec.resolved()
    ex = EXAMPLES[spec.example_id]
    taus = spec.tau
    if len(taus) != len(ex.segments) - 1:
        raise ScenarioError(
            f"example {spec.example_id} needs {len(ex.segments) - 1} change-point(s), got {len(taus)}")
    bounds = (0,) + taus + (spec.n,)
    if any(b >= a for a, b in zip(bounds[1:], bounds[:-1])) or min(taus) <= 0 or max(taus) >= spec.n:
        raise ScenarioError(f"change-points {taus} must be strictly increasing inside (0, {spec.n})")
    if ex.beta is not None and spec.beta is None:
        raise ScenarioError("this example needs beta")
    parts = []
    for i, gen in enumerate(ex.segments):
        rng = stream(spec.seed, "scenario", spec.example_id, i)
        parts.append(gen(bounds[i + 1] - bounds[i], spec.d, spec.beta, rng))
    return Scenario(np.vstack(parts), taus, spec, ex.description)
