"""Prior distributions on the signal entries.

Priors are finite-support (scalar or vector atoms) except for the unit
Gaussian, which is carried as a tagged analytic special case so that the
channel code can use closed forms instead of a discretisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadParam, DuplicateAtom, NonPositiveMass

DISCRETE = "discrete"
GAUSSIAN_UNIT = "gaussian_unit"

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Prior:
    """Immutable prior P0.

    ``atoms`` has shape ``(m,)`` for scalar priors and ``(m, k)`` for vector
    priors. For ``kind == "gaussian_unit"`` both arrays are empty and the
    moments are the analytic 0 and 1.
    """

    atoms: np.ndarray
    weights: np.ndarray
    kind: str = DISCRETE
    name: str = "discrete"
    mean: np.ndarray | float = field(init=False)
    second_moment: np.ndarray | float = field(init=False)

    def __post_init__(self):
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)
        if self.kind == GAUSSIAN_UNIT:
            object.__setattr__(self, "mean", 0.0)
            object.__setattr__(self, "second_moment", 1.0)
            return
        w = self.weights
        if self.atoms.ndim == 1:
            mean = float(w @ self.atoms)
            second = float(w @ self.atoms**2)
        else:
            mean = w @ self.atoms
            second = np.einsum("m,mi,mj->ij", w, self.atoms, self.atoms)
            mean.setflags(write=False)
            second.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "second_moment", second)

    @property
    def is_gaussian(self) -> bool:
        return self.kind == GAUSSIAN_UNIT

    @property
    def dim(self) -> int:
        """Dimension k of the atoms (1 for scalar priors)."""
        if self.is_gaussian or self.atoms.ndim == 1:
            return 1
        return self.atoms.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self.is_gaussian or self.atoms.ndim == 1

    @property
    def variance(self) -> float:
        if not self.is_scalar:
            raise ValueError("variance is defined for scalar priors only")
        return self.second_moment - self.mean**2

    @property
    def is_point_mass_at_zero(self) -> bool:
        if self.is_gaussian:
            return False
        return bool(np.all(self.atoms[self.weights > 0] == 0))

    def __repr__(self):
        if self.is_gaussian:
            return "Prior(gaussian_unit)"
        return f"Prior({self.name}, atoms={self.atoms.tolist()}, weights={self.weights.tolist()})"


def make_discrete(atoms, weights, name: str = "discrete") -> Prior:
    """Build a normalised finite-support prior.

    >>> p = make_discrete([1.0, -1.0], [0.5, 0.5])
    >>> p.mean, p.second_moment
    (0.0, 1.0)
    """
    atoms = np.array(atoms, dtype=float)
    weights = np.array(weights, dtype=float)
    if atoms.ndim not in (1, 2) or weights.ndim != 1:
        raise BadParam("atoms must be a list of reals or of k-vectors")
    if len(atoms) != len(weights) or len(atoms) < 1:
        raise BadParam("atoms and weights must have equal length >= 1")
    if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
        raise BadParam("atoms and weights must be finite")
    if np.any(weights < 0):
        raise BadParam("weights must be nonnegative")
    total = weights.sum()
    if total <= 0:
        raise NonPositiveMass("all weights are zero")
    keys = atoms if atoms.ndim == 2 else atoms[:, None]
    if len(np.unique(keys, axis=0)) != len(keys):
        raise DuplicateAtom("atoms must be pairwise distinct")
    return Prior(atoms=atoms, weights=weights / total, kind=DISCRETE, name=name)


def gaussian_unit() -> Prior:
    return Prior(atoms=np.empty(0), weights=np.empty(0), kind=GAUSSIAN_UNIT, name="gaussian")


def rademacher() -> Prior:
    return make_discrete([1.0, -1.0], [0.5, 0.5], name="rademacher")


def sparse_rademacher(rho: float) -> Prior:
    """P0(0) = 1 - rho, P0(+-1/sqrt(rho)) = rho/2; unit variance."""
    if not 0 < rho <= 1:
        raise BadParam(f"sparse_rademacher needs 0 < rho <= 1, got {rho}")
    if rho == 1:
        return rademacher()
    a = 1.0 / math.sqrt(rho)
    return make_discrete([0.0, a, -a], [1 - rho, rho / 2, rho / 2], name=f"sparse_rademacher:{rho:g}")


def bernoulli(eps: float) -> Prior:
    if not 0 < eps <= 1:
        raise BadParam(f"bernoulli needs 0 < eps <= 1, got {eps}")
    if eps == 1:
        return make_discrete([1.0], [1.0], name="bernoulli:1")
    return make_discrete([0.0, 1.0], [1 - eps, eps], name=f"bernoulli:{eps:g}")


def sbm_two_point(p: float) -> Prior:
    """Centred two-point prior of the two-community block model.

    Class 1 (probability p) maps to sqrt((1-p)/p), class 2 to -sqrt(p/(1-p)).
    """
    if not 0 < p < 1:
        raise BadParam(f"sbm needs 0 < p < 1, got {p}")
    hi = math.sqrt((1 - p) / p)
    lo = -math.sqrt(p / (1 - p))
    return make_discrete([hi, lo], [p, 1 - p], name=f"sbm:{p:g}")


def point_mass(c: float) -> Prior:
    return make_discrete([float(c)], [1.0], name=f"point:{c:g}")


_BUILTINS = {
    "rademacher": (rademacher, 0),
    "sparse_rademacher": (sparse_rademacher, 1),
    "bernoulli": (bernoulli, 1),
    "sbm": (sbm_two_point, 1),
    "gaussian": (gaussian_unit, 0),
    "gaussian_unit": (gaussian_unit, 0),
    "point": (point_mass, 1),
}


def builtin(name: str, *params: float) -> Prior:
    """Look up a named prior family, e.g. ``builtin("sparse_rademacher", 0.25)``."""
    try:
        factory, nparams = _BUILTINS[name]
    except KeyError:
        raise BadParam(f"unknown prior family {name!r}; choose from {sorted(_BUILTINS)}") from None
    if len(params) != nparams:
        raise BadParam(f"prior {name!r} takes {nparams} parameter(s), got {len(params)}")
    return factory(*params)


def parse_prior(spec: str) -> Prior:
    """Parse a CLI prior string ``name`` or ``name:param``."""
    name, _, rest = spec.partition(":")
    params = [float(v) for v in rest.split(",")] if rest else []
    return builtin(name.strip(), *params)


def load_prior_file(path, k: int = 1) -> Prior:
    """Read ``k`` atom coordinates followed by a weight on each line.

    Blank lines and ``#`` comments are skipped.
    """
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    if data.shape[1] != k + 1:
        raise BadParam(f"{path}: expected {k + 1} columns per line, got {data.shape[1]}")
    atoms = data[:, 0] if k == 1 else data[:, :k]
    return make_discrete(atoms, data[:, k], name=Path(path).stem)


def moment(prior: Prior, order: int):
    """First or second moment (mean vector / E[XX^T] for vector priors)."""
    if order == 1:
        return prior.mean
    if order == 2:
        return prior.second_moment
    raise BadParam("order must be 1 or 2")
