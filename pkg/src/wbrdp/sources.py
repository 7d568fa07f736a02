"""Finite-alphabet sources: binary, truncated Gaussian, and text files.

Source files hold one ``x p`` pair per line (whitespace separated, ``#``
starts a comment). Probabilities must sum to one within ``1e-9``; they are
renormalized on read only when the sum is off by more than ``1e-12``, so
that ``read_source(dump_source(s))`` reproduces ``s`` exactly.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf, erfc

from .core import SUM_TOL, DiscreteDistribution
from .errors import (
    GridMismatchError,
    InvalidInputError,
    InvalidParameterError,
    SourceFormatError,
)

FILE_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SourceSpec:
    """Alphabet points and their probabilities.

    Parameters
    ----------
    support : array-like, shape (M,)
        Strictly increasing alphabet points.
    dist : DiscreteDistribution or array-like, shape (M,)
    """

    support: np.ndarray
    dist: DiscreteDistribution

    def __post_init__(self):
        support = np.array(self.support, dtype=float).ravel()
        dist = self.dist
        if not isinstance(dist, DiscreteDistribution):
            dist = DiscreteDistribution(dist)
        if support.size != len(dist):
            raise InvalidInputError(
                f"support has {support.size} points but distribution has {len(dist)}"
            )
        if not np.all(np.isfinite(support)):
            raise InvalidInputError("support has non-finite points")
        if np.any(np.diff(support) <= 0):
            raise InvalidInputError("support must be strictly increasing")
        support.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "dist", dist)

    @property
    def probs(self):
        return self.dist.probs

    def __len__(self):
        return self.support.size


def binary_source(p):
    """Bernoulli source on ``{0, 1}`` with ``P(X = 1) = p``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"binary source needs 0 < p < 1, got {p!r}")
    return SourceSpec(support=np.array([0.0, 1.0]), dist=np.array([1.0 - p, p]))


def _gaussian_bin_masses(lo, hi, mu, sigma):
    # Tail-aware differences: below the mean use the CDF, above it the
    # survival function, so small bins keep full relative precision.
    scale = sigma * math.sqrt(2.0)
    a = (lo - mu) / scale
    b = (hi - mu) / scale
    lower = 0.5 * (erfc(-b) - erfc(-a))
    upper = 0.5 * (erfc(a) - erfc(b))
    middle = 0.5 * (erf(b) - erf(a))
    return np.where(hi <= mu, lower, np.where(lo >= mu, upper, middle))


def gaussian_source(mu=0.0, sigma=2.0, S=8.0, delta=0.5, normalize=True):
    """Gaussian ``N(mu, sigma^2)`` truncated to ``[-S, S]`` and binned.

    Grid points are ``x_i = -S + i * delta`` for ``i = 0 .. 2S/delta``; the
    mass of point ``x_i`` is the Gaussian probability of
    ``[x_i - delta/2, x_i + delta/2]``. The tail mass outside the outer
    bins is discarded and the result renormalized unless ``normalize`` is
    false, in which case the raw bin masses are returned as a bare array.

    Raises
    ------
    GridMismatchError
        If ``delta`` does not divide ``2S`` (within ``1e-9``).
    InvalidParameterError
        If ``sigma``, ``S`` or ``delta`` is not positive.
    """
    mu, sigma, S, delta = float(mu), float(sigma), float(S), float(delta)
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma!r}")
    if not S > 0:
        raise InvalidParameterError(f"S must be positive, got {S!r}")
    if not delta > 0:
        raise InvalidParameterError(f"delta must be positive, got {delta!r}")
    steps = 2.0 * S / delta
    n_steps = round(steps)
    if abs(steps - n_steps) > 1e-9 or n_steps < 1:
        raise GridMismatchError(f"delta={delta!r} does not divide 2S={2 * S!r}")
    x = -S + delta * np.arange(n_steps + 1)
    # exact symmetry of the grid around zero
    x = 0.5 * (x - x[::-1])
    masses = _gaussian_bin_masses(x - delta / 2, x + delta / 2, mu, sigma)
    if not normalize:
        return masses
    return SourceSpec(support=x, dist=masses / masses.sum())


def _parse_rows(path, min_cols, what):
    rows = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SourceFormatError(f"cannot read {what} file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < min_cols:
            raise SourceFormatError(f"{path}:{lineno}: expected {min_cols} columns, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise SourceFormatError(f"{path}:{lineno}: not a number in {line!r}") from None
    if not rows:
        raise SourceFormatError(f"{path}: no data rows")
    return rows


def source_from_file(path):
    """Read a :class:`SourceSpec` from a two-column ``x p`` text file."""
    rows = _parse_rows(path, 2, "source")
    if any(len(r) != 2 for r in rows):
        raise SourceFormatError(f"{path}: every line must hold exactly 'x p'")
    data = np.array(rows)
    x, p = data[:, 0], data[:, 1]
    if not np.all(np.isfinite(data)):
        raise SourceFormatError(f"{path}: non-finite values")
    if np.any(p < 0):
        raise SourceFormatError(f"{path}: negative probability at line with x={x[np.argmax(p < 0)]!r}")
    if np.any(np.diff(x) <= 0):
        raise SourceFormatError(f"{path}: support must be strictly increasing")
    total = math.fsum(p)
    if abs(total - 1.0) > FILE_SUM_TOL:
        raise SourceFormatError(f"{path}: probabilities sum to {total!r}")
    if abs(total - 1.0) > SUM_TOL:
        p = p / total
    return SourceSpec(support=x, dist=p)


def dump_source(source, path):
    """Write ``source`` in the two-column text format read by :func:`source_from_file`."""
    lines = [f"{x!r} {p!r}" for x, p in zip(source.support.tolist(), source.probs.tolist())]
    Path(path).write_text("# x p\n" + "\n".join(lines) + "\n")


def support_from_file(path):
    """Read a reconstruction alphabet: the first column of each line."""
    rows = _parse_rows(path, 1, "support")
    x = np.array([r[0] for r in rows])
    if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
        raise SourceFormatError(f"{path}: support must be finite and strictly increasing")
    return x
