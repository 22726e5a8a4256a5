"""Lead-lag embedding and exact truncated signatures of piecewise-linear paths.

Level k of a truncated signature over a d-letter alphabet is stored as a flat
vector of d**k coefficients in lexicographic word order, so the tensor
product of a level-i and a level-j block is a row-major flattened outer
product. Every function here also accepts a leading batch axis internally,
which is how whole panels are signed in one pass.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

from sigcom.exceptions import DataError, ValidationError

logger = logging.getLogger("sigcom.signature")

Word = Union[str, Sequence[int]]


@dataclass(frozen=True)
class LeadLagPath:
    """Axis-aligned staircase in the (lead, lag) plane starting at the origin."""

    points: np.ndarray  # (2n + 1) x 2

    def __post_init__(self):
        pts = self.points
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3 or pts.shape[0] % 2 == 0:
            raise ValidationError(f"Lead-lag path needs 2n+1 >= 3 points in 2-D, got {pts.shape}")
        if pts[0, 0] != 0.0 or pts[0, 1] != 0.0:
            raise ValidationError("Lead-lag path must start at the origin")
        moves = (np.diff(pts, axis=0) != 0.0).sum(axis=1)
        if np.any(moves > 1):
            raise ValidationError("Lead-lag path steps must change one coordinate at a time")
        if pts[-1, 0] != pts[-1, 1]:
            raise ValidationError("Lead-lag path must end on the diagonal")

    @property
    def n_segments(self) -> int:
        return self.points.shape[0] - 1


def _lead_lag_points(stream: np.ndarray) -> np.ndarray:
    x = stream - stream[..., :1]
    n = x.shape[-1] - 1
    points = np.empty(x.shape[:-1] + (2 * n + 1, 2))
    points[..., 0::2, 0] = x
    points[..., 0::2, 1] = x
    points[..., 1::2, 0] = x[..., 1:]
    points[..., 1::2, 1] = x[..., :-1]
    return points


def _check_stream(stream) -> np.ndarray:
    x = np.asarray(stream, dtype=float)
    if x.ndim < 1 or x.shape[-1] < 2:
        raise ValidationError(f"A stream needs at least 2 values, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("Stream contains non-finite values")
    return x


def lead_lag(stream: Sequence[float]) -> LeadLagPath:
    """Lead-lag transform of x_0..x_n.

    P_0 = (x_0, x_0), P_{2j+1} = (x_{j+1}, x_j), P_{2j+2} = (x_{j+1}, x_{j+1}).
    The stream is re-based so that the path starts at the origin.
    """
    x = _check_stream(stream)
    if x.ndim != 1:
        raise ValidationError("lead_lag takes a single 1-D stream")
    return LeadLagPath(points=_lead_lag_points(x))


def lead_lag_batch(streams: np.ndarray) -> np.ndarray:
    """Lead-lag points for every row of a B x (n + 1) array, shape B x (2n + 1) x 2."""
    x = _check_stream(streams)
    if x.ndim != 2:
        raise ValidationError("lead_lag_batch takes a 2-D array of streams")
    return _lead_lag_points(x)


def n_coefficients(dim: int, depth: int) -> int:
    """Coefficient count including the empty word: (d^(M+1) - 1) / (d - 1)."""
    if dim == 1:
        return depth + 1
    return (dim ** (depth + 1) - 1) // (dim - 1)


def feature_length(dim: int, depth: int) -> int:
    return n_coefficients(dim, depth) - 1


def words(dim: int, level: int) -> list[tuple[int, ...]]:
    """Words of one level in lexicographic order, letters 1..dim."""
    return list(itertools.product(range(1, dim + 1), repeat=level))


def format_word(word: Iterable[int]) -> str:
    return "".join(str(letter) for letter in word)


def _parse_word(word: Word, dim: int) -> tuple[int, ...]:
    letters = tuple(int(c) for c in word) if isinstance(word, str) else tuple(word)
    if any(not 1 <= letter <= dim for letter in letters):
        raise ValidationError(f"Word {word!r} uses letters outside 1..{dim}")
    return letters


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flattened tensor product of two level blocks sharing batch axes."""
    return (a[..., :, None] * b[..., None, :]).reshape(a.shape[:-1] + (a.shape[-1] * b.shape[-1],))


def _segment_levels(increment: np.ndarray, depth: int) -> list[np.ndarray]:
    levels = [np.ones(increment.shape[:-1] + (1,))]
    for k in range(1, depth + 1):
        levels.append(_outer(levels[-1], increment) / k)
    return levels


def _chen_levels(first: list[np.ndarray], second: list[np.ndarray], depth: int) -> list[np.ndarray]:
    out = [first[0] * second[0]]
    for k in range(1, depth + 1):
        acc = first[k] + second[k]
        for i in range(1, k):
            acc = acc + _outer(first[i], second[k - i])
        out.append(acc)
    return out


@dataclass(frozen=True)
class TruncatedSignature:
    """Signature coefficients for words of length 0..depth over {1..dim}."""

    dim: int
    depth: int
    levels: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.dim < 1 or self.depth < 1:
            raise ValidationError(f"dim and depth must be positive, got {self.dim}, {self.depth}")
        if len(self.levels) != self.depth + 1:
            raise ValidationError(f"Expected {self.depth + 1} levels, got {len(self.levels)}")
        for k, level in enumerate(self.levels):
            if level.shape != (self.dim**k,):
                raise ValidationError(
                    f"Level {k} has shape {level.shape}, expected ({self.dim**k},)"
                )

    @classmethod
    def identity(cls, dim: int, depth: int) -> "TruncatedSignature":
        """Signature of a constant path: 1 on the empty word, 0 elsewhere."""
        levels = [np.ones(1)] + [np.zeros(dim**k) for k in range(1, depth + 1)]
        return cls(dim=dim, depth=depth, levels=tuple(levels))

    @property
    def n_coefficients(self) -> int:
        return n_coefficients(self.dim, self.depth)

    def __getitem__(self, word: Word) -> float:
        letters = _parse_word(word, self.dim)
        if len(letters) > self.depth:
            raise ValidationError(f"Word {word!r} is longer than depth {self.depth}")
        index = 0
        for letter in letters:
            index = index * self.dim + (letter - 1)
        return float(self.levels[len(letters)][index])

    def coefficients(self) -> dict[str, float]:
        """All coefficients keyed by digit-string words, empty word first."""
        result = {}
        for k, level in enumerate(self.levels):
            for word, value in zip(words(self.dim, k), level):
                result[format_word(word)] = float(value)
        return result


def segment_signature(increment: Sequence[float], depth: int) -> TruncatedSignature:
    """Tensor exponential of one linear segment: word w of length k -> prod(delta_w) / k!."""
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    delta = np.asarray(increment, dtype=float)
    if delta.ndim != 1 or delta.size < 1:
        raise ValidationError(f"Increment must be a non-empty vector, got shape {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise DataError("Increment contains non-finite values")
    return TruncatedSignature(
        dim=delta.size, depth=depth, levels=tuple(_segment_levels(delta, depth))
    )


def chen_concat(first: TruncatedSignature, second: TruncatedSignature) -> TruncatedSignature:
    """Signature of the concatenated path: sum over splits w = u.v of first(u) * second(v)."""
    if first.dim != second.dim or first.depth != second.depth:
        raise ValidationError(
            f"Cannot concatenate signatures with (d, M) = ({first.dim}, {first.depth}) "
            f"and ({second.dim}, {second.depth})"
        )
    levels = _chen_levels(list(first.levels), list(second.levels), first.depth)
    return TruncatedSignature(dim=first.dim, depth=first.depth, levels=tuple(levels))


def _path_points(path: Union[LeadLagPath, np.ndarray]) -> np.ndarray:
    points = path.points if isinstance(path, LeadLagPath) else np.asarray(path, dtype=float)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValidationError(f"A path needs at least 2 points, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise DataError("Path contains non-finite points")
    return points


def path_signature(path: Union[LeadLagPath, np.ndarray], depth: int) -> TruncatedSignature:
    """Left fold of chen_concat over the segment signatures of a piecewise-linear path."""
    points = _path_points(path)
    segments = (segment_signature(delta, depth) for delta in np.diff(points, axis=0))
    return reduce(chen_concat, segments)


def path_signatures(paths: np.ndarray, depth: int) -> list[np.ndarray]:
    """Signatures of B paths at once, as per-level arrays of shape B x d**k.

    Same fold order as path_signature, so each row is bit-identical to it.
    """
    if depth < 1:
        raise ValidationError(f"depth must be >= 1, got {depth}")
    paths = np.asarray(paths, dtype=float)
    if paths.ndim != 3 or paths.shape[1] < 2:
        raise ValidationError(f"Expected B x P x d paths with P >= 2, got {paths.shape}")
    if not np.all(np.isfinite(paths)):
        raise DataError("Paths contain non-finite points")
    increments = np.diff(paths, axis=1)
    levels = _segment_levels(increments[:, 0], depth)
    for j in range(1, increments.shape[1]):
        levels = _chen_levels(levels, _segment_levels(increments[:, j], depth), depth)
    return levels


def signature_feature_vector(sig: TruncatedSignature) -> np.ndarray:
    """Coefficients of word length 1..M in lexicographic order, constant term excluded."""
    return np.concatenate(sig.levels[1:])


def levy_area(sig: TruncatedSignature) -> float:
    """Antisymmetric level-2 part ((12) - (21)) / 2 of a 2-D signature."""
    if sig.dim != 2 or sig.depth < 2:
        raise ValidationError("Levy area needs a 2-D signature of depth >= 2")
    return 0.5 * (sig["12"] - sig["21"])


def signature_rows(
    tickers: Sequence[str], sigs: Sequence[TruncatedSignature]
) -> list[tuple[str, str, float]]:
    """(ticker, word, coefficient) rows for the signature debug dump."""
    rows = []
    for ticker, sig in zip(tickers, sigs):
        for word, value in sig.coefficients().items():
            rows.append((ticker, word, value))
    return rows
