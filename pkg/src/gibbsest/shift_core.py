"""Subshifts of finite type, words, locally constant potentials and model builders.

Symbols are 1-based at the public surface and 0-based ("codes") internally.
All tables are dense numpy arrays of shape ``(a,) * depth`` indexed by codes;
entries at inadmissible words are kept at zero and never read.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import AdmissibilityError, DimensionError, ModelError

__all__ = [
    "SubshiftSpec",
    "Word",
    "LocallyConstantFn",
    "PotentialFamily",
    "as_word",
    "as_theta",
    "enumerate_admissible_words",
    "assemble_potential",
    "birkhoff_sum",
    "canonical_continuation",
    "bernoulli_family",
    "markov_family",
    "markov_to_theta",
    "theta_to_markov",
    "ModelConfig",
    "model_from_dict",
    "load_model",
]


class SubshiftSpec:
    """Alphabet ``{1..a}`` with a primitive 0/1 incidence matrix.

    ``incidence[i, j] == 1`` means symbol ``j+1`` may follow symbol ``i+1``.
    """

    __slots__ = ("_incidence", "_key")

    def __init__(self, incidence):
        arr = np.asarray(incidence)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ModelError("incidence must be a square matrix")
        if arr.shape[0] < 2:
            raise ModelError("alphabet size must be at least 2")
        if not np.all((arr == 0) | (arr == 1)):
            raise ModelError("incidence entries must be 0 or 1")
        a = arr.astype(np.int64)
        if np.any(a.sum(axis=1) == 0) or np.any(a.sum(axis=0) == 0):
            raise ModelError("incidence has a dead symbol (empty row or column)")
        if not _is_primitive(a):
            raise ModelError("incidence matrix is not primitive")
        a = a.astype(bool)
        a.setflags(write=False)
        self._incidence = a
        self._key = (a.shape[0], a.tobytes())

    @classmethod
    def full_shift(cls, a: int) -> "SubshiftSpec":
        return cls(np.ones((a, a), dtype=int))

    @classmethod
    def golden_mean(cls) -> "SubshiftSpec":
        return cls([[0, 1], [1, 1]])

    @property
    def alphabet_size(self) -> int:
        return self._incidence.shape[0]

    @property
    def incidence(self) -> np.ndarray:
        return self._incidence

    def successors(self, code: int) -> np.ndarray:
        return np.flatnonzero(self._incidence[code])

    def is_admissible(self, codes: np.ndarray) -> bool:
        codes = np.asarray(codes)
        if codes.size == 0:
            return True
        if codes.min() < 0 or codes.max() >= self.alphabet_size:
            return False
        return bool(np.all(self._incidence[codes[:-1], codes[1:]]))

    def __eq__(self, other):
        return isinstance(other, SubshiftSpec) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        rows = "; ".join(" ".join(str(int(v)) for v in row) for row in self._incidence)
        return f"SubshiftSpec(a={self.alphabet_size}, incidence=[{rows}])"


def _is_primitive(a: np.ndarray) -> bool:
    # Wielandt: a primitive k x k matrix has A^((k-1)^2+1) > 0.
    k = a.shape[0]
    b = (a > 0).astype(np.int64)
    p = b.copy()
    for _ in range((k - 1) ** 2):
        p = np.minimum(p @ b, 1)
    return bool(np.all(p > 0))


class Word:
    """An immutable finite word; ``symbols`` is 1-based, ``codes`` 0-based."""

    __slots__ = ("codes",)

    def __init__(self, symbols: Iterable[int]):
        arr = np.asarray(list(symbols) if not isinstance(symbols, np.ndarray) else symbols)
        if arr.ndim != 1:
            raise AdmissibilityError("a word is a flat sequence of symbols")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise AdmissibilityError("symbols must be integers")
        codes = arr.astype(np.int64) - 1
        if codes.size and codes.min() < 0:
            raise AdmissibilityError("symbols are 1-based; got a symbol < 1")
        codes.setflags(write=False)
        self.codes = codes

    @classmethod
    def from_codes(cls, codes) -> "Word":
        w = cls.__new__(cls)
        c = np.array(codes, dtype=np.int64)
        c.setflags(write=False)
        w.codes = c
        return w

    @property
    def symbols(self) -> tuple:
        return tuple(int(c) + 1 for c in self.codes)

    def check(self, spec: SubshiftSpec) -> "Word":
        if not spec.is_admissible(self.codes):
            raise AdmissibilityError(f"word is not admissible for {spec!r}")
        return self

    def __len__(self):
        return int(self.codes.size)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word.from_codes(self.codes[item])
        return int(self.codes[item]) + 1

    def __eq__(self, other):
        if isinstance(other, Word):
            return np.array_equal(self.codes, other.codes)
        if isinstance(other, (tuple, list)):
            return self.symbols == tuple(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.codes.tobytes())

    def __repr__(self):
        if len(self) > 20:
            head = " ".join(str(s) for s in self.symbols[:20])
            return f"Word({head} ... n={len(self)})"
        return "Word(" + " ".join(str(s) for s in self.symbols) + ")"


def as_word(w, spec: SubshiftSpec | None = None) -> Word:
    word = w if isinstance(w, Word) else Word(w)
    if spec is not None:
        if len(word) and word.codes.max() >= spec.alphabet_size:
            raise AdmissibilityError(
                f"symbol {int(word.codes.max()) + 1} exceeds alphabet size {spec.alphabet_size}"
            )
        word.check(spec)
    return word


def as_theta(theta, d: int) -> np.ndarray:
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if t.ndim != 1 or t.size != d:
        raise DimensionError(f"parameter must have length {d}, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise DimensionError("parameter entries must be finite")
    return t


@lru_cache(maxsize=256)
def admissible_mask(spec: SubshiftSpec, depth: int) -> np.ndarray:
    """Boolean array of shape ``(a,)*depth`` marking admissible words."""
    a = spec.alphabet_size
    mask = np.ones((a,) * depth, dtype=bool)
    inc = spec.incidence
    for k in range(depth - 1):
        shape = [1] * depth
        shape[k], shape[k + 1] = a, a
        mask &= inc.reshape(shape)
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=256)
def admissible_codes(spec: SubshiftSpec, depth: int) -> np.ndarray:
    """Admissible words of the given length as an ``(N, depth)`` code array, lexicographic."""
    idx = np.argwhere(admissible_mask(spec, depth))
    idx.setflags(write=False)
    return idx


def enumerate_admissible_words(spec: SubshiftSpec, n: int) -> list:
    if n < 1:
        raise DimensionError("word length must be at least 1")
    return [Word.from_codes(row) for row in admissible_codes(spec, n)]


def canonical_continuation(spec: SubshiftSpec, last_code: int, length: int) -> np.ndarray:
    """Lexicographically smallest admissible continuation after ``last_code``."""
    out = np.empty(length, dtype=np.int64)
    cur = int(last_code)
    for k in range(length):
        cur = int(spec.successors(cur)[0])
        out[k] = cur
    return out


def _flat_index(windows: np.ndarray, a: int) -> np.ndarray:
    m = windows.shape[-1]
    weights = a ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return windows @ weights


class LocallyConstantFn:
    """A real function of the first ``depth`` coordinates of a sequence."""

    __slots__ = ("spec", "depth", "table")

    def __init__(self, spec: SubshiftSpec, depth: int, table):
        if depth < 1:
            raise ModelError("depth must be at least 1")
        a = spec.alphabet_size
        tab = np.array(table, dtype=float)
        if tab.shape != (a,) * depth:
            raise ModelError(f"table shape {tab.shape} does not match depth {depth} over {a} symbols")
        mask = admissible_mask(spec, depth)
        if not np.all(np.isfinite(tab[mask])):
            raise ModelError("potential values must be finite")
        tab = np.where(mask, tab, 0.0)
        tab.setflags(write=False)
        self.spec = spec
        self.depth = depth
        self.table = tab

    @classmethod
    def from_values(cls, spec: SubshiftSpec, depth: int, values) -> "LocallyConstantFn":
        """Build from a mapping word -> value or a sequence in lexicographic order.

        Every admissible word must receive exactly one value.
        """
        words = admissible_codes(spec, depth)
        table = np.zeros((spec.alphabet_size,) * depth)
        if isinstance(values, Mapping):
            seen = set()
            for key, val in values.items():
                codes = tuple(s - 1 for s in (key if isinstance(key, tuple) else tuple(key)))
                if len(codes) != depth:
                    raise ModelError(f"word {key!r} has length {len(codes)}, expected {depth}")
                if not spec.is_admissible(np.asarray(codes)):
                    raise ModelError(f"word {key!r} is not admissible")
                if codes in seen:
                    raise ModelError(f"duplicate entry for word {key!r}")
                seen.add(codes)
                table[codes] = float(val)
            if len(seen) != len(words):
                raise ModelError(f"table has {len(seen)} entries, expected {len(words)} admissible words")
        else:
            vals = np.asarray(values, dtype=float).ravel()
            if vals.size != len(words):
                raise ModelError(f"expected {len(words)} values, got {vals.size}")
            table[tuple(words.T)] = vals
        return cls(spec, depth, table)

    @classmethod
    def from_callable(cls, spec: SubshiftSpec, depth: int, fn: Callable[[tuple], float]):
        words = admissible_codes(spec, depth)
        return cls.from_values(spec, depth, [fn(tuple(int(c) + 1 for c in w)) for w in words])

    @classmethod
    def constant(cls, spec: SubshiftSpec, value: float, depth: int = 1):
        return cls(spec, depth, np.full((spec.alphabet_size,) * depth, float(value)))

    @classmethod
    def indicator(cls, spec: SubshiftSpec, word) -> "LocallyConstantFn":
        w = as_word(word, spec)
        table = np.zeros((spec.alphabet_size,) * len(w))
        table[tuple(w.codes)] = 1.0
        return cls(spec, len(w), table)

    @classmethod
    def coboundary(cls, h: "LocallyConstantFn") -> "LocallyConstantFn":
        """The function ``h - h o shift``, of depth ``h.depth + 1``."""
        m = h.depth
        lifted = h.lift(m + 1).table
        shifted = np.broadcast_to(h.table[np.newaxis, ...], lifted.shape)
        return cls(h.spec, m + 1, lifted - shifted)

    def lift(self, depth: int) -> "LocallyConstantFn":
        if depth < self.depth:
            raise ModelError("cannot lift to a smaller depth")
        if depth == self.depth:
            return self
        a = self.spec.alphabet_size
        extra = depth - self.depth
        tab = np.broadcast_to(self.table.reshape(self.table.shape + (1,) * extra), (a,) * depth)
        return LocallyConstantFn(self.spec, depth, tab)

    def lifted_table(self, depth: int) -> np.ndarray:
        return self.lift(depth).table

    def evaluate_codes(self, windows: np.ndarray) -> np.ndarray:
        """Values on an ``(k, depth)`` array of code windows."""
        return self.table.ravel()[_flat_index(np.asarray(windows), self.spec.alphabet_size)]

    def __call__(self, word) -> float:
        w = as_word(word, self.spec)
        if len(w) < self.depth:
            raise DimensionError(f"word length {len(w)} is shorter than depth {self.depth}")
        return float(self.table[tuple(w.codes[: self.depth])])

    def values(self) -> dict:
        return {tuple(int(c) + 1 for c in w): float(self.table[tuple(w)])
                for w in admissible_codes(self.spec, self.depth)}

    def value_vector(self, depth: int | None = None) -> np.ndarray:
        """Values on admissible words of ``depth`` (default own depth), lexicographic."""
        depth = self.depth if depth is None else depth
        words = admissible_codes(self.spec, depth)
        return self.lift(depth).table[tuple(words.T)]

    def oscillation(self) -> float:
        v = self.value_vector()
        return float(v.max() - v.min())

    def _combine(self, other, op):
        if isinstance(other, LocallyConstantFn):
            if other.spec != self.spec:
                raise ModelError("functions live on different shifts")
            m = max(self.depth, other.depth)
            return LocallyConstantFn(self.spec, m, op(self.lift(m).table, other.lift(m).table))
        return LocallyConstantFn(self.spec, self.depth, op(self.table, float(other)))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        return LocallyConstantFn(self.spec, self.depth, self.table * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"LocallyConstantFn(depth={self.depth}, a={self.spec.alphabet_size})"


class PotentialFamily:
    """Linear family ``F_theta = f0 + sum_i theta_i f_i`` of locally constant potentials."""

    __slots__ = ("base", "directions", "_cache")

    def __init__(self, base: LocallyConstantFn, directions: Sequence[LocallyConstantFn]):
        directions = tuple(directions)
        if not directions:
            raise ModelError("a family needs at least one direction")
        for f in directions:
            if f.spec != base.spec:
                raise ModelError("all potentials must live on the same shift")
        self.base = base
        self.directions = directions
        self._cache = {}

    @property
    def spec(self) -> SubshiftSpec:
        return self.base.spec

    @property
    def d(self) -> int:
        return len(self.directions)

    @property
    def common_depth(self) -> int:
        return max(f.depth for f in (self.base,) + self.directions)

    def members(self) -> tuple:
        return (self.base,) + self.directions

    def stacked_tables(self, depth: int) -> np.ndarray:
        """``(d+1, a**depth)`` flat tables of (f0, ..., fd) lifted to ``depth``."""
        key = ("stack", depth)
        if key not in self._cache:
            arr = np.stack([f.lift(depth).table.ravel() for f in self.members()])
            arr.setflags(write=False)
            self._cache[key] = arr
        return self._cache[key]

    def assemble(self, theta) -> LocallyConstantFn:
        t = as_theta(theta, self.d)
        m = self.common_depth
        flat = self.stacked_tables(m)
        vals = flat[0] + t @ flat[1:]
        return LocallyConstantFn(self.spec, m, vals.reshape((self.spec.alphabet_size,) * m))

    def without(self, k: int) -> "PotentialFamily":
        """Drop direction ``k`` (0-based); the base potential is unchanged."""
        if not 0 <= k < self.d:
            raise DimensionError(f"direction index {k} out of range")
        rest = self.directions[:k] + self.directions[k + 1:]
        if not rest:
            raise DimensionError("dropping the only direction leaves an empty family")
        return PotentialFamily(self.base, rest)

    def __repr__(self):
        return f"PotentialFamily(d={self.d}, depth={self.common_depth}, spec={self.spec!r})"


def assemble_potential(fam: PotentialFamily, p) -> LocallyConstantFn:
    return fam.assemble(p)


def _completed_codes(spec: SubshiftSpec, codes: np.ndarray, depth: int, anchor=None) -> np.ndarray:
    if depth <= 1:
        return codes
    if anchor is None:
        tail = canonical_continuation(spec, codes[-1], depth - 1)
    else:
        anc = as_word(anchor).codes
        if anc.size < depth - 1:
            raise DimensionError(f"anchor must supply at least {depth - 1} symbols")
        tail = anc[: depth - 1]
        if not spec.is_admissible(np.concatenate([codes[-1:], tail])):
            raise AdmissibilityError("anchor is not an admissible continuation of the word")
    return np.concatenate([codes, tail])


def window_values(f: LocallyConstantFn, w, anchor=None) -> np.ndarray:
    """``f`` evaluated at each of the ``n`` shifts of the completed word."""
    word = as_word(w, f.spec)
    n = len(word)
    if n < f.depth:
        raise DimensionError(f"word length {n} is shorter than depth {f.depth}")
    ext = _completed_codes(f.spec, word.codes, f.depth, anchor)
    windows = np.lib.stride_tricks.sliding_window_view(ext, f.depth)[:n]
    return f.evaluate_codes(windows)


def birkhoff_sum(f: LocallyConstantFn, w) -> float:
    """Sum of ``f`` over the ``n`` shifts of ``w``.

    The last ``depth-1`` windows run past the end of ``w``; they are completed
    with the lexicographically smallest admissible continuation, so the value
    equals the ergodic sum at one fixed point of the cylinder ``[w]``.
    """
    return float(window_values(f, w).sum())


def bernoulli_family(a: int):
    """Full ``a``-shift with indicator directions of symbols ``1..a-1`` and ``f0 = 0``."""
    if a < 2:
        raise ModelError("alphabet size must be at least 2")
    spec = SubshiftSpec.full_shift(a)
    base = LocallyConstantFn.constant(spec, 0.0)
    dirs = [LocallyConstantFn.indicator(spec, [i]) for i in range(1, a)]
    return spec, PotentialFamily(base, dirs)


def _markov_pairs(spec: SubshiftSpec) -> np.ndarray:
    a = spec.alphabet_size
    if not spec.incidence[a - 1, a - 1]:
        raise ModelError(f"the reference pair ({a},{a}) must be admissible")
    pairs = admissible_codes(spec, 2)
    keep = ~((pairs[:, 0] == a - 1) & (pairs[:, 1] == a - 1))
    return pairs[keep]


def markov_family(spec: SubshiftSpec) -> PotentialFamily:
    """Pair-indicator directions for every admissible pair except ``(a, a)``.

    These directions are not independent modulo coboundaries: the free
    dimension of Markov measures on the shift is ``#pairs - a``.
    """
    base = LocallyConstantFn.constant(spec, 0.0, depth=2)
    dirs = [LocallyConstantFn.indicator(spec, tuple(int(c) + 1 for c in p)) for p in _markov_pairs(spec)]
    return PotentialFamily(base, dirs)


def _check_stochastic(p, spec: SubshiftSpec | None):
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ModelError("transition table must be square")
    if np.any(p < 0) or not np.allclose(p.sum(axis=1), 1.0, atol=1e-12, rtol=0):
        raise ModelError("transition table is not stochastic")
    support = p > 0
    if spec is None:
        spec = SubshiftSpec(support.astype(int))
    elif spec.alphabet_size != p.shape[0] or not np.array_equal(support, spec.incidence):
        raise ModelError("transition table support does not match the incidence matrix")
    return p, spec


def markov_to_theta(p, spec: SubshiftSpec | None = None) -> np.ndarray:
    """Coordinates ``t_ij = log p_ij - log(a - sum_{(l,k) != (a,a)} p_lk)``.

    The normalizer equals ``p_aa``; ordering follows :func:`markov_family`.
    """
    p, spec = _check_stochastic(p, spec)
    pairs = _markov_pairs(spec)
    a = spec.alphabet_size
    rest = p.sum() - p[a - 1, a - 1]
    norm = a - rest
    return np.log(p[pairs[:, 0], pairs[:, 1]]) - np.log(norm)


def theta_to_markov(t, spec: SubshiftSpec) -> np.ndarray:
    """Transition matrix of the stationary Markov measure of ``F_t``.

    Obtained by normalizing the pair transfer matrix with its Perron data, which
    reduces to ``p_aa = exp(t_aa)``, ``p_ij = exp(t_ij + t_aa)`` with
    ``t_aa = -P(F_t)`` whenever ``t`` comes from :func:`markov_to_theta`.
    """
    from .thermo import perron_pair

    pairs = _markov_pairs(spec)
    t = as_theta(t, len(pairs))
    a = spec.alphabet_size
    m = np.zeros((a, a))
    m[pairs[:, 0], pairs[:, 1]] = np.exp(t)
    m[a - 1, a - 1] = 1.0
    lam, right, _ = perron_pair(m)
    p = m * right[np.newaxis, :] / (lam * right[:, np.newaxis])
    return p / p.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class ModelConfig:
    """Parsed model file: the shift, the family and optional run parameters."""

    spec: SubshiftSpec
    family: PotentialFamily
    name: str = ""
    theta: np.ndarray | None = None
    box: np.ndarray | None = None
    interval: tuple | None = None


def _parse_word_key(key) -> tuple:
    if isinstance(key, str):
        toks = key.replace(",", " ").split()
        try:
            return tuple(int(t) for t in toks)
        except ValueError as exc:
            raise ModelError(f"bad word key {key!r}") from exc
    return tuple(int(t) for t in key)


def _table_from_dict(spec: SubshiftSpec, entry) -> LocallyConstantFn:
    if not isinstance(entry, Mapping):
        raise ModelError("each potential must be an object with 'depth' and 'values'")
    if "constant" in entry:
        return LocallyConstantFn.constant(spec, float(entry["constant"]), int(entry.get("depth", 1)))
    if "indicator" in entry:
        return LocallyConstantFn.indicator(spec, _parse_word_key(entry["indicator"]))
    try:
        depth = int(entry["depth"])
        values = entry["values"]
    except KeyError as exc:
        raise ModelError(f"potential is missing the field {exc.args[0]!r}") from exc
    if depth < 1:
        raise ModelError("potential depth must be at least 1")
    if isinstance(values, Mapping):
        vals = {_parse_word_key(k): float(v) for k, v in values.items()}
        if "default" in entry:
            for w in admissible_codes(spec, depth):
                vals.setdefault(tuple(int(c) + 1 for c in w), float(entry["default"]))
        return LocallyConstantFn.from_values(spec, depth, vals)
    return LocallyConstantFn.from_values(spec, depth, values)


def model_from_dict(doc: Mapping) -> ModelConfig:
    """Build a model from a parsed model document.

    Recognised keys: ``alphabet_size``, ``incidence`` (rows of 0/1; default the
    full shift), ``builder`` (``"bernoulli"`` or ``"markov"``) or ``base`` plus
    ``directions`` (each ``{"depth", "values"}`` with values given as a mapping
    ``"1 2" -> v`` or a list in lexicographic order of admissible words, an
    optional ``"default"`` for unlisted words, or the shorthands
    ``{"constant": c}`` and ``{"indicator": "1 2"}``), and the optional
    ``theta``, ``transition`` (Markov builder only), ``box`` and ``interval``.
    """
    if not isinstance(doc, Mapping):
        raise ModelError("model document must be an object")
    builder = doc.get("builder")
    try:
        a = int(doc["alphabet_size"])
    except KeyError as exc:
        raise ModelError("model document needs 'alphabet_size'") from exc
    except (TypeError, ValueError) as exc:
        raise ModelError("alphabet_size must be an integer") from exc
    inc = doc.get("incidence")
    spec = SubshiftSpec.full_shift(a) if inc is None else SubshiftSpec(inc)
    if spec.alphabet_size != a:
        raise ModelError("incidence matrix size does not match alphabet_size")
    theta = doc.get("theta")
    if builder == "bernoulli":
        if inc is not None and not np.all(spec.incidence):
            raise ModelError("the Bernoulli builder needs the full shift")
        spec, fam = bernoulli_family(a)
    elif builder == "markov":
        fam = markov_family(spec)
        if "transition" in doc:
            if theta is not None:
                raise ModelError("give either 'theta' or 'transition', not both")
            theta = markov_to_theta(doc["transition"], spec)
    elif builder is None:
        if "directions" not in doc:
            raise ModelError("model document needs 'directions' or a 'builder'")
        base = _table_from_dict(spec, doc["base"]) if "base" in doc else LocallyConstantFn.constant(spec, 0.0)
        dirs = [_table_from_dict(spec, e) for e in doc["directions"]]
        fam = PotentialFamily(base, dirs)
    else:
        raise ModelError(f"unknown builder {builder!r}")
    if theta is not None:
        theta = as_theta(theta, fam.d)
    box = doc.get("box")
    if box is not None:
        box = np.asarray(box, dtype=float)
        if box.shape == (2,):
            box = np.tile(box, (fam.d, 1))
        if box.shape != (fam.d, 2) or np.any(box[:, 0] > box[:, 1]):
            raise ModelError(f"box must be a list of {fam.d} increasing [lo, hi] pairs")
    interval = doc.get("interval")
    if interval is not None:
        interval = tuple(float(x) for x in interval)
        if len(interval) != 2:
            raise ModelError("interval must be [lo, hi]")
    return ModelConfig(spec, fam, str(doc.get("name", "")), theta, box, interval)


def load_model(path) -> ModelConfig:
    """Read a JSON model file (see :func:`model_from_dict`)."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ModelError(f"model file {p} not found") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file {p} is not valid JSON: {exc}") from exc
    return model_from_dict(doc)
