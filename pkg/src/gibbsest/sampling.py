"""Stationary sample paths from ``mu_theta`` and empirical moment vectors."""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AdmissibilityError, DimensionError
from .shift_core import PotentialFamily, SubshiftSpec, Word, as_word, window_values
from .thermo import GibbsSystem

__all__ = [
    "SampleSeq",
    "make_rng",
    "sample_path",
    "empirical_moments",
    "read_sample",
    "write_sample",
]


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator addressed by ``(seed, stream)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SampleSeq:
    symbols: Word
    seed: int
    stream: int = 0
    theta_true: np.ndarray | None = None

    def __len__(self):
        return len(self.symbols)


def _transition_tables(sys: GibbsSystem):
    if "sampler" in sys._memo:
        return sys._memo["sampler"]
    lay = sys.layout
    q = sys.forward_kernel()
    nstate = len(lay.words)
    cum, nxt, sym = [], [], []
    for i in range(nstate):
        cols = np.flatnonzero(q[i] > 0)
        probs = q[i, cols]
        c = np.cumsum(probs)
        c /= c[-1]
        cum.append(c.tolist())
        nxt.append(cols.tolist())
        sym.append(lay.words[cols, -1].tolist())
    out = (cum, nxt, sym)
    sys._memo["sampler"] = out
    return out


def sample_path(sys: GibbsSystem, n: int, seed: int, stream: int = 0) -> SampleSeq:
    """Draw ``X_0..X_{n-1}`` from the shift-invariant Gibbs measure.

    The first r-word is drawn from ``sys.mu``; each further symbol follows the
    stationary order-r Markov kernel ``exp(F - P) nu(w') / nu(w)``.
    """
    r = sys.order
    if n < r:
        raise DimensionError(f"path length must be at least {r}")
    rng = make_rng(seed, stream)
    lay = sys.layout
    mu_cum = np.cumsum(sys.mu)
    state = int(min(np.searchsorted(mu_cum, rng.random() * mu_cum[-1], side="right"), len(mu_cum) - 1))
    cum, nxt, sym = _transition_tables(sys)
    out = np.empty(n, dtype=np.int64)
    out[:r] = lay.words[state]
    u = rng.random(n - r).tolist()
    for k in range(n - r):
        c = cum[state]
        j = bisect_right(c, u[k])
        if j >= len(c):
            j = len(c) - 1
        out[r + k] = sym[state][j]
        state = nxt[state][j]
    return SampleSeq(Word.from_codes(out), int(seed), int(stream), sys.theta)


def empirical_moments(fam: PotentialFamily, w) -> np.ndarray:
    """``alpha_n = S_n(f0, ..., fd) / n`` with the canonical-continuation convention."""
    word = as_word(w, fam.spec)
    n = len(word)
    if n < fam.common_depth:
        raise DimensionError(f"word length {n} is shorter than the family depth {fam.common_depth}")
    return np.array([window_values(f, word).sum() / n for f in fam.members()])


def read_sample(path, spec: SubshiftSpec | None = None) -> Word:
    """Whitespace-separated 1-based symbols."""
    text = Path(path).read_text()
    try:
        vals = [int(tok) for tok in text.split()]
    except ValueError as exc:
        raise AdmissibilityError(f"sample file {path} contains a non-integer token") from exc
    if not vals:
        raise AdmissibilityError(f"sample file {path} is empty")
    return as_word(vals, spec)


def write_sample(path, w, per_line: int = 64) -> None:
    syms = as_word(w).symbols
    lines = [" ".join(str(s) for s in syms[i:i + per_line]) for i in range(0, len(syms), per_line)]
    Path(path).write_text("\n".join(lines) + "\n")
