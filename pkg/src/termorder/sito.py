"""Semantic importance of term order (SITO) and the g/h pair weights."""

from __future__ import annotations

from dataclasses import dataclass

from .index import PositionalIndex

DEFAULT_WINDOW = 4


def sem_from_counts(df_ab: int, df_ba: int) -> float:
    """|1/2 - df_ab / (df_ab + df_ba)|, or 0 when neither order was seen.

    Evaluated as |df_ab - df_ba| / (2 (df_ab + df_ba)): the same quantity, but
    a single rounding of integer inputs keeps it exactly symmetric.
    """
    total = df_ab + df_ba
    if total == 0:
        return 0.0
    return abs(df_ab - df_ba) / (2 * total)


def g_weight(sem: float) -> float:
    return 0.75 + sem


def h_weight(sem: float) -> float:
    # 2 - g rather than 1.25 - sem so that g + h == 2 holds in floating point
    return 2.0 - g_weight(sem)


@dataclass(frozen=True)
class SitoConfig:
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("SITO window must be at least 2")


class Sito:
    """SITO statistics over an index; Df lookups are memoized by the index."""

    def __init__(self, index: PositionalIndex, config: SitoConfig | int = DEFAULT_WINDOW):
        self.index = index
        self.config = config if isinstance(config, SitoConfig) else SitoConfig(config)

    @property
    def window(self):
        return self.config.window

    def df(self, a: int, b: int) -> int:
        return self.index.pair_doc_freq(a, b, self.window)

    def sem(self, a: int, b: int) -> float:
        return sem_from_counts(self.df(a, b), self.df(b, a))

    def g(self, a: int, b: int) -> float:
        return g_weight(self.sem(a, b))

    def h(self, a: int, b: int) -> float:
        return h_weight(self.sem(a, b))
