"""Seeded k-fold partitions, stratified by label when labels are given."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[int, ...], ...]
    seed: int
    stratified: bool

    @classmethod
    def make(
        cls,
        n: int,
        k: int = 5,
        seed: int = 0,
        strata: Sequence[Hashable] | None = None,
    ) -> "FoldPlan":
        """Partition ``range(n)`` into ``k`` folds whose sizes differ by at most one.

        With ``strata``, each stratum is shuffled and dealt round-robin
        after the previous one, so every fold gets a near-equal share of
        every class.
        """
        if k < 2:
            raise ValueError("need at least 2 folds")
        if n < k:
            raise ValueError(f"cannot split {n} records into {k} folds")
        rng = np.random.default_rng(seed)
        if strata is None:
            order = rng.permutation(n).tolist()
        else:
            if len(strata) != n:
                raise ValueError("one stratum label per record is required")
            groups: dict = {}
            for i, s in enumerate(strata):
                groups.setdefault(s, []).append(i)
            order = []
            for key in sorted(groups, key=repr):
                members = groups[key]
                order.extend(members[j] for j in rng.permutation(len(members)))
        buckets: list[list[int]] = [[] for _ in range(k)]
        for pos, idx in enumerate(order):
            buckets[pos % k].append(int(idx))
        return cls(tuple(tuple(sorted(b)) for b in buckets), seed, strata is not None)

    @property
    def k(self) -> int:
        return len(self.folds)

    def splits(self) -> Iterator[tuple[list[int], list[int]]]:
        for f, test in enumerate(self.folds):
            train = sorted(i for g, fold in enumerate(self.folds) if g != f for i in fold)
            yield train, list(test)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "stratified": self.stratified, "folds": [list(f) for f in self.folds]}
