"""Subject-level cross-validation folds.

Each fold holds out all frames of two subjects for test and one for
validation; the rest train. Test pairs are assigned round-robin over a
seeded subject order. With fewer than 2 * n_folds subjects the round-robin
wraps, reusing the lexicographically first subject first (it is pinned to
the front of the order so the wrap point is deterministic across seeds).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from echoguide.errors import InsufficientSubjectsError


@dataclass(frozen=True)
class FoldPlan:
    fold_index: int
    test_subjects: frozenset[str]
    val_subjects: frozenset[str]
    train_subjects: frozenset[str]

    def __post_init__(self):
        assert not self.test_subjects & self.val_subjects
        assert not self.test_subjects & self.train_subjects
        assert not self.val_subjects & self.train_subjects

    @property
    def all_subjects(self) -> frozenset[str]:
        return self.test_subjects | self.val_subjects | self.train_subjects

    def to_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "test_subjects": sorted(self.test_subjects),
            "val_subjects": sorted(self.val_subjects),
            "train_subjects": sorted(self.train_subjects),
        }


def make_subject_folds(
    subject_ids: set[str] | list[str], seed: int = 0, n_folds: int = 5
) -> list[FoldPlan]:
    subjects = sorted(set(subject_ids))
    if len(subjects) < 4:
        raise InsufficientSubjectsError(
            f"need at least 4 subjects (2 test + 1 val + 1 train), got {len(subjects)}"
        )

    first, rest = subjects[0], subjects[1:]
    random.Random(seed).shuffle(rest)
    order = [first] + rest
    n = len(order)

    folds = []
    for k in range(n_folds):
        test = {order[(2 * k) % n], order[(2 * k + 1) % n]}
        # next subject in cyclic order that is not already held out
        offset = 2 * k + 2
        while order[offset % n] in test:
            offset += 1
        val = {order[offset % n]}
        train = set(order) - test - val
        folds.append(
            FoldPlan(
                fold_index=k,
                test_subjects=frozenset(test),
                val_subjects=frozenset(val),
                train_subjects=frozenset(train),
            )
        )
    return folds
