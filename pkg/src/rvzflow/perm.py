"""Permutations, the Rauzy operations ``a`` and ``b`` and Rauzy classes.

Permutations are 1-indexed image arrays: ``images[j-1] == pi(j)``.  Interval
``j`` of the top line is sent to position ``pi(j)`` of the bottom line, so the
last top interval is ``m`` and the last bottom interval is ``pi^-1(m)``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import ReduciblePermutationError

LABELS = ("a", "b")


@dataclass(frozen=True, order=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self) -> None:
        imgs = tuple(int(x) for x in self.images)
        object.__setattr__(self, "images", imgs)
        m = len(imgs)
        if m < 2:
            raise ValueError("a permutation needs m >= 2 symbols")
        if sorted(imgs) != list(range(1, m + 1)):
            raise ValueError(f"not a permutation of 1..{m}: {imgs}")

    @classmethod
    def parse(cls, text: str | Sequence[int]) -> "Permutation":
        """Build from ``"3,2,1"`` (also accepts spaces) or a sequence of ints."""
        if isinstance(text, str):
            parts = [p for p in text.replace(" ", ",").split(",") if p]
            return cls(tuple(int(p) for p in parts))
        return cls(tuple(text))

    @property
    def m(self) -> int:
        return len(self.images)

    def __call__(self, j: int) -> int:
        return self.images[j - 1]

    @cached_property
    def inverse_images(self) -> tuple[int, ...]:
        inv = [0] * self.m
        for j, pj in enumerate(self.images, start=1):
            inv[pj - 1] = j
        return tuple(inv)

    def inv(self, k: int) -> int:
        return self.inverse_images[k - 1]

    def __str__(self) -> str:
        return ",".join(map(str, self.images))

    def __repr__(self) -> str:
        return f"Permutation(({str(self)}))"


def is_irreducible(pi: Permutation) -> bool:
    """True iff ``pi{1..k} = {1..k}`` holds only for ``k = m``."""
    top = 0
    for k in range(1, pi.m):
        top = max(top, pi(k))
        if top == k:
            return False
    return True


def _require_irreducible(pi: Permutation) -> None:
    if not is_irreducible(pi):
        raise ReduciblePermutationError()


def apply_op(c: str, pi: Permutation) -> Permutation:
    """Rauzy operation ``c`` in ``{"a", "b"}`` applied to ``pi``."""
    _require_irreducible(pi)
    m = pi.m
    if c == "a":
        k = pi.inv(m)
        out = []
        for j in range(1, m + 1):
            if j <= k:
                out.append(pi(j))
            elif j == k + 1:
                out.append(pi(m))
            else:
                out.append(pi(j - 1))
    elif c == "b":
        pm = pi(m)
        out = []
        for j in range(1, m + 1):
            pj = pi(j)
            if pj <= pm:
                out.append(pj)
            elif pj < m:
                out.append(pj + 1)
            else:
                out.append(pm + 1)
    else:
        raise ValueError(f"unknown operation label {c!r}")
    return Permutation(tuple(out))


def apply_power(c: str, n: int, pi: Permutation) -> Permutation:
    for _ in range(n):
        pi = apply_op(c, pi)
    return pi


@dataclass(frozen=True)
class RauzyClass:
    """Members in lexicographic order of image arrays plus the labelled diagram.

    ``edges`` holds ``(from_index, label, to_index)`` sorted by source then label.
    """

    members: tuple[Permutation, ...]
    edges: tuple[tuple[int, str, int], ...]
    index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", {p: i for i, p in enumerate(self.members)})

    @property
    def m(self) -> int:
        return self.members[0].m

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, pi: object) -> bool:
        return pi in self.index

    def __iter__(self):
        return iter(self.members)

    def successor(self, i: int, label: str) -> int:
        return self._succ[(i, label)]

    @cached_property
    def _succ(self) -> dict:
        return {(i, c): j for i, c, j in self.edges}

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "members": [list(p.images) for p in self.members],
            "edges": [{"from": i, "label": c, "to": j} for i, c, j in self.edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "RauzyClass":
        members = tuple(Permutation(tuple(p)) for p in data["members"])
        edges = tuple((e["from"], e["label"], e["to"]) for e in data["edges"])
        if any(p.m != data["m"] for p in members):
            raise ValueError("member size does not match m")
        return cls(members, edges)

    @classmethod
    def from_json(cls, text: str) -> "RauzyClass":
        return cls.from_dict(json.loads(text))


def rauzy_class(pi: Permutation) -> RauzyClass:
    """Closure of ``pi`` under ``a`` and ``b`` (breadth-first)."""
    _require_irreducible(pi)
    seen = {pi}
    queue = deque([pi])
    raw_edges = []
    while queue:
        p = queue.popleft()
        for c in LABELS:
            q = apply_op(c, p)
            raw_edges.append((p, c, q))
            if q not in seen:
                seen.add(q)
                queue.append(q)
    members = tuple(sorted(seen))
    idx = {p: i for i, p in enumerate(members)}
    edges = tuple(sorted((idx[p], c, idx[q]) for p, c, q in raw_edges))
    return RauzyClass(members, edges)


def parse_permutations(items: Iterable[str]) -> list[Permutation]:
    return [Permutation.parse(s) for s in items]
