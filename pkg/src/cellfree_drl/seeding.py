"""Labelled sub-streams derived from one master seed.

Each consumer (scenario tapes, agent init, exploration noise, evaluation,
worker pools) gets ``SeedSequence(master, spawn_key=(crc32(label), *index))``,
so changing how one component draws never shifts another's numbers.
"""
from __future__ import annotations

import zlib

import numpy as np


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def sub_seed(master: int, label: str, *index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=(label_key(label), *map(int, index)))


def stream(master: int, label: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(sub_seed(master, label, *index))
