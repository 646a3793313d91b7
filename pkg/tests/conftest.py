from __future__ import annotations

from typing import Callable

import numpy as np
import pytest

from src.model import SpacecraftInertia, sigmas_from_inertia
from src.stability import boundary_margin, classify


SEED = 20240611


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture
def stable_body() -> SpacecraftInertia:
    return SpacecraftInertia(100.0, 120.0, 80.0)


@pytest.fixture
def marginal_body() -> SpacecraftInertia:
    # Lyapunov stable, but the alpha13 = 0 choice is not positive definite
    return SpacecraftInertia(100.0, 95.0, 99.0)


@pytest.fixture
def unstable_body() -> SpacecraftInertia:
    return SpacecraftInertia(80.0, 120.0, 100.0)


@pytest.fixture
def symmetric_body() -> SpacecraftInertia:
    return SpacecraftInertia(1.0, 1.0, 1.0)


@pytest.fixture
def sample_bodies(rng: np.random.Generator) -> Callable[..., list[SpacecraftInertia]]:
    """Random inertias in [1, 3]^3 at least ``margin`` from every condition boundary."""

    def _sample(count: int, margin: float = 1e-6, verdict: str | None = None) -> list[SpacecraftInertia]:
        out: list[SpacecraftInertia] = []
        while len(out) < count:
            j = SpacecraftInertia(*(float(v) for v in rng.uniform(1.0, 3.0, size=3)))
            sigma = sigmas_from_inertia(j)
            if boundary_margin(sigma) < margin:
                continue
            if verdict is not None and classify(sigma).verdict != verdict:
                continue
            out.append(j)
        return out

    return _sample
