import numpy as np
import pytest

import fractalab as fl


def random_grid_measure(rng, max_atoms=40, min_atoms=1, max_level=7, bases=(2, 3, 4, 5)):
    """Seeded random measure on a modest grid; used by oracle sweeps."""
    base = int(rng.choice(bases))
    level = int(rng.integers(2, max_level + 1))
    grid = base**level
    n = int(rng.integers(min_atoms, min(max_atoms, grid) + 1))
    indices = np.sort(rng.choice(grid, size=n, replace=False))
    weights = rng.random(n) + 0.05
    weights /= weights.sum()
    return fl.GridMeasure(base=base, level=level, indices=indices, weights=weights)


@pytest.fixture(scope="session")
def middle_thirds_8():
    return fl.build_cantor(fl.middle_thirds(8))


@pytest.fixture(scope="session")
def middle_thirds_9():
    return fl.build_cantor(fl.middle_thirds(9))


@pytest.fixture(scope="session")
def two_atom_half():
    """Atoms at positions 0 and 1/2, equal mass."""
    return fl.GridMeasure(
        base=2, level=1, indices=np.array([0, 1]), weights=np.array([0.5, 0.5])
    )
