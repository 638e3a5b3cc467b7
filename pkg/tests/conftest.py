"""Shared fixtures: cached meshes and assembled systems.

Mesh generation and assembly are deterministic, so expensive objects are
built once per session and shared read-only across tests.
"""

import numpy as np
import pytest

import sectorfem as sf
from sectorfem import fem

BETA = 2.0 / 3.0


@pytest.fixture(scope="session")
def mesh_cache():
    cache = {}

    def get(h_star, gamma, beta=BETA):
        key = (beta, h_star, gamma)
        if key not in cache:
            cache[key] = sf.generate_sector_mesh(beta, h_star, gamma)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def assembled_cache(mesh_cache):
    """(mesh, dofmap, mass, stiffness) for a given (h_star, gamma, bc, K)."""
    cache = {}

    def get(h_star, gamma, bc_kind, K):
        key = (h_star, gamma, bc_kind, K)
        if key not in cache:
            msh = mesh_cache(h_star, gamma)
            dm = sf.build_dofmap(msh, bc_kind)
            cache[key] = (msh, dm, fem.assemble_mass(msh, dm),
                          fem.assemble_stiffness(msh, dm, K))
        return cache[key]

    return get


def mass_norm(mass, v):
    return float(np.sqrt(v @ (mass @ v)))
