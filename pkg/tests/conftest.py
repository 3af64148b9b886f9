from pytest import fixture

import numpy as np

import frobthresh


@fixture
def rng():
    """Random generator with a fixed seed."""
    return np.random.default_rng(20240601)


@fixture
def hypersurface():
    """Factory for the defining polynomial of a hypersurface family."""
    def build(family, n, p):
        layout = frobthresh.VariableLayout(family, n)
        return frobthresh.build_family_polynomial(layout, p)
    return build
