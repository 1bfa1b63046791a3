import math

import pytest

from iss_certify import (
    Field, FieldTerm, InitialProfile, ProblemSpec, ProfileTerm, Signal, SignalTerm, SpaceFactor,
    ginzburg_landau_spec, reaction_diffusion_spec,
)


def sine_profile(A=1.0, k=1, weight=0.0):
    return InitialProfile((ProfileTerm("sine_mode", A=A, k=k),), weight)


def constant_field(A):
    return Field((FieldTerm(SpaceFactor("polynomial", (1.0,)), SignalTerm("constant", A)),))


def constant_signal(A):
    return Signal((SignalTerm("constant", A),))


def heat_spec(**data):
    """u_t = u_xx with homogeneous Dirichlet data."""
    return ProblemSpec(1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, **data)


@pytest.fixture
def rd_spec():
    return reaction_diffusion_spec(1.0, 0.0, 1.0, 1.0)


@pytest.fixture
def gl_spec():
    return ginzburg_landau_spec(1.0, 1.0, 1.0, 1.0, 1.0)


INV_SQRT2 = 1.0 / math.sqrt(2.0)
