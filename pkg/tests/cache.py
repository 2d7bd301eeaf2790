"""Example networks and expensive runs shared between test modules."""

from functools import lru_cache

from coalnet.branches import predict
from coalnet.continuation import trace_branches
from coalnet.io import bundled_coalescence
from coalnet.system import DiffusiveJet, realize_polynomial_system
from coalnet.verify import verify


@lru_cache(maxsize=None)
def example(name: str):
    coal, mu = bundled_coalescence(name)
    return coal, mu


def jet(mu=None) -> DiffusiveJet:
    return DiffusiveJet.default(mu)


@lru_cache(maxsize=None)
def verification(name: str):
    coal, mu = example(name)
    return verify(coal, jet(mu))


@lru_cache(maxsize=None)
def first_component_oracle(name: str):
    coal, mu = example(name)
    return trace_branches(realize_polynomial_system(coal.first_ordered(), jet(mu)))


@lru_cache(maxsize=None)
def prediction(name: str):
    coal, mu = example(name)
    return predict(coal, jet(mu))


def seeds_of(name: str):
    return [p.seed for p in prediction(name).predictions]


def nontrivial_seed(name: str):
    return next(s for s in seeds_of(name) if not s.trivial)
