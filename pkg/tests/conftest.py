"""Shared fixtures: integrated trajectories and full scenario runs are
cached per session because integration dominates test wall time."""

import pytest

import jacobisplit as js


@pytest.fixture(scope="session")
def trajs():
    cache = {}

    def get(name, step=None):
        key = (name, step)
        if key not in cache:
            sc = js.get_scenario(name)
            cache[key] = js.integrate(sc.family(), step=step if step else sc.step)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def builtin_runs():
    return {sc.name: js.run_scenario(sc.name) for sc in js.list_scenarios()}
