import random

import pytest

from balaes import cipher, tablegen

STD_KEY = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
STD_SEED = 42


@pytest.fixture(scope="session")
def std_build():
    pair, spec = tablegen.build_table_pair(STD_KEY, STD_SEED)
    return pair, spec


@pytest.fixture(scope="session")
def std_pair(std_build):
    return std_build[0]


@pytest.fixture(scope="session")
def std_spec(std_build):
    return std_build[1]


@pytest.fixture(scope="session")
def traces_q0_10k(std_pair):
    rng = random.Random(1000)
    pts = cipher.random_plaintexts(10000, rng)
    return cipher.collect_traces(std_pair, cipher.SelectorPolicy.fixed_q0(), pts)


@pytest.fixture(scope="session")
def traces_mixed_10k(std_pair):
    rng = random.Random(77)
    pts = cipher.random_plaintexts(10000, rng)
    return cipher.collect_traces(std_pair, cipher.SelectorPolicy.random_bit(0.5), pts, rng)


@pytest.fixture(scope="session")
def grid_q0(std_pair):
    return cipher.collect_traces(std_pair, cipher.SelectorPolicy.fixed_q0(), cipher.grid_plaintexts())


@pytest.fixture(scope="session")
def grid_mixed(std_pair):
    rng = random.Random(5)
    return cipher.collect_traces(
        std_pair, cipher.SelectorPolicy.random_bit(0.5), cipher.grid_plaintexts(), rng
    )
