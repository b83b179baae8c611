"""The generator must match its documented algorithm bit for bit; the
reference implementation in conftest is derived from the docstring only."""

from hypothesis import given, settings
from hypothesis import strategies as st

from taxokit.rng import Xoshiro256StarStar, _splitmix64

from conftest import RefRng, ref_splitmix64_stream, ref_xoshiro_stream


def test_splitmix64_reference_vector():
    _, first = _splitmix64(0)
    assert first == 0xE220A8397B1DCDAF


def test_xoshiro_explicit_state_vector():
    rng = Xoshiro256StarStar.from_state(1, 2, 3, 4)
    assert [rng.next_u64() for _ in range(5)] == [
        11520,
        0,
        1509978240,
        1215971899390074240,
        1216172134540287360,
    ]


def test_seed_42_vector():
    rng = Xoshiro256StarStar(42)
    assert [rng.next_u64() for _ in range(3)] == [
        1546998764402558742,
        6990951692964543102,
        12544586762248559009,
    ]


@given(st.integers(min_value=0, max_value=2**64 - 1))
@settings(max_examples=50)
def test_raw_stream_matches_reference(seed):
    rng = Xoshiro256StarStar(seed)
    ref = ref_xoshiro_stream(seed=seed)
    assert [rng.next_u64() for _ in range(100)] == [next(ref) for _ in range(100)]


@given(st.integers(min_value=0, max_value=2**64 - 1))
@settings(max_examples=50)
def test_splitmix_seeding_matches_reference(seed):
    sm = ref_splitmix64_stream(seed)
    expected = [next(sm) for _ in range(4)]
    rng = Xoshiro256StarStar(seed)
    assert [rng._s0, rng._s1, rng._s2, rng._s3] == expected


@given(
    st.integers(min_value=0, max_value=2**32),
    st.integers(min_value=1, max_value=10_000),
)
@settings(max_examples=100)
def test_randbelow_range_and_reference(seed, n):
    rng = Xoshiro256StarStar(seed)
    ref = RefRng(seed)
    for _ in range(20):
        value = rng.randbelow(n)
        assert 0 <= value < n
        assert value == ref.randbelow(n)


@given(st.integers(min_value=0, max_value=2**32))
@settings(max_examples=50)
def test_random_unit_interval(seed):
    rng = Xoshiro256StarStar(seed)
    for _ in range(50):
        x = rng.random()
        assert 0.0 <= x < 1.0


@given(
    st.integers(min_value=0, max_value=2**32),
    st.integers(min_value=0, max_value=40),
    st.integers(min_value=0, max_value=40),
)
@settings(max_examples=100)
def test_sample_matches_reference_and_is_without_replacement(seed, n, m):
    if m > n:
        m = n
    population = [f"item{i}" for i in range(n)]
    rng = Xoshiro256StarStar(seed)
    ref = RefRng(seed)
    got = rng.sample(population, m)
    assert got == ref.sample(population, m)
    assert len(got) == m
    assert len(set(got)) == m
    assert set(got) <= set(population)


def test_sample_preserves_selection_order_not_population_order():
    # regression guard: the selected items come back in swap order, which
    # for a known seed differs from their order in the population
    rng = Xoshiro256StarStar(7)
    got = rng.sample(list(range(10)), 4)
    assert got != sorted(got)


@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=0, max_value=30))
@settings(max_examples=50)
def test_shuffle_is_permutation(seed, n):
    rng = Xoshiro256StarStar(seed)
    items = list(range(n))
    rng.shuffle(items)
    assert sorted(items) == list(range(n))


def test_identical_seeds_identical_streams():
    a = Xoshiro256StarStar(123456)
    b = Xoshiro256StarStar(123456)
    assert [a.next_u64() for _ in range(64)] == [b.next_u64() for _ in range(64)]
