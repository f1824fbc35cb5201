from markovtrie.seeding import MASK, derive_seed, mix64, splitmix64


def test_reference_outputs():
    # SplitMix64 started at 0: first outputs of the reference generator
    assert splitmix64(0, 0) == 0xE220A8397B1DCDAF
    assert splitmix64(0, 1) == 0x6E789E6AA1B965F4
    assert splitmix64(0, 2) == 0x06C45D188009454F


def test_derivation_is_stable_and_distinct():
    seeds = [derive_seed(7, 0, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds == [derive_seed(7, 0, i) for i in range(1000)]
    assert derive_seed(7, 1, 0) != derive_seed(7, 0, 1)
    assert all(0 <= s <= MASK for s in seeds)
    assert 0 <= mix64(MASK + 5) <= MASK
