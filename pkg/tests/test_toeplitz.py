from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from odoforge.chains import act_truncated, validate_chain
from odoforge.errors import IndexOneLevel, TransversalSearchCap, WindowOutsideTower
from odoforge.toeplitz import (
    FINITE,
    GENERIC,
    ExternalArray,
    InGroup,
    Inconclusive,
    Witness,
    build_spec,
    build_tower_and_markers,
    dump_lines,
    essential_falsify,
    factor_coords,
    orbit_patterns,
    per_report,
    period_structure_check,
    toeplitz_verify,
    transversal_by_search,
    verify_external,
)
from odoforge.words import ball_enumerate

from conftest import power_chain


def ints(ws):
    return [w.data[0] for w in ws]


def zword(Z, k):
    return Z.generator(0) ** k


def oracle(k: int) -> int | None:
    """Dyadic array straight from coset membership: 0 on 2Z and 3 + 8Z, 1 on 1 + 4Z and 7 + 16Z."""
    if k % 2 == 0 or k % 8 == 3:
        return 0
    if k % 4 == 1 or k % 16 == 7:
        return 1
    return None  # decided deeper than the oracle looks


def test_dyadic_tower_by_hand(dyadic):
    tower, markers = build_tower_and_markers(dyadic)
    for n in range(dyadic.depth + 1):
        assert sorted(ints(tower.domains[n])) == list(range(2 ** n))
    for n in range(dyadic.depth):
        assert sorted(ints(tower.steps[n])) == [0, 2 ** n]
    for n in range(1, dyadic.depth + 1):
        assert ints(markers.sets[n]) == [2 ** n - 1]
        assert markers.points[n].data[0] == 2 ** n - 1


def test_domain_ratios_are_indices(s3_spec):
    tower = s3_spec.tower
    chain = s3_spec.chain
    for n in range(chain.depth):
        assert len(tower.domains[n + 1]) * chain.index(n) == len(tower.domains[n]) * chain.index(n + 1)


def test_box_tower(Z2):
    tower, _ = build_tower_and_markers(power_chain(Z2, 2, 3))
    assert [len(d) for d in tower.domains] == [1, 4, 16, 64]
    assert all(len(k) == 4 for k in tower.steps)


@pytest.fixture(scope="module")
def s3_spec():
    from odoforge.config import fixture_path, load_config

    cfg = load_config(fixture_path("f2_s3"))
    return build_spec(validate_chain(cfg.group, cfg.chain_levels()))


def test_transversal_matches_search(dyadic, s3_spec):
    for chain in (dyadic, s3_spec.chain):
        tower, _ = build_tower_and_markers(chain)
        for n in range(min(chain.depth, 3)):
            assert transversal_by_search(chain, n, 8) == tower.steps[n]
    with pytest.raises(TransversalSearchCap):
        transversal_by_search(dyadic, 5, 8)


def test_dyadic_prefix(Z, dyadic_spec):
    assert [dyadic_spec(zword(Z, k)) for k in range(8)] == [0, 1, 0, 0, 0, 1, 0, 1]
    for k in range(-40, 64):
        want = oracle(k)
        if want is not None:
            v = dyadic_spec.evaluate(zword(Z, k))
            assert v.exact and v.symbol == want


def test_marker_tower_is_the_only_provisional_coset(Z, dyadic_spec):
    n = dyadic_spec.depth
    vn = dyadic_spec.markers.points[n].data[0]
    for k in range(-200, 200):
        v = dyadic_spec.evaluate(zword(Z, k))
        assert v.exact == ((k - vn) % 2 ** n != 0)
    assert not dyadic_spec.evaluate(zword(Z, -1)).exact


def test_finite_mode(Z):
    spec = build_spec(validate_chain(Z, [["a^2"], ["a^2"]]))
    assert spec.mode == FINITE and spec.finite_level == 1 and spec.markers is None
    assert [spec(zword(Z, k)) for k in range(-2, 4)] == [0, 1, 0, 1, 0, 1]
    assert all(spec.evaluate(zword(Z, k)).exact for k in range(-5, 5))
    window = list(spec.tower.domains[-1])
    rep = toeplitz_verify(spec, window, 4)
    assert rep.passed and set(rep.levels.values()) <= {0, 1}
    assert len(orbit_patterns(spec, ball_enumerate(Z, 3), 9).patterns) == 2


def test_index_one_level(Z):
    with pytest.raises(IndexOneLevel):
        build_spec(validate_chain(Z, [["a^2"], ["a^2"], ["a^4"]]))


def test_window_outside_tower(Z, dyadic_spec):
    with pytest.raises(WindowOutsideTower):
        per_report(dyadic_spec, 1, [zword(Z, -1)])
    with pytest.raises(WindowOutsideTower):
        toeplitz_verify(dyadic_spec, [zword(Z, 64)], 3)


def test_per_reports(Z, dyadic_spec):
    window = [zword(Z, k) for k in range(8)]
    one = per_report(dyadic_spec, 1, window, test_radius=12)
    assert {0, 2, 4, 6} <= set(ints(one.certified[0]))
    two = per_report(dyadic_spec, 2, window, test_radius=12)
    assert 1 in ints(two.certified[1])
    for n in range(dyadic_spec.depth + 1):
        rep = per_report(dyadic_spec, n, list(dyadic_spec.tower.domains[-1]), test_radius=20)
        assert rep.contradictions == []
    assert one.checked > 0


def test_toeplitz_verify(Z, dyadic_spec):
    window = [zword(Z, k) for k in range(8)]
    rep = toeplitz_verify(dyadic_spec, window, 10)
    assert rep.passed and max(rep.levels.values()) <= 4
    inner = toeplitz_verify(dyadic_spec, list(dyadic_spec.tower.domains[-2]), 10)
    assert inner.passed and not inner.contradictions
    # D_N itself holds v_N, whose value no level below N decides
    full = toeplitz_verify(dyadic_spec, list(dyadic_spec.tower.domains[-1]), 10)
    assert not full.passed and ints(full.uncertified) == [63]


def test_adversarial_external_array(Z, dyadic):
    text = "\n".join(f"a^{k} {0 if k >= 0 else 1}" if k else "e 0" for k in range(-40, 41))
    arr = ExternalArray.parse(text, Z)
    rep = verify_external(arr, dyadic, [zword(Z, k) for k in range(-4, 4)], 12)
    assert not rep.passed and rep.sampled
    assert rep.uncertified


def test_external_copy_of_the_array_passes(Z, dyadic, dyadic_spec):
    text = "\n".join(f"{zword(Z, k)} {dyadic_spec(zword(Z, k))}" for k in range(-64, 128))
    arr = ExternalArray.parse(text, Z)
    rep = verify_external(arr, dyadic, [zword(Z, k) for k in range(8)], 40)
    assert rep.passed


def test_essential_falsify_examples(Z, dyadic_spec):
    r = essential_falsify(dyadic_spec, 1, zword(Z, 1))
    assert isinstance(r, Witness) and r.position.is_identity() and r.sigma == 0
    assert isinstance(essential_falsify(dyadic_spec, 2, zword(Z, 8)), InGroup)
    r = essential_falsify(dyadic_spec, 2, zword(Z, 2))
    assert isinstance(r, Witness) and r.position.data[0] == 1 and r.sigma == 1
    assert dyadic_spec(r.position * r.gamma * zword(Z, 2)) == 0


def test_falsify_can_be_inconclusive(Z, dyadic_spec):
    r = essential_falsify(dyadic_spec, 3, zword(Z, 4), gammas=[Z.identity()])
    assert isinstance(r, (Witness, Inconclusive))
    assert isinstance(essential_falsify(dyadic_spec, 0, zword(Z, 1)), InGroup)


def test_period_structure(dyadic_spec, s3_spec):
    rep = period_structure_check(dyadic_spec, 4, 15)
    assert rep.inconclusive == [] and rep.witnesses > 0
    assert period_structure_check(dyadic_spec, 4, 0).witnesses == 0
    free = period_structure_check(s3_spec, 2, 2)
    assert free.witnesses + len(free.inconclusive) + free.in_group == 3 * len(ball_enumerate(s3_spec.group, 2))


def test_factor_coords(Z, dyadic_spec):
    p = factor_coords(dyadic_spec, zword(Z, 5), 3)
    levels = dyadic_spec.chain.levels
    assert p.cosets == tuple(levels[n].coset_of(zword(Z, 5 % 2 ** n)) for n in range(4))
    assert p.cosets[:3] == (0, 1, 1)
    e = factor_coords(dyadic_spec, Z.identity())
    assert e == dyadic_spec.chain.identity_point()


def test_factor_coords_equivariance(s3_spec):
    chain = s3_spec.chain
    ball = ball_enumerate(chain.group, 3)
    for g in ball:
        for h in ball[:30]:
            assert factor_coords(s3_spec, g * h) == act_truncated(chain, g, factor_coords(s3_spec, h))


def test_orbit_patterns(Z, dyadic_spec, monkeypatch):
    monkeypatch.setenv("ODOFORGE_CAPS", "abelian_radius=200")
    one = orbit_patterns(dyadic_spec, [Z.identity()], 8)
    assert sorted(one.patterns) == [(0,), (1,)]
    window = [zword(Z, k) for k in range(4)]
    small = orbit_patterns(dyadic_spec, window, 64)
    big = orbit_patterns(dyadic_spec, window, 128)
    assert 4 <= len(small.patterns) <= 16
    assert set(small.patterns) == set(big.patterns)
    assert small.dropped > 0
    assert orbit_patterns(dyadic_spec, [], 3).patterns == {(): Z.identity()}


def test_dump_format(Z, dyadic_spec):
    lines = dump_lines(dyadic_spec, [zword(Z, k) for k in (0, 1, 63)])
    assert lines[0] == "e 0 exact 0"
    assert lines[1] == "a 1 exact 1"
    assert lines[2].split()[2] == "provisional"


def test_builds_are_deterministic(dyadic, s3_spec):
    for spec in (build_spec(dyadic), s3_spec):
        again = build_spec(spec.chain)
        dom = list(spec.tower.domains[-1])
        assert [spec(w) for w in dom] == [again(w) for w in dom]


def test_spec_modes(dyadic_spec):
    assert dyadic_spec.mode == GENERIC


@settings(max_examples=60, deadline=None)
@given(st.integers(-2000, 2000), st.integers(1, 5))
def test_exact_values_survive_deeper_truncations(k, t):
    from odoforge.words import GroupDescriptor

    Z = GroupDescriptor.abelian(["a"])
    spec = build_spec(power_chain(Z, 2, 7))
    s = spec.deepest.coset_of(Z.generator(0) ** k)
    sym_t, ex_t, _ = spec.truncated_tables(t)
    if ex_t[s]:
        assert sym_t[s] == spec.value_of_state(s).symbol
        assert spec.value_of_state(s).exact


@settings(max_examples=60, deadline=None)
@given(st.integers(-500, 500), st.integers(0, 5))
def test_certificates_are_sound(k, n):
    from odoforge.words import GroupDescriptor

    Z = GroupDescriptor.abelian(["a"])
    spec = build_spec(power_chain(Z, 2, 7))
    w = Z.generator(0) ** k
    sigma = spec.certify(w, n)
    if sigma is not None:
        for j in range(-6, 7):
            v = spec.evaluate(w * Z.generator(0) ** (j * 2 ** n))
            if v.exact:
                assert v.symbol == sigma
