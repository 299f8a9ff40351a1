from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from odoforge.chains import haar_cylinder, validate_chain
from odoforge.errors import ColumnSumViolation, SampleTooShallow
from odoforge.partitions import (
    FOLNER,
    NONAMENABLE,
    ExplicitPartition,
    IncidenceMatrix,
    PatternPartition,
    SimplexVector,
    SymbolicClopen,
    WholeSpace,
    base_partition,
    check_partition,
    incidence_matrix,
    kr_refine,
    kr_tower_sequence,
    measure_estimate,
    measure_mode,
    refines,
    return_time_violations,
    same_cells,
    sample_space,
    tower_measures,
)
from odoforge.toeplitz import build_spec


@pytest.fixture(autouse=True)
def wide_balls(monkeypatch):
    # radius-64 samples of Z need more than the default abelian cap
    monkeypatch.setenv("ODOFORGE_CAPS", "abelian_radius=200")


@pytest.fixture(scope="module")
def space(dyadic_spec):
    import os

    old = os.environ.get("ODOFORGE_CAPS")
    os.environ["ODOFORGE_CAPS"] = "abelian_radius=200"
    try:
        return sample_space(dyadic_spec, dyadic_spec.tower.domains[4], 64)
    finally:
        if old is None:
            del os.environ["ODOFORGE_CAPS"]
        else:
            os.environ["ODOFORGE_CAPS"] = old


def ints(ws):
    return [w.data[0] for w in ws]


def test_sample_space_is_stable(space):
    assert space.stable is True
    assert space.dropped > 0  # witnesses in the provisional coset are left out


def test_small_window_sample(Z, dyadic_spec):
    window = [Z.generator(0) ** k for k in range(4)]
    small = sample_space(dyadic_spec, window, 64)
    assert small.stable is True and 4 <= len(small) <= 16


def test_trivial_sample_spaces(Z, dyadic_spec):
    periodic = build_spec(validate_chain(Z, [["a^2"], ["a^2"]]))
    assert len(sample_space(periodic, [Z.generator(0) ** k for k in range(5)], 6)) == 2
    empty = sample_space(dyadic_spec, [], 5)
    assert len(empty) == 1 and empty.patterns == ((),)


def test_base_partitions(Z, dyadic_spec, space):
    zero = base_partition(dyadic_spec, 0, space)
    assert zero.cells == (space.all_ids,)
    four = base_partition(dyadic_spec, 2, space)
    check_partition(four)
    assert len(four.cells) == 4
    for i, g in enumerate(space.witnesses):
        cell = next(c for c, ids in enumerate(four.cells) if i in ids)
        assert ints([four.transversal[cell]])[0] == g.data[0] % 4
    assert return_time_violations(four, 40) == []


def test_clopen_algebra(Z, dyadic_spec, space):
    two = base_partition(dyadic_spec, 1, space)
    even, odd = (SymbolicClopen(space, c) for c in two.cells)
    assert (even | odd).ids == space.all_ids
    assert not (even & odd).ids
    assert even.complement() == odd
    # on a finite sample translation maps representatives into, not onto
    assert even.translate(Z.generator(0)).ids <= odd.ids
    assert even.translate(Z.generator(0) ** 2).ids <= even.ids


def test_trivial_refiner_and_idempotence(dyadic_spec, space):
    for n in range(3):
        q = base_partition(dyadic_spec, n, space)
        assert same_cells(kr_refine(WholeSpace(space), q), q)
        assert same_cells(kr_refine(q, q), q)
        assert same_cells(kr_refine(ExplicitPartition(space, q.cells), q), q)


def test_symbol_refiner_splits_the_tower(Z, dyadic_spec, space):
    r = PatternPartition(space, [Z.identity()])
    q = base_partition(dyadic_spec, 1, space)
    p = kr_refine(r, q)
    assert p.k == 2 and len(p.cells) == 4
    assert refines(p, r) and refines(p, q)
    assert p.base_union == q.base_union


def test_tower_sequences(dyadic_spec, space):
    seq = kr_tower_sequence(dyadic_spec, space, 2)
    parts = seq.partitions
    assert refines(parts[2], parts[1]) and refines(parts[1], parts[0])
    assert parts[2].base_union <= parts[1].base_union <= parts[0].base_union
    # refiners matched to the sample window separate every sample point
    assert kr_tower_sequence(dyadic_spec, space, 4).separated
    trivial = kr_tower_sequence(dyadic_spec, space, 2, [WholeSpace(space)] * 3)
    for n, p in enumerate(trivial.partitions):
        assert same_cells(p, base_partition(dyadic_spec, n, space))


def test_incidence_matrices(dyadic_spec, space):
    trivial = kr_tower_sequence(dyadic_spec, space, 2, [WholeSpace(space)] * 3).partitions
    assert incidence_matrix(trivial[0], trivial[1]).entries == ((2,),)
    seq = kr_tower_sequence(dyadic_spec, space, 2).partitions
    for n in range(2):
        m = incidence_matrix(seq[n], seq[n + 1])
        assert m.column_sums() == [2] * m.shape[1]
    assert incidence_matrix(seq[1], seq[2]).shape == (2, 2)


def test_measures_on_trivial_towers(dyadic, dyadic_spec, space):
    trivial = kr_tower_sequence(dyadic_spec, space, 2, [WholeSpace(space)] * 3).partitions
    mats = [incidence_matrix(trivial[n], trivial[n + 1]) for n in range(2)]
    est = measure_estimate(mats, [1, 2, 4])
    assert est.diameter == 0
    assert [v.coords for v in est.estimates] == [(haar_cylinder(dyadic, n),) for n in range(3)]


def test_dyadic_measure_consistency(dyadic_spec, space):
    run = tower_measures(dyadic_spec, 2, space)
    est = run.estimate
    for n, m in enumerate(run.matrices):
        mu, nxt = est.estimates[n].coords, est.estimates[n + 1].coords
        pushed = tuple(sum((m.entries[i][j] * nxt[j] for j in range(len(nxt))), Fraction(0))
                       for i in range(len(mu)))
        assert pushed == mu
    lo_hi = est.intervals[0]
    assert all(lo <= x <= hi for (lo, hi), x in zip(lo_hi, est.estimates[0].coords))
    assert est.mode == FOLNER and "Folner" in est.label


def test_too_shallow_sample_is_refused(dyadic_spec):
    shallow = sample_space(dyadic_spec, dyadic_spec.tower.domains[3], domain_level=3)
    with pytest.raises(SampleTooShallow):
        tower_measures(dyadic_spec, 3, shallow)


def test_column_sum_violation():
    bad = IncidenceMatrix(((1, 2), (0, 0)), 2)
    with pytest.raises(ColumnSumViolation):
        measure_estimate([bad], [1, 2])


def test_simplex_constraint():
    SimplexVector((Fraction(1, 8), Fraction(1, 8)), 4)
    with pytest.raises(ValueError):
        SimplexVector((Fraction(1, 8), Fraction(1, 4)), 4)


def test_free_groups_are_labelled_nonamenable(F2):
    from odoforge.config import fixture_path, load_config

    cfg = load_config(fixture_path("f2_normal"), depth=2)
    spec = build_spec(validate_chain(cfg.group, cfg.chain_levels()))
    assert measure_mode(spec) == NONAMENABLE


@settings(max_examples=12, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30))
def test_enlarging_the_sample_keeps_patterns(r1, r2):
    from odoforge.words import GroupDescriptor
    from conftest import power_chain

    Z = GroupDescriptor.abelian(["a"])
    spec = build_spec(power_chain(Z, 2, 5))
    window = spec.tower.domains[2]
    lo, hi = sorted((r1, r2))
    small = sample_space(spec, window, lo)
    big = sample_space(spec, window, hi)
    assert set(small.patterns) <= set(big.patterns)
