import itertools

import numpy as np
import pytest

from cipanova.constraints import (
    ConstraintModel,
    ParseError,
    build_design,
    encompassing_of,
    model_to_string,
    parse_model_spec,
    region_contains,
    region_mask,
)

MA = "mu2 < mu1 < mu4 < {mu3 = mu5}"
MB = "{mu1, mu3} > {mu2, mu4, mu5}"


def test_parse_chain_with_tie():
    m = parse_model_spec(MA, J=5, name="Ma")
    assert m.classes == ((1,), (2,), (3, 5), (4,))
    # adjacent relations mu2<mu1, mu1<mu4, mu4<{3,5} plus transitive closure
    assert m.order == frozenset(
        {(2, 1), (1, 4), (4, 3), (2, 4), (2, 3), (1, 3)})
    assert m.baseline_rep == 1
    assert m.delta_labels == (2, 3, 4)
    assert m.q == 4
    assert m.has_order and not m.is_null and not m.is_encompassing


def test_parse_brace_sets_all_pairs():
    m = parse_model_spec(MB, J=5, name="Mb")
    assert m.classes == ((1,), (2,), (3,), (4,), (5,))
    # '>' swaps sides, then 2x3 cross pairs
    assert m.order == frozenset(
        {(2, 1), (2, 3), (4, 1), (4, 3), (5, 1), (5, 3)})


def test_parse_null_and_encompassing():
    m0 = parse_model_spec("mu1 = mu2 = mu3 = mu4 = mu5", J=5)
    assert m0.classes == ((1, 2, 3, 4, 5),)
    assert m0.is_null and not m0.has_order
    me = parse_model_spec("mu1, mu2, mu3", J=3)
    assert me.is_encompassing
    assert me.classes == ((1,), (2,), (3,))


def test_unmentioned_groups_are_free_singletons():
    m = parse_model_spec("mu1 < mu2", J=4)
    assert m.classes == ((1,), (2,), (3,), (4,))
    assert m.order == frozenset({(1, 2)})


def test_parse_inline_equality_group():
    m = parse_model_spec("{mu1 = mu2} < mu3", J=3)
    assert m.classes == ((1, 2), (3,))
    assert m.order == frozenset({(1, 3)})


def test_parse_reversed_chain_normalizes():
    forward = parse_model_spec("mu1 < mu2 < mu3", J=3)
    backward = parse_model_spec("mu3 > mu2 > mu1", J=3)
    assert forward.classes == backward.classes
    assert forward.order == backward.order


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_model_spec("mu1 < mu2 < mu1", J=2)  # cycle
    with pytest.raises(ParseError):
        parse_model_spec("mu6 < mu1", J=5)  # out of range
    with pytest.raises(ParseError):
        parse_model_spec("{mu1 = mu2}, {mu2 = mu3}", J=3)  # group in two classes
    with pytest.raises(ParseError):
        parse_model_spec("mu1 < mu2 > mu3", J=3)  # mixed directions
    with pytest.raises(ParseError):
        parse_model_spec("mu1 <", J=2)  # dangling operator
    with pytest.raises(ParseError):
        parse_model_spec("{mu1 = mu2, mu3}", J=3)  # mixed separators
    with pytest.raises(ParseError):
        parse_model_spec("mu1 & mu2", J=2)  # malformed token
    with pytest.raises(ParseError):
        parse_model_spec("{mu1, mu2", J=2)  # unbalanced brace
    with pytest.raises(ParseError):
        parse_model_spec("", J=2)
    with pytest.raises(ParseError):
        parse_model_spec("mu1,,mu2", J=2)  # empty clause
    with pytest.raises(ParseError):
        parse_model_spec("{mu1, mu2} = mu3", J=3)  # '=' onto a comma set


def test_print_fixed_forms():
    assert model_to_string(parse_model_spec(MA, J=5)) == "mu2 < mu1 < mu4 < {mu3 = mu5}"
    assert model_to_string(parse_model_spec("mu1=mu2=mu3", J=3)) == "mu1 = mu2 = mu3"
    assert model_to_string(parse_model_spec("mu1,mu2,mu3", J=3)) == "mu1, mu2, mu3"
    # a layer holding two singleton classes renders as a comma brace
    two_up = ConstraintModel.create(3, [(1,), (2,), (3,)], [(1, 3), (2, 3)])
    assert model_to_string(two_up) == "{mu1, mu2} < mu3"
    # isolated merged class alongside a free singleton
    merged = ConstraintModel.create(3, [(1, 2), (3,)], [])
    assert model_to_string(merged) == "mu1 = mu2, mu3"


def _random_model(rng, J):
    # random partition, then a random chain of antichain layers over a subset
    groups = list(range(1, J + 1))
    rng.shuffle(groups)
    classes = []
    i = 0
    while i < len(groups):
        size = int(rng.integers(1, 3))
        classes.append(tuple(sorted(groups[i:i + size])))
        i += size
    reps = sorted(c[0] for c in classes)
    rng.shuffle(reps)
    n_chain = int(rng.integers(0, len(reps) + 1))
    if n_chain == 1:
        n_chain = 0
    chain = reps[:n_chain]
    order = set()
    layers = []
    i = 0
    while i < len(chain):
        width = int(rng.integers(1, 3))
        layers.append(chain[i:i + width])
        i += width
    for a_i, lo in enumerate(layers):
        for hi in layers[a_i + 1:]:
            for a in lo:
                for b in hi:
                    order.add((a, b))
    return ConstraintModel.create(J, classes, order)


def test_roundtrip_merged_class_in_shared_layer():
    # not expressible as a single chain clause; printer must fall back
    text = "{mu1 = mu2} < mu4, mu3 < mu4"
    model = parse_model_spec(text, J=4)
    again = parse_model_spec(model_to_string(model), J=4)
    assert again.classes == model.classes and again.order == model.order


def test_roundtrip_random_models():
    rng = np.random.default_rng(20240817)
    for _ in range(300):
        J = int(rng.integers(2, 9))
        model = _random_model(rng, J)
        text = model_to_string(model)
        again = parse_model_spec(text, J=J)
        assert again.classes == model.classes, text
        assert again.order == model.order, text


def test_region_contains_ma_hand_cases():
    m = parse_model_spec(MA, J=5)
    # labels (2, 3, 4): delta2 < 0 < delta4 < delta3
    assert region_contains(m, (-1.0, 2.0, 1.0))
    assert not region_contains(m, (0.0, 0.0, 0.0))  # strict boundary
    assert not region_contains(m, (-1.0, 1.0, 2.0))  # delta4 > delta3
    assert not region_contains(m, (0.5, 2.0, 1.0))  # delta2 > 0
    me = parse_model_spec("mu1, mu2, mu3", J=3)
    assert region_contains(me, (7.0, -3.0))  # empty constraint set


def test_region_dimension_mismatch():
    m = parse_model_spec(MA, J=5)
    with pytest.raises(ValueError):
        region_contains(m, (1.0, 2.0))
    with pytest.raises(ValueError):
        region_mask(m, np.zeros((5, 2)))


def test_region_cone_property():
    rng = np.random.default_rng(7)
    models = [parse_model_spec(s, J=5) for s in (MA, MB, "mu1 < mu2 < mu3 < mu4 < mu5")]
    for m in models:
        dim = len(m.delta_labels)
        for _ in range(100):
            delta = rng.normal(size=dim) * 5.0
            inside = region_contains(m, delta)
            for c in (1e-3, 0.7, 42.0):
                assert region_contains(m, c * delta) == inside


def _mu_level_oracle(model, delta):
    # independent route: build the group-mean vector and test every relation
    value = {model.baseline_rep: 0.0}
    value.update(zip(model.delta_labels, delta))
    mu = {}
    for cls in model.classes:
        for g in cls:
            mu[g] = value[cls[0]]
    ok = True
    for a, b in model.order:
        ok &= mu[a] < mu[b]
    return ok


def test_region_matches_mu_level_enumeration():
    # exhaustive sign/ordering patterns for collapsed dimension <= 3
    specs = [(MA, 5), (MB, 5), ("mu1 < {mu2 = mu3} < mu4", 4), ("{mu1, mu2} < mu3", 3)]
    for text, J in specs:
        m = parse_model_spec(text, J=J)
        dim = len(m.delta_labels)
        mags = [1.0, 2.0, 3.0, 4.0][:dim]
        for perm in itertools.permutations(mags):
            for signs in itertools.product((-1.0, 1.0), repeat=dim):
                delta = np.array(perm) * np.array(signs)
                assert region_contains(m, delta) == _mu_level_oracle(m, delta)


def test_region_mask_agrees_with_scalar():
    rng = np.random.default_rng(11)
    m = parse_model_spec(MA, J=5)
    deltas = rng.normal(size=(500, 3)) * 2.0
    mask = region_mask(m, deltas)
    for i in range(deltas.shape[0]):
        assert mask[i] == region_contains(m, deltas[i])


def test_encompassing_of_shapes():
    ma = parse_model_spec(MA, J=5)
    d = encompassing_of(ma)
    assert (d.J, d.q) == (5, 4)
    assert d.class_of_group == (1, 2, 3, 4, 3)
    assert d.baseline == 1
    assert d.delta_labels == (2, 3, 4)
    m0 = parse_model_spec("mu1 = mu2 = mu3", J=3)
    d0 = encompassing_of(m0)
    assert (d0.q, d0.delta_labels) == (1, ())
    me = parse_model_spec("mu1, mu2, mu3, mu4", J=4)
    assert encompassing_of(me).q == 4


def test_build_design_two_groups():
    me = parse_model_spec("mu1, mu2", J=2)
    Z = build_design(encompassing_of(me), (1, 1))
    assert np.array_equal(Z, np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_build_design_null_is_ones_column():
    m0 = parse_model_spec("mu1 = mu2 = mu3", J=3)
    Z = build_design(encompassing_of(m0), (2, 3, 1))
    assert Z.shape == (6, 1)
    assert np.array_equal(Z, np.ones((6, 1)))


def test_build_design_merged_class_column():
    # Ma with n_j = 2: the class {3,5} column covers rows of groups 3 and 5
    ma = parse_model_spec(MA, J=5)
    d = encompassing_of(ma)
    Z = build_design(d, (2, 2, 2, 2, 2))
    assert Z.shape == (10, 4)
    assert np.array_equal(Z[:, 0], np.ones(10))
    col3 = 1 + d.delta_labels.index(3)
    expect = np.zeros(10)
    expect[4:6] = 1.0  # group 3 rows
    expect[8:10] = 1.0  # group 5 rows
    assert np.array_equal(Z[:, col3], expect)
    col2 = 1 + d.delta_labels.index(2)
    assert Z[:, col2].sum() == 2.0 and Z[2:4, col2].all()
    # every row has intercept plus at most one effect indicator
    assert np.all(Z.sum(axis=1) <= 2.0)


def test_build_design_errors():
    me = parse_model_spec("mu1, mu2", J=2)
    d = encompassing_of(me)
    with pytest.raises(ValueError):
        build_design(d, (3,))
    with pytest.raises(ValueError):
        build_design(d, (3, 0))


def test_model_validation_rejects_bad_pieces():
    with pytest.raises(ValueError):
        ConstraintModel(name="", J=3, classes=((1, 2),), order=frozenset())  # not a partition
    with pytest.raises(ValueError):
        ConstraintModel(name="", J=2, classes=((1,), (2,)),
                        order=frozenset({(1, 1)}))  # reflexive pair
    with pytest.raises(ValueError):
        ConstraintModel(name="", J=3, classes=((1,), (2,), (3,)),
                        order=frozenset({(1, 2), (2, 3)}))  # not closed
    with pytest.raises(ParseError):
        ConstraintModel.create(2, [(1,), (2,)], [(1, 2), (2, 1)])  # cycle
