import json
import math

import numpy as np
import pytest

from shadowrank import (
    BoundKind,
    DataFormatError,
    Dataset,
    DualConfig,
    InfeasibleConfigError,
    LambdaLaw,
    Sense,
    SynthConfig,
    load_artifact,
    load_dataset,
    offline_train,
    read_dataset,
    save_artifact,
    synth_generate,
    write_dataset,
)
from shadowrank.data import ConstraintRecord, UserRecord, _pick_bound
from shadowrank.predictor import predict

SMALL = SynthConfig(
    seed=2,
    n_users=24,
    m1=30,
    m2=5,
    num_constraints=2,
    covariate_dim=4,
    lambda_law=LambdaLaw.CONSTANT,
    binding_fraction=0.5,
)


# --- dataset files -----------------------------------------------------------


def test_round_trip_preserves_everything(tmp_path):
    ds = synth_generate(SMALL)
    p = tmp_path / "pop.json"
    write_dataset(ds, p)
    back = read_dataset(p)
    assert back == ds


def test_writes_are_deterministic_bytes(tmp_path):
    ds = synth_generate(SMALL)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_dataset(ds, p1)
    write_dataset(ds, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_same_seed_same_file_different_seed_differs(tmp_path):
    import dataclasses

    d1 = synth_generate(SMALL)
    d2 = synth_generate(SMALL)
    d3 = synth_generate(dataclasses.replace(SMALL, seed=3))
    assert d1 == d2
    assert d1 != d3


def test_instances_are_canonical_and_sorted():
    ds = synth_generate(SMALL)
    instances = list(ds.instances())
    ids = [i.user_id for i in instances]
    assert ids == sorted(ids)
    for inst in instances:
        assert inst.is_canonical
        for c in inst.constraints:
            assert c.sense is Sense.GE
            assert c.bound_kind is BoundKind.ABSOLUTE


def test_utilities_stay_in_declared_range():
    ds = synth_generate(SMALL)
    for u in ds.users:
        assert min(u.u) >= 0.05 and max(u.u) <= 5.0


def test_zero_constraint_dataset_loads(tmp_path):
    ds = Dataset(
        m1=3,
        m2=2,
        gamma="dcg",
        constraints=(),
        users=(UserRecord("u0", (1.0, 2.0, 3.0), (0.5,)),),
    )
    p = tmp_path / "plain.json"
    write_dataset(ds, p)
    for inst in load_dataset(p):
        assert inst.num_constraints == 0


def test_parse_errors_carry_location(tmp_path):
    ds = synth_generate(SMALL)
    p = tmp_path / "pop.json"
    write_dataset(ds, p)
    doc = json.loads(p.read_text())
    doc["users"][3]["u"] = "oops"
    p.write_text(json.dumps(doc))
    with pytest.raises(DataFormatError, match=r"users\[3\]"):
        read_dataset(p)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"format": "shadowrank-dataset",\n  "m1": }\n')
    with pytest.raises(DataFormatError, match="line 2"):
        read_dataset(p)


def test_unknown_format_version_rejected(tmp_path):
    ds = synth_generate(SMALL)
    p = tmp_path / "pop.json"
    write_dataset(ds, p)
    doc = json.loads(p.read_text())
    doc["format_version"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(DataFormatError, match="version"):
        read_dataset(p)


def test_dimension_mismatch_rejected(tmp_path):
    ds = synth_generate(SMALL)
    p = tmp_path / "pop.json"
    write_dataset(ds, p)
    doc = json.loads(p.read_text())
    doc["users"][0]["u"] = doc["users"][0]["u"][:-1]
    p.write_text(json.dumps(doc))
    with pytest.raises(DataFormatError, match=r"users\[0\]"):
        read_dataset(p)


def test_per_user_override_vectors_apply(tmp_path):
    base = (1.0, 0.0, 0.0)
    override = (0.0, 0.5, 0.5)
    ds = Dataset(
        m1=3,
        m2=2,
        gamma=(1.0, 0.5),
        constraints=(
            ConstraintRecord("grp", "ge", 0.0, "absolute", base),
        ),
        users=(
            UserRecord("u0", (3.0, 2.0, 1.0), (0.0,)),
            UserRecord("u1", (3.0, 2.0, 1.0), (0.0,), a_overrides={0: override}),
        ),
    )
    p = tmp_path / "ovr.json"
    write_dataset(ds, p)
    i0, i1 = load_dataset(p)
    np.testing.assert_allclose(i0.constraints[0].a, base)
    np.testing.assert_allclose(i1.constraints[0].a, override)


# --- constraint tables against the DCG exposure total ------------------------


def topic_share_dataset(records, m1=40, m2=None, seed=0):
    rng = np.random.default_rng(seed)
    m2 = m2 or m1
    users = tuple(
        UserRecord(
            f"u{i}",
            tuple(np.round(rng.uniform(1, 5, m1), 6).tolist()),
            (float(i),),
        )
        for i in range(3)
    )
    return Dataset(m1=m1, m2=m2, gamma="dcg", constraints=records, users=users)


def test_catalog_style_floor_table_resolves_bounds(tmp_path):
    """Four topic floors of 1.5% of total exposure plus one numeric
    exposure-weighted floor at zero, over 1000 DCG ranks."""
    m1 = 1000
    rng = np.random.default_rng(10)
    topics = [
        tuple((rng.random(m1) < 0.05).astype(float).tolist()) for _ in range(4)
    ]
    years = tuple(np.round(rng.uniform(-0.4, 0.35, m1), 6).tolist())
    records = tuple(
        ConstraintRecord(f"topic_{i}", "ge", 0.015, "fraction_of_total_exposure", t)
        for i, t in enumerate(topics)
    ) + (ConstraintRecord("recency", "ge", 0.0, "absolute", years),)
    p = tmp_path / "catalog.json"
    write_dataset(topic_share_dataset(records, m1=m1), p)
    instances = load_dataset(p)
    total = sum(1.0 / math.log2(j + 2) for j in range(m1))
    for inst in instances:
        for k in range(4):
            assert inst.constraints[k].bound == pytest.approx(0.015 * total, rel=1e-12)
        assert inst.constraints[4].bound == 0.0


def test_newsfeed_style_mixed_table_resolves_bounds(tmp_path):
    """Eight topic constraints mixing floors and ceilings; ceilings load as
    negated floors."""
    m1 = 1000
    rng = np.random.default_rng(11)
    specs = [
        ("ge", 0.20),
        ("ge", 0.15),
        ("le", 0.20),
        ("le", 0.20),
        ("le", 0.20),
        ("le", 0.20),
        ("le", 0.20),
        ("ge", 0.02),
    ]
    records = tuple(
        ConstraintRecord(
            f"topic_{i}",
            sense,
            frac,
            "fraction_of_total_exposure",
            tuple((rng.random(m1) < 0.1).astype(float).tolist()),
        )
        for i, (sense, frac) in enumerate(specs)
    )
    p = tmp_path / "newsfeed.json"
    write_dataset(topic_share_dataset(records, m1=m1), p)
    inst = load_dataset(p)[0]
    total = sum(1.0 / math.log2(j + 2) for j in range(m1))
    for k, (sense, frac) in enumerate(specs):
        c = inst.constraints[k]
        assert c.sense is Sense.GE
        want = frac * total if sense == "ge" else -frac * total
        assert c.bound == pytest.approx(want, rel=1e-12)
        if sense == "le":
            assert c.a.max() <= 0.0  # negated memberships


# --- generator calibration ---------------------------------------------------


def test_binding_fraction_hits_target_across_laws():
    for law, binding in (
        (LambdaLaw.CLUSTERED, 0.65),
        (LambdaLaw.CONSTANT, 0.5),
        (LambdaLaw.LINEAR, 0.5),
    ):
        ds = synth_generate(
            SynthConfig(
                seed=13,
                n_users=150,
                m1=48,
                m2=6,
                num_constraints=3,
                covariate_dim=5,
                lambda_law=law,
                binding_fraction=binding,
            )
        )
        assert abs(ds.meta["binding_fraction_achieved"] - binding) <= 0.15


def test_every_generated_user_has_a_compliant_ranking():
    ds = synth_generate(SMALL)
    from shadowrank import DualConfig, solve_dual

    for inst in ds.instances():
        sp = solve_dual(inst, DualConfig(max_iterations=300))
        assert not sp.infeasible_flag


def test_config_validation():
    import dataclasses

    with pytest.raises(InfeasibleConfigError):
        dataclasses.replace(SMALL, binding_fraction=1.0)
    with pytest.raises(InfeasibleConfigError):
        dataclasses.replace(SMALL, m1=8)  # too small for K + spare topics


def test_pick_bound_atoms_bind_together():
    e = np.array([0.0, 0.0, 0.0, 0.3, 0.4])
    taken = np.zeros(5, dtype=bool)
    b, newly = _pick_bound(e, taken, need=2, cap=1.0)
    # the zero atom holds three users; overshooting to 3 beats binding 0
    assert newly == 3
    assert 0.0 < b < 0.3


def test_pick_bound_respects_cap():
    e = np.array([0.1, 0.2, 0.3, 0.4])
    taken = np.zeros(4, dtype=bool)
    b, newly = _pick_bound(e, taken, need=4, cap=0.25)
    assert b <= 0.25
    assert newly == 2  # only two exposures sit below the cap


# --- artifacts ---------------------------------------------------------------


def test_artifact_round_trip_preserves_predictions(tmp_path):
    ds = synth_generate(SMALL)
    art = offline_train(list(ds.instances()), dual_config=DualConfig(max_iterations=200))
    p = tmp_path / "model.json"
    save_artifact(art, p)
    back = load_artifact(p)
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.normal(size=art.covariate_dim)
        np.testing.assert_allclose(
            predict(back.predictor, x), predict(art.predictor, x), atol=1e-12
        )
    assert back.epsilon == art.epsilon
    np.testing.assert_allclose(back.mean_lambda, art.mean_lambda)
    assert back.item_count == art.item_count
    assert [c.bound for c in back.constraints] == [c.bound for c in art.constraints]


def test_artifact_rejects_dataset_file(tmp_path):
    ds = synth_generate(SMALL)
    p = tmp_path / "pop.json"
    write_dataset(ds, p)
    with pytest.raises(DataFormatError):
        load_artifact(p)
