import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zero_tracer.errors import DegenerateField, InvalidLabelling
from zero_tracer.labelling import (BarycentricPoint, Labelling, ScalarField, eval_simplicial,
                                   find_seed_triangle, label_by_sign, labelling_from_dict,
                                   labelling_to_dict, mixed_edges, random_labelling,
                                   triangle_mixed_edges, validate_labelling)
from zero_tracer.sphere_mesh import build_refined

two_z = ScalarField(lambda p: 2 * p[..., 2], vectorized=True, name="2z")


def test_standard_labelling_valid(octa, octa_labels):
    assert validate_labelling(octa, octa_labels).ok


def test_flipped_partner_breaks_antisymmetry(octa, octa_labels):
    octa_labels[3] = 1
    report = validate_labelling(octa, octa_labels)
    assert [v.rule for v in report.violations] == ["antisymmetry"]
    assert report.violations[0].index == 0


def test_zero_label_reported(octa, octa_labels):
    octa_labels[1] = 0
    assert "label not in {+1,-1}" in validate_labelling(octa, octa_labels).rules()


def test_missing_label_reported(octa):
    report = validate_labelling(octa, {0: 1, 3: -1})
    assert sorted(v.index for v in report.violations if v.rule == "missing label") == [1, 2, 4, 5]


def test_label_by_sign_retries_on_equator_ties(octa):
    mesh, lab = label_by_sign(octa, two_z)
    assert lab.tie_retries_used >= 1
    assert lab.rotation is not None
    assert set(lab.labels.tolist()) <= {1, -1}
    assert validate_labelling(mesh, lab).ok
    # on the rotated copy the labels are the signs of z
    assert np.array_equal(lab.labels, np.where(mesh.vertices[:, 2] > 0, 1, -1))


def test_label_by_sign_no_tie_keeps_mesh(octa):
    tilted = ScalarField(lambda p: p[..., 0] + 2 * p[..., 1] + 3 * p[..., 2], vectorized=True)
    mesh, lab = label_by_sign(octa, tilted)
    assert mesh is octa and lab.tie_retries_used == 0
    assert lab[2] == 1 and lab[5] == -1


def test_label_by_sign_zero_field(octa):
    with pytest.raises(DegenerateField):
        label_by_sign(octa, lambda p: 0.0)


def test_label_by_sign_level3_seed42():
    mesh, lab = label_by_sign(build_refined(3), two_z, seed=42)
    assert validate_labelling(mesh, lab).ok
    assert np.abs(mesh.vertices[:, 2]).min() * 2 > 1e-9


def test_label_by_sign_pointwise_and_vectorized_agree(level3):
    pointwise = ScalarField(lambda p: 2 * p[2])
    _, a = label_by_sign(level3, pointwise, seed=5)
    _, b = label_by_sign(level3, two_z, seed=5)
    assert np.array_equal(a.labels, b.labels)


def test_label_by_sign_rejects_bad_tol(octa):
    with pytest.raises(ValueError):
        label_by_sign(octa, two_z, tie_tol=0)


def test_eval_simplicial(octa, octa_labels):
    # triangle 1 is (e1, e2, -e3): labels (+1, +1, -1)
    assert tuple(octa.triangles[1]) == (0, 1, 5)
    assert eval_simplicial(octa, octa_labels, BarycentricPoint(1, (1, 0, 0))) == 1.0
    assert eval_simplicial(octa, octa_labels, BarycentricPoint(1, (0, 0.5, 0.5))) == 0.0
    third = eval_simplicial(octa, octa_labels, BarycentricPoint(1, (1 / 3, 1 / 3, 1 / 3)))
    assert abs(third - 1 / 3) <= 1e-15


def test_barycentric_validation():
    with pytest.raises(ValueError):
        BarycentricPoint(0, (0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        BarycentricPoint(0, (1.1, -0.1, 0.0))


def test_mixed_edges_octahedron_enumeration(octa, octa_labels):
    # every non-antipodal vertex pair of the octahedron is an edge
    all_edges = [(i, j) for i, j in itertools.combinations(range(6), 2) if j != i + 3]
    assert len(all_edges) == 12
    expected = {(i, j) for i, j in all_edges if octa_labels[i] + octa_labels[j] == 0}
    assert expected == {(0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (2, 4)}
    got = {tuple(e) for e in octa.edges[mixed_edges(octa, octa_labels)].tolist()}
    assert got == expected


def test_seed_triangle_octahedron(octa, octa_labels):
    expected = next(t for t, tri in enumerate(octa.triangles.tolist())
                    if len({octa_labels[v] for v in tri}) == 2)
    seed = find_seed_triangle(octa, octa_labels)
    assert seed == expected == 1
    assert sorted(octa_labels[octa.triangles[seed]].tolist()) == [-1, 1, 1]
    assert find_seed_triangle(octa, octa_labels) == seed


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), level=st.integers(0, 3))
def test_random_labelling_properties(seed, level):
    T = build_refined(level)
    lab = random_labelling(T, np.random.default_rng(seed))
    assert validate_labelling(T, lab).ok
    mixed = mixed_edges(T, lab)
    assert len(mixed) >= 1 and len(mixed) % 2 == 0
    assert set(T.edge_antipode[mixed].tolist()) == set(mixed.tolist())
    per_tri = np.isin(T.tri_edges, mixed).sum(axis=1)
    assert set(per_tri.tolist()) <= {0, 2}
    tm = triangle_mixed_edges(T, lab)
    assert np.array_equal(tm[:, 0] >= 0, per_tri == 2)
    # the value at each mixed-edge midpoint is exactly zero
    for e in mixed[:20]:
        t = int(T.edge_tris[e, 0])
        w = [0.5 if v in T.edges[e] else 0.0 for v in T.triangles[t]]
        assert eval_simplicial(T, lab, BarycentricPoint(t, tuple(w))) == 0.0


def test_triangle_mixed_edges_rejects_invalid(octa):
    with pytest.raises(InvalidLabelling):
        triangle_mixed_edges(octa, [1, 1, 0, -1, -1, 0])


def test_labelling_json_round_trip(octa):
    _, lab = label_by_sign(octa, two_z, seed=3)
    data = labelling_to_dict(lab)
    assert set(data) == {"labels", "mesh_meta", "tie_retries_used", "rotation"}
    assert len(data["rotation"]) == 9
    back = labelling_from_dict(data)
    assert np.array_equal(back.labels, lab.labels)
    assert np.array_equal(back.rotation, lab.rotation)
    assert labelling_to_dict(Labelling([1, -1]))["rotation"] is None


def test_field_purity_spot_check():
    pts = np.random.default_rng(0).standard_normal((10, 3))
    assert np.array_equal(two_z.batch(pts), two_z.batch(pts))
