import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from topoprune.mts import MtsDataset
from topoprune.pruner import run_pipeline
from topoprune.sheaf import (
    Assignment,
    Normalizer,
    SheafComplex,
    c_epsilon,
    consistency_filtration,
    consistency_radius,
    delta,
    delta_channels,
    is_global_section,
    sheaf_features,
)
from topoprune.simplicial import SimplicialComplex, flag_complex
from topoprune.synthetic import make_mastitis_like

finite = st.floats(-1e3, 1e3, allow_nan=False)


def path_sheaf(n):
    return SheafComplex(SimplicialComplex.from_simplices(n, [(k, k + 1) for k in range(n - 1)]))


class TestDelta:
    def test_equal_readings(self):
        assert delta((0, 1), Assignment([5.0, 5.0])) == 0.0

    def test_edge(self):
        assert abs(delta((0, 1), Assignment([0.0, 2.0])) - math.sqrt(1 / 2)) <= 1e-12

    def test_triangle(self):
        assert abs(delta((0, 1, 2), Assignment([0.0, 0.0, 3.0])) - math.sqrt(2 / 3)) <= 1e-12

    def test_vector_stalks(self):
        # trace of the covariance sums the per-coordinate variances
        a = Assignment(np.array([[0.0, 1.0], [2.0, 1.0]]))
        assert delta((0, 1), a) == pytest.approx(math.sqrt(1 / 2))

    def test_vertex_rejected(self):
        with pytest.raises(ValueError):
            delta((0,), Assignment([1.0]))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Assignment([0.0, math.nan])

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, 3, elements=finite), finite)
    def test_translation_invariant(self, vals, shift):
        a, b = Assignment(vals), Assignment(vals + shift)
        assert delta((0, 1, 2), b) == pytest.approx(delta((0, 1, 2), a), rel=1e-9, abs=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, 3, elements=finite), st.floats(1e-3, 1e3))
    def test_scaling_equivariant(self, vals, k):
        a, b = Assignment(vals), Assignment(vals * k)
        assert delta((0, 1, 2), b) == pytest.approx(k * delta((0, 1, 2), a), rel=1e-9, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, 4, elements=finite), st.permutations(range(4)))
    def test_vertex_order_irrelevant(self, vals, perm):
        a = Assignment(vals)
        b = Assignment(vals[list(perm)])
        assert delta((0, 1, 2, 3), b) == pytest.approx(delta((0, 1, 2, 3), a), rel=1e-12, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(arrays(float, 3, elements=st.one_of(finite, st.sampled_from([683.44179071, -1e300, 1e300, 5e-324]))))
    def test_zero_iff_equal(self, vals):
        equal = vals[0] == vals[1] == vals[2]
        assert (delta((0, 1, 2), Assignment(vals)) == 0.0) == equal

    def test_equal_readings_exact_zero(self):
        assert delta((0, 1, 2), Assignment([683.44179071] * 3)) == 0.0
        assert delta((0, 1), Assignment([0.0, 5e-324])) > 0.0
        assert math.isfinite(delta((0, 1), Assignment([-1e308, 1e308])))


class TestCEpsilon:
    def test_closed_inequality(self):
        a = Assignment([0.0, 2.0])
        d = delta((0, 1), a)
        assert c_epsilon((0, 1), a, d)
        assert not c_epsilon((0, 1), a, 0.7)
        assert c_epsilon((0, 1), Assignment([3.0, 3.0]), 0.0)


class TestGlobalSection:
    def test_constant(self):
        assert is_global_section(Assignment([2.0, 2.0, 2.0]), path_sheaf(3))

    def test_one_bad_edge(self):
        assert not is_global_section(Assignment([2.0, 2.0, 2.5]), path_sheaf(3))

    def test_per_component_constants(self):
        sheaf = SheafComplex(SimplicialComplex.from_simplices(4, [(0, 1), (2, 3)]))
        assert is_global_section(Assignment([1.0, 1.0, 7.0, 7.0]), sheaf)

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            is_global_section(Assignment([1.0, 1.0]), path_sheaf(3))


class TestRadius:
    def test_single_edge(self):
        assert consistency_radius(Assignment([0.0, 2.0]), path_sheaf(2)) == pytest.approx(math.sqrt(0.5), abs=1e-12)

    def test_global_section_zero(self):
        assert consistency_radius(Assignment([4.0, 4.0, 4.0]), path_sheaf(3)) == 0.0

    def test_no_faces(self):
        sheaf = SheafComplex(SimplicialComplex.from_simplices(3, []))
        assert consistency_radius(Assignment([0.0, 1.0, 2.0]), sheaf) == 0.0

    def test_edge_values(self):
        # readings chosen so the three edge deltas are 0.2, 0.5, 0.1
        # an edge delta is |a - b| / (2 sqrt 2)
        s = 2 * 2 ** 0.5
        vals = [0.0, 0.2 * s, 0.7 * s, 0.6 * s]
        r = consistency_radius(Assignment(vals), path_sheaf(4))
        assert r == pytest.approx(0.5, abs=1e-12)


class TestFiltration:
    def test_landmarks_dedup(self):
        s = 2 * 2 ** 0.5
        vals = [0.0, 0.3 * s, 0.0, 0.8 * s]
        sheaf = SheafComplex(SimplicialComplex.from_simplices(4, [(0, 1), (1, 2), (2, 3)]))
        rep = consistency_filtration(Assignment(vals), sheaf)
        assert rep.landmarks == pytest.approx((0.0, 0.3, 0.8), abs=1e-12)
        assert rep.radius == rep.landmarks[-1]

    def test_global_section_landmarks(self):
        rep = consistency_filtration(Assignment([1.0, 1.0, 1.0]), path_sheaf(3))
        assert rep.landmarks == (0.0,)

    def test_square_with_discordant_vertex(self):
        base = SimplicialComplex.from_simplices(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        sheaf = SheafComplex(base)
        rep = consistency_filtration(Assignment([0.0, 0.1, 0.0, 5.0]), sheaf)
        mid = rep.landmarks[1]
        sub = rep.subcomplex(mid)
        assert set(sub.edges) == {(0, 1), (1, 2)}
        assert all(3 not in e for e in sub.edges)
        assert sub.n_vertices == 4
        assert set(rep.subcomplex(rep.radius).edges) == set(base.edges)

    def test_subcomplex_requires_consistent_faces(self):
        # the triangle's own delta is small but one of its edges is not
        base = flag_complex(3, [(0, 1), (1, 2), (0, 2)], 2)
        sheaf = SheafComplex(base)
        rep = consistency_filtration(Assignment([0.0, 0.0, 3.0]), sheaf)
        tri = rep.deltas[(0, 1, 2)]
        assert tri < rep.deltas[(0, 2)]
        assert (0, 1, 2) not in rep.subcomplex(tri)

    def test_radius_equals_max_on_random_complexes(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.6]
            sheaf = SheafComplex(flag_complex(n, edges, 3))
            a = Assignment(rng.normal(size=n))
            deltas = [delta(f, a) for f in sheaf.higher_faces()]
            assert consistency_radius(a, sheaf) == max(deltas, default=0.0)

    def test_to_dict_uses_names(self):
        rep = consistency_filtration(Assignment([0.0, 2.0]), path_sheaf(2))
        assert list(rep.to_dict(["a", "b"])["deltas"]) == ["a-b"]


class TestFeatures:
    def test_mastitis_channels(self):
        ds = make_mastitis_like()
        r = run_pipeline(ds)
        aug = sheaf_features(r.dataset, SheafComplex(r.kept_complex()))
        new = aug.variable_names[r.dataset.n_vars:]
        assert new == (
            "delta__Milk Index__Rumination Index",
            "delta__Adjusted Temperature__Temperature Excluding Drinking",
            "delta__Temperature Excluding Drinking__Raw Temperature",
        )

    def test_original_channels_untouched(self):
        ds = make_mastitis_like()
        r = run_pipeline(ds)
        aug = sheaf_features(r.dataset, SheafComplex(r.kept_complex()))
        assert np.array_equal(aug.values[:, : r.dataset.n_vars], r.dataset.values)

    def test_no_edges_unchanged(self):
        ds = MtsDataset(np.random.default_rng(0).normal(size=(2, 3, 5)), ("a", "b", "c"))
        out = sheaf_features(ds, SheafComplex(SimplicialComplex.from_simplices(3, [])))
        assert out is ds

    def test_identical_variables_zero(self):
        x = np.random.default_rng(0).normal(size=(2, 1, 6))
        ds = MtsDataset(np.concatenate([x, x], axis=1), ("a", "b"))
        out = sheaf_features(ds, path_sheaf(2), normalize=False)
        assert np.all(out.values[:, 2] == 0.0)

    def test_matches_scalar_delta(self):
        rng = np.random.default_rng(1)
        ds = MtsDataset(rng.normal(size=(2, 3, 4)), ("a", "b", "c"))
        sheaf = SheafComplex(flag_complex(3, [(0, 1), (1, 2), (0, 2)], 2))
        out = sheaf_features(ds, sheaf, normalize=False)
        faces = sheaf.higher_faces()
        for i in range(2):
            for t in range(4):
                a = Assignment(ds.values[i, :, t])
                for k, f in enumerate(faces):
                    assert out.values[i, 3 + k, t] == pytest.approx(delta(f, a), abs=1e-12)

    def test_vertex_mismatch(self):
        ds = MtsDataset(np.zeros((1, 2, 3)), ("a", "b"))
        with pytest.raises(ValueError):
            sheaf_features(ds, path_sheaf(3))

    def test_normalizer_constant_channel(self):
        ds = MtsDataset(np.array([[[1.0, 2.0, 3.0], [4.0, 4.0, 4.0]]]), ("a", "b"))
        z = Normalizer.fit(ds).transform(ds.values)
        assert np.all(z[:, 1] == 0.0)
        assert z[0, 0].mean() == pytest.approx(0.0) and z[0, 0].std() == pytest.approx(1.0)

    def test_delta_channels_shape(self):
        out = delta_channels(np.zeros((3, 4, 5)), [(0, 1), (1, 2, 3)])
        assert out.shape == (3, 2, 5)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_every_face_passes_at_radius(n, seed):
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.5]
    sheaf = SheafComplex(flag_complex(n, edges, 3), stalk_dim=2)
    a = Assignment(rng.normal(size=(n, 2)))
    rep = consistency_filtration(a, sheaf)
    assert rep.radius == consistency_radius(a, sheaf)
    assert all(c_epsilon(f, a, rep.radius) for f in sheaf.higher_faces())
    assert list(rep.landmarks) == sorted(set(rep.landmarks)) and rep.landmarks[0] == 0.0
    assert rep.subcomplex(rep.radius) == sheaf.base
