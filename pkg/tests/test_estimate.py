import numpy as np
import pytest

from mindist import divergence as dv
from mindist.errors import DegenerateDataError, ParameterError
from mindist.estimate import (
    Surface,
    argmax_affinity,
    argmin_divergence,
    build_surface,
    distance_surface,
    rank_models,
)
from mindist.grid import GridSpec, flat_index
from mindist.kde import VelocityDataset
from mindist.synthgen import FieldParams, generate_suite, generate_velocity_dataset
from mindist.grid import grid_location

SMALL = GridSpec(n_r=6, n_theta=3)


def _surface(values, measure=dv.AFFINITY, spec=None):
    return Surface(spec or GridSpec(), measure, np.asarray(values, float))


@pytest.fixture(scope="module")
def small_suite():
    sims = generate_suite(SMALL, n_per_location=200, master_seed=5)
    loc = grid_location(4, 2, SMALL)
    observed = generate_velocity_dataset(loc, 600, rng=np.random.default_rng(77))
    return observed, sims


class TestExtrema:
    def test_unique_max(self):
        vals = np.zeros(216)
        vals[4] = 1.0
        assert argmax_affinity(_surface(vals)).indices == (1, 5)

    def test_all_equal_ties(self):
        assert argmax_affinity(_surface(np.full(216, 0.4))).indices == (1, 1)
        assert argmin_divergence(_surface(np.full(216, 0.4), dv.KL)).indices == (1, 1)

    def test_max_location_mapping(self):
        vals = np.full(216, 0.1)
        vals[flat_index(20, 2) - 1] = 0.9
        est = argmax_affinity(_surface(vals))
        assert (est.location.r, est.location.theta) == (2.1875, 15.0)
        assert est.orientation == "max" and est.value == 0.9

    def test_min_at_last_cell(self):
        vals = np.full(216, 50.0)
        vals[215] = 0.0
        assert argmin_divergence(_surface(vals, dv.KL)).indices == (24, 9)

    def test_min_mapping(self):
        vals = np.full(216, 5.0)
        vals[flat_index(22, 7) - 1] = 0.01
        est = argmin_divergence(_surface(vals, dv.PE))
        assert (est.location.r, est.location.theta) == (2.2375, 65.0)
        assert est.orientation == "min"

    def test_wrong_measure(self):
        with pytest.raises(ParameterError):
            argmax_affinity(_surface(np.zeros(216), dv.KL))
        with pytest.raises(ParameterError):
            argmin_divergence(_surface(np.zeros(216)))

    def test_argmax_affinity_is_argmin_hellinger(self):
        gen = np.random.default_rng(0)
        for _ in range(20):
            s = _surface(gen.uniform(0, 1, 216))
            assert argmax_affinity(s).indices == argmin_divergence(distance_surface(s)).indices


class TestSurfaceType:
    def test_wrong_length(self):
        with pytest.raises(ParameterError):
            _surface(np.zeros(10))

    def test_non_finite(self):
        vals = np.zeros(216)
        vals[3] = np.nan
        with pytest.raises(ParameterError, match="4"):
            _surface(vals)

    def test_matrix_layout(self):
        s = _surface(np.arange(216.0))
        assert s.as_matrix()[1, 0] == 9.0
        assert s.value_at(2, 1) == 9.0

    def test_dict_round_trip(self):
        s = Surface(SMALL, dv.KL, np.linspace(0, 1, 18), observed_n=5, per_location_n=[3] * 18)
        back = Surface.from_dict(s.to_dict())
        np.testing.assert_array_equal(back.values, s.values)
        assert back.spec == SMALL and back.per_location_n == s.per_location_n


class TestBuildSurface:
    def test_self_affinity(self):
        obs = VelocityDataset(np.random.default_rng(1).standard_normal((100, 2)))
        s = build_surface(obs, [obs] * SMALL.d, spec=SMALL)
        np.testing.assert_allclose(s.values, 1.0, atol=1e-3)

    def test_synthetic_surface(self, small_suite):
        observed, sims = small_suite
        s = build_surface(observed, sims, spec=SMALL)
        assert np.isfinite(s.values).all()
        assert s.values.std() > 0.01
        assert s.observed_n == 600 and s.per_location_n == (200,) * SMALL.d
        assert argmax_affinity(s).indices == (4, 2)

    def test_kl_agrees_with_affinity(self, small_suite):
        observed, sims = small_suite
        aff = build_surface(observed, sims, dv.AFFINITY, spec=SMALL)
        kl = build_surface(observed, sims, dv.KL, spec=SMALL)
        assert argmin_divergence(kl).indices == argmax_affinity(aff).indices

    def test_deterministic(self, small_suite):
        observed, sims = small_suite
        a = build_surface(observed, sims, spec=SMALL, quad_resolution=64)
        b = build_surface(observed, sims, spec=SMALL, quad_resolution=64)
        np.testing.assert_array_equal(a.values, b.values)

    def test_workers_do_not_change_values(self, small_suite):
        observed, sims = small_suite
        a = build_surface(observed, sims, spec=SMALL, quad_resolution=64)
        b = build_surface(observed, sims, spec=SMALL, quad_resolution=64, workers=4)
        np.testing.assert_array_equal(a.values, b.values)

    def test_row_permutation_invariance(self, small_suite):
        observed, sims = small_suite
        gen = np.random.default_rng(3)
        perm_obs = VelocityDataset(observed.samples[gen.permutation(observed.n)])
        perm_sims = [VelocityDataset(s.samples[gen.permutation(s.n)]) for s in sims]
        a = build_surface(observed, sims, spec=SMALL, quad_resolution=64)
        b = build_surface(perm_obs, perm_sims, spec=SMALL, quad_resolution=64)
        np.testing.assert_allclose(a.values, b.values, rtol=1e-10, atol=1e-14)

    def test_degenerate_names_index(self, small_suite):
        observed, sims = small_suite
        bad = list(sims)
        bad[6] = VelocityDataset(np.ones((5, 2)))
        with pytest.raises(DegenerateDataError, match="grid index 7"):
            build_surface(observed, bad, spec=SMALL)

    def test_wrong_count(self, small_suite):
        observed, sims = small_suite
        with pytest.raises(ParameterError):
            build_surface(observed, sims[:-1], spec=SMALL)


class TestRanking:
    def test_single(self):
        ranked = rank_models([("only", _surface(np.full(216, 0.5)))])
        assert [m.name for m in ranked] == ["only"]

    def test_order_by_best_value(self):
        a = np.zeros(216)
        a[0] = 0.8
        b = np.zeros(216)
        b[5] = 0.9
        ranked = rank_models([("a", _surface(a)), ("b", _surface(b))])
        assert [m.name for m in ranked] == ["b", "a"]
        assert ranked[0].best_value == 0.9 and ranked[0].estimate.indices == (1, 6)

    def test_ties_by_name(self):
        s = _surface(np.full(216, 0.5))
        assert [m.name for m in rank_models([("z", s), ("m", s)])] == ["m", "z"]

    def test_empty(self):
        with pytest.raises(ParameterError):
            rank_models([])

    def test_ground_truth_model_wins(self, small_suite):
        observed, sims = small_suite
        other = generate_suite(SMALL, 200, FieldParams(noise_scale=2.5), 5)
        ranked = rank_models([
            ("other", build_surface(observed, other, spec=SMALL)),
            ("truth", build_surface(observed, sims, spec=SMALL)),
        ])
        assert ranked[0].name == "truth"
