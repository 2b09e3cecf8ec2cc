import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idt import (
    CalibrationError,
    ConfigError,
    FormatError,
    GroupingConfig,
    Transition,
    discretize,
    discretize_stream,
    fit_discretizer,
)
from idt.core import DiscretizerParams


def make_transition(t, s, a, s_next=None, reward=None):
    return Transition(t=t, s=s, a=a, s_next=s_next if s_next is not None else s, reward=reward)


class TestFitDiscretizer:
    def test_two_point_statistics(self):
        cal = [make_transition(0, [1.0], [0.0]), make_transition(1, [3.0], [0.0])]
        params = fit_discretizer(cal)
        assert params.mu[0] == 2.0
        assert params.sigma[0] == pytest.approx(math.sqrt(2), abs=0)

    def test_constant_variable_floors_sigma_and_maps_to_middle_bin(self):
        cal = [make_transition(i, [5.0], [5.0]) for i in range(10)]
        params = fit_discretizer(cal, bins=3)
        assert params.sigma[0] == 1e-9
        grouping = GroupingConfig.single(1, 1)
        sym = discretize(make_transition(0, [5.0], [5.0]), params, grouping)
        assert sym.s_sym == (1,)
        assert sym.a_sym == (1,)

    def test_empty_calibration_raises(self):
        with pytest.raises(CalibrationError):
            fit_discretizer([])

    def test_single_record_floors_sigma(self):
        params = fit_discretizer([make_transition(0, [1.0, 2.0], [0.5])])
        assert np.all(params.sigma == 1e-9)

    def test_dimension_drift_raises(self):
        cal = [make_transition(0, [1.0], [0.0]), make_transition(1, [1.0, 2.0], [0.0])]
        with pytest.raises(FormatError):
            fit_discretizer(cal)

    def test_bad_bins_and_clip(self):
        cal = [make_transition(0, [1.0], [0.0]), make_transition(1, [2.0], [0.0])]
        with pytest.raises(ConfigError):
            fit_discretizer(cal, bins=1)
        with pytest.raises(ConfigError):
            fit_discretizer(cal, clip=0.0)


def unit_params(n_state, n_action, bins=3, clip=3.0):
    """mu=0, sigma=1 for every variable: z equals the raw value."""
    n = n_state + n_action
    return DiscretizerParams(
        bins=bins, clip=clip, mu=np.zeros(n), sigma=np.ones(n),
        state_dim=n_state, action_dim=n_action,
    )


class TestDiscretize:
    def test_bin_edges_default_three_bins(self):
        # intervals [-3,-1), [-1,1), [1,3]
        params = unit_params(1, 1)
        grouping = GroupingConfig.single(1, 1)
        for z, expected in [(-3.0, 0), (-1.5, 0), (-1.0, 1), (0.0, 1), (0.999, 1), (1.0, 2), (3.0, 2)]:
            sym = discretize(make_transition(0, [z], [0.0]), params, grouping)
            assert sym.s_sym == (expected,), f"z={z}"

    def test_clamp_beyond_clip(self):
        params = unit_params(1, 1)
        grouping = GroupingConfig.single(1, 1)
        sym = discretize(make_transition(0, [4.2], [0.0]), params, grouping)
        assert sym.s_sym == (2,)
        sym = discretize(make_transition(0, [-99.0], [0.0]), params, grouping)
        assert sym.s_sym == (0,)

    def test_positional_group_encoding(self):
        # bins (2, 0) in one group of two variables -> 2*3 + 0 = 6
        params = unit_params(2, 1)
        grouping = GroupingConfig(state_groups=((0, 1),), action_groups=((0,),))
        sym = discretize(make_transition(0, [2.0, -1.5], [0.0]), params, grouping)
        assert sym.s_sym == (6,)

    def test_dimension_mismatch_raises(self):
        params = unit_params(2, 1)
        grouping = GroupingConfig.single(2, 1)
        with pytest.raises(FormatError):
            discretize(make_transition(0, [1.0], [0.0]), params, grouping)

    def test_state_and_next_state_share_parameters(self):
        cal = [make_transition(i, [float(i)], [0.0]) for i in range(20)]
        params = fit_discretizer(cal)
        grouping = GroupingConfig.single(1, 1)
        a = discretize(Transition(t=0, s=[4.0], a=[0.0], s_next=[13.0]), params, grouping)
        b = discretize(Transition(t=1, s=[13.0], a=[0.0], s_next=[4.0]), params, grouping)
        assert a.s_next_sym == b.s_sym
        assert a.s_sym == b.s_next_sym

    def test_reward_and_episode_pass_through(self):
        params = unit_params(1, 1)
        grouping = GroupingConfig.single(1, 1)
        tr = Transition(t=3, s=[0.0], a=[0.0], s_next=[0.0], reward=-1.25, episode=7)
        sym = discretize(tr, params, grouping)
        assert sym.reward == -1.25
        assert sym.episode == 7
        assert sym.t == 3


class TestGroupingConfig:
    def test_single_covers_everything(self):
        g = GroupingConfig.single(3, 2)
        g.validate(3, 2)
        assert g.state_groups == ((0, 1, 2),)
        assert g.action_groups == ((0, 1),)

    def test_partition_violations(self):
        with pytest.raises(ConfigError):  # gap
            GroupingConfig(state_groups=((0,),), action_groups=((0,),)).validate(2, 1)
        with pytest.raises(ConfigError):  # overlap
            GroupingConfig(state_groups=((0, 1), (1,)), action_groups=((0,),)).validate(2, 1)
        with pytest.raises(ConfigError):  # empty group
            GroupingConfig(state_groups=((0,), ()), action_groups=((0,),)).validate(1, 1)
        with pytest.raises(ConfigError):  # no groups at all
            GroupingConfig(state_groups=(), action_groups=((0,),)).validate(1, 1)

    def test_file_round_trip(self, tmp_path):
        import json

        path = tmp_path / "groups.json"
        path.write_text(json.dumps({"state_groups": [[0, 1], [2]], "action_groups": [[0]]}))
        g = GroupingConfig.from_file(path)
        g.validate(3, 1)
        assert g.state_groups == ((0, 1), (2,))

    def test_file_missing_key(self, tmp_path):
        path = tmp_path / "groups.json"
        path.write_text('{"state_groups": [[0]]}')
        with pytest.raises(ConfigError):
            GroupingConfig.from_file(path)


class TestProperties:
    @given(
        values=st.lists(st.floats(-50, 50), min_size=3, max_size=3),
        bins=st.integers(2, 5),
    )
    @settings(max_examples=60, deadline=None)
    def test_determinism_and_symbol_range(self, values, bins):
        params = unit_params(2, 1, bins=bins)
        grouping = GroupingConfig(state_groups=((0, 1),), action_groups=((0,),))
        tr = make_transition(0, values[:2], values[2:])
        s1 = discretize(tr, params, grouping)
        s2 = discretize(tr, params, grouping)
        assert s1 == s2
        assert 0 <= s1.s_sym[0] < bins**2
        assert 0 <= s1.a_sym[0] < bins

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=8, unique=True))
    @settings(max_examples=60, deadline=None)
    def test_monotone_binning(self, values):
        params = unit_params(1, 1)
        grouping = GroupingConfig.single(1, 1)
        values = sorted(values)
        bins = [
            discretize(make_transition(0, [v], [0.0]), params, grouping).s_sym[0] for v in values
        ]
        assert bins == sorted(bins)

    def test_stream_discretize_matches_pointwise(self, rng):
        cal = [make_transition(i, rng.normal(size=3), rng.normal(size=2)) for i in range(50)]
        params = fit_discretizer(cal)
        grouping = GroupingConfig(state_groups=((0, 1), (2,)), action_groups=((0,), (1,)))
        stream = [
            Transition(t=i, s=rng.normal(size=3), a=rng.normal(size=2), s_next=rng.normal(size=3))
            for i in range(200)
        ]
        bulk = discretize_stream(stream, params, grouping)
        single = [discretize(tr, params, grouping) for tr in stream]
        assert bulk == single
