"""
Tests for the quasi-static equilibrium solver and closing simulation
"""

import numpy as np
import pytest

from conftest import build_design
from models.domain import ClosingEventKind, ContactConstraint, JointConfiguration
from services.quasistatic_solver import (
    EquilibriumBatch,
    free_motion,
    grid_search_pose,
    kkt_residuals,
    potential_energy,
    simulate_closing,
    solve_pose,
    tendon_slack,
)
from utils.exceptions import (
    DegenerateDesignError,
    InfeasibleConfigurationError,
    InfeasibleConstraintError,
    SolverError,
)

pytestmark = pytest.mark.unit


def _sa_joint_design():
    """SA joint with r=8 on a r_mot=6 shaft"""
    return build_design(
        joints=[('A', 0.0, 1.6, 20.0, 2.0)],
        tendons=[('abd', 'SA', -1, [('A', 8.0, -1)])],
        motor=(6.0, 0.0, 2.0, 84.0),
    )


def _assert_complementary(result, tolerance=1e-9):
    for status in result.tendon_statuses:
        assert status.tension >= 0.0
        assert status.slack >= 0.0
        assert status.tension * status.slack <= tolerance
    for torque in result.contact_torques.values():
        assert torque >= 0.0


class TestTendonSlack:

    def test_reference_pose(self, single_joint_design):
        assert tendon_slack(single_joint_design, single_joint_design.reference_pose, 'J_flex') == 0.0

    def test_taut_tendon(self, single_joint_design):
        config = JointConfiguration(angles={'J': 0.1}, motor_angle=0.2)
        assert tendon_slack(single_joint_design, config, 'J_flex') == pytest.approx(0.0, abs=1e-12)

    def test_sa_tendon_slack_when_joint_is_held(self):
        design = _sa_joint_design()
        config = JointConfiguration(angles={'A': 0.0}, motor_angle=0.3)
        assert tendon_slack(design, config, 'abd') == pytest.approx(1.8)

    def test_stretch_is_infeasible(self, single_joint_design):
        config = JointConfiguration(angles={'J': 0.05}, motor_angle=0.2)
        with pytest.raises(InfeasibleConfigurationError):
            tendon_slack(single_joint_design, config, 'J_flex')


class TestPotentialEnergy:

    def test_zero_stiffness_stores_nothing(self):
        design = build_design(
            joints=[('J', 0.0, 1.0, 0.0, 0.5)],
            tendons=[('t', 'TA', 1, [('J', 10.0, 1)])],
        )
        config = JointConfiguration(angles={'J': 0.7}, motor_angle=0.0)
        assert potential_energy(design, config) == 0.0

    def test_restoring_spring(self, single_joint_design):
        config = JointConfiguration(angles={'J': 0.5}, motor_angle=0.3)
        assert potential_energy(single_joint_design, config) == pytest.approx(0.5 * 1.0 * 1.5 ** 2)

    def test_driving_spring(self):
        design = _sa_joint_design()
        config = JointConfiguration(angles={'A': 0.5}, motor_angle=0.0)
        assert potential_energy(design, config) == pytest.approx(0.5 * 20.0 * 1.5 ** 2)

    def test_independent_of_motor_angle(self, iss_design):
        angles = dict(iss_design.reference_pose.angles, F1P=0.4)
        low = potential_energy(iss_design, JointConfiguration(angles, 0.0))
        high = potential_energy(iss_design, JointConfiguration(angles, 1.5))
        assert low == high


class TestSolvePose:

    def test_single_joint(self, single_joint_design):
        result = solve_pose(single_joint_design, 0.2)
        assert result.angle('J') == pytest.approx(0.1, abs=1e-12)
        status = result.status('J_flex')
        assert status.tension == pytest.approx(0.11, abs=1e-12)
        assert status.slack == pytest.approx(0.0, abs=1e-12)
        assert status.taut

    def test_chain_shares_motion_by_arm_ratio(self, two_joint_chain):
        result = solve_pose(two_joint_chain, 1.0)
        assert result.angle('P') == pytest.approx(0.08, abs=1e-12)
        assert result.angle('D') == pytest.approx(0.04, abs=1e-12)
        assert result.status('chain').tension == pytest.approx(0.008, abs=1e-12)

    def test_blocked_proximal_joint(self, two_joint_chain):
        result = solve_pose(two_joint_chain, 1.0, [ContactConstraint('P', 0.02)])
        assert result.angle('P') == pytest.approx(0.02, abs=1e-12)
        assert result.angle('D') == pytest.approx(0.16, abs=1e-12)
        assert result.contact_torques['P'] == pytest.approx(0.3, abs=1e-9)
        assert result.contact_torques['P'] > 0.0

    def test_inactive_contact_carries_no_torque(self, two_joint_chain):
        result = solve_pose(two_joint_chain, 1.0, [ContactConstraint('P', 1.0)])
        assert result.angle('P') == pytest.approx(0.08, abs=1e-12)
        assert 'P' not in result.contact_torques

    def test_contact_below_joint_minimum(self, two_joint_chain):
        with pytest.raises(InfeasibleConstraintError):
            solve_pose(two_joint_chain, 0.5, [ContactConstraint('P', -0.1)])

    def test_contact_on_unknown_joint(self, two_joint_chain):
        with pytest.raises(InfeasibleConstraintError):
            solve_pose(two_joint_chain, 0.5, [ContactConstraint('Z', 0.1)])

    def test_zero_stiffness(self, single_joint_design):
        design = single_joint_design.with_joint('J', stiffness=0.0)
        with pytest.raises(DegenerateDesignError):
            solve_pose(design, 0.2)

    def test_motor_angle_outside_range(self, single_joint_design):
        with pytest.raises(InfeasibleConfigurationError):
            solve_pose(single_joint_design, 1.5)

    def test_tendon_would_stretch(self, single_joint_design):
        design = single_joint_design.with_joint('J', angle_max=0.1)
        with pytest.raises(InfeasibleConfigurationError):
            solve_pose(design, 0.5)

    def test_untensioned_tendon_leaves_springs_at_rest(self, single_joint_design):
        result = solve_pose(single_joint_design, 0.0)
        assert result.angle('J') == 0.0
        # preload holds the joint on its lower stop
        assert result.limit_torques['J'] == pytest.approx(1.0)

    def test_sa_joint_follows_shaft(self, iss_design):
        result = solve_pose(iss_design, 0.8)
        assert result.angle('F1A') == pytest.approx(0.6, abs=1e-12)
        assert result.status('F1_abd').taut
        assert result.status('F1_abd').tension > 0.0

    def test_complementarity_over_builtin_closing(self, iss_design):
        contacts = [ContactConstraint('F1P', 0.4), ContactConstraint('F2A', 0.2)]
        for phi in np.linspace(0.0, iss_design.motor.angle_max, 25):
            _assert_complementary(solve_pose(iss_design, phi))
            _assert_complementary(solve_pose(iss_design, phi, contacts))

    def test_stationarity(self, iss_design):
        # TP blocked at 0.3 lets the thumb tendon release 8 * 0.3 + 6 * pi / 2 mm,
        # which the r_mot=6 shaft takes up by about 1.97 rad
        contacts = [ContactConstraint('TP', 0.3)]
        for phi in np.linspace(0.0, 1.9, 25):
            result = solve_pose(iss_design, phi, contacts)
            for residual in kkt_residuals(iss_design, result, contacts).values():
                assert abs(residual) <= 1e-6

    def test_blocked_thumb_cannot_follow_full_travel(self, iss_design):
        with pytest.raises(InfeasibleConfigurationError, match='T_flex'):
            solve_pose(iss_design, iss_design.motor.angle_max, [ContactConstraint('TP', 0.3)])


class TestFreeMotion:

    def test_matches_single_solves(self, iss_design):
        grid = np.linspace(0.0, iss_design.motor.angle_max, 13)
        trajectory = free_motion(iss_design, grid)
        assert len(trajectory) == 13
        for i, phi in enumerate(grid):
            result = solve_pose(iss_design, phi)
            for j, joint_id in enumerate(iss_design.joint_ids):
                assert trajectory.angles[i, j] == pytest.approx(result.angle(joint_id), abs=1e-12)

    def test_sa_coupling_is_linear(self, iss_design):
        grid = np.linspace(0.0, iss_design.motor.angle_max, 200)
        trajectory = free_motion(iss_design, grid)
        assert np.allclose(trajectory.column('F1A'), 0.75 * grid, atol=1e-9)
        assert np.allclose(trajectory.column('F2A'), 0.75 * grid, atol=1e-9)
        assert np.all(trajectory.slacks[:, trajectory.tendon_ids.index('F1_abd')] < 1e-6)

    def test_flexion_is_monotone(self, iss_design):
        grid = np.linspace(0.0, iss_design.motor.angle_max, 100)
        trajectory = free_motion(iss_design, grid)
        assert np.all(np.diff(trajectory.angles, axis=0) >= -1e-12)

    def test_batch_reuse(self, iss_design):
        batch = EquilibriumBatch(iss_design)
        first = batch.angles(np.array([0.5, 1.0]))
        second = batch.angles(np.array([0.5, 1.0]))
        assert np.array_equal(first, second)


class TestGridOracle:

    def test_agrees_on_single_joint(self, single_joint_design):
        result = grid_search_pose(single_joint_design, 0.2)
        assert result.angle('J') == pytest.approx(0.1, abs=1e-3)

    def test_agrees_on_blocked_chain(self, two_joint_chain):
        result = grid_search_pose(two_joint_chain, 1.0, [ContactConstraint('P', 0.02)])
        assert result.angle('P') == pytest.approx(0.02, abs=1e-3)
        assert result.angle('D') == pytest.approx(0.16, abs=1e-3)

    def test_grid_alone_is_within_half_resolution(self, two_joint_chain):
        result = grid_search_pose(two_joint_chain, 1.0, [ContactConstraint('P', 0.02)], refine=False)
        assert result.angle('P') == pytest.approx(0.02, abs=5e-4)
        assert result.angle('D') == pytest.approx(0.16, abs=5e-4)

    def test_coarse_resolution(self, two_joint_chain):
        result = grid_search_pose(two_joint_chain, 1.2, resolution=0.01, refine=False)
        # Unblocked optimum is along the arm vector: theta = a * 1.2 / |a|^2
        assert result.angle('P') == pytest.approx(0.096, abs=5e-3)
        assert result.angle('D') == pytest.approx(0.048, abs=5e-3)

    def test_polish_recovers_exact_point_and_tension(self, two_joint_chain):
        result = grid_search_pose(two_joint_chain, 1.0, [ContactConstraint('P', 0.02)])
        assert result.angle('P') == pytest.approx(0.02, abs=1e-9)
        assert result.angle('D') == pytest.approx(0.16, abs=1e-9)
        assert result.status('chain').tension == pytest.approx(0.032, abs=1e-9)
        assert result.contact_torques['P'] == pytest.approx(0.3, abs=1e-9)

    def test_rejects_large_designs(self, iss_design):
        with pytest.raises(SolverError):
            grid_search_pose(iss_design, 0.5)

    def test_contact_below_minimum(self, two_joint_chain):
        with pytest.raises(InfeasibleConstraintError):
            grid_search_pose(two_joint_chain, 0.5, [ContactConstraint('D', -1.0)])

    @pytest.mark.slow
    def test_random_designs(self):
        rng = np.random.default_rng(20240611)
        for case in range(100):
            design, phi, contacts = _random_case(rng)
            fast = solve_pose(design, phi, contacts)
            slow = grid_search_pose(design, phi, contacts, refine=False)
            for joint_id in design.joint_ids:
                assert fast.angle(joint_id) == pytest.approx(slow.angle(joint_id), abs=2e-3), \
                    f"case {case}: {design} at {phi} with {contacts}"
            assert fast.energy <= slow.energy + 1e-9
            if case % 10 == 0:
                polished = grid_search_pose(design, phi, contacts)
                assert polished.energy <= slow.energy + 1e-9
                for joint_id in design.joint_ids:
                    assert fast.angle(joint_id) == pytest.approx(polished.angle(joint_id), abs=2e-3)


def _random_case(rng):
    """Up to three joints: one TA tendon over the leading joints, optionally an SA joint last"""
    n = int(rng.integers(1, 4))
    with_sa = n > 1 and rng.random() < 0.5
    ta_count = n - 1 if with_sa else n
    radius = float(rng.uniform(2.0, 10.0))

    joints, ta_stops = [], []
    for i in range(ta_count):
        joint_id = f"J{i}"
        joints.append((joint_id, 0.0, 1.5, float(rng.uniform(0.1, 50.0)), float(rng.uniform(0.0, 1.0))))
        ta_stops.append((joint_id, float(rng.uniform(2.0, 15.0)), 1))
    tendons = [('flex', 'TA', 1, ta_stops)]
    if with_sa:
        joints.append(('S', 0.0, 1.0, float(rng.uniform(0.1, 50.0)), float(rng.uniform(1.0, 2.0))))
        tendons.append(('abd', 'SA', -1, [('S', float(rng.uniform(2.0, 15.0)), -1)]))

    contacts = []
    caps = {}
    if rng.random() < 0.5:
        joint = joints[int(rng.integers(0, n))]
        caps[joint[0]] = float(rng.uniform(0.0, joint[2]))
        contacts.append(ContactConstraint(joint[0], caps[joint[0]]))

    # Motor travel the TA tendon can follow without stretching, capped joints included
    reach = sum(r * min(1.5, caps.get(j, 1.5)) for j, r, _ in ta_stops)
    motor_max = 0.9 * sum(r * 1.5 for _, r, _ in ta_stops) / radius
    design = build_design(joints, tendons, motor=(radius, 0.0, motor_max, 84.0))
    phi = float(rng.uniform(0.0, min(motor_max, 0.9 * reach / radius)))
    return design, phi, contacts


class TestSimulateClosing:

    def test_empty_sequence(self, iss_design):
        trace = simulate_closing(iss_design, [])
        assert trace.samples == []
        assert trace.events == []

    def test_rejects_non_increasing_angles(self, iss_design):
        with pytest.raises(SolverError):
            simulate_closing(iss_design, [0.0, 0.5, 0.5])

    def test_joint_angles_never_decrease(self, iss_design):
        grid = np.linspace(0.0, iss_design.motor.angle_max, 100)
        trace = simulate_closing(iss_design, grid)
        for joint_id in iss_design.joint_ids:
            assert np.all(np.diff(trace.angles_of(joint_id)) >= -1e-12)

    def test_sa_tendons_stay_taut_without_contact(self, iss_design):
        grid = np.linspace(0.0, iss_design.motor.angle_max, 100)
        trace = simulate_closing(iss_design, grid)
        for _, result in trace.samples:
            assert result.status('F1_abd').taut
            assert result.status('F2_abd').taut
        assert trace.events_for('F1_abd') == []

    def test_breakaway_after_proximal_block(self):
        design = build_design(
            joints=[('P', 0.0, 1.5, 1.0, 0.5), ('D', 0.0, 1.5, 1.0, 0.5)],
            tendons=[('chain', 'TA', 1, [('P', 10.0, 1), ('D', 5.0, 1)])],
            motor=(2.0, 0.0, 1.0, 84.0),
        )
        grid = np.linspace(0.0, 1.0, 51)
        trace = simulate_closing(design, grid, {0.0: ContactConstraint('P', 0.05)})
        proximal = np.array(trace.angles_of('P'))
        distal = np.array(trace.angles_of('D'))
        blocked = np.where(proximal >= 0.05 - 1e-12)[0]
        assert len(blocked) > 10
        slopes = np.diff(distal[blocked]) / np.diff(grid[blocked])
        assert np.allclose(slopes, 2.0 / 5.0, atol=1e-6)

    def test_blocked_sa_joint_goes_slack_once(self, iss_design):
        grid = np.linspace(0.0, iss_design.motor.angle_max, 100)
        schedule = {0.3: ContactConstraint('F1A', 0.225)}
        trace = simulate_closing(iss_design, grid, schedule)

        slack_events = trace.events_for('F1_abd', ClosingEventKind.TENDON_SLACK)
        assert len(slack_events) == 1
        start = slack_events[0].sample_index
        assert grid[start] >= 0.3

        [contact] = trace.events_for('F1A', ClosingEventKind.CONTACT)
        assert contact.sample_index == start

        for _, result in trace.samples[start:]:
            assert result.status('F1_abd').tension < 1e-6
            assert result.angle('F1A') == pytest.approx(0.225, abs=1e-12)
        for joint_id in ('F1P', 'F1D'):
            assert np.all(np.diff(trace.angles_of(joint_id)[start:]) >= -1e-12)
        # other finger keeps adducting
        assert trace.angles_of('F2A')[-1] == pytest.approx(0.75 * grid[-1], abs=1e-9)

    def test_contact_schedule_as_pairs(self, two_joint_chain):
        grid = np.linspace(0.0, 2.0, 21)
        pairs = [(1.0, ContactConstraint('P', 0.1))]
        trace = simulate_closing(two_joint_chain, grid, pairs)
        [event] = trace.events_for('P', ClosingEventKind.CONTACT)
        assert event.motor_angle == pytest.approx(1.0)
        assert trace.angles_of('P')[-1] == pytest.approx(0.1, abs=1e-12)

    def test_joint_limit_event(self):
        design = build_design(
            joints=[('J', 0.0, 0.5, 1.0, 0.0), ('K', 0.0, 1.5, 1.0, 0.0)],
            tendons=[('chain', 'TA', 1, [('J', 10.0, 1), ('K', 10.0, 1)])],
            motor=(5.0, 0.0, 3.0, 84.0),
        )
        trace = simulate_closing(design, np.linspace(0.0, 3.0, 61))
        [event] = trace.events_for('J', ClosingEventKind.JOINT_LIMIT)
        assert trace.angles_of('J')[event.sample_index] == pytest.approx(0.5)
        assert trace.angles_of('J')[event.sample_index - 1] < 0.5

    def test_failure_carries_sample_index(self, single_joint_design):
        design = single_joint_design.with_joint('J', angle_max=0.1)
        with pytest.raises(InfeasibleConfigurationError) as excinfo:
            simulate_closing(design, np.linspace(0.0, 1.0, 11))
        assert excinfo.value.sample_index == 3
