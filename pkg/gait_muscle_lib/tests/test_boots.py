import math
from typing import Dict, List, TypedDict

import numpy as np
import pytest

from gait_muscle_lib.boots import (
    BootsReport,
    MuscleForceTrace,
    boots_a,
    boots_all,
    boots_b,
    boots_b_phase1,
    boots_b_phase2,
    boots_c,
    boots_d,
    knee_terms,
)
from gait_muscle_lib.constants import GRAVITY, MUSCLE_NAMES
from gait_muscle_lib.errors import GridMismatch
from gait_muscle_lib.formats import AngleTraces
from gait_muscle_lib.kinematics import BodyParams, GaitPhaseParams, GrfTrace, JointAngleTrace
from gait_muscle_lib.testing.utils import GAIT_ACTIVITY_EXPECTATIONS, check_activity_windows

N = 20


def _constant(joint, degrees: float, n: int = N) -> JointAngleTrace:
    return JointAngleTrace.from_degrees(joint, np.full(n, degrees))


def _statics_oracle(body: BodyParams, hip: float, knee: float, ankle: float, grf: GrfTrace) -> Dict[str, List[float]]:
    """
    Moment balances for a motionless leg, one sample at a time
    """
    n = len(grf)
    levers = body.lever_arms
    foot_weight = body.foot_mass * GRAVITY
    thigh, shank = body.thigh_length, body.shank_length
    out: Dict[str, List[float]] = {muscle: [] for muscle in MUSCLE_NAMES}

    for k in range(n):
        force = float(grf.force[k])
        toes = bool(grf.toes_on_ground[k])
        heel = bool(grf.heel_on_ground[k])

        plantar = force * body.toe_offset - foot_weight * body.foot_com_offset * math.cos(ankle)
        out["triceps_surae"].append(max(plantar, 0.0) / levers.triceps_surae)

        dorsi = 0.0
        if force < foot_weight:
            dorsi += max(foot_weight * body.foot_com_offset * math.cos(ankle), 0.0)
        if not toes:
            dorsi += max(force * body.heel_offset - foot_weight * body.foot_com_offset * math.cos(ankle), 0.0)
        out["dorsiflexor"].append(dorsi / levers.dorsiflexor)

        reach = math.sqrt(thigh**2 + shank**2 + 2 * thigh * shank * math.cos(knee))
        ground_arm = thigh * shank * math.sin(knee) / reach
        sin_phi = thigh * math.sin(knee) / reach
        part_1 = force * ground_arm + body.shank_mass * GRAVITY * body.shank_com_ratio * shank * sin_phi

        other = (k + n // 2) % n
        swinging = not (grf.heel_on_ground[other] or grf.toes_on_ground[other])
        trunk_x = -body.trunk_com_offset * math.cos(body.trunk_lean) + body.trunk_com_height * math.sin(
            body.trunk_lean
        )
        thigh_x = thigh * math.sin(hip)
        shank_dir = math.sin(hip - knee)
        ankle_x = thigh_x + shank * shank_dir
        leg_x = (
            body.thigh_mass * body.thigh_com_ratio * thigh_x
            + body.shank_mass * (thigh_x + body.shank_com_ratio * shank * shank_dir)
            + body.foot_mass * ankle_x
        ) / body.leg_mass
        load = body.upper_body_mass + (body.leg_mass if swinging else 0.0)
        load_x = (body.upper_body_mass * trunk_x + (body.leg_mass * leg_x if swinging else 0.0)) / load
        part_2 = -load * GRAVITY * (force / body.body_weight) * load_x

        quadriceps = (max(part_1, 0.0) + max(part_2, 0.0)) / levers.quadriceps
        hamstring = (max(-part_1, 0.0) + max(-part_2, 0.0)) / levers.hamstring
        out["quadriceps"].append(quadriceps)
        out["hamstring"].append(hamstring)

        hip_demand = force * ankle_x - body.leg_mass * GRAVITY * leg_x
        hip_demand -= hamstring * levers.hamstring - quadriceps * levers.quadriceps
        out["gluteus_maximus"].append(max(hip_demand, 0.0) / levers.gluteus_maximus)
        out["iliopsoas"].append(max(-hip_demand, 0.0) / levers.iliopsoas)

        assert heel or toes or force == 0.0
    return out


class StaticsScenario(TypedDict):
    hip: float
    knee: float
    ankle: float
    profile: str
    toes_down_from: int


statics_scenarios: List[StaticsScenario] = [
    # Flat foot: toes down from the first stance sample
    {"hip": 10.0, "knee": 15.0, "ankle": 5.0, "profile": "double-hump", "toes_down_from": 0},
    # Toes up by 15 degrees: they only touch down at heel off
    {"hip": 20.0, "knee": 5.0, "ankle": 0.0, "profile": "double-hump", "toes_down_from": 9},
    {"hip": -10.0, "knee": 30.0, "ankle": 20.0, "profile": "static", "toes_down_from": 0},
    {"hip": 0.0, "knee": 0.0, "ankle": 0.0, "profile": "static", "toes_down_from": 0},
]


@pytest.mark.acceptance("AC-04")
@pytest.mark.parametrize("scenario", statics_scenarios)
def test_constant_angles_match_statics_oracle(scenario: StaticsScenario):
    body = BodyParams()
    hip = _constant("hip", scenario["hip"])
    knee = _constant("knee", scenario["knee"])
    ankle = _constant("ankle", scenario["ankle"])
    report = boots_all(hip, knee, ankle, body, scenario["profile"])

    assert int(np.argmax(report.grf.toes_on_ground)) == scenario["toes_down_from"]
    expected = _statics_oracle(
        body, math.radians(scenario["hip"]), math.radians(scenario["knee"]), math.radians(scenario["ankle"]), report.grf
    )
    for muscle in MUSCLE_NAMES:
        values = report[muscle].values
        scale = max(float(np.max(np.abs(expected[muscle]))), 1.0)
        np.testing.assert_allclose(values, expected[muscle], rtol=1e-9, atol=1e-9 * scale, err_msg=muscle)


def test_quiet_standing_triceps_matches_hand_statics():
    body = BodyParams()
    report = boots_all(_constant("hip", 0.0), _constant("knee", 0.0), _constant("ankle", 0.0), body, "static")
    foot_moment = body.foot_mass * GRAVITY * body.foot_com_offset
    stance = (body.body_weight * body.toe_offset - foot_moment) / body.lever_arms.triceps_surae
    assert stance == pytest.approx(2048.15, rel=1e-4)
    np.testing.assert_allclose(report["triceps_surae"].values[:12], stance, rtol=1e-12)
    # In swing the foot's weight pulls the wrong way for the calf: the moment goes to the residual
    np.testing.assert_array_equal(report["triceps_surae"].values[12:], 0.0)
    np.testing.assert_allclose(
        report["triceps_surae"].residual[12:], foot_moment / body.lever_arms.triceps_surae, rtol=1e-12
    )


def _grf(force: float, heel: bool, toes: bool, n: int = N) -> GrfTrace:
    return GrfTrace(np.full(n, force), np.full(n, heel), np.full(n, toes))


def test_dorsiflexor_phases():
    body = BodyParams()
    ankle = _constant("ankle", 0.0)
    foot_moment = body.foot_mass * GRAVITY * body.foot_com_offset
    lever = body.lever_arms.dorsiflexor

    # Foot loaded with the toes down: neither phase applies
    np.testing.assert_array_equal(boots_b(ankle, body, _grf(100.0, True, True)).values, 0.0)
    np.testing.assert_array_equal(boots_b(ankle, body, _grf(body.foot_mass * GRAVITY, False, True)).values, 0.0)

    heel_strike = boots_b(ankle, body, _grf(500.0, True, False))
    np.testing.assert_allclose(heel_strike.values, (500.0 * body.heel_offset - foot_moment) / lever, rtol=1e-12)

    airborne = boots_b(ankle, body, _grf(0.0, False, False))
    np.testing.assert_allclose(airborne.values, foot_moment / lever, rtol=1e-12)
    np.testing.assert_allclose(airborne.residual, foot_moment / lever, rtol=1e-12)

    # Airborne, both phases apply: phase 1 holds the foot up, phase 2 sees only the weight pulling down
    np.testing.assert_allclose(boots_b_phase1(ankle, body, _grf(0.0, False, False)).values, foot_moment / lever)
    np.testing.assert_array_equal(boots_b_phase2(ankle, body, _grf(0.0, False, False)).values, 0.0)
    np.testing.assert_array_equal(boots_b_phase1(ankle, body, _grf(500.0, True, False)).values, 0.0)
    np.testing.assert_allclose(boots_b_phase2(ankle, body, _grf(500.0, True, False)).values, heel_strike.values)


def test_knee_demand_feeds_exactly_one_side_per_part():
    body = BodyParams()
    knee = JointAngleTrace.from_degrees("knee", 30 * (1 - np.cos(2 * np.pi * np.arange(N) / N)))
    hip = JointAngleTrace.from_degrees("hip", 20 * np.cos(2 * np.pi * np.arange(N) / N))
    grf = GrfTrace(
        np.where(np.arange(N) < 12, 600.0, 0.0), np.arange(N) < 9, (np.arange(N) >= 2) & (np.arange(N) < 12)
    )
    terms = knee_terms(knee, body, grf, hip)
    quad_lever, ham_lever = body.lever_arms.quadriceps, body.lever_arms.hamstring
    quad, ham = boots_c(knee, body, grf, hip), boots_d(knee, body, grf, hip)
    np.testing.assert_allclose(
        quad.values * quad_lever - ham.values * ham_lever,
        terms["part_1_demand"] + terms["part_2_demand"],
        rtol=1e-12,
        atol=1e-9,
    )
    # What one side clamps away is exactly what drives the other
    np.testing.assert_allclose(quad.residual * quad_lever, ham.values * ham_lever, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ham.residual * ham_lever, quad.values * quad_lever, rtol=1e-12, atol=1e-12)
    assert np.any(quad.residual > 0) and np.any(ham.residual > 0)


def test_hip_pair_never_shares_a_sample(healthy_boots: BootsReport):
    glute = healthy_boots["gluteus_maximus"].values
    iliopsoas = healthy_boots["iliopsoas"].values
    np.testing.assert_array_equal(glute * iliopsoas, 0.0)
    assert np.any(glute > 0) and np.any(iliopsoas > 0)
    # The default run config uses the default body
    levers = BodyParams().lever_arms
    glute_moment, iliopsoas_moment = glute * levers.gluteus_maximus, iliopsoas * levers.iliopsoas
    glute_residual = healthy_boots["gluteus_maximus"].residual * levers.gluteus_maximus
    iliopsoas_residual = healthy_boots["iliopsoas"].residual * levers.iliopsoas
    np.testing.assert_allclose(glute_residual, iliopsoas_moment, rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(iliopsoas_residual, glute_moment, rtol=1e-12, atol=1e-9)


def test_all_forces_are_finite_and_non_negative(healthy_boots: BootsReport, toe_slap_boots: BootsReport):
    for report in (healthy_boots, toe_slap_boots):
        for muscle in MUSCLE_NAMES:
            trace = report[muscle]
            assert np.all(np.isfinite(trace.values)) and np.all(trace.values >= 0)
            assert np.all(trace.residual >= 0)


@pytest.mark.acceptance("AC-05")
def test_doubling_mass_doubles_every_force(healthy_angles: AngleTraces):
    body = BodyParams()
    angles = (healthy_angles.hip, healthy_angles.knee, healthy_angles.ankle)
    single = boots_all(*angles, body)
    double = boots_all(*angles, body.with_mass_scale(2.0))
    for muscle in MUSCLE_NAMES:
        np.testing.assert_allclose(double[muscle].values, 2 * single[muscle].values, rtol=1e-9, err_msg=muscle)


def test_massless_body_needs_no_force(healthy_angles: AngleTraces):
    report = boots_all(healthy_angles.hip, healthy_angles.knee, healthy_angles.ankle, BodyParams(total_mass=0.0))
    for muscle in MUSCLE_NAMES:
        np.testing.assert_array_equal(report[muscle].values, 0.0)


@pytest.mark.acceptance("AC-06")
@pytest.mark.parametrize("muscle", MUSCLE_NAMES)
def test_healthy_activity_windows(muscle, healthy_boots: BootsReport):
    results = check_activity_windows(healthy_boots[muscle].values, GAIT_ACTIVITY_EXPECTATIONS[muscle], label=muscle)
    assert results["valid"], results["errors"]


def test_toe_slap_leaves_the_dorsiflexor_idle_in_early_stance(
    healthy_boots: BootsReport, toe_slap_boots: BootsReport
):
    assert int(np.argmax(healthy_boots.grf.toes_on_ground)) == 5
    assert int(np.argmax(toe_slap_boots.grf.toes_on_ground)) == 1
    assert np.all(healthy_boots["dorsiflexor"].values[1:5] > 0)
    np.testing.assert_array_equal(toe_slap_boots["dorsiflexor"].values[1:6], 0.0)


def test_grid_mismatch():
    body = BodyParams()
    with pytest.raises(GridMismatch):
        boots_all(_constant("hip", 0.0), _constant("knee", 0.0, n=10), _constant("ankle", 0.0), body)
    with pytest.raises(GridMismatch):
        boots_a(_constant("ankle", 0.0), body, _grf(0.0, False, False, n=10))
    with pytest.raises(GridMismatch):
        MuscleForceTrace("dorsiflexor", np.zeros(3), np.zeros(4))


def test_phase_params_move_toe_contact():
    body = BodyParams()
    angles = (_constant("hip", 20.0), _constant("knee", 5.0), _constant("ankle", 0.0))
    early = boots_all(*angles, body, "static", GaitPhaseParams(heel_off_fraction=0.3))
    assert int(np.argmax(early.grf.toes_on_ground)) == 6


def test_report_summary(healthy_boots: BootsReport):
    summary = healthy_boots.summary()
    assert summary["samples"] == N
    assert summary["grf_profile"] == "double-hump"
    assert set(summary["peaks_n"]) == set(MUSCLE_NAMES)
    assert summary["peak_cycle_pct"]["triceps_surae"] == 50.0
    assert summary["sign_convention"]["knee"] == "extension positive"
    assert set(summary["terms"]) == {"ankle", "dorsiflexor", "knee", "hip"}
