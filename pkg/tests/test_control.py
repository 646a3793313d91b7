from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from src.control import (
    TRAJECTORY_HEADER,
    SaturatedFeedback,
    energy,
    feedback,
    feedback_matrix,
    max_stable_step,
    read_trajectory_csv,
    simulate,
    write_trajectory_csv,
)
from src.lyapunov import LyapunovSolution, find_positive_definite, special_solution
from src.model import OrbitalRate, SpacecraftInertia, build_system, orbital_period
from src.smallmat import inf_norm
from src.utils import DivergenceError, DomainError, StepSizeError


CHI0 = np.array([0.01, 0.01, 0.01, 0.0, 0.0, 0.0])
RATE_B = np.vstack([np.zeros((3, 3)), np.eye(3)])


def _solution(j: SpacecraftInertia, w: OrbitalRate) -> LyapunovSolution:
    found = find_positive_definite(j, w)
    assert isinstance(found, LyapunovSolution)
    return found


class TestFeedback:
    def test_zero_state(self, stable_body):
        fb = SaturatedFeedback.from_solution(_solution(stable_body, OrbitalRate(1.0)))
        s = build_system(stable_body, OrbitalRate(1.0))
        np.testing.assert_array_equal(feedback(np.zeros(6), fb, s.b), np.zeros(3))

    def test_saturation(self):
        fb = SaturatedFeedback(np.eye(6), kappa=1.0, u_max=(0.1, 0.1, 0.1))
        chi = np.array([0.0, 0.0, 0.0, 10.0, -10.0, 1e-3])
        np.testing.assert_allclose(feedback(chi, fb, RATE_B), [-0.1, 0.1, -1e-3])

    def test_linear_region(self):
        fb = SaturatedFeedback(2.0 * np.eye(6), kappa=3.0, u_max=(1.0, 1.0, 1.0))
        chi = np.array([5.0, 5.0, 5.0, 0.01, -0.02, 0.03])
        np.testing.assert_allclose(feedback(chi, fb, RATE_B), [-0.06, 0.12, -0.18])

    def test_validation(self, stable_body, marginal_body):
        with pytest.raises(DomainError):
            SaturatedFeedback(-np.eye(6))
        with pytest.raises(DomainError):
            SaturatedFeedback(np.eye(5))
        with pytest.raises(DomainError):
            SaturatedFeedback(np.eye(6), kappa=0.0)
        with pytest.raises(DomainError):
            SaturatedFeedback(np.eye(6), u_max=(0.1, 0.0, 0.1))
        with pytest.raises(DomainError):
            SaturatedFeedback.from_solution(special_solution(marginal_body, OrbitalRate(1.0), 1.0, 1.0))

    def test_feedback_matrix_is_rescaled_solution(self, stable_body):
        w = OrbitalRate(1e-3)
        sol = _solution(stable_body, w)
        p = feedback_matrix(sol)
        b = build_system(stable_body, w).b
        assert inf_norm(b.T @ p @ b) == pytest.approx(1e-3, rel=1e-12)
        ratio = p[sol.p != 0.0] / sol.p[sol.p != 0.0]
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-14)
        np.testing.assert_array_equal(SaturatedFeedback.from_solution(sol).p, p)

    def test_energy(self):
        assert energy(np.array([1.0, 2.0, 0.0, 0.0, 0.0, 0.0]), np.eye(6)) == 5.0
        assert energy(np.zeros(6), np.eye(6)) == 0.0


class TestSimulate:
    def test_step_size_guards(self, stable_body):
        s = build_system(stable_body, OrbitalRate(1.0))
        for dt, horizon in ((0.0, 1.0), (-1e-3, 1.0), (math.nan, 1.0), (0.02, 1.0), (1e-3, 5e-4)):
            with pytest.raises(StepSizeError):
                simulate(s, None, CHI0, dt, horizon)
        with pytest.raises(DomainError):
            simulate(s, None, np.zeros(5), 1e-3, 1.0)

    def test_zero_state_stays_at_rest(self, stable_body):
        w = OrbitalRate(1.0)
        fb = SaturatedFeedback.from_solution(_solution(stable_body, w))
        traj = simulate(build_system(stable_body, w), fb, np.zeros(6), 1e-3, 1.0)
        assert len(traj.times) == 1001
        assert traj.times[-1] == pytest.approx(1.0)
        assert not traj.states.any()
        assert not traj.controls.any()
        assert traj.max_relative_energy_drift() == 0.0

    @pytest.mark.parametrize("body", ["stable_body", "marginal_body"])
    def test_open_loop_conserves_energy(self, body, request):
        j = request.getfixturevalue(body)
        w = OrbitalRate(1e-3)
        sol = _solution(j, w)
        traj = simulate(build_system(j, w), None, CHI0, 1.0, orbital_period(w), energy_matrix=sol.p)
        assert not traj.controls.any()
        assert traj.max_relative_energy_drift() <= 1e-8

    @pytest.mark.parametrize("body", ["stable_body", "marginal_body"])
    def test_closed_loop_energy_never_rises(self, body, request):
        j = request.getfixturevalue(body)
        w = OrbitalRate(1e-3)
        fb = SaturatedFeedback.from_solution(_solution(j, w))
        progress: list[float] = []
        traj = simulate(
            build_system(j, w),
            fb,
            CHI0,
            1e-3 / w.omega0,
            orbital_period(w),
            progress_fn=lambda fraction, _msg: progress.append(fraction),
        )
        assert len(traj.times) == 6285
        assert traj.max_energy_increase() <= 1e-9 * traj.energies[0]
        assert traj.energies[-1] < traj.energies[0]
        assert np.all(np.abs(traj.controls) <= np.asarray(fb.u_max))
        assert progress[-1] == 1.0

    @pytest.mark.parametrize("body", ["stable_body", "marginal_body"])
    def test_saturated_feedback_energy_never_rises(self, body, request):
        j = request.getfixturevalue(body)
        w = OrbitalRate(1.0)
        fb = SaturatedFeedback(_solution(j, w).p, kappa=1e4)
        traj = simulate(build_system(j, w), fb, CHI0, 1e-3, orbital_period(w))
        assert np.max(np.abs(traj.controls)) == pytest.approx(0.1)
        assert np.all(np.abs(traj.controls) <= np.asarray(fb.u_max))
        assert traj.max_energy_increase() <= 1e-9 * traj.energies[0]
        assert traj.energies[-1] < traj.energies[0]

    def test_stiff_gain_rejected(self, stable_body):
        w = OrbitalRate(1.0)
        s = build_system(stable_body, w)
        fb = SaturatedFeedback.from_solution(_solution(stable_body, w), kappa=1e4)
        assert max_stable_step(fb, s.b) == pytest.approx(1e-4)
        with pytest.raises(StepSizeError):
            simulate(s, fb, CHI0, 1e-3, 1.0)
        traj = simulate(s, fb, CHI0, max_stable_step(fb, s.b), 0.01)
        assert traj.energies[-1] < traj.energies[0]

    def test_rk4_fourth_order(self, stable_body):
        w = OrbitalRate(0.01)
        s = build_system(stable_body, w)
        reference = simulate(s, None, CHI0, 0.125, 640.0).final_state
        coarse = np.linalg.norm(simulate(s, None, CHI0, 1.0, 640.0).final_state - reference)
        fine = np.linalg.norm(simulate(s, None, CHI0, 0.5, 640.0).final_state - reference)
        assert coarse / fine >= 12.0

    def test_open_loop_matches_reference_integrator(self, marginal_body):
        s = build_system(marginal_body, OrbitalRate(1.0))
        traj = simulate(s, None, CHI0, 1e-3, 2.0)
        ref = solve_ivp(
            lambda _t, x: s.a @ x, (0.0, traj.times[-1]), CHI0, method="DOP853", rtol=1e-12, atol=1e-15
        )
        np.testing.assert_allclose(traj.final_state, ref.y[:, -1], rtol=0.0, atol=1e-10)

    def test_unstable_body_grows(self, unstable_body):
        w = OrbitalRate(1e-3)
        traj = simulate(build_system(unstable_body, w), None, CHI0, 5.0, 3.0 * orbital_period(w))
        assert np.linalg.norm(traj.final_state) >= 10.0 * np.linalg.norm(CHI0)

    def test_divergence(self):
        s = build_system(SpacecraftInertia(1e-3, 1.0, 2.0), OrbitalRate(1.0))
        with pytest.raises(DivergenceError) as info:
            simulate(s, None, CHI0, 0.01, 100.0)
        assert 1.0 < info.value.time_s < 50.0


class TestTrajectoryFile:
    def test_write_and_read(self, stable_body, tmp_path):
        w = OrbitalRate(1.0)
        fb = SaturatedFeedback.from_solution(_solution(stable_body, w))
        traj = simulate(build_system(stable_body, w), fb, CHI0, 1e-2, 0.5)
        target = tmp_path / "out" / "trajectory.csv"
        write_trajectory_csv(traj, target)
        assert target.read_text(encoding="utf-8").splitlines()[0] == ",".join(TRAJECTORY_HEADER)
        loaded = read_trajectory_csv(target)
        np.testing.assert_array_equal(loaded.times, traj.times)
        np.testing.assert_array_equal(loaded.states, traj.states)
        np.testing.assert_array_equal(loaded.energies, traj.energies)
        assert loaded.dt == pytest.approx(1e-2)
