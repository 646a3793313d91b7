from __future__ import annotations

import numpy as np
import pytest

from src.lyapunov import (
    AlphaParams,
    LyapunovSolution,
    NotFound,
    assemble_full,
    block_equation_residuals,
    constraint_residual,
    find_positive_definite,
    residual,
    solution_family,
    solve_alpha1,
    special_solution,
)
from src.model import (
    OrbitalRate,
    SpacecraftInertia,
    build_system,
    inertia_from_beta,
    sigmas_from_beta,
    sigmas_from_inertia,
    transform_matrices,
)
from src.smallmat import is_positive_definite
from src.stability import LYAPUNOV_STABLE, boundary_margin, classify
from src.utils import ConstraintError, DegenerateError, ShapeError


UNIT_RATE = OrbitalRate(1.0)


class TestConstraint:
    def test_residual_examples(self, stable_body):
        assert constraint_residual(stable_body, 1.0, 1.0, 1.0) == pytest.approx(1.2, abs=1e-14)
        assert constraint_residual(stable_body, 1.25, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_solve_alpha1(self, stable_body, marginal_body):
        assert solve_alpha1(marginal_body, 1.0, -5.0) == pytest.approx(0.483683, abs=1e-4)
        assert solve_alpha1(stable_body, 2.0, 0.0) == pytest.approx(2.5, abs=1e-14)
        a1 = solve_alpha1(marginal_body, 0.7, 3.0)
        assert constraint_residual(marginal_body, a1, 0.7, 3.0) == pytest.approx(0.0, abs=1e-13)

    def test_sigma1_one_is_degenerate(self):
        # J_y - J_z = J_x gives sigma1 = 1
        with pytest.raises(DegenerateError):
            solve_alpha1(SpacecraftInertia(2.0, 3.0, 1.0), 1.0, 1.0)


class TestSolutionFamily:
    def test_special_solution_blocks(self, stable_body):
        sol = special_solution(stable_body, UNIT_RATE, 1.0, 1.0)
        np.testing.assert_allclose(sol.p2, np.diag([0.5, 1.0]), atol=1e-14)
        np.testing.assert_allclose(sol.p1, np.diag([0.25, 1.25]), atol=1e-14)
        np.testing.assert_allclose(sol.p3, np.diag([2.0, 1.0]), atol=1e-14)
        assert sol.params.alpha13 == 0.0
        assert sol.is_pd
        assert is_positive_definite(sol.p)
        assert sol.residual <= sol.residual_bound

    def test_zero_alpha3_gives_zero_blocks(self, stable_body):
        sol = special_solution(stable_body, UNIT_RATE, 0.0, 0.0)
        assert not sol.p.any()
        assert not sol.is_pd
        assert sol.residual == 0.0

    def test_marginal_body_needs_coupling(self, marginal_body):
        assert not special_solution(marginal_body, UNIT_RATE, 1.0, 1.0).is_pd
        params = AlphaParams(solve_alpha1(marginal_body, 1.0, -1.5), 1.0, 1.0, -1.5)
        sol = solution_family(marginal_body, UNIT_RATE, params)
        assert sol.is_pd
        assert sol.residual <= sol.residual_bound
        assert is_positive_definite(sol.p)

    def test_marginal_body_coupled_blocks(self, marginal_body):
        params = AlphaParams(solve_alpha1(marginal_body, 1.0, -5.0), 1.0, 1.0, -5.0)
        sol = solution_family(marginal_body, UNIT_RATE, params)
        np.testing.assert_allclose(sol.p1, [[0.212121, -0.252525], [-0.252525, 0.483679]], atol=1e-4)
        np.testing.assert_allclose(sol.p3, [[0.763015, 0.8], [0.8, 1.0]], atol=1e-4)
        assert sol.is_pd
        assert sol.residual <= sol.residual_bound

    def test_family_is_homogeneous(self, marginal_body):
        params = AlphaParams(solve_alpha1(marginal_body, 1.0, -1.5), 1.0, 1.0, -1.5)
        base = solution_family(marginal_body, UNIT_RATE, params)
        doubled = solution_family(marginal_body, UNIT_RATE, params.scaled(2.0))
        np.testing.assert_allclose(doubled.p, 2.0 * base.p, rtol=1e-15, atol=0.0)

    def test_block_equations_hold(self, stable_body, marginal_body):
        for j, a13 in ((stable_body, 0.0), (marginal_body, -1.5)):
            params = AlphaParams(solve_alpha1(j, 1.0, a13), 0.8, 1.0, a13)
            for name, value in block_equation_residuals(solution_family(j, UNIT_RATE, params)).items():
                assert value <= 1e-12, name

    def test_rejects_constraint_violation(self, stable_body):
        with pytest.raises(ConstraintError):
            solution_family(stable_body, UNIT_RATE, AlphaParams(1.0, 1.0, 1.0, 1.0))

    def test_rejects_degenerate_sigma(self, symmetric_body):
        with pytest.raises(DegenerateError):
            solution_family(symmetric_body, UNIT_RATE, AlphaParams(1.0, 1.0, 1.0, 0.0))

    @pytest.mark.slow
    @pytest.mark.parametrize("omega", [7.2922e-5, 1e-3, 1.0])
    def test_random_residual_within_bound(self, rng, omega):
        w = OrbitalRate(omega)
        tested = 0
        while tested < 100:
            j = SpacecraftInertia(*(float(v) for v in rng.uniform(1.0, 3.0, size=3)))
            sigma = sigmas_from_inertia(j)
            if min(abs(s) for s in sigma.as_tuple()) < 1e-3 or abs(1.0 - sigma.sigma1) < 1e-3:
                continue
            a2, a3, a13 = (float(v) for v in rng.uniform(-1.0, 1.0, size=3))
            sol = solution_family(j, w, AlphaParams(solve_alpha1(j, a3, a13), a2, a3, a13))
            assert sol.residual <= sol.residual_bound
            tested += 1


class TestResidualAndAssembly:
    def test_residual(self, stable_body):
        a = build_system(stable_body, UNIT_RATE).a
        p = np.diag([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        assert residual(p, np.zeros((6, 6))) == 0.0
        assert residual(np.eye(6), a) == pytest.approx(np.abs(a + a.T).sum(axis=1).max())
        with pytest.raises(ShapeError):
            residual(np.eye(5), a)

    def test_assemble_full(self):
        h, _ = transform_matrices(OrbitalRate(2.0))
        np.testing.assert_array_equal(assemble_full(np.eye(6), np.eye(6)), np.eye(6))
        np.testing.assert_array_equal(assemble_full(np.eye(6), h), np.diag([1.0, 1.0, 1.0, 0.25, 0.25, 0.25]))
        with pytest.raises(ShapeError):
            assemble_full(np.triu(np.ones((6, 6))), h)
        with pytest.raises(ShapeError):
            assemble_full(np.eye(4), h)


class TestFindPositiveDefinite:
    def test_stable_body_uses_special_solution(self, stable_body):
        found = find_positive_definite(stable_body, UNIT_RATE)
        assert isinstance(found, LyapunovSolution)
        assert found.params.alpha13 == 0.0
        assert found.is_pd

    def test_marginal_body(self, marginal_body):
        lines: list[str] = []
        found = find_positive_definite(marginal_body, UNIT_RATE, log_fn=lines.append)
        assert isinstance(found, LyapunovSolution)
        assert -9.6 < found.params.alpha13 < -0.96
        assert found.is_pd
        assert found.residual <= found.residual_bound
        assert any("alpha13=" in line for line in lines)

    def test_unstable_body(self, unstable_body):
        lines: list[str] = []
        found = find_positive_definite(unstable_body, UNIT_RATE, log_fn=lines.append)
        assert isinstance(found, NotFound)
        assert found.candidates_tried == 0
        assert found.alpha13_min < 0.0 < found.alpha13_max
        assert any("not Lyapunov stable" in line for line in lines)

    def test_degenerate_body(self, symmetric_body):
        with pytest.raises(DegenerateError):
            find_positive_definite(symmetric_body, UNIT_RATE)

    def test_sigma1_one_branch(self):
        j = SpacecraftInertia(2.0, 3.0, 1.0)
        assert classify(sigmas_from_inertia(j)).verdict == LYAPUNOV_STABLE
        found = find_positive_definite(j, UNIT_RATE)
        assert isinstance(found, LyapunovSolution)
        assert found.params.alpha13 == 0.0
        assert (found.params.alpha1, found.params.alpha3) == pytest.approx((1e-3, 1e-3))
        assert found.is_pd
        assert found.residual <= found.residual_bound

    @pytest.mark.slow
    def test_existence_matches_classifier(self):
        axis = np.linspace(0.3, 2.5, 40)
        tested = 0
        for b1 in axis:
            for b2 in axis:
                sigma = sigmas_from_beta(b1, b2)
                if boundary_margin(sigma) < 1e-4 or min(abs(s) for s in sigma.as_tuple()) < 1e-4:
                    continue
                tested += 1
                found = find_positive_definite(inertia_from_beta(b1, b2), UNIT_RATE)
                expected = classify(sigma).verdict == LYAPUNOV_STABLE
                assert isinstance(found, LyapunovSolution) == expected, (b1, b2)
        assert tested > 800
