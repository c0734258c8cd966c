"""
Tests for the Hamiltonians, the spike shift Delta and the Y* loadings.
"""

import numpy as np
import pytest

from jumpsnakes.adjoint.partials import StepPartials
from jumpsnakes.base.exceptions import FixedPointError, SingularityError
from jumpsnakes.maxprinciple.hamiltonian import (
    delta_fixed_point,
    delta_H,
    hamiltonian_gap,
    hamiltonian_H,
    hamiltonian_partials,
    script_hamiltonian,
    subset_point,
    ystar_loadings,
)
from jumpsnakes.model.coefficients import AffineCoefficient, Coefficients, QuadraticTerminal, TrajectoryPoint, snapshot

U_BAR = np.array([[-1.0], [0.0], [0.5]])


def _point(u=U_BAR, z=None) -> TrajectoryPoint:
    n = u.shape[0]
    return TrajectoryPoint(
        t=0.5,
        x=np.ones((n, 1)),
        y=np.zeros((n, 1)),
        z=np.zeros((n, 1)) if z is None else z,
        zt=np.zeros((n, 1)),
        u=u,
        e=np.ones(1),
    )


def _coefficients(b=None, sigma=None, f=None, g=None) -> Coefficients:
    return Coefficients(
        b=AffineCoefficient.from_table(b),
        sigma=AffineCoefficient.from_table(sigma),
        f=AffineCoefficient.from_table(f),
        g=AffineCoefficient.from_table(g),
        phi=QuadraticTerminal(),
    )


def _partials(coefs: Coefficients, point: TrajectoryPoint) -> StepPartials:
    return StepPartials(
        point=point,
        b=snapshot(coefs.b, point),
        sigma=snapshot(coefs.sigma, point),
        f=snapshot(coefs.f, point),
        g=snapshot(coefs.g, point),
    )


LQ = _coefficients(b={"u": 1.0}, sigma={"const": 0.3}, g={"uu": 1.0, "x": 0.5})


class TestDeltaFixedPoint:
    """Test Delta = p (sigma(z + Delta, u) - sigma(z, u_bar))."""

    def test_sigma_without_z(self):
        sigma = AffineCoefficient(const=0.2, u=0.5)
        p = np.array([[1.0], [2.0], [-1.0]])
        u = U_BAR + 1.0
        np.testing.assert_allclose(delta_fixed_point(sigma, _point(), u, p), p * 0.5)

    def test_linear_in_z(self):
        """With sigma = s z + kappa u the shift is p kappa (u - u_bar) / (1 - p s)."""
        s, kappa = 0.5, 1.0
        sigma = AffineCoefficient(z=s, u=kappa)
        p = np.array([[0.4], [0.2], [-0.6]])
        u = U_BAR + 0.7
        expected = p * kappa * 0.7 / (1.0 - p * s)
        np.testing.assert_allclose(delta_fixed_point(sigma, _point(), u, p), expected, rtol=1e-10)

    def test_unchanged_control(self):
        sigma = AffineCoefficient(z=0.5, u=1.0)
        np.testing.assert_allclose(delta_fixed_point(sigma, _point(), U_BAR, np.full((3, 1), 0.4)), 0.0, atol=1e-14)

    def test_expansive_map(self):
        sigma = AffineCoefficient(z=1.0, u=1.0)
        with pytest.raises(FixedPointError) as exc_info:
            delta_fixed_point(sigma, _point(), U_BAR + 1.0, np.full((3, 1), 2.0))
        assert "sigma_z" in str(exc_info.value)


class TestHamiltonian:
    def test_value(self):
        p, q = np.full((3, 1), 1.5), np.full((3, 1), 0.2)
        u = U_BAR
        expected = 0.5 * u**2 + 0.5 + p * u + q * 0.3
        np.testing.assert_allclose(hamiltonian_H(LQ, _point(), p, q), expected)

    def test_replaced_control(self):
        p, q = np.ones((3, 1)), np.zeros((3, 1))
        u = np.full((3, 1), 2.0)
        np.testing.assert_allclose(hamiltonian_H(LQ, _point(), p, q, u=u), 2.0 + 0.5 + 2.0)

    def test_partials(self):
        coefs = _coefficients(b={"x": 0.1, "y": 0.3}, sigma={"z": 0.5}, g={"x": 1.0, "zt": 0.2})
        p, q = np.full((3, 1), 2.0), np.full((3, 1), 4.0)
        H = hamiltonian_partials(coefs, _point(), p, q)
        np.testing.assert_allclose(H[:, 0, 0], [1.0 + 0.2, 0.6, 2.0, 0.2])


class TestDeltaH:
    def test_lq_difference(self):
        """Around the pointwise minimizer u_bar = -p, delta H = (u - u_bar)^2 / 2."""
        p = -U_BAR
        u = np.full((3, 1), 0.25)
        diff = delta_H(LQ, _point(), u, p, np.zeros((3, 1)))
        np.testing.assert_allclose(diff.delta_H, 0.5 * (u - U_BAR) ** 2)
        np.testing.assert_allclose(diff.delta_b, u - U_BAR)
        np.testing.assert_allclose(diff.delta_sigma, 0.0)
        np.testing.assert_allclose(diff.delta, 0.0)

    def test_second_order_source(self):
        coefs = _coefficients(sigma={"u": 2.0})
        diff = delta_H(coefs, _point(), U_BAR + 1.0, np.zeros((3, 1)), np.ones((3, 1)))
        np.testing.assert_allclose(diff.delta_sigma, 2.0)
        np.testing.assert_allclose(diff.second_order_source(np.full((3, 1), 0.5)), 2.0 + 0.5 * 0.5 * 4.0)


class TestScriptHamiltonian:
    """Test the gap script H(u) - script H(u_bar) and its expansion identity."""

    def test_lq_gap(self):
        p = np.array([[1.25], [1.0], [0.5]])
        u_bar = -p + 1.0
        point = _point(u=u_bar)
        u = u_bar + np.array([[-1.0], [0.5], [2.0]])
        gap, identity = hamiltonian_gap(LQ, point, u, p, np.zeros((3, 1)), np.zeros((3, 1)))
        d = u - u_bar
        np.testing.assert_allclose(gap, d + 0.5 * d**2)
        assert np.max(identity) < 1e-12

    def test_identity_with_z_dependent_sigma(self):
        coefs = _coefficients(b={"x": 0.2, "u": 1.0}, sigma={"const": 0.1, "z": 0.4, "u": 0.8}, g={"uu": 1.0, "z": 0.3})
        p = np.array([[0.5], [1.0], [-0.5]])
        q, P = np.full((3, 1), 0.1), np.full((3, 1), 2.0)
        point = _point(z=np.array([[0.1], [-0.2], [0.3]]))
        gap, identity = hamiltonian_gap(coefs, point, U_BAR + 0.6, p, q, P)
        assert np.max(identity) < 1e-12
        assert gap.shape == (3, 1)

    def test_gap_vanishes_at_reference(self):
        coefs = _coefficients(sigma={"const": 0.1, "u": 0.8}, g={"uu": 1.0})
        p = np.ones((3, 1))
        gap, _ = hamiltonian_gap(coefs, _point(), U_BAR, p, p, p)
        np.testing.assert_allclose(gap, 0.0, atol=1e-14)

    def test_curvature_term(self):
        coefs = _coefficients(sigma={"u": 1.0})
        value = script_hamiltonian(coefs, _point(), U_BAR + 2.0, np.zeros((3, 1)), np.zeros((3, 1)), np.full((3, 1), 3.0))
        np.testing.assert_allclose(value, 0.5 * 3.0 * 4.0)


class TestYStarLoadings:
    def test_loadings(self):
        coefs = _coefficients(b={"y": 0.3}, sigma={"z": 0.5}, g={"y": 0.2})
        point = _point()
        p, q, qt = np.full((3, 1), 0.4), np.full((3, 1), 2.0), np.zeros((3, 1))
        loads = ystar_loadings(_partials(coefs, point), p, q, qt)
        np.testing.assert_allclose(loads.A, 0.2 + 0.3 * 0.4)
        np.testing.assert_allclose(loads.B, 0.5 * 2.0 / (1.0 - 0.5 * 0.4))
        np.testing.assert_allclose(loads.C, 0.0)

    def test_singular_denominator(self):
        coefs = _coefficients(sigma={"z": 0.5})
        p = np.full((3, 1), 2.0)
        with pytest.raises(SingularityError) as exc_info:
            ystar_loadings(_partials(coefs, _point()), p, p, np.zeros((3, 1)))
        assert "1-sigma_z*p" in str(exc_info.value)


class TestSubsetPoint:
    def test_rows(self):
        point = _point()
        sub = subset_point(point, np.array([0, 2]))
        np.testing.assert_array_equal(sub.u, U_BAR[[0, 2]])
        assert sub.x.shape == (2, 1)
        assert sub.e is point.e
        assert sub.t == point.t
