import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinarrival.oracle import normalization
from spinarrival.packets import (
    AsymmetricPacket,
    SpaceTimePoint,
    SymmetricPacket,
    polar_fields_asymmetric,
    polar_fields_symmetric,
    pq_factors,
    psi_asymmetric,
    psi_symmetric,
    sigma_of_t,
)

FIG2 = dict(a=0.001, b=0.4, c=0.01, x1=0.0)


def mp_psi_symmetric(sigma0, u, x, y, z, t):
    """Free evolution of the isotropic packet in complex-width form."""
    mp.mp.dps = 40
    s0, u, x, y, z, t = (mp.mpf(v) for v in (sigma0, u, x, y, z, t))
    w = 1 + 1j * t / (2 * s0**2)
    r2 = (x - u * t) ** 2 + y**2 + z**2
    return (
        (2 * mp.pi * s0**2) ** mp.mpf(-0.75)
        * mp.power(w, mp.mpf(-1.5))
        * mp.exp(-r2 / (4 * s0**2 * w) + 1j * (u * x - u**2 * t / 2))
    )


def mp_psi_asymmetric(a, b, c, x1, u, x, y, z, t):
    mp.mp.dps = 40
    a, b, c, x1, k, x, y, z, t = (mp.mpf(v) for v in (a, b, c, x1, u, x, y, z, t))
    al2, be2, ga2 = a**2 + 1j * t, b**2 + 1j * t, c**2 + 1j * t
    norm = (a**2 * b**2 * c**2 / mp.pi**3) ** mp.mpf(0.25)
    expo = (
        1j * (k * x - k**2 * t / 2)
        - (x + x1 - k * t) ** 2 / (2 * al2)
        - y**2 / (2 * be2)
        - z**2 / (2 * ga2)
    )
    return norm * mp.exp(expo) / (mp.sqrt(al2) * mp.sqrt(be2) * mp.sqrt(ga2))


class TestSigma:
    def test_identity_at_zero(self):
        assert sigma_of_t(SymmetricPacket(0.01), 0.0) == 0.01

    def test_direct_substitution(self):
        assert sigma_of_t(SymmetricPacket(1.0), 2.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_against_extended_precision(self):
        mp.mp.dps = 50
        expected = mp.mpf("0.01") * mp.sqrt(1 + mp.mpf("0.01") / (4 * mp.mpf("1e-8")))
        assert sigma_of_t(SymmetricPacket(0.01), 0.1) == pytest.approx(float(expected), rel=1e-14)

    @given(st.floats(1e-3, 10.0), st.floats(0.0, 100.0), st.floats(0.0, 100.0))
    def test_even_and_monotone(self, s0, t1, t2):
        p = SymmetricPacket(s0)
        assert sigma_of_t(p, t1) == sigma_of_t(p, -t1)
        lo, hi = sorted((t1, t2))
        assert sigma_of_t(p, lo) <= sigma_of_t(p, hi)
        assert sigma_of_t(p, lo) >= s0


class TestSymmetric:
    def test_unit_density_at_origin(self):
        p = SymmetricPacket((2 * math.pi) ** -0.5, 0.0)
        f = polar_fields_symmetric(p, SpaceTimePoint(0.0, 0.0, 0.0, 0.0))
        assert f.rho == pytest.approx(1.0, rel=1e-15)

    def test_psi_at_origin(self):
        p = SymmetricPacket((2 * math.pi) ** -0.5, 0.0)
        amp = psi_symmetric(p, SpaceTimePoint(0.0, 0.0, 0.0, 0.0))
        assert amp.re == pytest.approx(1.0, rel=1e-15)
        assert amp.im == 0.0

    @pytest.mark.parametrize("t", [0.0, 0.3, 2.0])
    def test_gradient_vanishes_at_moving_center(self, t):
        p = SymmetricPacket(0.2, 3.0)
        f = polar_fields_symmetric(p, SpaceTimePoint(3.0 * t, 0.0, 0.0, t))
        assert np.all(f.grad_rho == 0.0)

    def test_psi_matches_complex_width_form(self):
        sigma0, u, pt = 0.01, 5.0, (1.0, 0.0, 0.0, 0.2)
        amp = psi_symmetric(SymmetricPacket(sigma0, u), SpaceTimePoint(*pt))
        ref = complex(mp_psi_symmetric(sigma0, u, *pt))
        assert amp.value == pytest.approx(ref, rel=1e-10)

    @given(
        st.floats(0.01, 2.0), st.floats(-5.0, 10.0),
        st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.0, 3.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_psi_matches_complex_width_form_everywhere(self, s0, u, ox, oy, oz, t):
        p = SymmetricPacket(s0, u)
        s = float(sigma_of_t(p, t))
        pt = (u * t + ox * s, oy * s, oz * s, t)
        amp = psi_symmetric(p, SpaceTimePoint(*pt))
        ref = complex(mp_psi_symmetric(s0, u, *pt))
        assert abs(amp.value - ref) <= 1e-9 * abs(ref)

    def test_modulus_identity(self):
        rng = np.random.default_rng(3)
        p = SymmetricPacket(0.3, 2.0)
        x, y, z = rng.normal(size=(3, 50))
        t = rng.uniform(0, 2, size=50)
        pt = SpaceTimePoint(x, y, z, t)
        np.testing.assert_allclose(psi_symmetric(p, pt).modulus_squared, polar_fields_symmetric(p, pt).rho, rtol=1e-12)

    def test_galilean_shift(self):
        rng = np.random.default_rng(4)
        x, y, z = rng.normal(size=(3, 20))
        t = rng.uniform(0, 2, size=20)
        moving = polar_fields_symmetric(SymmetricPacket(0.5, 4.0), SpaceTimePoint(x, y, z, t)).rho
        still = polar_fields_symmetric(SymmetricPacket(0.5, 0.0), SpaceTimePoint(x - 4.0 * t, y, z, t)).rho
        np.testing.assert_allclose(moving, still, rtol=1e-13)

    def test_far_field_underflows_to_zero(self):
        p = SymmetricPacket(0.001, 1.0)
        f = polar_fields_symmetric(p, SpaceTimePoint(1.0, 1.0, 1.0, 0.0))
        assert f.rho == 0.0
        assert np.all(f.grad_rho == 0.0)
        assert f.drho_dt == 0.0
        assert np.all(np.isfinite(f.grad_S))

    def test_rejects_bad_spread(self):
        with pytest.raises(ValueError):
            SymmetricPacket(0.0)
        with pytest.raises(ValueError):
            SymmetricPacket(-1.0)


class TestPQ:
    def test_t_zero(self):
        assert pq_factors(AsymmetricPacket(1, 1, 1), 0.0) == (1.0, 0.0)

    def test_unit_spreads(self):
        p, q = pq_factors(AsymmetricPacket(1, 1, 1), 1.0)
        assert (p, q) == (-2.0, 2.0)

    @pytest.mark.parametrize("abc,t", [((0.001, 0.4, 0.01), 0.5), ((0.7, 1.3, 0.2), 2.0), ((1.0, 2.0, 3.0), 0.1)])
    def test_complex_product(self, abc, t):
        a, b, c = abc
        prod = (a**2 + 1j * t) * (b**2 + 1j * t) * (c**2 + 1j * t)
        p, q = pq_factors(AsymmetricPacket(a, b, c), t)
        assert p == pytest.approx(prod.real, rel=1e-12)
        assert q == pytest.approx(prod.imag, rel=1e-12)


class TestAsymmetric:
    def test_psi_at_origin(self):
        amp = psi_asymmetric(AsymmetricPacket(1, 1, 1), SpaceTimePoint(0.0, 0.0, 0.0, 0.0))
        assert amp.re == pytest.approx(math.pi**-0.75, rel=1e-15)
        assert amp.im == 0.0

    def test_psi_high_precision(self):
        pt = (1.0, 2.0, 1.0, 0.4)
        amp = psi_asymmetric(AsymmetricPacket(u=2.0, **FIG2), SpaceTimePoint(*pt))
        ref = complex(mp_psi_asymmetric(0.001, 0.4, 0.01, 0.0, 2.0, *pt))
        assert amp.value == pytest.approx(ref, rel=1e-10)

    def test_modulus_matches_real_form_at_random_points(self):
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(100):
            a, b, c = 10 ** rng.uniform(-2, 0.3, size=3)
            p = AsymmetricPacket(a, b, c, x1=rng.uniform(-1, 1), u=rng.uniform(0, 5))
            t = rng.uniform(0, 2)
            cx = p.center(t)[0]
            wx, wy, wz = p.density_widths(t)
            pt = SpaceTimePoint(cx + rng.normal() * wx, rng.normal() * wy, rng.normal() * wz, t)
            lhs = psi_asymmetric(p, pt).modulus_squared
            rhs = polar_fields_asymmetric(p, pt).rho
            worst = max(worst, abs(lhs - rhs) / rhs)
        assert worst <= 1e-10

    def test_polar_phase_reproduces_direct_psi(self):
        # principal-root branch: R exp(iS) must equal the complex-arithmetic psi
        p = AsymmetricPacket(0.3, 0.5, 0.2, 0.1, 1.5)
        for t in (0.05, 0.5, 3.0, 20.0):
            pt = SpaceTimePoint(0.2, -0.1, 0.3, t)
            f = polar_fields_asymmetric(p, pt)
            polar = math.sqrt(f.rho) * complex(math.cos(f.S), math.sin(f.S))
            assert polar == pytest.approx(psi_asymmetric(p, pt).value, rel=1e-10)

    @pytest.mark.parametrize("t", [0.0, 0.4, 3.0])
    def test_gradient_vanishes_at_moving_center(self, t):
        p = AsymmetricPacket(0.3, 0.2, 0.5, x1=0.7, u=2.0)
        f = polar_fields_asymmetric(p, SpaceTimePoint(-0.7 + 2.0 * t, 0.0, 0.0, t))
        assert np.all(f.grad_rho == 0.0)

    def test_reduces_to_symmetric(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            s0, u = 10 ** rng.uniform(-2, 0), rng.uniform(0, 8)
            w = math.sqrt(2) * s0
            t = rng.uniform(0, 2)
            pt = SpaceTimePoint(*(rng.normal(size=3) * float(sigma_of_t(SymmetricPacket(s0), t))), t)
            fs = polar_fields_symmetric(SymmetricPacket(s0, u), pt)
            fa = polar_fields_asymmetric(AsymmetricPacket(w, w, w, 0.0, u), pt)
            assert fa.rho == pytest.approx(fs.rho, rel=1e-12)
            np.testing.assert_allclose(fa.grad_rho, fs.grad_rho, rtol=1e-10, atol=1e-14 * abs(fs.rho) / s0)
            np.testing.assert_allclose(fa.grad_S, fs.grad_S, rtol=1e-10, atol=1e-12)
            assert fa.drho_dt == pytest.approx(fs.drho_dt, rel=1e-9, abs=1e-12 * fs.rho / s0**2)
            assert fa.S == pytest.approx(fs.S, rel=1e-10, abs=1e-10)

    def test_rejects_bad_spreads(self):
        with pytest.raises(ValueError):
            AsymmetricPacket(1.0, 0.0, 1.0)


def _fd_fields(packet, pt, h):
    """Central differences of psi: (grad rho, grad S, d rho / dt)."""
    def psi(p):
        return packet.psi(p).value

    p0 = psi(pt)
    grad_rho, grad_s, drho = [], [], None
    for axis in range(4):
        plus, minus = psi(pt.shifted(axis, h)), psi(pt.shifted(axis, -h))
        d = (plus - minus) / (2 * h)
        if axis < 3:
            grad_rho.append(2 * (np.conj(p0) * d).real)
            grad_s.append((np.conj(p0) * d).imag / abs(p0) ** 2)
        else:
            drho = (abs(plus) ** 2 - abs(minus) ** 2) / (2 * h)
    return np.array(grad_rho), np.array(grad_s), drho


@pytest.mark.parametrize(
    "packet,pt",
    [
        (SymmetricPacket(0.01, 1.0), SpaceTimePoint(1.0, 1.0, 1.0, 1.0)),
        (AsymmetricPacket(u=2.0, **FIG2), SpaceTimePoint(1.0, 2.0, 1.0, 0.4)),
        (SymmetricPacket(0.3, 2.0), SpaceTimePoint(0.5, -0.2, 0.1, 0.25)),
    ],
)
def test_analytic_gradients_match_finite_differences(packet, pt):
    f = packet.polar_fields(pt)
    grad_rho, grad_s, drho = _fd_fields(packet, pt, 1e-6)
    scale_rho = np.max(np.abs(f.grad_rho))
    np.testing.assert_allclose(grad_rho, f.grad_rho, rtol=1e-5, atol=1e-5 * scale_rho)
    np.testing.assert_allclose(grad_s, f.grad_S, rtol=1e-5, atol=1e-5 * np.max(np.abs(f.grad_S)))
    assert drho == pytest.approx(float(f.drho_dt), rel=1e-5)


@pytest.mark.parametrize(
    "packet,pt",
    [
        (SymmetricPacket(0.3, 2.0), SpaceTimePoint(0.5, -0.2, 0.1, 0.25)),
        (AsymmetricPacket(0.5, 0.3, 0.7, 0.25, 1.5), SpaceTimePoint(0.3, -0.2, 0.4, 0.6)),
    ],
)
def test_gradient_finite_difference_order(packet, pt):
    f = packet.polar_fields(pt)
    exact = np.concatenate([f.grad_rho, f.grad_S, [f.drho_dt]])

    def err(h):
        gr, gs, dr = _fd_fields(packet, pt, h)
        return np.max(np.abs(np.concatenate([gr, gs, [dr]]) - exact))

    h = 0.02
    orders = [math.log2(err(h / 2**k) / err(h / 2 ** (k + 1))) for k in range(2)]
    assert min(orders) >= 1.9


@pytest.mark.parametrize(
    "packet",
    [SymmetricPacket(0.01, 1.0), SymmetricPacket(0.7, 0.0), AsymmetricPacket(u=3.0, **FIG2), AsymmetricPacket(0.4, 1.2, 0.3, -0.5, 1.0)],
)
@pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
def test_normalization(packet, t):
    assert normalization(packet, t) == pytest.approx(1.0, rel=1e-8)


def test_array_broadcasting():
    p = SymmetricPacket(0.2, 1.0)
    t = np.linspace(0, 1, 7)
    f = p.polar_fields(SpaceTimePoint(0.1, 0.2, 0.3, t))
    assert f.rho.shape == (7,)
    assert f.grad_rho.shape == (3, 7)
    for k, tk in enumerate(t):
        single = p.polar_fields(SpaceTimePoint(0.1, 0.2, 0.3, tk))
        assert single.rho == pytest.approx(f.rho[k], rel=1e-15)
