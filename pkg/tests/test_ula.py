import numpy as np
import pytest

from priorwave import (
    ArrayConfig,
    beampattern,
    steering,
    steering_derivative,
    steering_matrix,
    synthesize_received,
    waveform_feasibility,
)


def test_steering_broadside_is_all_ones():
    a = steering(0.0, 8, 0.5)
    assert np.allclose(a, np.ones(8), atol=0)


def test_steering_self_inner_product_is_element_count():
    rng = np.random.default_rng(0)
    for _ in range(20):
        th = rng.uniform(-np.pi / 2, np.pi / 2)
        m = rng.integers(1, 12)
        a = steering(th, int(m))
        assert abs(np.vdot(a, a) - m) < 1e-12


def test_steering_phases_match_centered_exponent():
    # Per-index phase step is 2*pi*spacing*sin(theta): pi*sin(theta) at
    # half-wavelength spacing, with centered offsets (i - (m-1)/2).
    th = np.pi / 6
    a = steering(th, 4, 0.5)
    offsets = np.array([-1.5, -0.5, 0.5, 1.5])
    expected = np.exp(1j * np.pi * offsets * np.sin(th))
    assert np.max(np.abs(a - expected)) < 1e-15


def test_unit_modulus_and_derivative_orthogonality():
    rng = np.random.default_rng(1)
    for _ in range(100):
        th = rng.uniform(-np.pi / 2, np.pi / 2)
        a = steering(th, 8)
        da = steering_derivative(th, 8)
        assert np.max(np.abs(np.abs(a) - 1.0)) <= 1e-12
        assert abs(np.vdot(da, a)) <= 1e-10


def test_derivative_at_broadside():
    da = steering_derivative(0.0, 8, 0.5)
    expected = 1j * np.pi * (np.arange(8) - 3.5)
    assert np.max(np.abs(da - expected)) < 1e-14


def test_derivative_matches_central_finite_difference():
    rng = np.random.default_rng(2)
    h = 1e-5
    for _ in range(25):
        th = rng.uniform(-np.pi / 2 + 1e-3, np.pi / 2 - 1e-3)
        fd = (steering(th + h, 8) - steering(th - h, 8)) / (2 * h)
        da = steering_derivative(th, 8)
        assert np.max(np.abs(fd - da)) / np.max(np.abs(da)) < 1e-6


def test_out_of_range_angle_rejected():
    with pytest.raises(ValueError):
        steering(2.0, 8)
    with pytest.raises(ValueError):
        steering_matrix(np.array([0.0, -1.7]), 4)


def test_beampattern_orthogonal_rows_is_flat_at_power():
    cfg = ArrayConfig(4, 4, 16, power=2.0)
    # Scaled DFT rows: X X^H = (P / m_t) I.
    m, l = np.meshgrid(np.arange(4), np.arange(16), indexing="ij")
    x = np.sqrt(cfg.power / (4 * 16)) * np.exp(-2j * np.pi * m * l / 16)
    thetas = np.linspace(-np.pi / 2, np.pi / 2, 61)
    bp = beampattern(x, thetas)
    assert np.max(np.abs(bp - cfg.power)) < 1e-12


def test_beampattern_zero_waveform_and_nonnegativity():
    x = np.zeros((4, 8), dtype=complex)
    assert beampattern(x, 0.3) == 0.0
    rng = np.random.default_rng(3)
    x = rng.normal(size=(4, 8)) + 1j * rng.normal(size=(4, 8))
    bp = beampattern(x, np.linspace(-np.pi / 2, np.pi / 2, 41))
    assert np.all(bp >= 0)


def test_beampattern_matches_gram_path():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(6, 10)) + 1j * rng.normal(size=(6, 10))
    gram = x @ x.conj().T
    for th in rng.uniform(-np.pi / 2, np.pi / 2, size=25):
        a = steering(th, 6)
        direct = beampattern(x, th)
        via_gram = float(np.real(a.conj() @ gram @ a))
        assert abs(direct - via_gram) <= 1e-10 * max(1.0, abs(via_gram))


def test_beampattern_invariant_under_right_unitary():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(4, 8)) + 1j * rng.normal(size=(4, 8))
    q, _ = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
    thetas = np.linspace(-np.pi / 2, np.pi / 2, 31)
    assert np.allclose(beampattern(x, thetas), beampattern(x @ q, thetas), rtol=1e-12)


def test_synthesize_broadside_noiseless_structure():
    # At theta = 0 everything steers to ones: each receive row carries the
    # column sums of X.
    rng = np.random.default_rng(6)
    x = rng.normal(size=(4, 8)) + 1j * rng.normal(size=(4, 8))
    y = synthesize_received(x, 0.0, 1.0, 3, 1e-30, np.random.default_rng(0))
    rowsum = x.sum(axis=0)
    for r in range(3):
        assert np.allclose(y[r], rowsum, atol=1e-10)


def test_synthesize_noise_variance():
    x = np.zeros((2, 4), dtype=complex)
    rng = np.random.default_rng(7)
    noise_power = 0.7
    draws = np.array([
        synthesize_received(x, 0.1, 0.0, 2, noise_power, rng) for _ in range(12500)
    ])
    per_entry = np.mean(np.abs(draws) ** 2)  # 1e5 noise samples in total
    assert 0.97 * noise_power <= per_entry <= 1.03 * noise_power


def test_synthesize_deterministic_per_seed():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    y1 = synthesize_received(x, 0.2, 1 + 1j, 4, 0.5, np.random.default_rng(42))
    y2 = synthesize_received(x, 0.2, 1 + 1j, 4, 0.5, np.random.default_rng(42))
    assert np.array_equal(y1, y2)


def test_array_config_validation():
    with pytest.raises(ValueError):
        ArrayConfig(0, 4, 8)
    with pytest.raises(ValueError):
        ArrayConfig(4, 4, 8, papr=0.5)
    with pytest.raises(ValueError):
        ArrayConfig(4, 4, 8, power=0.0)
    with pytest.raises(ValueError):
        ArrayConfig(4, 4, 8, noise_power=-1.0)


def test_waveform_feasibility_reports_margins():
    cfg = ArrayConfig(2, 2, 4, power=1.0, papr=1.5)
    x = np.full((2, 4), np.sqrt(1.0 / 8), dtype=complex)
    feas = waveform_feasibility(x, cfg)
    assert feas.power_error < 1e-12
    assert abs(feas.papr_margin - (cfg.elem_bound - 1.0 / 8)) < 1e-15
    with pytest.raises(ValueError):
        waveform_feasibility(np.zeros((3, 4)), cfg)
