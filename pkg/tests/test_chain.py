"""Chain equilibrium, normal modes and Lamb-Dicke couplings."""

import numpy as np
import pytest

from ionpulse import TrapConfig, mode_structure, scaling_advisory, solve_equilibrium
from ionpulse.chain import (
    _axial_stiffness,
    _scaled_force,
    _transverse_stiffness,
    mode_table_csv,
    scaled_potential,
)
from ionpulse.constants import HBAR
from ionpulse.errors import ConfigError, ZigzagInstabilityError

from conftest import TWO_PI, finite_difference_hessian, full_potential, minimize_scaled_potential


def test_single_ion_at_center():
    cfg = TrapConfig(1, TWO_PI * 3e6, TWO_PI * 400e3)
    assert solve_equilibrium(cfg).tolist() == [0.0]


def test_two_ion_positions_analytic(trap2):
    u = solve_equilibrium(trap2)
    expected = 0.25 ** (1.0 / 3.0)
    np.testing.assert_allclose(u, [-expected, expected], atol=1e-12)


def test_five_ion_minimum_spacing_310khz():
    # 5-ion chain at 310 kHz axial: minimum separation close to 5 um
    cfg = TrapConfig(5, TWO_PI * 3e6, TWO_PI * 310e3)
    u = solve_equilibrium(cfg)
    spacing = np.min(np.diff(u)) * cfg.length_scale
    assert abs(spacing - 5e-6) / 5e-6 < 0.15


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 8])
def test_equilibrium_antisymmetric_and_converged(n):
    cfg = TrapConfig(n, TWO_PI * 3e6, TWO_PI * 400e3)
    u = solve_equilibrium(cfg)
    assert np.all(np.diff(u) > 0)
    np.testing.assert_allclose(u, -u[::-1], atol=1e-12)
    assert np.max(np.abs(_scaled_force(u))) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_equilibrium_matches_potential_minimization(n):
    # oracle: direct numerical minimization of the scaled potential
    rng = np.random.default_rng(7 + n)
    cfg = TrapConfig(n, TWO_PI * 3e6, TWO_PI * 400e3)
    u = solve_equilibrium(cfg)
    u_min = minimize_scaled_potential(n, rng, n_starts=50)
    np.testing.assert_allclose(u, u_min, atol=1e-9)
    assert scaled_potential(u) <= scaled_potential(u_min) + 1e-12


@pytest.mark.parametrize("n", [2, 3, 5])
def test_stiffness_matrices_match_finite_differences(n):
    cfg = TrapConfig(n, TWO_PI * 3e6, TWO_PI * 450e3)
    u = solve_equilibrium(cfg)
    anisotropy = cfg.omega_x / cfg.omega_z

    fd_axial = finite_difference_hessian(lambda v: full_potential(v, np.zeros(n), anisotropy), u)
    np.testing.assert_allclose(_axial_stiffness(u), fd_axial, rtol=2e-5, atol=2e-5)

    fd_trans = finite_difference_hessian(lambda x: full_potential(u, x, anisotropy), np.zeros(n))
    np.testing.assert_allclose(
        _transverse_stiffness(u, anisotropy**2), fd_trans, rtol=2e-5, atol=2e-5 * anisotropy**2
    )


def test_two_ion_mode_frequencies(trap2):
    wx, wz = trap2.omega_x, trap2.omega_z
    trans = mode_structure(trap2, "transverse")
    np.testing.assert_allclose(
        trans.mode_freqs, [wx, np.sqrt(wx**2 - wz**2)], rtol=1e-9
    )
    axial = mode_structure(trap2, "axial")
    np.testing.assert_allclose(axial.mode_freqs, [wz, np.sqrt(3.0) * wz], rtol=1e-9)


def test_single_ion_transverse_mode():
    cfg = TrapConfig(1, TWO_PI * 3e6, TWO_PI * 400e3)
    modes = mode_structure(cfg, "transverse")
    np.testing.assert_allclose(modes.mode_freqs, [cfg.omega_x], rtol=1e-12)
    np.testing.assert_allclose(modes.mode_matrix, [[1.0]], atol=1e-12)


@pytest.mark.parametrize("branch", ["transverse", "axial"])
@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_mode_matrix_orthonormal_and_couplings(n, branch):
    cfg = TrapConfig(n, TWO_PI * 3.2e6, TWO_PI * 380e3)
    modes = mode_structure(cfg, branch)
    gram = modes.mode_matrix.T @ modes.mode_matrix
    np.testing.assert_allclose(gram, np.eye(n), atol=1e-12)
    expected = modes.mode_matrix * cfg.delta_k * np.sqrt(
        HBAR / (2.0 * cfg.ion_mass * modes.mode_freqs)
    )[None, :]
    np.testing.assert_allclose(modes.lamb_dicke, expected, rtol=1e-12)


def test_transverse_cm_mode_first(modes5):
    trap = modes5.trap
    assert abs(modes5.mode_freqs[0] - trap.omega_x) / trap.omega_x < 1e-9
    cm = modes5.mode_matrix[:, 0]
    np.testing.assert_allclose(cm, np.full(5, 1.0 / np.sqrt(5.0)), atol=1e-9)
    # all other transverse modes sit strictly below the CM frequency
    assert np.all(modes5.mode_freqs[1:] < trap.omega_x)


def test_transverse_frequency_sum_rule(modes5):
    trap = modes5.trap
    u = modes5.positions
    trace = np.trace(_transverse_stiffness(np.asarray(u), (trap.omega_x / trap.omega_z) ** 2))
    total = np.sum(modes5.mode_freqs**2)
    np.testing.assert_allclose(total, trace * trap.omega_z**2, rtol=1e-9)


def test_mode_vector_sign_convention(modes5):
    for m in range(5):
        col = modes5.mode_matrix[:, m]
        assert col[np.argmax(np.abs(col))] > 0


def test_zigzag_instability_reports_critical_anisotropy():
    cfg = TrapConfig(5, TWO_PI * 480e3, TWO_PI * 400e3)
    with pytest.raises(ZigzagInstabilityError) as excinfo:
        mode_structure(cfg, "transverse")
    critical = excinfo.value.critical_anisotropy
    assert critical > 480e3 / 400e3
    # just above the critical ratio the chain is stable again
    stable = TrapConfig(5, TWO_PI * 400e3 * (critical * 1.001), TWO_PI * 400e3)
    modes = mode_structure(stable, "transverse")
    assert np.all(modes.mode_freqs > 0)


def test_invalid_trap_configs_rejected():
    with pytest.raises(ConfigError):
        TrapConfig(0, TWO_PI * 3e6, TWO_PI * 400e3)
    with pytest.raises(ConfigError):
        TrapConfig(2, TWO_PI * 400e3, TWO_PI * 3e6)  # omega_z > omega_x
    with pytest.raises(ConfigError):
        TrapConfig(2, TWO_PI * 3e6, TWO_PI * 400e3, ion_mass=-1.0)
    with pytest.raises(ConfigError):
        mode_structure(TrapConfig(2, TWO_PI * 3e6, TWO_PI * 400e3), "radial")


def test_scaling_advisory_values_and_ratios():
    cfg5 = TrapConfig(5, TWO_PI * 3e6, TWO_PI * 400e3)
    cfg1 = TrapConfig(1, TWO_PI * 3e6, TWO_PI * 400e3)
    adv5 = scaling_advisory(cfg5)
    adv1 = scaling_advisory(cfg1)
    np.testing.assert_allclose(adv5.transverse_splitting_floor_s, cfg5.omega_x / cfg5.omega_z**2, rtol=1e-12)
    np.testing.assert_allclose(adv5.axial_splitting_floor_s, 1.0 / cfg5.omega_z, rtol=1e-12)
    assert np.isfinite(adv1.axial_crowding_floor_s) and np.isfinite(adv1.transverse_crowding_floor_s)
    np.testing.assert_allclose(
        adv5.axial_crowding_floor_s / adv1.axial_crowding_floor_s, 5**0.86, rtol=1e-12
    )
    np.testing.assert_allclose(
        adv5.transverse_crowding_floor_s / adv1.transverse_crowding_floor_s, 5**1.72, rtol=1e-12
    )


def test_mode_table_csv_layout(modes3):
    text = mode_table_csv(modes3)
    lines = text.strip().split("\n")
    assert lines[0] == "mode_index,freq_hz,b_1,b_2,b_3,eta_1,eta_2,eta_3"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "1"
    assert abs(float(first[1]) - modes3.mode_freqs[0] / TWO_PI) < 1e-6


def test_mode_structure_deterministic(trap5):
    a = mode_structure(trap5)
    b = mode_structure(trap5)
    assert np.array_equal(a.mode_freqs, b.mode_freqs)
    assert np.array_equal(a.mode_matrix, b.mode_matrix)
    assert np.array_equal(a.lamb_dicke, b.lamb_dicke)
