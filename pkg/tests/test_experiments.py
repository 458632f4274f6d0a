import cmath
import math

import numpy as np
import pytest

from qdn import experiments as ex
from qdn.errors import ArgumentError, ValidationError
from qdn.paths import path_amplitude_enumerate
from qdn.stages import IDENTITY, StageMap, RewriteRule, run_program, validate_program


def probs(program):
    return run_program(program)[1]


@pytest.mark.parametrize(
    "alpha, beta, up, down",
    [(1, 0, 1.0, 0.0), (1 / math.sqrt(2), 1 / math.sqrt(2), 0.5, 0.5), (3 / 5, 4j / 5, 0.36, 0.64)],
)
def test_stern_gerlach(alpha, beta, up, down):
    t = probs(ex.stern_gerlach(alpha, beta))
    assert t.probability((1,)) == pytest.approx(up, abs=1e-15)
    assert t.probability((2,)) == pytest.approx(down, abs=1e-15)


def test_stern_gerlach_rejects_unnormalized():
    with pytest.raises(ArgumentError):
        ex.stern_gerlach(1, 1)


def test_pvm():
    assert ex.pvm_network([0.6, 0.8j]) == ex.stern_gerlach(0.6, 0.8j)
    t = probs(ex.pvm_network([1 / math.sqrt(3)] * 3))
    for i in (1, 2, 3):
        assert abs(t.probability((i,)) - 1 / 3) <= 1e-12
    t = probs(ex.pvm_network([0.6, 0, 0.8]))
    assert t.probability((2,)) == 0


def test_kernels_obey_cyclic_rule():
    for m in (2, 3, 4, 7, 8, 16, 33):
        for kernel in (ex.fresnel_kernel(m), ex.dft_row_kernel(m), ex.random_cyclic_kernel(m, seed=m)):
            assert ex.kernel_deviation(kernel) <= 1e-12


def test_plain_dft_row_is_not_a_kernel():
    m = 4
    row = np.exp(2j * np.pi * np.arange(m) / m) / 2
    assert ex.kernel_deviation(row) == pytest.approx(1.0)
    geom = ex.SlitGeometry(m, (1, 3), tuple(row))
    with pytest.raises(ValidationError):
        ex.slit_network(geom, [1 / math.sqrt(2)] * 2)


def test_single_slit_profile():
    m = 8
    v = ex.fresnel_kernel(m)
    geom = ex.SlitGeometry(m, (3,), tuple(v))
    t = probs(ex.slit_network(geom, [1]))
    for j in range(m):
        assert abs(t.probability((j,)) - abs(v[(3 - j) % m]) ** 2) <= 1e-15


def test_dft_row_double_slit_brute_force():
    m = 4
    v = ex.dft_row_kernel(m)
    geom = ex.SlitGeometry(m, (1, 3), tuple(v))
    psi = {1: 1 / math.sqrt(2), 3: 1 / math.sqrt(2)}
    t = probs(ex.slit_network(geom, [psi[1], psi[3]]))
    for j in range(m):
        brute = abs(sum(psi[a] * v[(a - j) % m] for a in (1, 3))) ** 2
        assert abs(t.probability((j,)) - brute) <= 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_slit_network_random(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 12))
    slits = tuple(sorted(rng.choice(m, size=int(rng.integers(1, m + 1)), replace=False).tolist()))
    split = rng.standard_normal(len(slits)) + 1j * rng.standard_normal(len(slits))
    split /= np.linalg.norm(split)
    geom = ex.SlitGeometry(m, slits, tuple(ex.random_cyclic_kernel(m, seed)))
    t = probs(ex.slit_network(geom, split))
    assert abs(t.total() - 1) <= 1e-12
    for j in range(m):
        a_j = sum(split[i] * geom.kernel[(a - j) % m] for i, a in enumerate(slits))
        assert abs(t.probability((j,)) - abs(a_j) ** 2) <= 1e-12


def test_double_slit_closed_form_cases():
    m, s = 8, 2
    geom = ex.double_slit_geometry(m, s, ex.fresnel_kernel(m))
    v = geom.kernel
    p = ex.double_slit_closed_form(geom, s, 1 / math.sqrt(2), 1 / math.sqrt(2))
    for j in range(m):
        cross = (v[(-s - j) % m] * v[(s - j) % m].conjugate()).real
        assert p[j] == pytest.approx(
            0.5 * abs(v[(s - j) % m]) ** 2 + 0.5 * abs(v[(-s - j) % m]) ** 2 + cross, abs=1e-15
        )
    single = ex.double_slit_closed_form(geom, s, 1, 0)
    assert single == pytest.approx([abs(v[(s - j) % m]) ** 2 for j in range(m)], abs=1e-15)
    assert sum(p) == pytest.approx(1, abs=1e-12)


def test_double_slit_matches_simulator():
    rng = np.random.default_rng(5)
    for m in (4, 6, 10):
        for s in range(1, (m + 1) // 2):
            a, b = np.exp(2j * np.pi * rng.random(2)) / math.sqrt(2)
            kernel = ex.random_cyclic_kernel(m, int(rng.integers(1000)))
            prog = ex.double_slit_network(m, s, kernel, a, b)
            closed = ex.double_slit_closed_form(ex.double_slit_geometry(m, s, kernel), s, a, b)
            t = probs(prog)
            for j in range(m):
                assert abs(t.probability((j,)) - closed[j]) <= 1e-12


def test_double_slit_rejects_self_mirror():
    with pytest.raises(ArgumentError):
        ex.double_slit_geometry(8, 4, ex.fresnel_kernel(8))


def test_epr_examples():
    t = probs(ex.epr_network(ex.EprSettings(0.0, 0.0)))
    assert t.as_dict() == pytest.approx({(1, 4): 0.5, (2, 3): 0.5})
    assert t.probability((1, 3)) == 0 and t.probability((2, 4)) == 0
    t = probs(ex.epr_network(ex.EprSettings(math.pi / 2, 1.3)))
    for m in [(1, 3), (2, 4), (1, 4), (2, 3)]:
        assert abs(t.probability(m) - 0.25) <= 1e-12


def test_epr_phi_invariance():
    theta = 1.234
    ref = probs(ex.epr_network(ex.EprSettings(theta, 0.0))).as_dict()
    for k in range(8):
        t = probs(ex.epr_network(ex.EprSettings(theta, 2 * math.pi * k / 8))).as_dict()
        assert set(t) == set(ref)
        assert all(abs(t[m] - ref[m]) <= 1e-15 for m in ref)


def test_epr_settings_range():
    with pytest.raises(ArgumentError):
        ex.EprSettings(-0.1, 0)
    with pytest.raises(ArgumentError):
        ex.EprSettings(1.0, 2 * math.pi)


def test_hsz_without_optics():
    t = probs(ex.hsz_network(0.77))
    assert t.as_dict() == pytest.approx({(1, 3): 0.5, (2, 4): 0.5}, abs=1e-15)


def test_hsz_beamsplitter_oracle_and_periodicity():
    theta = 0.0
    prog = ex.hsz_network(theta, [ex.balanced_beamsplitter_stage()])
    final, t = run_program(prog)
    for m in [(1, 3), (2, 4), (1, 4), (2, 3)]:
        amp = path_amplitude_enumerate(prog, (0,), m)
        assert abs(t.probability(m) - abs(amp) ** 2) <= 1e-12
    shifted = probs(ex.hsz_network(theta + 2 * math.pi, [ex.balanced_beamsplitter_stage()]))
    for m in [(1, 3), (2, 4), (1, 4), (2, 3)]:
        assert abs(shifted.probability(m) - t.probability(m)) <= 1e-12


def test_hsz_composable_optics():
    bs = ex.balanced_beamsplitter_stage()
    shifter = ex.phase_shifter_stage(5, 2, 0.4)
    prog = ex.hsz_network(0.3, [shifter, bs])
    assert validate_program(prog).passed
    # a phase on arm 2 before the splitters just adds to theta
    ref = probs(ex.hsz_network(0.7, [bs]))
    t = probs(prog)
    for m in [(1, 3), (2, 4), (1, 4), (2, 3)]:
        assert abs(t.probability(m) - ref.probability(m)) <= 1e-12


def test_hsz_rejects_invalid_downstream():
    lossy = StageMap(5, 5, {1: RewriteRule(1, ((0.5, (1,)),))}, IDENTITY)
    with pytest.raises(ValidationError):
        ex.hsz_network(0.0, [lossy])


def test_product_network():
    a = ex.stern_gerlach(0.6, 0.8j)
    b = ex.stern_gerlach(1 / math.sqrt(2), -1j / math.sqrt(2))
    prod = ex.product_network(a, b)
    assert prod.initial == (0, 3) and prod.initial_rank == 6
    assert prod.prepared_state().support() == [9]
    t = probs(prod)
    assert abs(t.probability((1, 4)) - 0.36 * 0.5) <= 1e-12


def test_product_with_empty_program():
    a = ex.stern_gerlach(0.6, 0.8)
    empty = ex.NetworkProgram((0,), (), 2)
    t = probs(ex.product_network(a, empty))
    assert t.as_dict() == pytest.approx({(1, 3): 0.36, (2, 3): 0.64}, abs=1e-15)
    t = probs(ex.product_network(empty, a))
    assert t.as_dict() == pytest.approx({(0, 3): 0.36, (0, 4): 0.64}, abs=1e-15)


def test_presets_validate_under_parameter_sweeps():
    rng = np.random.default_rng(2024)

    def unit(n):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return v / np.linalg.norm(v)

    for _ in range(100):
        a, b = unit(2)
        assert validate_program(ex.stern_gerlach(a, b)).passed
        assert validate_program(ex.pvm_network(unit(int(rng.integers(1, 9))))).passed
        theta, phi = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        assert validate_program(ex.epr_network(ex.EprSettings(theta, phi))).passed
        assert validate_program(ex.hsz_network(rng.uniform(-10, 10), [ex.balanced_beamsplitter_stage()])).passed
        m = int(rng.integers(3, 17))
        s = int(rng.integers(1, (m + 1) // 2))
        if (-s) % m != s:
            x, y = unit(2)
            assert validate_program(ex.double_slit_network(m, s, ex.random_cyclic_kernel(m, int(rng.integers(99))), x, y)).passed
        c, d = unit(2)
        assert validate_program(ex.product_network(ex.stern_gerlach(a, b), ex.stern_gerlach(c, d))).passed
