"""Builders for the standard detector-network experiments.

Qubit layouts:

* Stern-Gerlach: rank 3, ``0`` = preparation switch, ``1`` = up, ``2`` = down.
* PVM with ``d`` outcomes: rank ``1 + d``, outcome ``i`` on qubit ``i``.
* Slits: registers of rank ``1 -> M -> M`` (source, barrier sites, screen sites).
  Site indices are cyclic modulo ``M``.
* EPR / HSZ: rank 5, ``0`` = switch, ``1``/``2`` Alice (or photon 1 arms),
  ``3``/``4`` Bob (or photon 2 arms).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ValidationError
from .register import MAX_RANK
from .stages import (
    IDENTITY,
    STRICT,
    VALIDATION_TOL,
    NetworkProgram,
    RewriteRule,
    StageMap,
    identity_stage,
    validate_program,
)

NORMALIZATION_TOL = 1e-12

#: Symmetric balanced beamsplitter convention used by the HSZ presets.
BALANCED_BEAMSPLITTER = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)


def _check_normalized(amplitudes, what):
    total = math.fsum(abs(complex(c)) ** 2 for c in amplitudes)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ArgumentError(f"{what} has squared norm {total!r}, expected 1")


def _require_valid(program: NetworkProgram, what: str, tol: float = VALIDATION_TOL):
    report = validate_program(program, tol)
    if not report.passed:
        n = report.failing_stage
        dev = report.stage_reports[n].max_gram_deviation
        raise ValidationError(f"{what}: stage {n} deviation {dev:.3g}", n, dev)
    return program


# -- single-particle experiments ---------------------------------------------


def stern_gerlach(alpha: complex, beta: complex) -> NetworkProgram:
    return pvm_network([alpha, beta])


def pvm_network(psi: Sequence[complex]) -> NetworkProgram:
    """Von Neumann test with ``len(psi)`` orthogonal outcomes."""
    psi = [complex(c) for c in psi]
    if not psi:
        raise ArgumentError("psi must be nonempty")
    _check_normalized(psi, "psi")
    d = len(psi)
    rule = RewriteRule(0, tuple((c, (i + 1,)) for i, c in enumerate(psi)))
    stage = StageMap(1 + d, 1 + d, {0: rule})
    return NetworkProgram((0,), (stage,), 1 + d)


# -- slit experiments ---------------------------------------------------------


def kernel_from_spectrum(spectrum) -> np.ndarray:
    """Cyclic kernel whose circulant has eigenvalues ``spectrum``.

    A unit-modulus spectrum gives a kernel obeying the cyclic orthogonality
    rule exactly (up to rounding).
    """
    return np.fft.ifft(np.asarray(spectrum, dtype=complex))


def fresnel_kernel(sites: int, distance: float = 1.0) -> np.ndarray:
    """Discrete Fresnel propagator: quadratic phase in the frequency domain."""
    f = np.fft.fftfreq(sites, d=1.0 / sites)
    return kernel_from_spectrum(np.exp(-1j * math.pi * distance * f**2 / sites))


def dft_row_kernel(sites: int) -> np.ndarray:
    """Kernel whose spectrum is the diagonal of the DFT matrix, ``exp(-2 pi i m^2 / M)``."""
    m = np.arange(sites)
    return kernel_from_spectrum(np.exp(-2j * math.pi * (m * m % sites) / sites))


def random_cyclic_kernel(sites: int, seed: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return kernel_from_spectrum(np.exp(2j * math.pi * rng.random(sites)))


KERNELS = {"fresnel": fresnel_kernel, "dft-row": dft_row_kernel}


def kernel_deviation(kernel: Sequence[complex]) -> float:
    """``max_d |sum_k conj(V_k) V_{k+d} - delta_{0,d}|`` over cyclic shifts, by direct sums."""
    v = [complex(c) for c in kernel]
    m = len(v)
    worst = 0.0
    for d in range(m):
        s = sum(v[k].conjugate() * v[(k + d) % m] for k in range(m))
        worst = max(worst, abs(s - (1.0 if d == 0 else 0.0)))
    return worst


@dataclass(frozen=True)
class SlitGeometry:
    """A cyclic barrier/screen pair with ``sites`` positions each."""

    sites: int
    open_slits: tuple
    kernel: tuple

    def __post_init__(self):
        if not 1 <= self.sites <= MAX_RANK:
            raise ArgumentError(f"sites must be in [1, {MAX_RANK}]")
        slits = tuple(sorted({int(a) for a in self.open_slits}))
        if not slits:
            raise ArgumentError("at least one slit must be open")
        if slits[0] < 0 or slits[-1] >= self.sites:
            raise ArgumentError(f"slit indices must lie in [0, {self.sites})")
        kernel = tuple(complex(c) for c in self.kernel)
        if len(kernel) != self.sites:
            raise ArgumentError(f"kernel needs {self.sites} entries, got {len(kernel)}")
        object.__setattr__(self, "open_slits", slits)
        object.__setattr__(self, "kernel", kernel)

    def coefficient(self, a: int, j: int) -> complex:
        """Slit ``a`` to screen site ``j``: ``V_{(a - j) mod M}``."""
        return self.kernel[(a - j) % self.sites]


def slit_network(geometry: SlitGeometry, split: Sequence[complex]) -> NetworkProgram:
    """Splitting onto the open slits followed by cyclic superposition onto the screen.

    ``split[i]`` is the amplitude for ``geometry.open_slits[i]``.
    """
    split = [complex(c) for c in split]
    if len(split) != len(geometry.open_slits):
        raise ArgumentError(
            f"split has {len(split)} amplitudes for {len(geometry.open_slits)} open slits"
        )
    _check_normalized(split, "split")
    dev = kernel_deviation(geometry.kernel)
    if dev > VALIDATION_TOL:
        raise ValidationError(f"kernel fails the cyclic orthogonality rule by {dev:.3g}", 1, dev)
    m = geometry.sites
    splitting = StageMap(
        1, m, {0: RewriteRule(0, tuple((c, (a,)) for a, c in zip(geometry.open_slits, split)))}
    )
    superposition = StageMap(
        m,
        m,
        {
            a: RewriteRule(a, tuple((geometry.coefficient(a, j), (j,)) for j in range(m)))
            for a in geometry.open_slits
        },
    )
    return _require_valid(NetworkProgram((0,), (splitting, superposition), 1), "slit network")


def mirror_slit(sites: int, s: int) -> int:
    return (-s) % sites


def double_slit_geometry(sites: int, s: int, kernel) -> SlitGeometry:
    ms = mirror_slit(sites, s)
    if ms == s % sites:
        raise ArgumentError(f"slit {s} is its own mirror image modulo {sites}")
    return SlitGeometry(sites, (s, ms), tuple(kernel))


def double_slit_network(sites: int, s: int, kernel, psi_s: complex, psi_ms: complex):
    geometry = double_slit_geometry(sites, s, kernel)
    amps = {s % sites: psi_s, mirror_slit(sites, s): psi_ms}
    return slit_network(geometry, [amps[a] for a in geometry.open_slits])


def double_slit_closed_form(
    geometry: SlitGeometry, s: int, psi_s: complex, psi_ms: complex
) -> list[float]:
    """Screen probabilities from the four-term interference formula."""
    m = geometry.sites
    ms = mirror_slit(m, s)
    if set(geometry.open_slits) != {s % m, ms} or ms == s % m:
        raise ArgumentError(f"geometry must have exactly slits {s} and {ms} open")
    psi_s, psi_ms = complex(psi_s), complex(psi_ms)
    _check_normalized([psi_s, psi_ms], "slit amplitudes")
    dev = kernel_deviation(geometry.kernel)
    if dev > VALIDATION_TOL:
        raise ValidationError(f"kernel fails the cyclic orthogonality rule by {dev:.3g}", 1, dev)
    v = geometry.kernel
    probs = []
    for j in range(m):
        vs = v[(s - j) % m]
        vms = v[(-s - j) % m]
        p = (
            abs(psi_s) ** 2 * abs(vs) ** 2
            + abs(psi_ms) ** 2 * abs(vms) ** 2
            + psi_ms * psi_s.conjugate() * vms * vs.conjugate()
            + psi_ms.conjugate() * psi_s * vms.conjugate() * vs
        )
        probs.append(p.real)
    return probs


# -- two-particle experiments -------------------------------------------------


@dataclass(frozen=True)
class EprSettings:
    """Bob's analyser direction; Alice's is fixed along +z."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ArgumentError(f"theta={self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise ArgumentError(f"phi={self.phi} outside [0, 2 pi)")


def epr_network(settings: EprSettings) -> NetworkProgram:
    s = math.sin(settings.theta / 2) / math.sqrt(2)
    c = math.cos(settings.theta / 2) / math.sqrt(2)
    phase = cmath.exp(-1j * settings.phi)
    rule = RewriteRule(
        0,
        (
            (s * phase, (1, 3)),
            (s, (2, 4)),
            (c * phase, (1, 4)),
            (-c, (2, 3)),
        ),
    )
    return NetworkProgram((0,), (StageMap(5, 5, {0: rule}),), 5)


def beamsplitter_stage(rank: int, a: int, b: int, matrix=BALANCED_BEAMSPLITTER) -> StageMap:
    """Mix qubits ``a`` and ``b`` with a 2x2 matrix; other generators pass through."""
    u = np.asarray(matrix, dtype=complex)
    rules = {
        a: RewriteRule(a, ((u[0, 0], (a,)), (u[0, 1], (b,)))),
        b: RewriteRule(b, ((u[1, 0], (a,)), (u[1, 1], (b,)))),
    }
    return StageMap(rank, rank, rules, IDENTITY)


def phase_shifter_stage(rank: int, k: int, phase: float) -> StageMap:
    return StageMap(rank, rank, {k: RewriteRule(k, ((cmath.exp(1j * phase), (k,)),))}, IDENTITY)


def combine_stages(*stages: StageMap) -> StageMap:
    """Merge stages acting on disjoint generators into one stage."""
    first = stages[0]
    rules = {}
    for st in stages:
        if (st.input_rank, st.output_rank) != (first.input_rank, first.output_rank):
            raise ArgumentError("stages to combine must share ranks")
        overlap = rules.keys() & st.rules.keys()
        if overlap:
            raise ArgumentError(f"generators {sorted(overlap)} ruled twice")
        rules.update(st.rules)
    modes = {st.passthrough for st in stages}
    return StageMap(first.input_rank, first.output_rank, rules, IDENTITY if IDENTITY in modes else STRICT)


def balanced_beamsplitter_stage() -> StageMap:
    """Beamsplitters on both photon arm pairs, ``{1,2}`` and ``{3,4}``."""
    return combine_stages(beamsplitter_stage(5, 1, 2), beamsplitter_stage(5, 3, 4))


def hsz_network(theta: float, downstream: Sequence[StageMap] | None = None) -> NetworkProgram:
    """Two-photon source with relative phase ``theta`` plus optional optics."""
    rule = RewriteRule(
        0,
        (
            (1 / math.sqrt(2), (1, 3)),
            (cmath.exp(1j * theta) / math.sqrt(2), (2, 4)),
        ),
    )
    stages = (StageMap(5, 5, {0: rule}),) + tuple(downstream or ())
    return _require_valid(NetworkProgram((0,), stages, 5), "hsz network")


# -- independent experiments --------------------------------------------------


def _explicit_rules(stage: StageMap) -> dict:
    rules = dict(stage.rules)
    if stage.passthrough == IDENTITY:
        for k in range(min(stage.input_rank, stage.output_rank)):
            rules.setdefault(k, RewriteRule(k, ((1.0, (k,)),)))
    return rules


def _shift_rule(rule: RewriteRule, src_offset: int, dst_offset: int) -> RewriteRule:
    return RewriteRule(
        rule.source + src_offset,
        tuple((c, tuple(k + dst_offset for k in m)) for c, m in rule.targets),
    )


def product_network(a: NetworkProgram, b: NetworkProgram) -> NetworkProgram:
    """Run ``a`` and ``b`` side by side on one register; ``b``'s qubits follow ``a``'s."""
    for prog, name in ((a, "first factor"), (b, "second factor")):
        _require_valid(prog, name)
    n = max(len(a.stages), len(b.stages))
    a_stages = list(a.stages) + [identity_stage(a.final_rank)] * (n - len(a.stages))
    b_stages = list(b.stages) + [identity_stage(b.final_rank)] * (n - len(b.stages))
    if a.initial_rank + b.initial_rank > MAX_RANK or a.final_rank + b.final_rank > MAX_RANK:
        raise ArgumentError("combined register exceeds the maximum rank")
    stages = []
    for sa, sb in zip(a_stages, b_stages):
        rules = dict(_explicit_rules(sa))
        for k, rule in _explicit_rules(sb).items():
            shifted = _shift_rule(rule, sa.input_rank, sa.output_rank)
            assert shifted.source not in rules
            rules[shifted.source] = shifted
        stages.append(
            StageMap(sa.input_rank + sb.input_rank, sa.output_rank + sb.output_rank, rules)
        )
    initial = a.initial + tuple(k + a.initial_rank for k in b.initial)
    return NetworkProgram(initial, tuple(stages), a.initial_rank + b.initial_rank)
