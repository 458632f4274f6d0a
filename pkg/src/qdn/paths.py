"""Path-sum amplitudes, brute-force oracles, and effective POVMs.

For programs whose stages are all rank-1 (every generator goes to a sum of
single generators) each stage is an ``r_{n-1} x r_n`` matrix and the
transition amplitude between generators is a sum over index paths.
:func:`path_amplitude_propagate` does it by vector-matrix products;
:func:`path_amplitude_enumerate` walks every path explicitly and is the
oracle for it. Enumeration also works on general programs when the
endpoints are given as monomials, branching on every choice of target
term for every fired generator.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .errors import (
    ArgumentError,
    MissingRuleError,
    OutOfRangeError,
    ResourceError,
    UnsupportedStructureError,
    ValidationError,
)
from .register import RegisterSpec, canonical_monomial, decode_index, mask_of
from .stages import (
    IDENTITY,
    VALIDATION_TOL,
    NetworkProgram,
    StageMap,
    run_stages,
    validate_program,
)

#: Default cap on the number of explicitly enumerated paths.
MAX_PATHS = 10_000_000

#: Largest register rank for which a dense ``2^r x 2^r`` stage matrix is built.
MAX_DENSE_RANK = 12


def stage_matrix(stage: StageMap):
    """Coefficient matrix of a rank-1 stage.

    Returns ``(matrix, undefined)`` where ``undefined`` maps row indices the
    stage cannot rewrite (strict and unruled, or identity beyond the output
    rank) to the exception that using them should raise.
    """
    if not stage.is_rank_one:
        raise UnsupportedStructureError("stage has a rule with a multi-qubit target")
    u = np.zeros((stage.input_rank, stage.output_rank), dtype=complex)
    undefined = {}
    for i in range(stage.input_rank):
        rule = stage.rules.get(i)
        if rule is not None:
            for c, (j,) in rule.targets:
                u[i, j] = c
        elif stage.passthrough == IDENTITY and i < stage.output_rank:
            u[i, i] = 1.0
        elif stage.passthrough == IDENTITY:
            undefined[i] = OutOfRangeError(
                f"identity passthrough of generator {i} exceeds output rank {stage.output_rank}"
            )
        else:
            undefined[i] = MissingRuleError(f"no rule for generator {i} in strict stage")
    return u, undefined


def _check_endpoints(program: NetworkProgram, i0: int, iN: int) -> None:
    RegisterSpec(program.initial_rank).check_qubit(i0)
    RegisterSpec(program.final_rank).check_qubit(iN)


def path_amplitude_propagate(program: NetworkProgram, i0: int, iN: int) -> complex:
    """Amplitude from ``A+_{0,i0}|0)`` to ``A+_{N,iN}|0)`` by sequential propagation."""
    _check_endpoints(program, i0, iN)
    vec = np.zeros(program.initial_rank, dtype=complex)
    vec[i0] = 1.0
    for stage in program.stages:
        u, undefined = stage_matrix(stage)
        for i, err in undefined.items():
            if vec[i] != 0:
                raise err
        vec = vec @ u
    return complex(vec[iN])


def path_amplitude_enumerate(
    program: NetworkProgram,
    i0,
    iN,
    max_paths: int = MAX_PATHS,
) -> complex:
    """Amplitude by explicit enumeration of every path.

    With integer endpoints the program must be rank-1 and every tuple of
    intermediate generator indices is visited. With monomial endpoints
    (sequences of qubit indices) any program is accepted and the sum runs
    over every sequence of term choices.
    """
    if isinstance(i0, (int, np.integer)) and isinstance(iN, (int, np.integer)):
        return _enumerate_rank_one(program, int(i0), int(iN), max_paths)
    return _enumerate_monomial(program, canonical_monomial(i0), canonical_monomial(iN), max_paths)


def _enumerate_rank_one(program, i0, iN, max_paths):
    _check_endpoints(program, i0, iN)
    n_stages = len(program.stages)
    if n_stages == 0:
        return 1.0 + 0j if i0 == iN else 0j
    mats = [stage_matrix(s) for s in program.stages]
    interior = program.ranks[1:-1]
    n_paths = math.prod(interior)
    if n_paths > max_paths:
        raise ResourceError(f"{n_paths} paths exceed the cap of {max_paths}")
    total = 0j
    for middle in itertools.product(*(range(r) for r in interior)):
        path = (i0,) + middle + (iN,)
        term = 1.0 + 0j
        for n, (u, undefined) in enumerate(mats):
            i = path[n]
            if i in undefined:
                if term != 0:
                    raise undefined[i]
                break
            term *= u[path[n], path[n + 1]]
            if term == 0:
                break
        total += term
    return total


def _generator_terms(stage: StageMap, k: int):
    rule = stage.rules.get(k)
    if rule is not None:
        return [(c, mask_of(m)) for c, m in rule.targets]
    return list(stage.generator_image(k))


def _enumerate_monomial(program, source, target, max_paths):
    reg0 = RegisterSpec(program.initial_rank)
    for k in source:
        reg0.check_qubit(k)
    regN = RegisterSpec(program.final_rank)
    for k in target:
        regN.check_qubit(k)
    target_mask = mask_of(target)
    stages = program.stages
    count = 0
    total = 0j

    def walk(n, mask, coef):
        nonlocal count, total
        if n == len(stages):
            count += 1
            if count > max_paths:
                raise ResourceError(f"path count exceeds the cap of {max_paths}")
            if mask == target_mask:
                total += coef
            return
        generators = decode_index(mask)
        choices = [_generator_terms(stages[n], k) for k in generators]
        for pick in itertools.product(*choices):
            masks = [t for _, t in pick]
            union = 0
            clash = False
            for t in masks:
                if union & t:
                    clash = True
                    break
                union |= t
            if clash:
                continue
            c = coef
            for term_coef, _ in pick:
                c = c * term_coef
            walk(n + 1, union, c)

    walk(0, mask_of(source), 1.0 + 0j)
    return total


def dense_stage_matrix(stage: StageMap) -> np.ndarray:
    """Full ``2^r_in x 2^r_out`` matrix of a stage (row = input basis index)."""
    if max(stage.input_rank, stage.output_rank) > MAX_DENSE_RANK:
        raise ResourceError(f"dense matrices are limited to rank {MAX_DENSE_RANK}")
    n_rows = 1 << stage.input_rank
    m = np.zeros((n_rows, 1 << stage.output_rank), dtype=complex)
    for a in range(n_rows):
        gens = decode_index(a)
        try:
            choices = [_generator_terms(stage, k) for k in gens]
        except (MissingRuleError, OutOfRangeError):
            continue  # rows the stage cannot rewrite stay zero
        for pick in itertools.product(*choices):
            union = 0
            ok = True
            for _, t in pick:
                if union & t:
                    ok = False
                    break
                union |= t
            if ok:
                m[a, union] += math.prod((c for c, _ in pick), start=1.0 + 0j)
    return m


def dense_final_vector(program: NetworkProgram) -> np.ndarray:
    """Final amplitudes as a dense vector, by dense matrix products."""
    vec = np.zeros(1 << program.initial_rank, dtype=complex)
    vec[mask_of(program.initial)] = 1.0
    for stage in program.stages:
        vec = vec @ dense_stage_matrix(stage)
    return vec


def oracle_amplitudes(program: NetworkProgram, outcomes: Sequence[int]) -> dict:
    """Independent amplitudes for ``outcomes`` (basis indices of the final register).

    Uses generator path enumeration for rank-1 programs started from one
    generator, dense matrices when every rank is small, and monomial path
    enumeration otherwise.
    """
    if program.is_rank_one and len(program.initial) == 1:
        i0 = program.initial[0]
        out = {}
        for o in outcomes:
            gens = decode_index(o)
            if len(gens) == 1:
                out[o] = path_amplitude_enumerate(program, i0, gens[0])
            else:
                out[o] = path_amplitude_enumerate(program, program.initial, gens)
        return out
    if max(program.ranks) <= MAX_DENSE_RANK:
        vec = dense_final_vector(program)
        return {o: complex(vec[o]) for o in outcomes}
    return {o: path_amplitude_enumerate(program, program.initial, decode_index(o)) for o in outcomes}


def effective_povm(
    program: NetworkProgram,
    sources: Sequence[int],
    tolerance: float = VALIDATION_TOL,
) -> list:
    """Effects ``E_o = M_o^dagger M_o`` over the span of ``A+_s|0)``, ``s in sources``.

    ``M_o[s]`` is the amplitude from source generator ``s`` to outcome ``o``.
    Returns ``[(outcome_monomial, E_o), ...]`` sorted by outcome basis index.
    """
    sources = [int(s) for s in sources]
    if not sources:
        raise ArgumentError("no sources given")
    if len(set(sources)) != len(sources):
        raise ArgumentError("repeated source generator")
    report = validate_program(program, tolerance, sources=[(s,) for s in sources])
    if not report.passed:
        n = report.failing_stage
        raise ValidationError(
            f"stage {n} failed validation over the source span", n,
            report.stage_reports[n].max_gram_deviation,
        )
    finals = [run_stages(program.stages, program.with_initial((s,)).prepared_state()) for s in sources]
    outcomes = sorted(set().union(*(f.amplitudes for f in finals)))
    effects = []
    for o in outcomes:
        row = np.array([f.amplitude(o) for f in finals], dtype=complex)
        effects.append((decode_index(o), np.outer(row.conj(), row)))
    return effects
