"""Stage maps: creation-operator rewrite rules between consecutive registers.

A stage sends each fired generator ``A+_k`` of its input register to a
linear combination of monomials over its output register. The image of a
multi-generator monomial is the distributive product of its generators'
images; any term in which two factors fire the same qubit is annihilated.
The void state is left untouched by every stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    InfeasibleError,
    MissingRuleError,
    OutOfRangeError,
    ValidationError,
)
from .register import (
    Labstate,
    ProbabilityTable,
    RegisterSpec,
    canonical_monomial,
    decode_index,
    mask_of,
    prepare,
)

#: Default Gram-matrix tolerance for stage and program validation.
VALIDATION_TOL = 1e-9

STRICT = "strict"
IDENTITY = "identity"
PASSTHROUGH_MODES = (STRICT, IDENTITY)


@dataclass(frozen=True)
class RewriteRule:
    """``A+_source -> sum_i coefficient_i * monomial_i``."""

    source: int
    targets: tuple  # of (complex, monomial) pairs

    def __post_init__(self):
        targets = tuple((complex(c), canonical_monomial(m)) for c, m in self.targets)
        if not targets:
            raise ArgumentError(f"rule for generator {self.source} has no targets")
        monomials = [m for _, m in targets]
        if len(set(monomials)) != len(monomials):
            raise ArgumentError(f"rule for generator {self.source} repeats a target monomial")
        object.__setattr__(self, "source", int(self.source))
        object.__setattr__(self, "targets", targets)

    @property
    def is_rank_one(self) -> bool:
        return all(len(m) == 1 for _, m in self.targets)


@dataclass(frozen=True)
class StageMap:
    input_rank: int
    output_rank: int
    rules: Mapping[int, RewriteRule] = field(default_factory=dict)
    passthrough: str = STRICT

    def __post_init__(self):
        RegisterSpec(self.input_rank)
        RegisterSpec(self.output_rank)
        if self.passthrough not in PASSTHROUGH_MODES:
            raise ArgumentError(f"passthrough must be one of {PASSTHROUGH_MODES}")
        rules = {}
        for key, rule in dict(self.rules).items():
            if not isinstance(rule, RewriteRule):
                rule = RewriteRule(key, rule)
            if rule.source != key:
                raise ArgumentError(f"rule keyed {key} has source {rule.source}")
            if not 0 <= key < self.input_rank:
                raise OutOfRangeError(
                    f"rule source {key} out of range for input rank {self.input_rank}"
                )
            for _, m in rule.targets:
                if m and m[-1] >= self.output_rank:
                    raise OutOfRangeError(
                        f"rule {key} targets qubit {m[-1]} beyond output rank {self.output_rank}"
                    )
            rules[key] = rule
        object.__setattr__(self, "rules", dict(sorted(rules.items())))

    def __hash__(self):
        return hash((self.input_rank, self.output_rank, tuple(self.rules.items()), self.passthrough))

    @property
    def is_rank_one(self) -> bool:
        return all(r.is_rank_one for r in self.rules.values())

    def generator_image(self, k: int) -> tuple:
        """Image of ``A+_k`` as ``((coefficient, target_mask), ...)``."""
        rule = self.rules.get(k)
        if rule is not None:
            return tuple((c, mask_of(m)) for c, m in rule.targets)
        if self.passthrough == STRICT:
            raise MissingRuleError(f"no rule for generator {k} in strict stage")
        if k >= self.output_rank:
            raise OutOfRangeError(
                f"identity passthrough of generator {k} exceeds output rank {self.output_rank}"
            )
        return ((1.0 + 0j, 1 << k),)

    @classmethod
    def from_matrix(cls, matrix, passthrough: str = STRICT) -> StageMap:
        """Rank-1 stage whose rule ``i`` is row ``i`` of ``matrix``."""
        matrix = np.asarray(matrix, dtype=complex)
        r_in, r_out = matrix.shape
        rules = {
            i: RewriteRule(i, tuple((complex(matrix[i, j]), (j,)) for j in range(r_out)))
            for i in range(r_in)
        }
        return cls(r_in, r_out, rules, passthrough)


@dataclass(frozen=True)
class NetworkProgram:
    """An initial monomial over rank ``r_0`` followed by chained stages."""

    initial: tuple
    stages: tuple
    initial_rank: int

    def __post_init__(self):
        object.__setattr__(self, "initial", canonical_monomial(self.initial))
        object.__setattr__(self, "stages", tuple(self.stages))
        reg = RegisterSpec(self.initial_rank)
        for k in self.initial:
            reg.check_qubit(k)
        rank = self.initial_rank
        for n, stage in enumerate(self.stages):
            if stage.input_rank != rank:
                raise ArgumentError(
                    f"stage {n} input rank {stage.input_rank} does not match previous rank {rank}"
                )
            rank = stage.output_rank

    @property
    def ranks(self) -> list[int]:
        return [self.initial_rank] + [s.output_rank for s in self.stages]

    @property
    def final_rank(self) -> int:
        return self.ranks[-1]

    @property
    def is_rank_one(self) -> bool:
        return all(s.is_rank_one for s in self.stages)

    def prepared_state(self) -> Labstate:
        return prepare(RegisterSpec(self.initial_rank), self.initial)

    def with_initial(self, initial: Sequence[int]) -> NetworkProgram:
        return NetworkProgram(tuple(initial), self.stages, self.initial_rank)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    max_gram_deviation: float
    checked_domain: tuple
    stage_reports: tuple = ()
    failing_stage: int | None = None


def _image_of_index(stage: StageMap, index: int) -> dict:
    """Expanded image of one basis monomial as ``{mask: amplitude}``."""
    acc = {0: 1.0 + 0j}
    for k in decode_index(index):
        image = stage.generator_image(k)
        nxt: dict = {}
        for a, c in acc.items():
            for coef, t in image:
                if a & t:
                    continue
                b = a | t
                nxt[b] = nxt.get(b, 0j) + c * coef
        acc = nxt
    return acc


def evolve(stage: StageMap, state: Labstate) -> Labstate:
    """Push ``state`` through one stage."""
    if state.rank != stage.input_rank:
        raise ArgumentError(
            f"state has rank {state.rank}, stage expects input rank {stage.input_rank}"
        )
    out: dict = {}
    for a in sorted(state.amplitudes):
        amp = state.amplitudes[a]
        for b, c in _image_of_index(stage, a).items():
            out[b] = out.get(b, 0j) + amp * c
    return Labstate(RegisterSpec(stage.output_rank), out)


def _gram_report(images: list, domain: tuple, tol: float) -> ValidationReport:
    n = len(images)
    worst = 0.0
    for i in range(n):
        for j in range(i, n):
            x, y = images[i], images[j]
            g = 0j
            for a in sorted(set(x) & set(y)):
                g += x[a].conjugate() * y[a]
            dev = abs(g - (1.0 if i == j else 0.0))
            if dev > worst or math.isnan(dev):
                worst = dev
    return ValidationReport(bool(worst <= tol), worst, domain)


def validate_stage(
    stage: StageMap,
    domain: Sequence[Sequence[int]] | None = None,
    tolerance: float = VALIDATION_TOL,
) -> ValidationReport:
    """Check that the images of ``domain`` monomials are orthonormal.

    The default domain is the single-generator monomials with explicit rules.
    """
    if domain is None:
        domain = [(k,) for k in stage.rules]
    domain = tuple(canonical_monomial(m) for m in domain)
    if not domain:
        raise ArgumentError("validation domain is empty")
    reg = RegisterSpec(stage.input_rank)
    for m in domain:
        for k in m:
            reg.check_qubit(k)
    images = [_image_of_index(stage, mask_of(m)) for m in domain]
    return _gram_report(images, domain, tolerance)


def _reachable_support(stage: StageMap, support: Sequence[int]) -> list[int]:
    nxt = set()
    for a in support:
        nxt.update(b for b, c in _image_of_index(stage, a).items() if c != 0)
    return sorted(nxt)


def validate_program(
    program: NetworkProgram,
    tolerance: float = VALIDATION_TOL,
    sources: Sequence[Sequence[int]] | None = None,
) -> ValidationReport:
    """Validate every stage on the monomial support it can actually receive.

    ``sources`` overrides the starting support (default: the program's
    initial monomial alone).
    """
    if sources is None:
        sources = [program.initial]
    support = sorted({mask_of(canonical_monomial(m)) for m in sources})
    reports = []
    failing = None
    for n, stage in enumerate(program.stages):
        domain = tuple(decode_index(a) for a in support)
        report = validate_stage(stage, domain, tolerance)
        reports.append(report)
        if not report.passed and failing is None:
            failing = n
        support = _reachable_support(stage, support)
    worst = max((r.max_gram_deviation for r in reports), default=0.0)
    domain = reports[failing].checked_domain if failing is not None else ()
    return ValidationReport(failing is None, worst, domain, tuple(reports), failing)


def run_stages(stages: Sequence[StageMap], state: Labstate) -> Labstate:
    for stage in stages:
        state = evolve(stage, state)
    return state


def run_program(program: NetworkProgram, tolerance: float = VALIDATION_TOL):
    """Validate, then run ``program``; returns ``(final_state, table)``."""
    report = validate_program(program, tolerance)
    if not report.passed:
        n = report.failing_stage
        dev = report.stage_reports[n].max_gram_deviation
        raise ValidationError(
            f"stage {n} failed validation: max Gram deviation {dev:.3g} > {tolerance:g}",
            stage_index=n,
            deviation=dev,
        )
    final = run_stages(program.stages, program.prepared_state())
    return final, ProbabilityTable.from_state(final)


def random_semi_unitary(r_in: int, r_out: int, seed: int | None = None) -> StageMap:
    """Rank-1 stage with a seeded ``r_in x r_out`` row-orthonormal matrix."""
    if r_out < r_in:
        raise InfeasibleError(f"cannot fit {r_in} orthonormal rows in dimension {r_out}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((r_out, r_in)) + 1j * rng.standard_normal((r_out, r_in))
    q, r = np.linalg.qr(g)
    # fix the phase freedom so the result depends on the seed only
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return StageMap.from_matrix(q.T)


def random_program(n_stages: int, max_rank: int, seed: int) -> NetworkProgram:
    """Seeded chain of rank-1 semi-unitary stages with nondecreasing ranks.

    The initial monomial is one generator of the first register.
    """
    rng = np.random.default_rng(seed)
    ranks = sorted(int(r) for r in rng.integers(1, max_rank + 1, size=n_stages + 1))
    stages = tuple(
        random_semi_unitary(ranks[n], ranks[n + 1], seed=int(rng.integers(2**32)))
        for n in range(n_stages)
    )
    return NetworkProgram((int(rng.integers(ranks[0])),), stages, ranks[0])


def identity_stage(rank: int) -> StageMap:
    return StageMap(rank, rank, {}, IDENTITY)
