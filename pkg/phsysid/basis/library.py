"""
Candidate Term Libraries
Polynomial monomials and trainable-amplitude/frequency trigonometric terms
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np

from phsysid.autodiff import ops
from phsysid.core.errors import ConfigError, DimensionError

MONOMIAL = "monomial"
TRIG = "trig"
TRIG_SHAPES = ("sin", "cos")


@dataclass(frozen=True)
class Term:
    """One candidate term: a monomial in the state or a t-only trigonometric term"""

    kind: str
    exponents: Tuple[int, ...] = ()
    trig_shape: Optional[str] = None

    def __post_init__(self):
        if self.kind == MONOMIAL and any(e < 0 for e in self.exponents):
            raise ConfigError(f"negative exponent in {self.exponents}")
        if self.kind == TRIG and self.trig_shape not in TRIG_SHAPES:
            raise ConfigError(f"trig shape must be one of {TRIG_SHAPES}, got {self.trig_shape!r}")

    @property
    def n_params(self) -> int:
        return 1 if self.kind == MONOMIAL else 2

    @property
    def degree(self) -> int:
        return sum(self.exponents) if self.kind == MONOMIAL else 0


@dataclass(frozen=True)
class BasisLibrary:
    """
    Ordered set of candidate terms

    Parameter layout: one coefficient per monomial in term order, then an (amplitude,
    frequency) pair per trigonometric term. Monomials are graded-lexicographic and always
    precede trigonometric terms.
    """

    terms: Tuple[Term, ...]
    dimension: int
    degree: int
    includes_constant: bool
    variable_names: Tuple[str, ...] = ()
    components: Optional[Tuple[int, ...]] = None
    exponents: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mono = [t.exponents for t in self.terms if t.kind == MONOMIAL]
        if len(set(mono)) != len(mono):
            raise ConfigError("duplicate exponent vectors in library")
        if any(len(e) != self.dimension for e in mono):
            raise DimensionError("monomial exponent length differs from library dimension")
        if not self.variable_names:
            object.__setattr__(self, "variable_names", tuple(f"x{i + 1}" for i in range(self.dimension)))
        matrix = np.array(mono, dtype=int).reshape(len(mono), self.dimension)
        object.__setattr__(self, "exponents", matrix)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def n_monomials(self) -> int:
        return self.exponents.shape[0]

    @property
    def trig_terms(self) -> List[Term]:
        return [t for t in self.terms if t.kind == TRIG]

    @property
    def n_params(self) -> int:
        return sum(t.n_params for t in self.terms)

    def param_offsets(self) -> List[int]:
        """Start offset of each term's parameters within the flat coefficient vector"""
        offsets, position = [], 0
        for term in self.terms:
            offsets.append(position)
            position += term.n_params
        return offsets

    def frequency_slots(self) -> List[int]:
        """Parameter indices holding trig frequencies"""
        return [self.n_monomials + 2 * i + 1 for i in range(len(self.trig_terms))]

    def index_of(self, exponents: Sequence[int]) -> int:
        """Coefficient index of a monomial; KeyError if absent"""
        target = tuple(int(e) for e in exponents)
        for i, row in enumerate(self.exponents):
            if tuple(row) == target:
                return i
        raise KeyError(target)

    def to_spec(self) -> dict:
        return {
            "dimension": self.dimension,
            "degree": self.degree,
            "includes_constant": self.includes_constant,
            "variable_names": list(self.variable_names),
            "components": list(self.components) if self.components is not None else None,
            "terms": [
                {"kind": t.kind, "exponents": list(t.exponents), "trig_shape": t.trig_shape}
                for t in self.terms
            ],
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "BasisLibrary":
        terms = tuple(
            Term(kind=t["kind"], exponents=tuple(t["exponents"]), trig_shape=t.get("trig_shape"))
            for t in spec["terms"]
        )
        components = spec.get("components")
        return cls(
            terms=terms,
            dimension=int(spec["dimension"]),
            degree=int(spec["degree"]),
            includes_constant=bool(spec["includes_constant"]),
            variable_names=tuple(spec.get("variable_names") or ()),
            components=tuple(components) if components is not None else None,
        )


def _graded_lex_monomials(d: int, degree: int, include_constant: bool, min_degree: int = 1) -> List[Tuple[int, ...]]:
    monomials = []
    if include_constant:
        monomials.append((0,) * d)
    for total in range(min_degree, degree + 1):
        for combo in combinations_with_replacement(range(d), total):
            exponents = [0] * d
            for var in combo:
                exponents[var] += 1
            monomials.append(tuple(exponents))
    return monomials


def build_library(
    d: int,
    degree: int,
    include_constant: bool = False,
    trig_sin: bool = False,
    trig_cos: bool = False,
    variable_names: Sequence[str] = (),
    components: Optional[Sequence[int]] = None,
) -> BasisLibrary:
    """
    General library constructor (degree 0 allowed for trig-only force libraries)

    Args:
        d: Number of library variables
        degree: Maximum total monomial degree
        include_constant: Prepend the constant monomial
        trig_sin: Append an a*sin(w*t) slot
        trig_cos: Append an a*cos(w*t) slot
        variable_names: Names used when rendering terms
        components: State indices the library variables refer to (None = whole state)

    Returns:
        BasisLibrary
    """
    if d < 1:
        raise ConfigError(f"library dimension must be >= 1, got {d}")
    if degree < 0:
        raise ConfigError(f"library degree must be >= 0, got {degree}")
    terms = [Term(MONOMIAL, e) for e in _graded_lex_monomials(d, degree, include_constant)]
    if trig_sin:
        terms.append(Term(TRIG, trig_shape="sin"))
    if trig_cos:
        terms.append(Term(TRIG, trig_shape="cos"))
    if variable_names and len(variable_names) != d:
        raise DimensionError(f"{len(variable_names)} variable names for {d} variables")
    return BasisLibrary(
        terms=tuple(terms),
        dimension=d,
        degree=degree,
        includes_constant=include_constant,
        variable_names=tuple(variable_names),
        components=tuple(components) if components is not None else None,
    )


def build_polynomial_library(d: int, degree: int, include_constant: bool = False, **kwargs) -> BasisLibrary:
    """
    All monomials of total degree 1..degree in d variables, graded-lex ordered

    Args:
        d: Number of variables (>= 1)
        degree: Maximum total degree (>= 1)
        include_constant: Also include the constant monomial first

    Returns:
        BasisLibrary with C(d+degree, degree) - 1 monomials (+1 with constant)
    """
    if degree < 1:
        raise ConfigError(f"polynomial library degree must be >= 1, got {degree}")
    return build_library(d, degree, include_constant, **kwargs)


def polynomial_library_size(d: int, n: int) -> int:
    return comb(d + n, n) - 1


def bsi_library_size(d: int, n: int) -> int:
    """Search-space size when g is learned directly at one degree lower, with a constant"""
    if d < 1 or n < 1:
        raise ConfigError(f"d and n must be >= 1, got d={d}, n={n}")
    return d * comb(d + n - 1, n - 1)


def _check_coeffs(lib: BasisLibrary, coeffs) -> None:
    size = coeffs.shape[0] if hasattr(coeffs, "shape") and len(coeffs.shape) else len(coeffs)
    if size != lib.n_params:
        raise DimensionError(f"library expects {lib.n_params} parameters, got {size}")


def _library_input(lib: BasisLibrary, x):
    if lib.components is not None:
        return x[..., list(lib.components)]
    return x


def eval_library(lib: BasisLibrary, coeffs, x, t=0.0):
    """
    Linear combination of library terms

    Args:
        lib: Library
        coeffs: Flat parameter vector (numpy or tape variable)
        x: States (..., d)
        t: Time, scalar or broadcastable to x[..., 0]

    Returns:
        Values with shape x.shape[:-1]
    """
    coeffs = ops.asarray(coeffs)
    _check_coeffs(lib, coeffs)
    x = ops.asarray(x)
    z = _library_input(lib, x)
    if z.shape[-1] != lib.dimension:
        raise DimensionError(f"library over {lib.dimension} variables got state of size {z.shape[-1]}")
    value = None
    if lib.n_monomials:
        value = ops.matmul(ops.monomials(z, lib.exponents), coeffs[: lib.n_monomials])
    for i, term in enumerate(lib.trig_terms):
        amplitude = coeffs[lib.n_monomials + 2 * i]
        frequency = coeffs[lib.n_monomials + 2 * i + 1]
        wave = ops.sin(frequency * t) if term.trig_shape == "sin" else ops.cos(frequency * t)
        contribution = amplitude * wave
        value = contribution if value is None else value + contribution
    if value is None:
        return np.zeros(z.shape[:-1])
    if value.shape != z.shape[:-1]:
        value = value + np.zeros(z.shape[:-1])
    return value


def eval_library_gradient(lib: BasisLibrary, coeffs, x, t=0.0):
    """
    Analytic gradient of eval_library with respect to the library variables

    Trigonometric terms are t-only and contribute nothing.

    Returns:
        Array (..., d)
    """
    coeffs = ops.asarray(coeffs)
    _check_coeffs(lib, coeffs)
    x = ops.asarray(x)
    z = _library_input(lib, x)
    if z.shape[-1] != lib.dimension:
        raise DimensionError(f"library over {lib.dimension} variables got state of size {z.shape[-1]}")
    columns = []
    for k in range(lib.dimension):
        rows = np.nonzero(lib.exponents[:, k])[0] if lib.n_monomials else np.array([], dtype=int)
        if rows.size == 0:
            columns.append(np.zeros(z.shape[:-1]))
            continue
        reduced = lib.exponents[rows].copy()
        reduced[:, k] -= 1
        weights = coeffs[rows] * lib.exponents[rows, k].astype(float)
        columns.append(ops.matmul(ops.monomials(z, reduced), weights))
    return ops.stack(columns, axis=-1)


def _format_number(value: float) -> str:
    return format(float(value), ".4g")


def term_to_string(term: Term, coeff, variable_names: Sequence[str] = ()) -> str:
    """
    Render a term with its coefficient

    Args:
        term: Library term
        coeff: Scalar coefficient for monomials, (amplitude, frequency) for trig terms
        variable_names: Names of the library variables

    Returns:
        e.g. "0.5·x1^2" or "2·sin(0.5·t)"
    """
    if term.kind == TRIG:
        amplitude, frequency = coeff
        return f"{_format_number(amplitude)}·{term.trig_shape}({_format_number(frequency)}·t)"
    names = list(variable_names) or [f"x{i + 1}" for i in range(len(term.exponents))]
    factors = []
    for name, power in zip(names, term.exponents):
        if power == 1:
            factors.append(name)
        elif power > 1:
            factors.append(f"{name}^{power}")
    if not factors:
        return _format_number(coeff)
    return f"{_format_number(coeff)}·{'·'.join(factors)}"


def term_label(term: Term, variable_names: Sequence[str] = ()) -> str:
    """Coefficient-free label of a term, e.g. "q1^2·q2", "1", "sin(w·t)" """
    if term.kind == TRIG:
        return f"{term.trig_shape}(w·t)"
    names = list(variable_names) or [f"x{i + 1}" for i in range(len(term.exponents))]
    factors = [name if p == 1 else f"{name}^{p}" for name, p in zip(names, term.exponents) if p > 0]
    return "·".join(factors) if factors else "1"
