"""
Exact linear combinations of data symbols and noise samples.

Received signals y_i(t) and the cancellation outputs g_{i,m}(t) are kept as
maps from symbolic terms to complex coefficients, so powers can be computed
from the exact expression instead of from samples.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple


class TermKind(Enum):
    DATA = "x"
    NOISE = "z"


@dataclass(frozen=True)
class Term:
    """A data symbol x(slot) or a noise sample z_node(slot)."""
    kind: TermKind
    slot: int
    node: Optional[int] = None  # receiver of a noise sample, None for data

    @classmethod
    def data(cls, slot: int) -> 'Term':
        return cls(TermKind.DATA, int(slot))

    @classmethod
    def noise(cls, node: int, slot: int) -> 'Term':
        return cls(TermKind.NOISE, int(slot), int(node))

    @property
    def is_data(self) -> bool:
        return self.kind is TermKind.DATA

    def shifted(self, tau: int) -> 'Term':
        """Same symbol family, `tau` slots later."""
        return Term(self.kind, self.slot + tau, self.node)

    def sort_key(self) -> Tuple[int, int, int]:
        return (0 if self.is_data else 1, self.node or 0, self.slot)

    def __str__(self) -> str:
        if self.is_data:
            return f"x({self.slot})"
        return f"z{self.node}({self.slot})"


class PowerSplit(NamedTuple):
    """Power of the useful symbol, of the other symbols and of the noise."""
    useful: float
    interference: float
    noise: float

    @property
    def residual(self) -> float:
        return self.interference + self.noise

    @property
    def sinr(self) -> float:
        if self.residual == 0.0:
            return math.inf if self.useful > 0.0 else 0.0
        return self.useful / self.residual

    @property
    def sinr_db(self) -> float:
        sinr = self.sinr
        if sinr == 0.0:
            return -math.inf
        return 10.0 * math.log10(sinr)


class SignalExpr:
    """Immutable map Term -> complex coefficient.

    Terms that compare equal always share one entry, so several paths that
    land on the same symbol add as amplitudes. Entries whose magnitude is
    zero, or below ``prune_eps`` when it is set, are dropped.
    """

    __slots__ = ('_coeffs', 'prune_eps')

    def __init__(self, coeffs: Optional[Dict[Term, complex]] = None, prune_eps: float = 0.0):
        if prune_eps < 0:
            raise ValueError("prune_eps must be non-negative")
        self.prune_eps = prune_eps
        self._coeffs: Dict[Term, complex] = {}
        if coeffs:
            for term, coef in coeffs.items():
                self._accumulate(self._coeffs, term, complex(coef))
            self._prune(self._coeffs)

    @classmethod
    def from_terms(cls, items: Iterable[Tuple[Term, complex]], prune_eps: float = 0.0) -> 'SignalExpr':
        """Build an expression, merging repeated terms."""
        expr = cls(prune_eps=prune_eps)
        for term, coef in items:
            cls._accumulate(expr._coeffs, term, complex(coef))
        expr._prune(expr._coeffs)
        return expr

    @staticmethod
    def _accumulate(target: Dict[Term, complex], term: Term, coef: complex) -> None:
        target[term] = target.get(term, 0j) + coef

    def _prune(self, coeffs: Dict[Term, complex]) -> None:
        dead = [t for t, c in coeffs.items() if c == 0 or abs(c) < self.prune_eps]
        for term in dead:
            del coeffs[term]

    def _with(self, coeffs: Dict[Term, complex]) -> 'SignalExpr':
        expr = SignalExpr(prune_eps=self.prune_eps)
        self._prune(coeffs)
        expr._coeffs = coeffs
        return expr

    def coefficient(self, term: Term) -> complex:
        return self._coeffs.get(term, 0j)

    def terms(self) -> List[Term]:
        """Terms in a stable order: data symbols first, then noise by node and slot."""
        return sorted(self._coeffs, key=Term.sort_key)

    def items(self) -> List[Tuple[Term, complex]]:
        return [(t, self._coeffs[t]) for t in self.terms()]

    def data_terms(self) -> List[Term]:
        return [t for t in self.terms() if t.is_data]

    def noise_terms(self) -> List[Term]:
        return [t for t in self.terms() if not t.is_data]

    def add(self, other: 'SignalExpr') -> 'SignalExpr':
        coeffs = dict(self._coeffs)
        for term, coef in other._coeffs.items():
            self._accumulate(coeffs, term, coef)
        return self._with(coeffs)

    def scale(self, c: complex) -> 'SignalExpr':
        if c == 0:
            return SignalExpr(prune_eps=self.prune_eps)
        return self._with({t: coef * c for t, coef in self._coeffs.items()})

    def shifted(self, tau: int) -> 'SignalExpr':
        """Every slot index moved by `tau` (fixed-schedule time shifting)."""
        return self._with({t.shifted(tau): coef for t, coef in self._coeffs.items()})

    def is_close(self, other: 'SignalExpr', tol: float = 1e-10) -> bool:
        """Coefficient-wise comparison, relative to the larger magnitude (absolute below 1)."""
        for term in set(self._coeffs) | set(other._coeffs):
            a = self.coefficient(term)
            b = other.coefficient(term)
            if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                return False
        return True

    def to_debug_lines(self) -> List[str]:
        """Sorted `kind,indices,re,im` lines for golden comparisons."""
        lines = []
        for term in self.terms():
            coef = self._coeffs[term]
            indices = str(term.slot) if term.is_data else f"{term.node};{term.slot}"
            lines.append(f"{term.kind.value},{indices},{coef.real!r},{coef.imag!r}")
        return lines

    def __add__(self, other: 'SignalExpr') -> 'SignalExpr':
        return self.add(other)

    def __sub__(self, other: 'SignalExpr') -> 'SignalExpr':
        return self.add(other.scale(-1))

    def __neg__(self) -> 'SignalExpr':
        return self.scale(-1)

    def __mul__(self, c: complex) -> 'SignalExpr':
        return self.scale(c)

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms())

    def __contains__(self, term: Term) -> bool:
        return term in self._coeffs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalExpr):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(frozenset(self._coeffs.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{t}: {c:.6g}" for t, c in self.items())
        return f"SignalExpr({{{body}}})"


def add(a: SignalExpr, b: SignalExpr) -> SignalExpr:
    return a.add(b)


def scale(a: SignalExpr, c: complex) -> SignalExpr:
    return a.scale(c)


def power_split(e: SignalExpr, useful: Term, p_t: float, sigma2: float) -> PowerSplit:
    """Split the power of an expression into useful, interference and noise parts.

    Distinct symbols and distinct noise samples are independent, so their
    powers add. A missing useful term gives useful power 0.

    Args:
        e: Expression to evaluate
        useful: Data symbol the receiver wants to decode
        p_t: Transmit power, E[|x|^2]
        sigma2: Noise power, E[|z|^2]

    Returns:
        PowerSplit(useful, interference, noise)

    Raises:
        ValueError: If `useful` is not a data symbol
    """
    if not useful.is_data:
        raise ValueError(f"Useful term must be a data symbol, got {useful}")

    useful_power = abs(e.coefficient(useful)) ** 2 * p_t
    interference = 0.0
    noise = 0.0
    for term, coef in e.items():
        if term == useful:
            continue
        if term.is_data:
            interference += abs(coef) ** 2 * p_t
        else:
            noise += abs(coef) ** 2 * sigma2
    return PowerSplit(useful_power, interference, noise)
