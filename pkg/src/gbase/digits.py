"""
Greedy Digit Codec

Encodes integers in a linear recurrence base by the greedy algorithm,
decodes digit words, tests admissibility and provides the block
decomposition that drives the H-recurrence.
"""

import bisect
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from .base import LinearRecurrenceBase
from .gbase_exceptions import CapacityError, DigitDomainError, GBaseError, IndexRangeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DigitExpansion:
    """Digits e_0..e_K, least significant first; empty for n = 0"""
    digits: Tuple[int, ...]
    base_key: Tuple[int, ...]

    def __len__(self):
        return len(self.digits)

    def __getitem__(self, k: int) -> int:
        return self.digits[k]

    def to_msf(self) -> List[int]:
        """Most-significant-first order for display"""
        return list(reversed(self.digits))

    def to_dict(self, n: Optional[int] = None) -> Dict[str, Any]:
        result: Dict[str, Any] = {"digits": self.to_msf()}
        if n is not None:
            result = {"n": str(n), **result}
        return result

    def __str__(self):
        return " ".join(str(e) for e in self.to_msf())


DigitWord = Union[DigitExpansion, Sequence[int]]


class BlockTriple(NamedTuple):
    """u = theta_{m,ell} + k G_{m-ell} + v"""
    ell: int
    k: int
    v: int


def _as_tuple(digits: DigitWord) -> Tuple[int, ...]:
    if isinstance(digits, DigitExpansion):
        return digits.digits
    return tuple(int(e) for e in digits)


def _strip_high_zeros(digits: Tuple[int, ...]) -> Tuple[int, ...]:
    end = len(digits)
    while end and digits[end - 1] == 0:
        end -= 1
    return digits[:end]


def greedy_expand(base: LinearRecurrenceBase, n: int) -> DigitExpansion:
    """
    Greedy expansion of n

    Raises:
        CapacityError: when n >= G_max_level, naming the level required
    """
    if n < 0:
        raise GBaseError("Only nonnegative integers have an expansion", f"n={n}")
    if n >= base.G[-1]:
        raise CapacityError(f"n={n} exceeds G_{base.max_level}", required_level=base.required_level(n))
    if n == 0:
        return DigitExpansion((), base.key)

    top = bisect.bisect_right(base.G, n) - 1
    digits = [0] * (top + 1)
    remainder = n
    for k in range(top, -1, -1):
        digits[k], remainder = divmod(remainder, base.G[k])
    return DigitExpansion(tuple(digits), base.key)


def decode(base: LinearRecurrenceBase, digits: DigitWord) -> int:
    """Exact sum e_k G_k"""
    word = _as_tuple(digits)
    if len(word) > base.max_level + 1:
        raise IndexRangeError(f"Digit word of length {len(word)} exceeds stored levels 0..{base.max_level}")
    return sum(e * base.G[k] for k, e in enumerate(word))


def prefix_condition_holds(base: LinearRecurrenceBase, digits: DigitWord) -> bool:
    """sum_{k<K'} e_k G_k < G_{K'} for every K' up to the word length"""
    word = _strip_high_zeros(_as_tuple(digits))
    if any(e < 0 or e > base.frak_a for e in word):
        return False
    if len(word) > base.max_level:
        raise IndexRangeError(f"Prefix test needs G_{len(word)}", f"stored up to G_{base.max_level}")
    partial = 0
    for K in range(1, len(word) + 1):
        partial += word[K - 1] * base.G[K - 1]
        if partial >= base.G[K]:
            return False
    return True


def window_condition_violations(base: LinearRecurrenceBase, digits: DigitWord) -> List[Tuple[int, int]]:
    """(k, ell) with (e_k,...,e_{k-ell+1}) >= (a_0,...,a_{ell-1}) for 1 <= ell <= d"""
    word = _as_tuple(digits)
    violations = []
    for ell in range(1, base.d + 1):
        prefix = base.a[:ell]
        for k in range(ell - 1, len(word)):
            window = tuple(word[k - i] for i in range(ell))
            if window >= prefix:
                violations.append((k, ell))
    return violations


def is_admissible(base: LinearRecurrenceBase, digits: DigitWord) -> bool:
    """
    True iff greedy re-encoding of the decoded value gives back the word

    High-order zeros are ignored. Words longer than the stored levels are
    reported as not admissible. The prefix-sum condition is computed
    alongside and must agree.
    """
    word = _strip_high_zeros(_as_tuple(digits))
    if any(e < 0 or e > base.frak_a for e in word):
        return False
    if len(word) > base.max_level:
        logger.debug(f"🔍 Word of length {len(word)} cannot be checked against levels 0..{base.max_level}")
        return False

    value = decode(base, word)
    if value >= base.G[-1]:
        recoded = False
    else:
        recoded = greedy_expand(base, value).digits == word

    prefix_ok = prefix_condition_holds(base, word)
    if prefix_ok != recoded:
        logger.error(f"❌ Admissibility oracles disagree on {list(reversed(word))}")
        raise GBaseError("Admissibility oracles disagree", f"word={list(reversed(word))}")

    if logger.isEnabledFor(logging.DEBUG):
        violations = window_condition_violations(base, word)
        if violations:
            logger.debug(f"🔍 Window condition flags {violations} on {list(reversed(word))}")
    return recoded


def theta(base: LinearRecurrenceBase, q: int, ell: int) -> int:
    """theta_{q,ell} = sum_{j<ell} a_j G_{q-j}"""
    if ell < 0 or ell > base.d:
        raise IndexRangeError(f"ell={ell} outside 0..{base.d}")
    if ell > 0 and (q - ell + 1 < 0 or q > base.max_level):
        raise IndexRangeError(f"theta_{{{q},{ell}}} needs levels {q - ell + 1}..{q}",
                              f"stored 0..{base.max_level}")
    return sum(base.a[j] * base.G[q - j] for j in range(ell))


def block_decompose(base: LinearRecurrenceBase, n_level: int, u: int) -> BlockTriple:
    """
    Unique (ell, k, v) with u = theta_{m,ell} + k G_{m-ell} + v, m = n_level + d - 1

    0 <= k < a_ell and 0 <= v < G_{m-ell}; blocks with a_ell = 0 are empty.
    """
    d = base.d
    m = n_level + d - 1
    if n_level < 0 or m + 1 > base.max_level:
        raise IndexRangeError(f"Block decomposition at level {n_level} needs G_{m + 1}",
                              f"stored up to G_{base.max_level}")
    if u < 0 or u >= base.G[m + 1]:
        raise IndexRangeError(f"u={u} outside [0, G_{m + 1})")

    offset = 0
    for ell in range(d):
        block = base.G[m - ell]
        width = base.a[ell] * block
        if u - offset < width:
            k, v = divmod(u - offset, block)
            return BlockTriple(ell, k, v)
        offset += width
    raise GBaseError("Block decomposition exhausted", f"u={u}, level={n_level}")
