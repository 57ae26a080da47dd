"""Closed-form upper bounds on per-layer Betti numbers of dense classifiers.

All arithmetic is exact over Python's arbitrary-precision integers: the
ReLU bounds grow like 3 to the sum of the hidden widths, far past any
machine word.  Empty sums are 0 and C(a, b) = 0 for b > a or b < 0, which
keeps the 2-class formulas well-defined.

Layer indexing: an architecture with widths [n_0, ..., n_l] has l affine
maps; layer i holds the inputs of affine map i (layer 0 is the data).  The
polynomial-activation bound is defined for 0 <= i <= l-1, the ReLU bound
for 1 <= i <= l-1, and the width sum in the ReLU bound runs over
q in {i, ..., l-1} (the class count n_l never participates).

Everything here is a pure function of immutable inputs and safe to
evaluate in parallel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field


__all__ = [
    "Activation",
    "ArchitectureSpec",
    "BoundReport",
    "WrongActivationError",
    "UnreachableTargetError",
    "binomial",
    "poly_layer_bound",
    "relu_layer_bound",
    "basu_bound",
    "milnor_bound",
    "mayer_vietoris_bound",
    "layer_bound_profile",
    "min_width_for",
    "log10_of_int",
]


class WrongActivationError(ValueError):
    """Bound formula applied to an architecture with the other activation."""


class UnreachableTargetError(ValueError):
    """No width up to the cap reaches the requested bound target."""

    def __init__(self, message: str, bound_at_cap: int, cap: int):
        super().__init__(message)
        self.bound_at_cap = bound_at_cap
        self.cap = cap


@dataclass(frozen=True)
class Activation:
    kind: str  # "relu" or "poly"
    degree: int = 1

    def __post_init__(self):
        if self.kind not in ("relu", "poly"):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == "poly" and self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")


@dataclass(frozen=True)
class ArchitectureSpec:
    """Dense classifier shape: widths n_0..n_l, n_l = class count."""

    widths: tuple[int, ...]
    activation: Activation

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("need at least input and output widths")
        if any(w < 1 for w in self.widths):
            raise ValueError("all widths must be >= 1")
        if self.widths[-1] < 2:
            raise ValueError("class count must be >= 2")

    @property
    def depth(self) -> int:
        """Number of affine maps l."""
        return len(self.widths) - 1

    @property
    def classes(self) -> int:
        return self.widths[-1]

    @property
    def non_increasing(self) -> bool:
        return all(self.widths[p] <= self.widths[q] for q in range(len(self.widths)) for p in range(q, len(self.widths)))


def binomial(a: int, b: int) -> int:
    """C(a, b), zero outside 0 <= b <= a."""
    if b < 0 or b > a:
        return 0
    return math.comb(a, b)


def log10_of_int(x: int) -> float:
    """log10 of a nonnegative integer of any size; -inf for zero."""
    if x < 0:
        raise ValueError("negative count")
    if x == 0:
        return float("-inf")
    s = str(x)
    head = int(s[:15])
    return (len(s) - 15) + math.log10(head) if len(s) > 15 else math.log10(x)


def _check_nonincreasing(arch: ArchitectureSpec):
    if not arch.non_increasing:
        warnings.warn(
            "bound formulas assume a non-increasing architecture; "
            f"widths {arch.widths} violate it and the value is only heuristic",
            stacklevel=3,
        )


def _poly_sum(n: int, k: int) -> int:
    """Sum of C(n-1, p+1)(3^(n-2-p) - 1), capped by the k >= n-2 branch."""
    if k < n - 2:
        return sum(binomial(n - 1, p + 1) * (3 ** (n - 2 - p) - 1) for p in range(k + 1))
    return sum(binomial(n - 1, p + 1) * (3 ** (n - 2 - p) - 1) for p in range(n - 2)) + 1


def poly_layer_bound(arch: ArchitectureSpec, k: int, layer: int) -> int:
    """Upper bound on the k-th Betti number of the layer-``layer`` class
    pre-image closure, polynomial activation of degree r.

    For layer < l-1 the combinatorial sum is multiplied by
    r(l-i-1)(2r(l-i-1)-1)^(n_i - 1); on layer l-1 the logits are affine in
    the layer variables and the factor disappears.
    """
    if arch.activation.kind != "poly":
        raise WrongActivationError("polynomial bound requires a polynomial-activation architecture")
    l = arch.depth
    if not 0 <= layer <= l - 1:
        raise ValueError(f"layer must be in 0..{l - 1}, got {layer}")
    if k < 0:
        raise ValueError("homology dimension must be >= 0")
    _check_nonincreasing(arch)
    n = arch.classes
    base = _poly_sum(n, k)
    if layer == l - 1:
        return base
    r = arch.activation.degree
    d = r * (l - layer - 1)
    n_i = arch.widths[layer]
    return base * d * (2 * d - 1) ** (n_i - 1)


def relu_layer_bound(arch: ArchitectureSpec, k: int, layer: int) -> int:
    """Upper bound on the k-th Betti number of the layer-``layer`` class
    pre-image closure, ReLU activation.

    Evaluates sum over p = 0..min(k, n-2) of
    C(n-1, p+1)(3^(S + n - 2 - p) - 1) with S the sum of the widths of
    layers ``layer``..l-1.
    """
    if arch.activation.kind != "relu":
        raise WrongActivationError("ReLU bound requires a ReLU-activation architecture")
    l = arch.depth
    if not 1 <= layer <= l - 1:
        raise ValueError(f"layer must be in 1..{l - 1}, got {layer}")
    if k < 0:
        raise ValueError("homology dimension must be >= 0")
    _check_nonincreasing(arch)
    n = arch.classes
    s = sum(arch.widths[layer:l])
    cap = min(k, n - 2)
    return sum(binomial(n - 1, p + 1) * (3 ** (s + n - 2 - p) - 1) for p in range(cap + 1))


def basu_bound(n_ineq: int, d: int, k: int) -> int:
    """Betti bound for a set cut out by n_ineq polynomial inequalities of
    degree <= d inside a degree-<= d variety in k variables:
    (3^n - 1) d (2d - 1)^(k-1)."""
    if n_ineq < 1 or d < 1 or k < 1:
        raise ValueError("need n_ineq >= 1, d >= 1, k >= 1")
    return (3 ** n_ineq - 1) * d * (2 * d - 1) ** (k - 1)


def milnor_bound(k: int, d: int) -> int:
    """Maximum total Betti number of an algebraic set defined by degree-d
    polynomials in k variables: d (2d - 1)^(k-1)."""
    if k < 1 or d < 1:
        raise ValueError("need k >= 1, d >= 1")
    return d * (2 * d - 1) ** (k - 1)


def mayer_vietoris_bound(cover_betti: dict[frozenset, list[int]], k: int) -> int:
    """Union bound from a cover's intersection Betti numbers:
    sum over i + j = k of sum over |J| = j+1 of b_i(S_J).

    ``cover_betti`` maps index subsets J (any frozenset-able iterable) to
    per-dimension Betti lists.  Subsets of a required size that are absent
    are treated as empty (0) with a warning.
    """
    if k < 0:
        raise ValueError("homology dimension must be >= 0")
    table = {frozenset(key): list(val) for key, val in cover_betti.items()}
    indices = sorted({i for key in table for i in key})
    total = 0
    warned_missing = False
    for j in range(k + 1):
        i = k - j
        size = j + 1
        for subset in _subsets_of_size(indices, size):
            bettis = table.get(subset)
            if bettis is None:
                warned_missing = True
                continue
            if i < len(bettis):
                total += int(bettis[i])
    if warned_missing:
        warnings.warn("cover table is missing some index subsets; treated as empty", stacklevel=2)
    return total


def _subsets_of_size(items: list, size: int):
    from itertools import combinations

    return (frozenset(c) for c in combinations(items, size))


@dataclass(frozen=True)
class BoundReport:
    """Per-layer bound table for one homology dimension."""

    arch: ArchitectureSpec
    k: int
    entries: dict[int, int]  # layer -> exact bound
    non_increasing_in_layer: bool = field(init=False)

    def __post_init__(self):
        layers = sorted(self.entries)
        mono = all(
            self.entries[layers[t]] >= self.entries[layers[t + 1]]
            for t in range(len(layers) - 1)
        )
        object.__setattr__(self, "non_increasing_in_layer", mono)

    def records(self) -> list[str]:
        """Machine-readable lines ``layer,k,bound_exact,bound_log10``."""
        out = []
        for layer in sorted(self.entries):
            val = self.entries[layer]
            out.append(f"{layer},{self.k},{val},{log10_of_int(val):.6g}")
        return out

    def to_text(self) -> str:
        rows = [("layer", "k", "bound", "log10")]
        for layer in sorted(self.entries):
            val = self.entries[layer]
            shown = str(val) if val < 10**40 else f"~10^{log10_of_int(val):.3f}"
            rows.append((str(layer), str(self.k), shown, f"{log10_of_int(val):.4g}"))
        widths = [max(len(r[c]) for r in rows) for c in range(4)]
        lines = ["  ".join(r[c].rjust(widths[c]) for c in range(4)) for r in rows]
        note = "non-increasing across layers" if self.non_increasing_in_layer else "NOT monotone across layers"
        lines.append(f"# {note}")
        return "\n".join(lines) + "\n"


def layer_bound_profile(arch: ArchitectureSpec, k: int) -> BoundReport:
    """Bound for every admissible layer of the architecture."""
    l = arch.depth
    if arch.activation.kind == "relu":
        entries = {i: relu_layer_bound(arch, k, i) for i in range(1, l)}
    else:
        entries = {i: poly_layer_bound(arch, k, i) for i in range(0, l)}
    return BoundReport(arch=arch, k=k, entries=entries)


def _bound_with_width(arch: ArchitectureSpec, layer: int, k: int, width: int) -> int:
    widths = list(arch.widths)
    widths[layer] = width
    probe = ArchitectureSpec(widths=tuple(widths), activation=arch.activation)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if arch.activation.kind == "relu":
            return relu_layer_bound(probe, k, layer)
        return poly_layer_bound(probe, k, layer)


def min_width_for(
    arch_template: ArchitectureSpec,
    layer: int,
    k: int,
    target: int,
    cap: int = 4096,
) -> int:
    """Smallest width at ``layer`` whose layer bound reaches ``target``.

    The bound must be monotone nondecreasing in the free width; this is
    asserted by sampling before searching.  Raises UnreachableTargetError
    (carrying the bound at the cap) if the cap is insufficient.
    """
    if target < 0:
        raise ValueError("target must be nonnegative")
    samples = [1, 2, 4, min(cap, 32), cap]
    values = [_bound_with_width(arch_template, layer, k, w) for w in samples]
    if any(values[t] > values[t + 1] for t in range(len(values) - 1)):
        raise ValueError("bound is not monotone in the free width; cannot search")
    if values[-1] < target:
        raise UnreachableTargetError(
            f"target {target} unreachable with width cap {cap}: bound at cap is {values[-1]}",
            bound_at_cap=values[-1],
            cap=cap,
        )
    lo, hi = 1, cap
    while lo < hi:
        mid = (lo + hi) // 2
        if _bound_with_width(arch_template, layer, k, mid) >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo
