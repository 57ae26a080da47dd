"""Decision-boundary covers of dense classifiers as semi-algebraic sets.

Two constructions:

* polynomial activation: exact symbolic composition of the layer maps into
  per-class logit polynomials, the equality/inequality cover pieces they
  induce, and the degree witness check;
* ReLU activation: explicit affine parameterization of a boundary piece by
  solving the class-tie system on the last layer and back-substituting
  layer by layer, valid on the region where every pre-activation is
  nonnegative (there ReLU is the identity, which is exactly the positivity
  constraint set).

Batch norm in inference mode is an affine map and is folded into the layer
affines, so both constructions agree with the network's own forward pass.

All operations are pure; solving or sampling for different class/index
pairs may run in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg

from .mlp import Network, forward

__all__ = [
    "MultiPoly",
    "CoverDescriptor",
    "LayerSolve",
    "AffineSolution",
    "BoundaryPoint",
    "SamplingResult",
    "DegreeCheck",
    "CompositionCapError",
    "RankDeficiencyError",
    "compose_logit_polynomials",
    "poly_cover",
    "cover_descriptor",
    "degree_bound_check",
    "solve_relu_boundary",
    "sample_boundary",
    "verify_ambiguity",
    "cover_report",
]

RANK_TOLERANCE = 1e-8
POSITIVITY_TOLERANCE = 1e-9


class CompositionCapError(ValueError):
    """Symbolic composition would exceed the configured size caps."""

    def __init__(self, message: str, monomial_count: int):
        super().__init__(message)
        self.monomial_count = monomial_count


class RankDeficiencyError(ValueError):
    """A pivot block is numerically singular; the construction assumes full
    row rank of every weight matrix."""

    def __init__(self, message: str, layer: int):
        super().__init__(message)
        self.layer = layer


# ---------------------------------------------------------------------------
# sparse multivariate polynomials
# ---------------------------------------------------------------------------


class MultiPoly:
    """Sparse polynomial: exponent tuple -> float coefficient.

    Exponent bookkeeping is exact; coefficients are doubles.  Zero
    coefficients are never stored.
    """

    __slots__ = ("n_vars", "terms")

    def __init__(self, n_vars: int, terms: Optional[dict[tuple[int, ...], float]] = None):
        self.n_vars = n_vars
        self.terms = {}
        if terms:
            for exp, coeff in terms.items():
                if coeff != 0.0:
                    self.terms[tuple(exp)] = float(coeff)

    @classmethod
    def zero(cls, n_vars: int) -> "MultiPoly":
        return cls(n_vars)

    @classmethod
    def constant(cls, n_vars: int, value: float) -> "MultiPoly":
        return cls(n_vars, {(0,) * n_vars: value})

    @classmethod
    def variable(cls, n_vars: int, index: int) -> "MultiPoly":
        exp = [0] * n_vars
        exp[index] = 1
        return cls(n_vars, {tuple(exp): 1.0})

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial reports 0."""
        return max((sum(e) for e in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = MultiPoly.constant(self.n_vars, float(other))
        out = dict(self.terms)
        for exp, coeff in other.terms.items():
            new = out.get(exp, 0.0) + coeff
            if new == 0.0:
                out.pop(exp, None)
            else:
                out[exp] = new
        return MultiPoly(self.n_vars, out)

    def __sub__(self, other):
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            if other == 0.0:
                return MultiPoly.zero(self.n_vars)
            return MultiPoly(self.n_vars, {e: c * float(other) for e, c in self.terms.items()})
        out: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                new = out.get(exp, 0.0) + c1 * c2
                if new == 0.0:
                    out.pop(exp, None)
                else:
                    out[exp] = new
        return MultiPoly(self.n_vars, out)

    __rmul__ = __mul__

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at rows of ``points`` ((m, n_vars) -> (m,))."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        out = np.zeros(len(pts))
        for exp, coeff in self.terms.items():
            mono = np.ones(len(pts))
            for v, e in enumerate(exp):
                if e:
                    mono *= pts[:, v] ** e
            out += coeff * mono
        return out

    def __repr__(self):
        return f"MultiPoly({self.n_vars} vars, {len(self.terms)} terms, deg {self.degree})"


def _poly_of_activation(coeffs: Sequence[float], p: MultiPoly) -> MultiPoly:
    """Horner evaluation of the activation polynomial at a MultiPoly."""
    result = MultiPoly.constant(p.n_vars, float(coeffs[-1]))
    for c in reversed(coeffs[:-1]):
        result = result * p + float(c)
    return result


def _block_affines(net: Network):
    """Per hidden block: the raw affine (w, b) feeding the activation and
    the inference batch-norm affine (d, e) applied after it, identity when
    the block has no batch norm.  The block map is x -> d * act(w x + b) + e.
    """
    out = []
    for block in net.hidden:
        w, b = block.dense.weight, block.dense.bias
        if block.norm is not None:
            d = block.norm.gamma / np.sqrt(block.norm.running_var + block.norm.eps)
            e = block.norm.beta - d * block.norm.running_mean
        else:
            d = np.ones(w.shape[0])
            e = np.zeros(w.shape[0])
        out.append((w, b, d, e))
    return out


def compose_logit_polynomials(
    net: Network,
    from_layer: int = 0,
    width_cap: int = 3,
    depth_cap: int = 4,
    monomial_cap: int = 200_000,
) -> list[MultiPoly]:
    """Exact symbolic logits of a polynomial-activation network as
    polynomials in the layer-``from_layer`` coordinates.

    Guarded against monomial explosion: widths above ``width_cap``, more
    than ``depth_cap`` affine maps, or more than ``monomial_cap`` stored
    monomials raise CompositionCapError naming the monomial count.
    """
    if net.activation.kind != "poly":
        raise ValueError("symbolic composition requires a polynomial activation")
    widths = net.widths
    if not 0 <= from_layer <= net.depth - 1:
        raise ValueError(f"from_layer must be in 0..{net.depth - 1}")
    span = widths[from_layer:]
    if max(span[:-1]) > width_cap:
        raise CompositionCapError(
            f"widths {span} exceed the cap {width_cap}", monomial_count=0
        )
    if len(span) - 1 > depth_cap:
        raise CompositionCapError(
            f"{len(span) - 1} affine maps exceed the depth cap {depth_cap}", monomial_count=0
        )

    n_vars = widths[from_layer]
    polys = [MultiPoly.variable(n_vars, i) for i in range(n_vars)]
    coeffs = net.activation.coeffs

    def affine(ps: list[MultiPoly], w: np.ndarray, b: np.ndarray) -> list[MultiPoly]:
        out = []
        for row in range(w.shape[0]):
            acc = MultiPoly.constant(n_vars, float(b[row]))
            for col in range(w.shape[1]):
                if w[row, col] != 0.0:
                    acc = acc + ps[col] * float(w[row, col])
            out.append(acc)
        total = sum(len(p) for p in out)
        if total > monomial_cap:
            raise CompositionCapError(
                f"composition grew to {total} monomials (cap {monomial_cap})",
                monomial_count=total,
            )
        return out

    for w, b, d, e in _block_affines(net)[from_layer:]:
        polys = affine(polys, w, b)
        polys = [_poly_of_activation(coeffs, p) for p in polys]
        polys = [p * float(dv) + float(ev) for p, dv, ev in zip(polys, d, e)]
    return affine(polys, net.output.weight, net.output.bias)


# ---------------------------------------------------------------------------
# covers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverDescriptor:
    """One boundary piece of class j: logit ties with the indices in
    ``alphas`` (equalities) and dominates every other class (inequalities).
    Equality plus inequality counts always total n-1."""

    class_j: int
    alphas: tuple[int, ...]
    equalities: tuple[MultiPoly, ...]
    inequalities: tuple[MultiPoly, ...]


def cover_descriptor(logits: Sequence[MultiPoly], class_j: int, alphas: Iterable[int]) -> CoverDescriptor:
    alphas = tuple(sorted(set(int(a) for a in alphas)))
    n = len(logits)
    if class_j in alphas or any(not 0 <= a < n for a in alphas) or not alphas:
        raise ValueError("alphas must be a nonempty set of class indices distinct from class_j")
    eqs = tuple(logits[class_j] - logits[a] for a in alphas)
    others = [q for q in range(n) if q != class_j and q not in alphas]
    ineqs = tuple(logits[class_j] - logits[q] for q in others)
    return CoverDescriptor(class_j=class_j, alphas=alphas, equalities=eqs, inequalities=ineqs)


def poly_cover(logits: Sequence[MultiPoly], class_j: int) -> list[CoverDescriptor]:
    """The n-1 top-level cover pieces of the class-j boundary, one per
    rival class index."""
    n = len(logits)
    if n < 2:
        raise ValueError("need at least two classes")
    return [cover_descriptor(logits, class_j, (p,)) for p in range(n) if p != class_j]


@dataclass(frozen=True)
class DegreeCheck:
    ok: bool
    max_degree: int
    bound: int
    last_layer_flag: bool


def degree_bound_check(logits: Sequence[MultiPoly], r: int, depth: int, layer: int) -> DegreeCheck:
    """Compare the composed logit degrees against r * (depth - layer - 1).

    On the last layer the formula reads 0 while the affine logits have
    degree 1; that case is flagged instead of treated as a failure of the
    composition.
    """
    max_degree = max((p.degree for p in logits), default=0)
    bound = r * (depth - layer - 1)
    flagged = layer == depth - 1
    return DegreeCheck(ok=max_degree <= bound, max_degree=max_degree, bound=bound, last_layer_flag=flagged)


# ---------------------------------------------------------------------------
# ReLU boundary solve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LayerSolve:
    """Affine expression X^layer = particular + basis @ u over the full
    free vector, with the pivot columns that were eliminated."""

    layer: int
    pivot_cols: tuple[int, ...]
    particular: np.ndarray
    basis: np.ndarray


@dataclass(frozen=True)
class AffineSolution:
    class_j: int
    alphas: tuple[int, ...]
    layer: int
    layers: tuple[LayerSolve, ...]  # ordered from layer l-1 down to ``layer``
    positivity_matrix: np.ndarray
    positivity_offset: np.ndarray
    residual_matrix: np.ndarray
    residual_offset: np.ndarray

    @property
    def n_free(self) -> int:
        return self.layers[0].basis.shape[1]


@dataclass(frozen=True)
class BoundaryPoint:
    layer: int
    coords: np.ndarray
    class_j: int
    alphas: tuple[int, ...]


@dataclass(frozen=True)
class SamplingResult:
    points: tuple[BoundaryPoint, ...]
    attempts: int
    requested: int

    @property
    def feasible(self) -> bool:
        return len(self.points) > 0


def _pivot_columns(mat: np.ndarray, layer: int) -> tuple[np.ndarray, np.ndarray]:
    """Pivot/free column split by column-pivoted elimination; the pivot
    block must be comfortably invertible."""
    rows, cols = mat.shape
    if rows > cols:
        raise RankDeficiencyError(
            f"system at layer {layer} is overdetermined ({rows} equations, {cols} unknowns)",
            layer=layer,
        )
    _, _, perm = scipy.linalg.qr(mat, pivoting=True)
    pivots = np.sort(perm[:rows])
    block = mat[:, pivots]
    smallest_sv = np.linalg.svd(block, compute_uv=False)[-1] if rows else 0.0
    if rows and smallest_sv < RANK_TOLERANCE:
        raise RankDeficiencyError(
            f"pivot block at layer {layer} is rank deficient "
            f"(smallest singular value {smallest_sv:.3e} < {RANK_TOLERANCE})",
            layer=layer,
        )
    free = np.array([c for c in range(cols) if c not in set(pivots)], dtype=int)
    return pivots, free


def _solve_affine_onto(
    mat: np.ndarray,
    rhs_part: np.ndarray,
    rhs_basis: np.ndarray,
    layer: int,
) -> tuple[tuple[int, ...], np.ndarray, np.ndarray, int]:
    """Solve mat @ x = rhs_part + rhs_basis @ u for x, introducing the
    non-pivot coordinates of x as new free variables appended to u.

    Returns (pivot_cols, particular, basis, n_new_free) with
    x = particular + basis @ (u, new_free).
    """
    rows, cols = mat.shape
    old_free = rhs_basis.shape[1]
    pivots, free = _pivot_columns(mat, layer)
    inv = np.linalg.inv(mat[:, pivots])
    n_new = len(free)
    particular = np.zeros(cols)
    basis = np.zeros((cols, old_free + n_new))
    particular[pivots] = inv @ rhs_part
    basis[pivots, :old_free] = inv @ rhs_basis
    if n_new:
        basis[pivots, old_free:] = -inv @ mat[:, free]
        basis[free, old_free:] = np.eye(n_new)
    return tuple(int(p) for p in pivots), particular, basis, n_new


def solve_relu_boundary(
    net: Network,
    class_j: int,
    alphas: Iterable[int],
    layer: int,
) -> AffineSolution:
    """Affine parameterization of the boundary piece where the class-j
    logit ties with the logits indexed by ``alphas``, traced back to
    ``layer``.

    The tie system on the last hidden layer uses the output weight-row and
    bias differences; each earlier layer is recovered by inverting the
    pivot block of its (batch-norm folded) affine map.  Positivity rows
    constrain every traversed pre-activation (equivalently, each layer
    output for batch-norm-free networks) to the region where ReLU acts as
    the identity.
    """
    if net.activation.kind != "relu":
        raise ValueError("boundary solve requires a ReLU network")
    alphas = tuple(sorted(set(int(a) for a in alphas)))
    n = net.n_classes
    if class_j in alphas or not alphas or any(not 0 <= a < n for a in alphas):
        raise ValueError("alphas must be a nonempty set of class indices distinct from class_j")
    depth = net.depth
    if not 1 <= layer <= depth - 1:
        raise ValueError(f"layer must be in 1..{depth - 1}")

    blocks = _block_affines(net)
    w_out, b_out = net.output.weight, net.output.bias

    tie_mat = w_out[class_j] - w_out[list(alphas)]
    tie_off = b_out[class_j] - b_out[list(alphas)]

    pivots, particular, basis, _ = _solve_affine_onto(
        tie_mat, -tie_off, np.zeros((len(alphas), 0)), layer=depth - 1
    )
    solves = [LayerSolve(layer=depth - 1, pivot_cols=pivots, particular=particular, basis=basis)]

    for k in range(depth - 2, layer - 1, -1):
        w, b, d, e = blocks[k]
        # on the identity branch of ReLU the block map is affine:
        # x -> d * (w x + b) + e
        a_k = d[:, None] * w
        c_k = d * b + e
        target = solves[-1]
        pivots, particular, basis, n_new = _solve_affine_onto(
            a_k, target.particular - c_k, target.basis, layer=k
        )
        if n_new:
            solves = [
                LayerSolve(
                    layer=s.layer,
                    pivot_cols=s.pivot_cols,
                    particular=s.particular,
                    basis=np.hstack([s.basis, np.zeros((s.basis.shape[0], n_new))]),
                )
                for s in solves
            ]
        solves.append(LayerSolve(layer=k, pivot_cols=pivots, particular=particular, basis=basis))

    n_free = solves[0].basis.shape[1]
    by_layer = {s.layer: s for s in solves}

    pos_rows, pos_offs = [], []
    has_norm = any(block.norm is not None for block in net.hidden)
    for k in range(layer, depth):
        expr = by_layer[k]
        if has_norm:
            # batch norm can shift layer outputs negative; the ReLU identity
            # regime is the nonnegativity of each pre-activation instead
            if k < depth - 1:
                w, b, _, _ = blocks[k]
                pos_rows.append(w @ expr.basis)
                pos_offs.append(w @ expr.particular + b)
        else:
            pos_rows.append(expr.basis)
            pos_offs.append(expr.particular)
    positivity_matrix = np.vstack(pos_rows) if pos_rows else np.zeros((0, n_free))
    positivity_offset = np.concatenate(pos_offs) if pos_offs else np.zeros(0)

    last = by_layer[depth - 1]
    others = [q for q in range(n) if q != class_j and q not in alphas]
    res_rows, res_offs = [], []
    for q in others:
        row = w_out[class_j] - w_out[q]
        off = b_out[class_j] - b_out[q]
        res_rows.append(row @ last.basis)
        res_offs.append(row @ last.particular + off)
    residual_matrix = np.vstack(res_rows) if res_rows else np.zeros((0, n_free))
    residual_offset = np.asarray(res_offs) if res_offs else np.zeros(0)

    return AffineSolution(
        class_j=class_j,
        alphas=alphas,
        layer=layer,
        layers=tuple(solves),
        positivity_matrix=positivity_matrix,
        positivity_offset=positivity_offset,
        residual_matrix=residual_matrix,
        residual_offset=residual_offset,
    )


def sample_boundary(
    sol: AffineSolution,
    count: int,
    box: float = 1.0,
    seed: int = 0,
    max_attempts: Optional[int] = None,
) -> SamplingResult:
    """Rejection-sample boundary points: free variables uniform in
    [0, box], kept when every positivity row and residual inequality is
    satisfied (tolerance 1e-9).

    Finding nothing within the attempt budget is an infeasibility report,
    not an error; the region may genuinely be empty.
    """
    if max_attempts is None:
        max_attempts = max(400 * count, 4000)
    rng = np.random.default_rng(seed)
    base = sol.layers[-1]
    points: list[BoundaryPoint] = []
    attempts = 0
    batch = 256
    while attempts < max_attempts and len(points) < count:
        m = min(batch, max_attempts - attempts)
        attempts += m
        u = rng.uniform(0.0, box, size=(m, sol.n_free))
        ok = np.ones(m, dtype=bool)
        if sol.positivity_matrix.shape[0]:
            vals = u @ sol.positivity_matrix.T + sol.positivity_offset
            ok &= np.all(vals >= -POSITIVITY_TOLERANCE, axis=1)
        if sol.residual_matrix.shape[0]:
            vals = u @ sol.residual_matrix.T + sol.residual_offset
            ok &= np.all(vals >= -POSITIVITY_TOLERANCE, axis=1)
        for row in u[ok]:
            coords = base.particular + base.basis @ row
            points.append(
                BoundaryPoint(layer=sol.layer, coords=coords, class_j=sol.class_j, alphas=sol.alphas)
            )
            if len(points) == count:
                break
    return SamplingResult(points=tuple(points), attempts=attempts, requested=count)


def verify_ambiguity(net: Network, point: BoundaryPoint, tol: float = 1e-6) -> tuple[bool, float]:
    """Forward the point from its layer and check the logit ties.

    Passes when |logit_j - logit_a| <= tol * scale for every tied index
    and logit_j >= logit_q - tol * scale for every other class, with
    scale the largest |logit|.  Returns (ok, worst normalized margin).
    """
    _, logits, _ = forward(net, point.coords.reshape(1, -1), from_layer=point.layer)
    logits = logits[0]
    scale = max(float(np.max(np.abs(logits))), 1e-12)
    worst = 0.0
    for a in point.alphas:
        worst = max(worst, abs(float(logits[point.class_j] - logits[a])) / scale)
    for q in range(net.n_classes):
        if q == point.class_j or q in point.alphas:
            continue
        worst = max(worst, float(logits[q] - logits[point.class_j]) / scale)
    return worst <= tol, worst


def cover_report(
    net: Network,
    layer: int,
    class_j: int,
    alpha_sets: Sequence[Iterable[int]],
    count: int = 20,
    box: float = 1.0,
    seed: int = 0,
    tol: float = 1e-6,
) -> str:
    """Plain-text cover verification: per (class, alpha-set) the equation
    count, free dimension, feasibility and worst forward-check margin."""
    lines = [f"boundary cover report: class {class_j}, layer {layer}"]
    for alphas in alpha_sets:
        alphas = tuple(sorted(set(int(a) for a in alphas)))
        tag = f"alphas={','.join(map(str, alphas))}"
        try:
            sol = solve_relu_boundary(net, class_j, alphas, layer)
        except RankDeficiencyError as exc:
            lines.append(f"{tag}: rank error at layer {exc.layer}: {exc}")
            continue
        result = sample_boundary(sol, count=count, box=box, seed=seed)
        if not result.feasible:
            lines.append(
                f"{tag}: equations={len(alphas)} free_dim={sol.n_free} "
                f"region empty after {result.attempts} attempts"
            )
            continue
        margins = [verify_ambiguity(net, p, tol=tol) for p in result.points]
        n_ok = sum(1 for ok, _ in margins if ok)
        worst = max(m for _, m in margins)
        lines.append(
            f"{tag}: equations={len(alphas)} free_dim={sol.n_free} "
            f"points={len(result.points)} pass={n_ok}/{len(result.points)} "
            f"worst_margin={worst:.3e}"
        )
    return "\n".join(lines) + "\n"
