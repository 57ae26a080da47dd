import numpy as np
import pytest

from bettinet import mlp
from bettinet import semialgebraic as sa


def identity_square_net():
    net = mlp.build_network([2, 2, 2], mlp.poly_activation(), seed=0, batch_norm=False)
    net.hidden[0].dense.weight[:] = np.eye(2)
    net.hidden[0].dense.bias[:] = 0.0
    net.output.weight[:] = np.eye(2)
    net.output.bias[:] = 0.0
    return net


def symmetric_relu_net():
    net = mlp.build_network([2, 2, 2], mlp.relu_activation(), seed=0, batch_norm=False)
    net.hidden[0].dense.weight[:] = np.eye(2)
    net.hidden[0].dense.bias[:] = 0.0
    net.output.weight[:] = np.array([[2.0, 1.0], [1.0, 2.0]])
    net.output.bias[:] = 0.0
    return net


def random_relu_net(seed, widths=(4, 4, 4, 3), batch_norm=False, bias_scale=0.5):
    rng = np.random.default_rng(seed)
    net = mlp.build_network(list(widths), mlp.relu_activation(), seed=seed, batch_norm=batch_norm)
    for blk in net.hidden:
        blk.dense.bias[:] = rng.normal(scale=bias_scale, size=blk.dense.bias.shape)
    net.output.bias[:] = rng.normal(scale=bias_scale, size=net.output.bias.shape)
    return net


# ---------------------------------------------------------------------------
# MultiPoly
# ---------------------------------------------------------------------------


def test_multipoly_arithmetic_and_eval():
    x = sa.MultiPoly.variable(2, 0)
    y = sa.MultiPoly.variable(2, 1)
    p = x * x + y * 2.0 + 1.0
    pts = np.array([[1.0, 2.0], [0.5, -1.0]])
    assert p.evaluate(pts) == pytest.approx([6.0, -0.75])
    assert p.degree == 2
    q = p - p
    assert len(q) == 0 and q.degree == 0


def test_multipoly_drops_zero_coefficients():
    x = sa.MultiPoly.variable(1, 0)
    p = x + (x * -1.0)
    assert p.terms == {}


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------


def test_identity_square_net_composes_to_coordinate_squares():
    qs = sa.compose_logit_polynomials(identity_square_net())
    assert qs[0].terms == {(2, 0): 1.0}
    assert qs[1].terms == {(0, 2): 1.0}


def test_composition_matches_forward_on_random_nets():
    rng = np.random.default_rng(3)
    for trial in range(20):
        widths = [int(w) for w in rng.integers(1, 4, size=rng.integers(2, 4))] + [
            int(rng.integers(2, 4))
        ]
        bn = bool(trial % 2)
        net = mlp.build_network(widths, mlp.poly_activation(), seed=trial, batch_norm=bn)
        if bn:
            for blk in net.hidden:
                blk.norm.running_mean[:] = rng.normal(scale=0.3, size=blk.norm.running_mean.shape)
                blk.norm.running_var[:] = rng.uniform(0.5, 2.0, size=blk.norm.running_var.shape)
        qs = sa.compose_logit_polynomials(net)
        pts = rng.normal(size=(100, widths[0]))
        _, logits, _ = mlp.forward(net, pts)
        sym = np.column_stack([q.evaluate(pts) for q in qs])
        scale = np.maximum(np.abs(logits).max(axis=1, keepdims=True), 1e-8)
        assert (np.abs(sym - logits) / scale).max() < 1e-8


def test_composition_caps_raise_structured_error():
    net = mlp.build_network([5, 5, 2], mlp.poly_activation(), seed=0)
    with pytest.raises(sa.CompositionCapError):
        sa.compose_logit_polynomials(net, width_cap=3)
    deep = mlp.build_network([2, 2, 2, 2, 2, 2, 2], mlp.poly_activation(), seed=0)
    with pytest.raises(sa.CompositionCapError):
        sa.compose_logit_polynomials(deep, depth_cap=4)


def test_degree_bounds_across_from_layers():
    net = mlp.build_network([2, 2, 2, 2], mlp.poly_activation(), seed=5, batch_norm=False)
    qs0 = sa.compose_logit_polynomials(net, 0)
    qs1 = sa.compose_logit_polynomials(net, 1)
    assert max(q.degree for q in qs0) == 4
    assert max(q.degree for q in qs1) == 2
    assert sa.degree_bound_check(qs0, r=2, depth=3, layer=0).ok
    assert sa.degree_bound_check(qs1, r=2, depth=3, layer=1).ok


def test_degree_bound_last_layer_is_flagged_not_failed():
    net = mlp.build_network([2, 2, 2], mlp.poly_activation(), seed=1, batch_norm=False)
    qs = sa.compose_logit_polynomials(net, from_layer=1)
    check = sa.degree_bound_check(qs, r=2, depth=2, layer=1)
    assert check.last_layer_flag
    assert check.max_degree == 1
    assert check.bound == 0
    assert not check.ok


def test_degree_bound_zero_weight_network():
    net = mlp.build_network([2, 2, 2, 2], mlp.poly_activation(), seed=2, batch_norm=False)
    for blk in net.hidden:
        blk.dense.weight[:] = 0.0
        blk.dense.bias[:] = 0.3
    qs = sa.compose_logit_polynomials(net)
    check = sa.degree_bound_check(qs, r=2, depth=3, layer=0)
    assert check.ok
    assert check.max_degree == 0


def test_three_activation_compositions_exceed_linear_degree_budget():
    # composition multiplies degrees: three squarings give degree 8, while
    # the linear-in-depth budget reads 6; the check must report the excess
    net = mlp.build_network([2, 2, 2, 2, 2], mlp.poly_activation(), seed=3, batch_norm=False)
    qs = sa.compose_logit_polynomials(net, from_layer=0)
    check = sa.degree_bound_check(qs, r=2, depth=4, layer=0)
    assert check.max_degree == 8
    assert check.bound == 6
    assert not check.ok
    assert not check.last_layer_flag


# ---------------------------------------------------------------------------
# covers
# ---------------------------------------------------------------------------


def test_poly_cover_two_classes_single_descriptor():
    qs = sa.compose_logit_polynomials(identity_square_net())
    covers = sa.poly_cover(qs, 0)
    assert len(covers) == 1
    assert len(covers[0].equalities) == 1
    assert len(covers[0].inequalities) == 0


def test_poly_cover_three_classes_counts():
    net = mlp.build_network([2, 2, 3], mlp.poly_activation(), seed=1, batch_norm=False)
    qs = sa.compose_logit_polynomials(net)
    covers = sa.poly_cover(qs, 0)
    assert len(covers) == 2
    for c in covers:
        assert len(c.equalities) == 1
        assert len(c.inequalities) == 1
        assert len(c.equalities) + len(c.inequalities) == len(qs) - 1


def test_cover_descriptor_intersection_counts():
    net = mlp.build_network([2, 2, 4], mlp.poly_activation(), seed=1, batch_norm=False)
    qs = sa.compose_logit_polynomials(net)
    c = sa.cover_descriptor(qs, 0, (1, 2))
    assert len(c.equalities) == 2
    assert len(c.inequalities) == len(qs) - 3


# ---------------------------------------------------------------------------
# ReLU boundary solve
# ---------------------------------------------------------------------------


def test_symmetric_net_solution_is_diagonal():
    net = symmetric_relu_net()
    sol = sa.solve_relu_boundary(net, 0, [1], layer=1)
    res = sa.sample_boundary(sol, 25, box=1.0, seed=2)
    assert res.feasible
    for p in res.points:
        assert abs(p.coords[0] - p.coords[1]) < 1e-9
        assert np.all(p.coords >= -1e-9)


def test_symmetric_net_point_verifies_exactly():
    net = symmetric_relu_net()
    point = sa.BoundaryPoint(layer=1, coords=np.array([1.0, 1.0]), class_j=0, alphas=(1,))
    ok, margin = sa.verify_ambiguity(net, point)
    assert ok
    assert margin == 0.0


def test_duplicate_output_rows_raise_rank_error():
    net = symmetric_relu_net()
    net.output.weight[:] = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(sa.RankDeficiencyError) as err:
        sa.solve_relu_boundary(net, 0, [1], layer=1)
    assert err.value.layer == 1


def test_solution_dimensions_follow_rank_nullity():
    rng = np.random.default_rng(4)
    for seed in range(10):
        net = random_relu_net(seed, widths=(4, 4, 4, 3))
        alphas = (int(rng.integers(1, 3)),)
        sol = sa.solve_relu_boundary(net, 0, alphas, layer=1)
        # last layer: n_{l-1} - (p+1) frees; each earlier layer adds
        # n_k - n_{k+1}
        widths = net.widths
        expected = (widths[2] - len(alphas)) + (widths[1] - widths[2])
        assert sol.n_free == expected
        for layer_solve in sol.layers:
            n_k = widths[layer_solve.layer]
            assert layer_solve.basis.shape == (n_k, sol.n_free)
            rank = np.linalg.matrix_rank(layer_solve.basis)
            assert rank == min(n_k, sol.n_free) or rank <= sol.n_free


def test_solution_satisfies_tie_equations():
    for seed in range(10):
        net = random_relu_net(seed + 50, widths=(4, 4, 3, 3))
        sol = sa.solve_relu_boundary(net, 0, [1], layer=1)
        rng = np.random.default_rng(seed)
        last = sol.layers[0]
        w, b = net.output.weight, net.output.bias
        for _ in range(5):
            u = rng.uniform(0, 1, size=sol.n_free)
            x_last = last.particular + last.basis @ u
            tie = (w[0] - w[1]) @ x_last + (b[0] - b[1])
            assert abs(tie) < 1e-9


def test_sample_boundary_unconstrained_accepts_everything():
    sol = sa.AffineSolution(
        class_j=0,
        alphas=(1,),
        layer=1,
        layers=(
            sa.LayerSolve(
                layer=1,
                pivot_cols=(0,),
                particular=np.zeros(2),
                basis=np.array([[1.0], [0.0]]),
            ),
        ),
        positivity_matrix=np.zeros((0, 1)),
        positivity_offset=np.zeros(0),
        residual_matrix=np.zeros((0, 1)),
        residual_offset=np.zeros(0),
    )
    res = sa.sample_boundary(sol, 10, box=1.0, seed=0)
    assert len(res.points) == 10
    assert res.attempts <= 256


def test_sample_boundary_empty_region_reports_infeasible():
    # constraints u >= 0 (sampling box) and -u >= 1: empty
    sol = sa.AffineSolution(
        class_j=0,
        alphas=(1,),
        layer=1,
        layers=(
            sa.LayerSolve(
                layer=1,
                pivot_cols=(0,),
                particular=np.zeros(1),
                basis=np.eye(1),
            ),
        ),
        positivity_matrix=np.array([[-1.0]]),
        positivity_offset=np.array([-1.0]),
        residual_matrix=np.zeros((0, 1)),
        residual_offset=np.zeros(0),
    )
    res = sa.sample_boundary(sol, 5, box=1.0, seed=0, max_attempts=500)
    assert not res.feasible
    assert res.attempts == 500


def test_perturbed_point_fails_verification():
    net = symmetric_relu_net()
    point = sa.BoundaryPoint(layer=1, coords=np.array([1.1, 1.0]), class_j=0, alphas=(1,))
    ok, margin = sa.verify_ambiguity(net, point, tol=1e-6)
    assert not ok
    assert margin > 1e-3


def test_random_nets_sampled_points_all_verify():
    verified = 0
    nets_with_region = 0
    seed = 0
    while nets_with_region < 15 and seed < 60:
        net = random_relu_net(seed, widths=(4, 4, 4, 3), batch_norm=bool(seed % 2))
        seed += 1
        found = False
        for j in range(3):
            for a in range(3):
                if a == j:
                    continue
                try:
                    sol = sa.solve_relu_boundary(net, j, [a], layer=1)
                except sa.RankDeficiencyError:
                    continue
                res = sa.sample_boundary(sol, 20, box=1.5, seed=seed)
                if res.feasible:
                    for p in res.points:
                        ok, margin = sa.verify_ambiguity(net, p, tol=1e-6)
                        assert ok, f"seed {seed} margin {margin}"
                        verified += 1
                    found = True
                    break
            if found:
                break
        nets_with_region += found
    assert nets_with_region == 15
    assert verified >= 15


def test_cover_report_lists_feasibility():
    net = symmetric_relu_net()
    text = sa.cover_report(net, layer=1, class_j=0, alpha_sets=[(1,)], count=5, seed=1)
    assert "equations=1" in text
    assert "pass=5/5" in text
