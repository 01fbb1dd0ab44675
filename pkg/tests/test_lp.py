from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from causality_kit.lp import KERNEL_BACKEND, LinearProgram, solve

backends = ["numpy"] + (["cython"] if KERNEL_BACKEND == "cython" else [])


def random_lp(rng, m=6, n=12, feasible=True):
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x0 = rng.integers(0, 3, size=n).astype(float)
    b = A @ x0 if feasible else rng.integers(-5, 6, size=m).astype(float)
    c = rng.integers(0, 5, size=n).astype(float)  # c >= 0 keeps the minimum bounded
    return LinearProgram(A.tolist(), b.tolist(), c.tolist())


@pytest.mark.parametrize("backend", backends)
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), feasible=st.booleans())
def test_matches_highs(backend, seed, feasible):
    lp = random_lp(np.random.default_rng(seed), feasible=feasible)
    ref = linprog(lp.c, A_eq=lp.A, b_eq=lp.b, bounds=(0, None), method="highs")
    res = solve(lp, backend=backend)
    if ref.status == 2:
        assert res.status == "infeasible"
        return
    assert res.status == "optimal"
    assert abs(res.objective - ref.fun) < 1e-7
    x = np.asarray(res.x, dtype=float)
    assert x.min() > -1e-9
    assert np.allclose(np.asarray(lp.A) @ x, lp.b, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_exact_agrees_with_float(seed):
    lp = random_lp(np.random.default_rng(seed), m=4, n=8)
    lp_exact = LinearProgram([[Fraction(int(v)) for v in row] for row in lp.A],
                             [Fraction(int(v)) for v in lp.b], [Fraction(int(v)) for v in lp.c])
    r_float, r_exact = solve(lp), solve(lp_exact, exact=True)
    assert r_float.status == r_exact.status == "optimal"
    assert isinstance(r_exact.objective, Fraction)
    assert abs(float(r_exact.objective) - r_float.objective) < 1e-9


@pytest.mark.skipif(KERNEL_BACKEND != "cython", reason="compiled kernel not built")
@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_backends_agree(seed):
    lp = random_lp(np.random.default_rng(seed), m=8, n=20)
    a, b = solve(lp, backend="numpy"), solve(lp, backend="cython")
    assert a.status == b.status
    if a.status == "optimal":
        assert abs(a.objective - b.objective) < 1e-9


def test_infeasible_margin():
    # x1 + x2 = 1 and x1 + x2 = 2
    lp = LinearProgram([[1, 1], [1, 1]], [1, 2], [0, 0])
    for exact in (False, True):
        res = solve(lp, exact=exact)
        assert res.status == "infeasible"
        assert float(res.infeasibility) == pytest.approx(1.0)


def test_unbounded():
    lp = LinearProgram([[1, -1]], [0], [1, 0], maximize=True)
    assert solve(lp).status == "unbounded"
    assert solve(lp, exact=True).status == "unbounded"


def test_degenerate_redundant_rows():
    lp = LinearProgram([[1, 1, 0], [2, 2, 0], [0, 1, 1]], [1, 2, 1], [1, 2, 3])
    for exact in (False, True):
        res = solve(lp, exact=exact)
        assert res.status == "optimal"
        assert float(res.objective) == pytest.approx(2.0)


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve(LinearProgram([[1]], [1], [1]), backend="fortran")


def test_fallback_when_extension_missing(monkeypatch):
    import importlib
    import sys

    import causality_kit.lp as lp_pkg
    import causality_kit.lp.simplex as simplex
    monkeypatch.setitem(sys.modules, "causality_kit.lp._kernel", None)
    monkeypatch.delattr(lp_pkg, "_kernel", raising=False)
    try:
        mod = importlib.reload(simplex)
        assert mod.KERNEL_BACKEND == "numpy"
        assert mod.solve(LinearProgram([[1, 1]], [1], [1, 2])).objective == pytest.approx(1.0)
        with pytest.raises(RuntimeError):
            mod.solve(LinearProgram([[1]], [1], [1]), backend="cython")
    finally:
        monkeypatch.undo()
        importlib.reload(simplex)
