import cmath
import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from haarlab.grid import Cube, GridSpec
from haarlab.haar import (
    HaarCoefficients,
    SampledFunction,
    WaveletIndex,
    analyze,
    branch_count,
    constant,
    difference,
    expectation,
    haar_function,
    product_index,
    synthesize,
    wavelet_indices,
)

F = Fraction


def brute_inner(f, g):
    """Independent inner product straight from the definition."""
    m = float(f.grid.leaf_measure)
    return sum(np.conj(a) * b for a, b in zip(f.flat, g.flat)) * m


def random_function(g, seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=g.leaf_count) + 1j * rng.normal(size=g.leaf_count)
    return SampledFunction(g, vals)


def test_haar_d2_values():
    g = GridSpec(n=1, d=2, L=1)
    h = haar_function(WaveletIndex(g.root(), 1))
    assert np.allclose(h.flat, [-1.0, 1.0])


def test_haar_d3_values():
    g = GridSpec(n=1, d=3, L=1)
    h = haar_function(WaveletIndex(g.root(), 1))
    w = cmath.exp(2j * cmath.pi / 3)
    scale = 1.0  # the root cell has unit measure
    assert np.allclose(h.flat, [w, w**2, 1.0])


@pytest.mark.parametrize("d,L", [(2, 4), (3, 3), (4, 3)])
def test_orthonormality(d, L):
    g = GridSpec(n=1, d=d, L=L)
    idxs = wavelet_indices(g)
    vecs = [haar_function(w) for w in idxs]
    for i, hi in enumerate(vecs):
        for j in range(i, len(vecs)):
            ip = brute_inner(hi, vecs[j])
            want = 1.0 if i == j else 0.0
            assert abs(ip - want) <= 1e-12


def test_orthonormality_tensor_n2():
    g = GridSpec(n=2, d=2, L=2)
    idxs = wavelet_indices(g)
    vecs = [haar_function(w) for w in idxs]
    for i, hi in enumerate(vecs):
        for j in range(i, len(vecs)):
            ip = brute_inner(hi, vecs[j])
            want = 1.0 if i == j else 0.0
            assert abs(ip - want) <= 1e-12


def test_wavelets_mean_zero_unit_norm():
    g = GridSpec(n=1, d=3, L=3)
    for w in wavelet_indices(g):
        h = haar_function(w)
        mean = np.sum(h.flat) * float(g.leaf_measure)
        assert abs(mean) <= 1e-12
        assert abs(h.norm2() - 1.0) <= 1e-12


def test_analyze_indicator_example():
    g = GridSpec(n=1, d=2, L=3)
    vals = np.zeros(8, dtype=complex)
    vals[:4] = 1.0  # indicator of [0, 1/2)
    f = SampledFunction(g, vals)
    c = analyze(f)
    assert abs(c.averages[(0,)] - 0.5) <= 1e-12
    assert abs(c.get(0, (0,), 1) - (-0.5)) <= 1e-12
    finer = {k: v for k, v in c.coeffs.items() if k[0] >= 1}
    assert all(abs(v) <= 1e-13 for v in finer.values())


def test_analyze_constant():
    g = GridSpec(n=1, d=3, L=3)
    c = analyze(constant(g, 2.5))
    assert all(abs(v) <= 1e-13 for v in c.coeffs.values())
    assert abs(c.averages[(0,)] - 2.5) <= 1e-13


def test_analyze_of_wavelet_is_delta():
    g = GridSpec(n=1, d=3, L=3)
    w = WaveletIndex(Cube(g, 1, (2,)), 2)
    c = analyze(haar_function(w))
    assert abs(c.get(1, (2,), 2) - 1.0) <= 1e-12
    others = {k: v for k, v in c.coeffs.items() if k != (1, (2,), 2)}
    assert all(abs(v) <= 1e-12 for v in others.values())


@pytest.mark.parametrize("d,L,n", [(2, 5, 1), (3, 3, 1), (2, 2, 2)])
def test_roundtrip_random(d, L, n):
    g = GridSpec(n=n, d=d, L=L)
    for seed in range(5):
        f = random_function(g, seed)
        f2 = synthesize(analyze(f))
        scale = np.max(np.abs(f.flat))
        assert np.max(np.abs(f.flat - f2.flat)) <= 1e-12 * max(scale, 1.0)


def test_synthesize_linearity():
    g = GridSpec(n=1, d=2, L=2)
    w = WaveletIndex(Cube(g, 1, (0,)), 1)
    c = HaarCoefficients(g, {(1, (0,), 1): 2 + 1j}, {(0,): 0.0})
    f = synthesize(c)
    assert np.allclose(f.flat, (2 + 1j) * haar_function(w).flat)


def test_parseval():
    g = GridSpec(n=1, d=3, L=4)
    f = random_function(g, 7)
    c = analyze(f)
    total = sum(abs(v) ** 2 for v in c.coeffs.values())
    total += sum(float(g.cell_measure(0)) * abs(v) ** 2 for v in c.averages.values())
    assert abs(total - brute_inner(f, f).real) <= 1e-12 * total


def test_expectation_examples():
    g = GridSpec(n=1, d=2, L=2)
    f = SampledFunction(g, [1.0, 0.0, 0.0, 0.0])  # indicator of [0, 1/4)
    e1 = expectation(f, 1)
    assert np.allclose(e1.flat, [0.5, 0.5, 0.0, 0.0])
    assert np.allclose(expectation(f, g.L).flat, f.flat)
    h = haar_function(WaveletIndex(g.root(), 1))
    assert np.max(np.abs(expectation(h, 0).flat)) <= 1e-13


def test_expectation_idempotent_selfadjoint():
    g = GridSpec(n=1, d=3, L=3)
    f = random_function(g, 1)
    v = random_function(g, 2)
    e = expectation(f, 1)
    assert np.max(np.abs(expectation(e, 1).flat - e.flat)) <= 1e-13
    lhs = brute_inner(v, expectation(f, 2))
    rhs = brute_inner(expectation(v, 2), f)
    assert abs(lhs - rhs) <= 1e-12


def test_difference_telescoping():
    g = GridSpec(n=1, d=2, L=5)
    f = random_function(g, 3)
    acc = expectation(f, 0)
    for k in range(1, g.L + 1):
        acc = acc + difference(f, k)
    assert np.max(np.abs(acc.flat - f.flat)) <= 1e-12


def test_difference_of_wavelet_is_itself():
    g = GridSpec(n=1, d=3, L=3)
    w = WaveletIndex(Cube(g, 1, (1,)), 1)
    h = haar_function(w)
    dk = difference(h, 2)  # wavelet on a level-1 cube contributes to slice 2
    assert np.max(np.abs(dk.flat - h.flat)) <= 1e-12
    assert np.max(np.abs(difference(h, 1).flat)) <= 1e-13


def test_product_index_table():
    assert product_index(1, 1, 3)[0] == 2
    assert product_index(1, 2, 3)[0] == 3  # the constant branch
    assert product_index(1, 1, 2)[0] == 2
    assert product_index(2, 2, 3)[0] == 1
    _, scale = product_index(1, 1, 2, measure=0.25)
    assert scale == 2.0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_product_formula_pointwise(d):
    g = GridSpec(n=1, d=d, L=2)
    cube = Cube(g, 1, (1,))
    measure = float(cube.measure)
    for i in range(1, d):
        for j in range(1, d):
            ibar, scale = product_index(i, j, d, measure=measure)
            lhs = haar_function(WaveletIndex(cube, i)).flat * haar_function(
                WaveletIndex(cube, j)
            ).flat
            rhs = scale * haar_function(WaveletIndex(cube, ibar)).flat
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 / measure


def test_expectation_spectral_characterization():
    # E_k equals top-average projection plus wavelet projections below level k
    g = GridSpec(n=1, d=2, L=4)
    f = random_function(g, 9)
    c = analyze(f)
    for k in range(0, g.L + 1):
        partial = HaarCoefficients(
            g,
            {key: v for key, v in c.coeffs.items() if key[0] < k},
            c.averages,
        )
        assert np.max(np.abs(synthesize(partial).flat - expectation(f, k).flat)) <= 1e-12


def test_analyze_on_shifted_grid_view():
    g0 = GridSpec(n=1, d=2, L=3)
    gs = g0.with_sigma(g0.leaf_side * 2)
    f = random_function(g0, 11)
    c = analyze(f, gs)
    f2 = synthesize(c)
    assert np.max(np.abs(f.flat - f2.flat)) <= 1e-12 * np.max(np.abs(f.flat))


def test_csv_roundtrip(tmp_path):
    g = GridSpec(n=1, d=2, L=3)
    f = random_function(g, 4)
    p = tmp_path / "f.csv"
    f.save_csv(p)
    f2 = SampledFunction.load_csv(g, p)
    assert np.allclose(f.flat, f2.flat)
    c = analyze(f)
    pc = tmp_path / "c.csv"
    c.save_csv(pc)
    c2 = HaarCoefficients.load_csv(g, pc)
    assert np.max(np.abs(synthesize(c2).flat - f.flat)) <= 1e-12


@given(st.integers(min_value=0, max_value=10**6))
def test_roundtrip_property(seed):
    g = GridSpec(n=1, d=2, L=4)
    f = random_function(g, seed)
    f2 = synthesize(analyze(f))
    assert np.max(np.abs(f.flat - f2.flat)) <= 1e-11
