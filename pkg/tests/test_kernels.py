"""Cross-checks between the numba fast path and the pure-numpy fallback.

Both are imported directly, bypassing the QPFLOW_BACKEND dispatch, so the
suite exercises the two implementations regardless of the active backend.
"""

import numpy as np
import pytest

from qpflow import _kernels
from qpflow._kernels import (
    _ketbra_estimates_nb,
    _ketbra_estimates_np,
    _pauli_coefficients_nb,
    _pauli_coefficients_np,
    _pauli_estimates_nb,
    _pauli_estimates_np,
    _pauli_exp_apply_nb,
    _pauli_exp_apply_np,
    _sample_snapshots_nb,
    _sample_snapshots_np,
)

pairs_available = _kernels.USING_NUMBA

skip_without_numba = pytest.mark.skipif(
    not pairs_available, reason="numba backend disabled or unavailable"
)


def random_amps(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return np.ascontiguousarray(v / np.linalg.norm(v))


@skip_without_numba
class TestBackendsAgree:
    def test_pauli_exp_apply(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            amps = random_amps(rng, n)
            flip = int(rng.integers(0, 1 << n))
            sign = int(rng.integers(0, 1 << n))
            fac = complex(rng.normal(), rng.normal())
            cos_t = float(rng.normal())
            out_nb = np.empty_like(amps)
            out_np = np.empty_like(amps)
            _pauli_exp_apply_nb(amps, np.int64(flip), np.int64(sign), cos_t, fac, out_nb)
            _pauli_exp_apply_np(amps, np.int64(flip), np.int64(sign), cos_t, fac, out_np)
            # numpy's vectorized complex multiply may contract with FMA,
            # shifting the last bit relative to numba's scalar code
            assert np.max(np.abs(out_nb - out_np)) < 4e-16

    def test_pauli_coefficients(self):
        rng = np.random.default_rng(1)
        for n in (1, 2, 3, 4):
            a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
            a = np.ascontiguousarray(a + a.conj().T)
            c_nb = np.empty(4**n)
            c_np = np.empty(4**n)
            _pauli_coefficients_nb(a, n, c_nb)
            _pauli_coefficients_np(a, n, c_np)
            assert np.allclose(c_nb, c_np, atol=1e-14)

    def test_sample_snapshots(self):
        rng = np.random.default_rng(2)
        for n in (1, 3, 5):
            amps = random_amps(rng, n)
            count = 500
            bases = rng.integers(0, 3, size=(count, n)).astype(np.uint8)
            unif = rng.random(count)
            out_nb = np.empty(count, dtype=np.int64)
            out_np = np.empty(count, dtype=np.int64)
            _sample_snapshots_nb(amps, n, bases, unif, out_nb)
            _sample_snapshots_np(amps, n, bases, unif, out_np)
            assert np.array_equal(out_nb, out_np)

    def test_pauli_estimates(self):
        rng = np.random.default_rng(3)
        n = 4
        count = 400
        bases = rng.integers(0, 3, size=(count, n)).astype(np.uint8)
        outcomes = rng.integers(0, 1 << n, size=count).astype(np.int64)
        letters = rng.integers(0, 4, size=n).astype(np.uint8)
        out_nb = np.empty(count)
        out_np = np.empty(count)
        _pauli_estimates_nb(bases, outcomes, letters, n, out_nb)
        _pauli_estimates_np(bases, outcomes, letters, n, out_np)
        assert np.array_equal(out_nb, out_np)

    def test_ketbra_estimates(self):
        rng = np.random.default_rng(4)
        n = 3
        count = 400
        bases = rng.integers(0, 3, size=(count, n)).astype(np.uint8)
        outcomes = rng.integers(0, 1 << n, size=count).astype(np.int64)
        table = _kernels._KETBRA_TABLE
        for _ in range(5):
            i, j = rng.integers(0, 1 << n, size=2)
            out_nb = np.empty(count, dtype=np.complex128)
            out_np = np.empty(count, dtype=np.complex128)
            _ketbra_estimates_nb(bases, outcomes, n, int(i), int(j), table, out_nb)
            _ketbra_estimates_np(bases, outcomes, n, int(i), int(j), table, out_np)
            assert np.array_equal(out_nb, out_np)


class TestKernelSemantics:
    def test_coefficients_match_trace_formula(self):
        rng = np.random.default_rng(5)
        n = 2
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = a + a.conj().T
        coeffs = _kernels.pauli_coefficients(a, n)
        from qpflow.qsim import PauliString

        letters = "IXYZ"
        for p in range(16):
            word = letters[(p >> 2) & 3] + letters[p & 3]
            want = np.trace(PauliString(n, word).dense() @ a).real / 4
            assert coeffs[p] == pytest.approx(want, abs=1e-12)

    def test_ketbra_diagonal_is_probability(self):
        rng = np.random.default_rng(6)
        amps = random_amps(rng, 2)
        bases = rng.integers(0, 3, size=(200_000, 2)).astype(np.uint8)
        unif = rng.random(200_000)
        outcomes = _kernels.sample_snapshots(amps, 2, bases, unif)
        est = _kernels.ketbra_estimates(bases, outcomes, 2, 0, 0).real
        p0 = abs(amps[0]) ** 2
        assert est.mean() == pytest.approx(p0, abs=0.01)
