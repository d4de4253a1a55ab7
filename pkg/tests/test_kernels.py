import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from linescan import kernels
from linescan.hashing import fnv1a64


def _batch_hash(items: list[bytes]) -> list[int]:
    buf = np.frombuffer(b"".join(items), dtype=np.uint8)
    offsets = np.zeros(len(items) + 1, dtype=np.int64)
    np.cumsum([len(b) for b in items], out=offsets[1:])
    out = np.zeros(len(items), dtype=np.uint64)
    kernels.fnv1a64_batch(buf, offsets, out)
    return [int(h) for h in out]


class TestFnvBatch:
    def test_published_vectors(self):
        # Reference vectors from the FNV specification.
        got = _batch_hash([b"", b"a", b"foobar"])
        assert got == [0xCBF29CE484222325, 0xAF63DC4C8601EC8C, 0x85944171F73967E8]

    def test_agrees_with_scalar_implementation(self):
        rng = np.random.default_rng(1)
        items = [rng.bytes(int(n)) for n in rng.integers(0, 40, size=50)]
        assert _batch_hash(items) == [fnv1a64(b) for b in items]


class TestSgdEpoch:
    def test_single_example_update_matches_hand_computation(self):
        # One example, two classes, two active indices out of eight.
        indices = np.array([1, 5], dtype=np.int64)
        offsets = np.array([0, 2], dtype=np.int64)
        targets = np.array([[1.0, 0.0]])
        order = np.array([0], dtype=np.int64)
        weights = np.full((2, 8), 0.25)
        bias = np.array([0.1, -0.2])
        lr = 0.5

        z = bias + weights[:, 1] + weights[:, 5]
        p = 1.0 / (1.0 + np.exp(-z))
        g = lr * (p - targets[0])

        kernels.sgd_epoch(indices, offsets, targets, order, weights, bias, lr, 0.0)

        assert bias == pytest.approx([0.1 - g[0], -0.2 - g[1]])
        for c in range(2):
            for j in range(8):
                expected = 0.25 - g[c] if j in (1, 5) else 0.25
                assert weights[c, j] == pytest.approx(expected)

    def test_l2_shrinks_only_touched_weights(self):
        indices = np.array([2], dtype=np.int64)
        offsets = np.array([0, 1], dtype=np.int64)
        targets = np.array([[0.0]])
        order = np.array([0], dtype=np.int64)
        weights = np.full((1, 4), 1.0)
        bias = np.zeros(1)
        lr, l2 = 0.1, 0.5

        p = 1.0 / (1.0 + np.exp(-1.0))
        g = lr * p
        kernels.sgd_epoch(indices, offsets, targets, order, weights, bias, lr, l2)

        assert weights[0, 2] == pytest.approx(1.0 * (1.0 - lr * l2) - g)
        assert weights[0, 0] == 1.0
        assert weights[0, 1] == 1.0
        assert weights[0, 3] == 1.0

    def test_visits_examples_in_given_order(self):
        # Two examples sharing one index: final weight depends on order.
        indices = np.array([0, 0], dtype=np.int64)
        offsets = np.array([0, 1, 2], dtype=np.int64)
        targets = np.array([[1.0], [0.0]])

        w_ab = np.zeros((1, 1))
        b_ab = np.zeros(1)
        kernels.sgd_epoch(indices, offsets, targets, np.array([0, 1], dtype=np.int64),
                          w_ab, b_ab, 0.5, 0.0)
        w_ba = np.zeros((1, 1))
        b_ba = np.zeros(1)
        kernels.sgd_epoch(indices, offsets, targets, np.array([1, 0], dtype=np.int64),
                          w_ba, b_ba, 0.5, 0.0)
        assert w_ab[0, 0] != pytest.approx(w_ba[0, 0])


def test_predict_linear_matches_numpy():
    rng = np.random.default_rng(3)
    weights = rng.normal(size=(4, 16))
    bias = rng.normal(size=4)
    idx_lists = [rng.choice(16, size=int(n), replace=False) for n in rng.integers(0, 6, 10)]
    indices = np.concatenate([np.sort(l) for l in idx_lists]).astype(np.int64)
    offsets = np.zeros(11, dtype=np.int64)
    np.cumsum([len(l) for l in idx_lists], out=offsets[1:])
    out = np.zeros((10, 4))
    kernels.predict_linear(indices, offsets, weights, bias, out)

    for s, active in enumerate(idx_lists):
        z = bias + weights[:, np.sort(active)].sum(axis=1) if len(active) else bias
        np.testing.assert_allclose(out[s], 1.0 / (1.0 + np.exp(-z)), rtol=1e-12)


def _reference_lstm(x, wx, wh, bias, rmask):
    """Straight-line transcription of the standard gated recurrence."""
    t_len, rec = x.shape[0], wh.shape[0]
    h = np.zeros((t_len, rec))
    c = np.zeros((t_len, rec))
    h_prev = np.zeros(rec)
    c_prev = np.zeros(rec)
    sig = lambda z: 1.0 / (1.0 + np.exp(-z))
    for t in range(t_len):
        a = x[t] @ wx + (h_prev * rmask) @ wh + bias
        i, f = sig(a[:rec]), sig(a[rec : 2 * rec])
        g, o = np.tanh(a[2 * rec : 3 * rec]), sig(a[3 * rec :])
        c[t] = f * c_prev + i * g
        h[t] = o * np.tanh(c[t])
        h_prev, c_prev = h[t], c[t]
    return h, c


class TestLstm:
    def _random_case(self, seed, t_len=5, dim=4, rec=3):
        rng = np.random.default_rng(seed)
        return (
            rng.normal(size=(t_len, dim)),
            rng.normal(size=(dim, 4 * rec)) * 0.5,
            rng.normal(size=(rec, 4 * rec)) * 0.5,
            rng.normal(size=4 * rec) * 0.1,
            np.where(rng.random(rec) < 0.5, 2.0, 0.0),
        )

    def test_forward_matches_reference(self):
        for seed in range(5):
            x, wx, wh, bias, rmask = self._random_case(seed)
            t_len, rec = x.shape[0], wh.shape[0]
            h = np.zeros((t_len, rec))
            c = np.zeros((t_len, rec))
            gates = np.zeros((t_len, 4 * rec))
            kernels.lstm_forward(x, wx, wh, bias, rmask, h, c, gates)
            h_ref, c_ref = _reference_lstm(x, wx, wh, bias, rmask)
            np.testing.assert_allclose(h, h_ref, rtol=1e-12, atol=1e-14)
            np.testing.assert_allclose(c, c_ref, rtol=1e-12, atol=1e-14)

    def test_backward_matches_finite_differences(self):
        x, wx, wh, bias, rmask = self._random_case(11, t_len=4, dim=3, rec=2)
        t_len, rec = x.shape[0], wh.shape[0]
        rng = np.random.default_rng(7)
        probe = rng.normal(size=(t_len, rec))

        def loss(x_, wx_, wh_, bias_):
            h, _ = _reference_lstm(x_, wx_, wh_, bias_, rmask)
            return float((h * probe).sum())

        h = np.zeros((t_len, rec))
        c = np.zeros((t_len, rec))
        gates = np.zeros((t_len, 4 * rec))
        kernels.lstm_forward(x, wx, wh, bias, rmask, h, c, gates)
        dx = np.zeros_like(x)
        dwx = np.zeros_like(wx)
        dwh = np.zeros_like(wh)
        dbias = np.zeros_like(bias)
        kernels.lstm_backward(x, wx, wh, rmask, h, c, gates, probe, dx, dwx, dwh, dbias)

        eps = 1e-6
        for arr, grad in ((x, dx), (wx, dwx), (wh, dwh), (bias, dbias)):
            numeric = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                orig = arr[idx]
                arr[idx] = orig + eps
                up = loss(x, wx, wh, bias)
                arr[idx] = orig - eps
                down = loss(x, wx, wh, bias)
                arr[idx] = orig
                numeric[idx] = (up - down) / (2 * eps)
            np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-8)


class TestAssignment:
    def _brute_force(self, cost):
        n_rows, n_cols = cost.shape
        best, best_cols = np.inf, None
        for cols in itertools.permutations(range(n_cols), n_rows):
            total = sum(cost[r, c] for r, c in enumerate(cols))
            if total < best:
                best, best_cols = total, cols
        return best

    def test_identity_when_diagonal_is_cheapest(self):
        cost = np.full((3, 3), 5.0)
        np.fill_diagonal(cost, 1.0)
        assert list(kernels.assign_min_cost(cost)) == [0, 1, 2]

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            n_rows = int(rng.integers(1, 6))
            n_cols = int(rng.integers(n_rows, 8))
            # Dyadic grid values: all sums exact in floats, so "equals the
            # brute-force minimum" is meaningful without a tolerance.
            cost = rng.integers(0, 64, size=(n_rows, n_cols)) / 16.0
            cols = kernels.assign_min_cost(cost)
            assert sorted(set(cols.tolist())) == sorted(cols.tolist())
            total = sum(cost[r, cols[r]] for r in range(n_rows))
            assert total == self._brute_force(cost)


def test_fallback_mode_agrees_with_compiled_mode():
    """The LS_NO_NUMBA path runs the same source. Transcendentals may differ
    from the compiled build in the last ulp, so agreement is near-exact
    rather than bitwise."""
    code = (
        "import numpy as np\n"
        "from linescan import kernels\n"
        "rng = np.random.default_rng(5)\n"
        "x = rng.normal(size=(6, 3)); wx = rng.normal(size=(3, 8))\n"
        "wh = rng.normal(size=(2, 8)); bias = rng.normal(size=8)\n"
        "h = np.zeros((6, 2)); c = np.zeros((6, 2)); gates = np.zeros((6, 8))\n"
        "kernels.lstm_forward(x, wx, wh, bias, np.ones(2), h, c, gates)\n"
        "print(kernels.USING_NUMBA, repr(float(h.sum())))\n"
    )
    env = dict(os.environ, LS_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env=env, check=True).stdout.split()
    assert out[0] == "False"

    rng = np.random.default_rng(5)
    x = rng.normal(size=(6, 3))
    wx = rng.normal(size=(3, 8))
    wh = rng.normal(size=(2, 8))
    bias = rng.normal(size=8)
    h = np.zeros((6, 2))
    c = np.zeros((6, 2))
    gates = np.zeros((6, 8))
    kernels.lstm_forward(x, wx, wh, bias, np.ones(2), h, c, gates)
    np.testing.assert_allclose(h.sum(), float(out[1]), rtol=1e-12)
