"""Gradient-check suites over seeded random instances.

Each check compares an analytic gradient against an independent route (the
other recurrent algorithm, central finite differences, or an explicit
Jacobian product) and records the worst error per parameter group.

Relative error of a group is ``max|a - b| / max(max|a|, max|b|, floor)``,
i.e. measured against the group's scale so isolated near-zero components do
not amplify finite-difference round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import activation
from .lstm import init_lstm, lstm_bptt_gradients
from .nn_core import backprop_gradients, forward, init_network, squared_loss, tail_jacobian
from .rnn import SequenceBatch, bptt_gradients, init_predict, init_rnn, rtrl_gradients, total_loss

__all__ = [
    "CheckResult",
    "GradcheckReport",
    "relative_error",
    "finite_difference",
    "check_rnn",
    "check_mlp",
    "check_lstm",
    "check_elementwise",
    "run_all",
]

FD_STEP = 1e-6
SCALE_FLOOR = 1e-8


def relative_error(a, b, floor: float = SCALE_FLOOR) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), floor)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def finite_difference(loss, params: dict, h: float = FD_STEP) -> dict:
    """Central differences of ``loss(params)`` for every entry of every array (arrays are perturbed in place and restored)."""
    out = {}
    for name, P in params.items():
        g = np.empty_like(P)
        for idx in np.ndindex(P.shape):
            old = P[idx]
            P[idx] = old + h
            up = loss(params)
            P[idx] = old - h
            dn = loss(params)
            P[idx] = old
            g[idx] = (up - dn) / (2.0 * h)
        out[name] = g
    return out


@dataclass
class CheckResult:
    suite: str
    tolerance: float
    errors: dict = field(default_factory=dict)  # "route:group" -> worst error across instances

    def record(self, key: str, err: float):
        self.errors[key] = max(self.errors.get(key, 0.0), err)

    @property
    def worst(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


@dataclass
class GradcheckReport:
    results: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_text(self) -> str:
        lines = []
        for r in self.results:
            lines.append(f"[{'PASS' if r.passed else 'FAIL'}] {r.suite} tol={r.tolerance:g} worst={r.worst:.3e}")
            for k in sorted(r.errors):
                lines.append(f"    {k}: {r.errors[k]:.3e}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _rnn_instance(rng):
    n_h, n_x, n_y, L = (int(rng.integers(1, k + 1)) for k in (5, 4, 3, 8))
    act = ("tanh", "sigmoid")[int(rng.integers(2))]
    seed = int(rng.integers(2**31))
    cell = init_rnn(n_h, n_x, act, seed)
    cell = cell.replace(b=rng.normal(scale=0.5, size=n_h))
    pred = init_predict(n_y, n_h, seed + 1)
    pred = pred.replace(c=rng.normal(scale=0.5, size=n_y))
    batch = SequenceBatch(rng.normal(size=(L, n_x)), rng.normal(size=(L, n_y)), rng.normal(scale=0.5, size=n_h))
    return cell, pred, batch


def check_rnn(n_instances: int = 50, seed: int = 0, fault: bool = False) -> list:
    """RTRL vs BPTT (tol 1e-9) and BPTT vs finite differences (tol 1e-5) on vanilla RNNs."""
    rng = np.random.default_rng(seed)
    agree = CheckResult("rnn: rtrl vs bptt", 1e-9)
    fd_res = CheckResult("rnn: finite differences", 1e-5)
    for _ in range(n_instances):
        cell, pred, batch = _rnn_instance(rng)
        bp = bptt_gradients(cell, pred, batch).as_dict()
        rt = rtrl_gradients(cell, pred, batch).as_dict()
        if fault:
            bp["W"] = -bp["W"]
        params = {k: v.copy() for k, v in (cell.params() | pred.params()).items()}

        def loss(p):
            return total_loss(cell.replace(W=p["W"], U=p["U"], b=p["b"]), pred.replace(V=p["V"], c=p["c"]), batch)

        fd = finite_difference(loss, params)
        for k in bp:
            agree.record(f"{k}", float(np.max(np.abs(bp[k] - rt[k]))))
            fd_res.record(f"bptt:{k}", relative_error(bp[k], fd[k]))
            fd_res.record(f"rtrl:{k}", relative_error(rt[k], fd[k]))
    return [agree, fd_res]


def check_mlp(n_instances: int = 50, seed: int = 0, fault: bool = False) -> list:
    """Backprop vs finite differences (1e-5) and recursive errors vs explicit chain (1e-12)."""
    rng = np.random.default_rng(seed)
    fd_res = CheckResult("mlp: finite differences", 1e-5)
    chain = CheckResult("mlp: recursive errors vs explicit chain", 1e-12)
    for _ in range(n_instances):
        depth = int(rng.integers(1, 5))
        sizes = [int(s) for s in rng.integers(1, 9, size=depth + 1)]
        acts = [("tanh", "sigmoid", "identity")[int(k)] for k in rng.integers(3, size=depth)]
        net = init_network(sizes, acts, int(rng.integers(2**31)))
        params = {k: v.copy() for k, v in net.params().items()}
        params = {k: v + rng.normal(scale=0.3, size=v.shape) for k, v in params.items()}
        net = net.with_params(params)
        x = rng.normal(size=sizes[0])
        y = rng.normal(size=sizes[-1])
        states = forward(net, x)
        grads, errors = backprop_gradients(net, states, y, return_errors=True)
        if fault:
            grads[0] = type(grads[0])(-grads[0].dW, grads[0].db)

        def loss(p):
            return squared_loss(y, forward(net.with_params(p), x).output)

        fd = finite_difference(loss, params)
        top = states.output - y
        for i, g in enumerate(grads):
            fd_res.record(f"W{i}", relative_error(g.dW, fd[f"W{i}"]))
            fd_res.record(f"b{i}", relative_error(g.db, fd[f"b{i}"]))
            explicit = tail_jacobian(net, states, i).T @ top
            chain.record(f"e{i}", float(np.max(np.abs(errors[i] - explicit))))
    return [fd_res, chain]


def check_lstm(n_instances: int = 20, seed: int = 0, fault: bool = False) -> list:
    rng = np.random.default_rng(seed)
    res = CheckResult("lstm: finite differences", 1e-5)
    for _ in range(n_instances):
        n_h, n_x, n_y, L = (int(rng.integers(1, k + 1)) for k in (4, 3, 2, 5))
        s = int(rng.integers(2**31))
        cell = init_lstm(n_h, n_x, seed=s)
        cell = cell.replace(**{k: v + rng.normal(scale=0.3, size=v.shape) for k, v in cell.params().items()})
        pred = init_predict(n_y, n_h, s + 1)
        batch = SequenceBatch(rng.normal(size=(L, n_x)), rng.normal(size=(L, n_y)), rng.normal(scale=0.5, size=n_h))
        g = lstm_bptt_gradients(cell, pred, batch)
        if fault:
            g["Wf"] = -g["Wf"]
        params = {k: v.copy() for k, v in (cell.params() | pred.params()).items()}
        cell_keys = list(cell.params())

        def loss(p):
            c = cell.replace(**{k: p[k] for k in cell_keys})
            return total_loss(c, pred.replace(V=p["V"], c=p["c"]), batch)

        fd = finite_difference(loss, params)
        for k in params:
            res.record(k, relative_error(g[k], fd[k]))
    return [res]


def check_elementwise(n_triples: int = 1000, seed: int = 0) -> list:
    """Self-adjointness of D Psi(z) and the bilinear D^2 Psi(z)(v1, v2) = Psi'' * v1 * v2.

    The derivative maps are materialized as matrices by applying them to the
    standard basis, then checked against their Hadamard-product formulas.
    """
    rng = np.random.default_rng(seed)
    adj = CheckResult("elementwise: <DPsi v1, v2> = <v1, DPsi v2>", 1e-12)
    second = CheckResult("elementwise: D2Psi(v1, v2) = Psi'' * v1 * v2", 1e-12)
    kinds = ("sigmoid", "tanh", "relu", "identity")
    for t in range(n_triples):
        fn = activation(kinds[t % len(kinds)])
        n = int(rng.integers(1, 9))
        z, v1, v2 = rng.normal(size=(3, n))
        D = np.column_stack([fn.d1(z) * e for e in np.eye(n)])  # matrix of DPsi(z)
        adj.record(fn.kind, abs(float((D @ v1) @ v2) - float(v1 @ (D @ v2))))
        adj.record(f"{fn.kind}:matrix-symmetry", float(np.max(np.abs(D - D.T))))
        bilinear = sum(v1[a] * v2[b] * (fn.d2(z) * np.eye(n)[a] * np.eye(n)[b]) for a in range(n) for b in range(n))
        second.record(fn.kind, float(np.max(np.abs(bilinear - fn.d2(z) * v1 * v2))))
    return [adj, second]


def run_all(seed: int = 0, fault: bool = False) -> GradcheckReport:
    results = []
    results += check_rnn(seed=seed, fault=fault)
    results += check_mlp(seed=seed, fault=fault)
    results += check_lstm(seed=seed, fault=fault)
    results += check_elementwise(seed=seed)
    return GradcheckReport(results)
