"""Cartesian power-flow model: case parsing, admittance, quadratic forms.

Bus voltages are stacked as a real vector u of length 2*N_bus with
(u[2k], u[2k+1]) = (Re V_k, Im V_k) for 0-based bus k.  Every balance
equation is a quadratic form u^T O_a u = f_a except the slack-angle row,
which is the linear constraint u[1] = 0 (slack angle fixed at zero).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

STRUCTURAL_ZERO = 1e-14
_DENSE_SVD_LIMIT = 2048


class BusKind(enum.Enum):
    SLACK = "slack"
    PV = "pv"
    PQ = "pq"


class RowKind(enum.Enum):
    VMAG_SLACK = "vmag_slack"
    THETA_SLACK = "theta_slack"
    P_INJ = "p_inj"
    VMAG = "vmag"
    Q_INJ = "q_inj"


class CaseError(ValueError):
    """Raised for malformed or physically inconsistent case data."""


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    v_set: float = 0.0
    theta_set: float = 0.0
    p_gen: float = 0.0
    p_load: float = 0.0
    q_load: float = 0.0


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    r: float
    x: float
    b_sh: float = 0.0


@dataclass
class GridCase:
    """A parsed grid: buses ordered slack, PV, PQ and renumbered 1..N."""

    buses: list[Bus]
    branches: list[Branch]
    index_map: dict[int, int]  # original id -> 1-based position after reordering

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_gen(self) -> int:
        return sum(b.kind in (BusKind.SLACK, BusKind.PV) for b in self.buses)


@dataclass
class PowerFlowProblem:
    """Quadratic forms O_a and constants f_a, one row per equation.

    forms[a] is a symmetric CSR matrix for quadratic rows and None for the
    slack-angle row (linear in u).  row_bus[a] is the 0-based bus the row
    balances.
    """

    n_bus: int
    forms: list[sp.csr_matrix | None]
    rhs: np.ndarray
    row_kind: list[RowKind]
    row_bus: list[int]

    @property
    def dim(self) -> int:
        return 2 * self.n_bus


def flat_start(n_bus: int) -> np.ndarray:
    """All voltages at 1 per-unit, zero angle: u = (1,0,1,0,...)."""
    u = np.zeros(2 * n_bus)
    u[0::2] = 1.0
    return u


def parse_case(data: bytes | str) -> GridCase:
    """Parse a case file (JSON) into a validated, reordered GridCase."""
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CaseError(f"malformed case JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise CaseError("case JSON must be an object")
    for key in ("buses", "branches"):
        if key not in raw:
            raise CaseError(f"case is missing the {key!r} key")

    buses = []
    seen_ids = set()
    for entry in raw["buses"]:
        bid = entry.get("id")
        if not isinstance(bid, int):
            raise CaseError(f"bus id must be an integer, got {bid!r}")
        if bid in seen_ids:
            raise CaseError(f"duplicate bus id {bid}")
        seen_ids.add(bid)
        kind_raw = entry.get("kind")
        try:
            kind = BusKind(kind_raw)
        except ValueError:
            raise CaseError(f"bus {bid}: unknown kind {kind_raw!r}") from None
        if kind is BusKind.SLACK:
            v_set = entry.get("v_set")
            theta = entry.get("theta_set", 0.0)
            if v_set is None or not np.isfinite(v_set) or v_set <= 0:
                raise CaseError(f"slack bus {bid} needs v_set > 0")
            if theta != 0.0:
                raise CaseError(f"slack bus {bid}: nonzero theta_set is not supported")
            buses.append(Bus(bid, kind, v_set=float(v_set), theta_set=0.0))
        elif kind is BusKind.PV:
            v_set = entry.get("v_set")
            p_gen = entry.get("p_gen")
            if v_set is None or not np.isfinite(v_set) or v_set <= 0:
                raise CaseError(f"pv bus {bid} needs v_set > 0")
            if p_gen is None or not np.isfinite(p_gen):
                raise CaseError(f"pv bus {bid} needs a finite p_gen")
            buses.append(Bus(bid, kind, v_set=float(v_set), p_gen=float(p_gen)))
        else:
            p_load = entry.get("p_load")
            q_load = entry.get("q_load")
            if p_load is None or q_load is None or not np.isfinite(p_load) or not np.isfinite(q_load):
                raise CaseError(f"pq bus {bid} needs finite p_load and q_load")
            buses.append(Bus(bid, kind, p_load=float(p_load), q_load=float(q_load)))

    slack_count = sum(b.kind is BusKind.SLACK for b in buses)
    if slack_count == 0:
        raise CaseError("case has no slack bus")
    if slack_count > 1:
        raise CaseError(f"case has {slack_count} slack buses, expected exactly one")

    branches = []
    for entry in raw["branches"]:
        f, t = entry.get("from"), entry.get("to")
        if f not in seen_ids or t not in seen_ids:
            raise CaseError(f"branch {f}-{t} references an unknown bus")
        if f == t:
            raise CaseError(f"branch endpoints coincide at bus {f}")
        r, x = float(entry.get("r", 0.0)), float(entry.get("x", 0.0))
        if r == 0.0 and x == 0.0:
            raise CaseError(f"branch {f}-{t} has zero impedance")
        branches.append(Branch(f, t, r, x, float(entry.get("b_sh", 0.0))))

    # connectivity over the branch graph
    if len(buses) > 1:
        adj: dict[int, set[int]] = {b.id: set() for b in buses}
        for br in branches:
            adj[br.from_bus].add(br.to_bus)
            adj[br.to_bus].add(br.from_bus)
        start = buses[0].id
        seen = {start}
        stack = [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != len(buses):
            missing = sorted(seen_ids - seen)
            raise CaseError(f"grid is disconnected; unreachable buses {missing}")

    order = {BusKind.SLACK: 0, BusKind.PV: 1, BusKind.PQ: 2}
    reordered = sorted(buses, key=lambda b: (order[b.kind], b.id))
    index_map = {b.id: pos + 1 for pos, b in enumerate(reordered)}
    renumbered = [
        Bus(pos + 1, b.kind, b.v_set, b.theta_set, b.p_gen, b.p_load, b.q_load)
        for pos, b in enumerate(reordered)
    ]
    rebranched = [
        Branch(index_map[br.from_bus], index_map[br.to_bus], br.r, br.x, br.b_sh)
        for br in branches
    ]
    return GridCase(renumbered, rebranched, index_map)


def build_admittance(case: GridCase) -> sp.csr_matrix:
    """Nodal admittance matrix from the pi-model branch data.

    Parallel branches merge by admittance addition; each branch contributes
    half of its total shunt susceptance at either end.
    """
    n = case.n_bus
    y = sp.lil_matrix((n, n), dtype=complex)
    for br in case.branches:
        if br.r == 0.0 and br.x == 0.0:
            raise CaseError(f"branch {br.from_bus}-{br.to_bus} has zero impedance")
        ys = 1.0 / complex(br.r, br.x)
        f, t = br.from_bus - 1, br.to_bus - 1
        y[f, f] += ys + 0.5j * br.b_sh
        y[t, t] += ys + 0.5j * br.b_sh
        y[f, t] -= ys
        y[t, f] -= ys
    return y.tocsr()


def _symmetrize_drop(rows, cols, vals, dim) -> sp.csr_matrix:
    m = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    m = (m + m.T) * 0.5
    m.data[np.abs(m.data) < STRUCTURAL_ZERO] = 0.0
    m.eliminate_zeros()
    return m


def build_quadratic_forms(case: GridCase) -> PowerFlowProblem:
    """Assemble the per-row quadratic forms and right-hand constants.

    Active/reactive injections at bus k come from S_k = V_k * conj(I_k)
    with I = Y V written in real coordinates and symmetrized so that
    u^T M u is exact and the residual gradient is 2 M u.
    """
    y = build_admittance(case).tocoo()
    n = case.n_bus
    dim = 2 * n
    # per-bus lists of (neighbor, G, B) including the self entry
    entries: list[list[tuple[int, float, float]]] = [[] for _ in range(n)]
    for k, l, v in zip(y.row, y.col, y.data):
        entries[k].append((l, v.real, v.imag))

    forms: list[sp.csr_matrix | None] = []
    rhs = np.zeros(dim)
    row_kind: list[RowKind] = []
    row_bus: list[int] = []

    def p_form(k: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for l, g, b in entries[k]:
            rows += [2 * k, 2 * k, 2 * k + 1, 2 * k + 1]
            cols += [2 * l, 2 * l + 1, 2 * l, 2 * l + 1]
            vals += [g, -b, b, g]
        return _symmetrize_drop(rows, cols, vals, dim)

    def q_form(k: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for l, g, b in entries[k]:
            rows += [2 * k + 1, 2 * k + 1, 2 * k, 2 * k]
            cols += [2 * l, 2 * l + 1, 2 * l + 1, 2 * l]
            vals += [g, -b, -g, -b]
        return _symmetrize_drop(rows, cols, vals, dim)

    def v_form(k: int) -> sp.csr_matrix:
        return sp.coo_matrix(([1.0, 1.0], ([2 * k, 2 * k + 1], [2 * k, 2 * k + 1])), shape=(dim, dim)).tocsr()

    for k, bus in enumerate(case.buses):
        if bus.kind is BusKind.SLACK:
            forms.append(v_form(k))
            rhs[2 * k] = bus.v_set**2
            row_kind.append(RowKind.VMAG_SLACK)
            row_bus.append(k)
            forms.append(None)
            rhs[2 * k + 1] = 0.0
            row_kind.append(RowKind.THETA_SLACK)
            row_bus.append(k)
        elif bus.kind is BusKind.PV:
            forms.append(p_form(k))
            rhs[2 * k] = bus.p_gen
            row_kind.append(RowKind.P_INJ)
            row_bus.append(k)
            forms.append(v_form(k))
            rhs[2 * k + 1] = bus.v_set**2
            row_kind.append(RowKind.VMAG)
            row_bus.append(k)
        else:
            forms.append(p_form(k))
            rhs[2 * k] = -bus.p_load
            row_kind.append(RowKind.P_INJ)
            row_bus.append(k)
            forms.append(q_form(k))
            rhs[2 * k + 1] = -bus.q_load
            row_kind.append(RowKind.Q_INJ)
            row_bus.append(k)

    return PowerFlowProblem(n, forms, rhs, row_kind, row_bus)


def residual(problem: PowerFlowProblem, u: np.ndarray) -> np.ndarray:
    """F_a(u) = u^T O_a u - f_a; the slack-angle row returns u[1]."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != problem.dim:
        raise ValueError(f"state has length {u.size}, expected {problem.dim}")
    out = np.empty(problem.dim)
    for a, form in enumerate(problem.forms):
        if form is None:
            out[a] = u[1]
        else:
            out[a] = float(u @ (form @ u)) - problem.rhs[a]
    return out


def jacobian(problem: PowerFlowProblem, u: np.ndarray) -> sp.csr_matrix:
    """Row a is 2*(O_a u)^T; the slack-angle row is the constant unit row."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != problem.dim:
        raise ValueError(f"state has length {u.size}, expected {problem.dim}")
    rows = []
    for form in problem.forms:
        if form is None:
            row = np.zeros(problem.dim)
            row[1] = 1.0
            rows.append(row)
        else:
            rows.append(2.0 * (form @ u))
    j = sp.csr_matrix(np.vstack(rows))
    j.eliminate_zeros()
    return j


def sparsity(j: sp.spmatrix) -> int:
    """Max nonzero count over rows and columns (strict nonzeros)."""
    csr = j.tocsr().copy()
    csr.eliminate_zeros()
    row_counts = np.diff(csr.indptr)
    col_counts = np.diff(csr.tocsc().indptr)
    if row_counts.size == 0:
        return 0
    return int(max(row_counts.max(), col_counts.max()))


def condition_number(j) -> float:
    """sigma_max / sigma_min via dense SVD; +inf below 1e-300."""
    dense = j.toarray() if sp.issparse(j) else np.asarray(j, dtype=float)
    if dense.shape[0] != dense.shape[1]:
        raise ValueError("matrix must be square")
    if dense.shape[0] > _DENSE_SVD_LIMIT:
        raise ValueError(f"dimension {dense.shape[0]} exceeds the dense-SVD limit {_DENSE_SVD_LIMIT}")
    sigma = np.linalg.svd(dense, compute_uv=False)
    if sigma[-1] < 1e-300:
        return float("inf")
    return float(sigma[0] / sigma[-1])
