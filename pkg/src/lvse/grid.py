"""Synthetic MV-LV reference network and AC power flow.

Load convention: injections are *consumption-positive* complex powers in pu
(positive P and Q draw power from the network).  The slack bus is held at
exactly 1.0 pu, angle zero.  Networks are radial trees rooted at the slack;
the solver is a backward-forward sweep with a per-bus complex-power mismatch
stopping rule.
"""

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from . import params as P
from .errors import DimensionMismatch, NonConvergent


class BusKind(str, Enum):
    SLACK = "slack"
    MV_AGGREGATE = "mv_aggregate"
    LV_NODE = "lv_node"


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    monitored: bool = False


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    impedance: complex


@dataclass(frozen=True)
class NetworkModel:
    """Immutable radial network; validated on construction."""

    buses: tuple
    lines: tuple
    base_voltage: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate bus ids")
        slacks = [b for b in self.buses if b.kind is BusKind.SLACK]
        if len(slacks) != 1:
            raise ValueError(f"expected exactly one slack bus, got {len(slacks)}")
        for b in self.buses:
            if b.monitored and b.kind is not BusKind.LV_NODE:
                raise ValueError(f"monitored bus {b.id} is not an lv_node")
        if len(self.lines) != len(self.buses) - 1:
            raise ValueError("network is not radial: |lines| != |buses| - 1")
        for ln in self.lines:
            if ln.impedance.real <= 0:
                raise ValueError(f"line {ln.from_bus}-{ln.to_bus} needs positive resistance")
        # connectivity (with the radial line count this also proves a tree)
        pos = {b.id: i for i, b in enumerate(self.buses)}
        adj = {i: [] for i in range(len(self.buses))}
        for ln in self.lines:
            if ln.from_bus not in pos or ln.to_bus not in pos:
                raise ValueError("line references unknown bus id")
            adj[pos[ln.from_bus]].append(pos[ln.to_bus])
            adj[pos[ln.to_bus]].append(pos[ln.from_bus])
        seen = {pos[slacks[0].id]}
        stack = [pos[slacks[0].id]]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        if len(seen) != len(self.buses):
            raise ValueError("network is not connected")

    @property
    def slack(self):
        return next(b for b in self.buses if b.kind is BusKind.SLACK)

    def monitored_ids(self):
        return [b.id for b in self.buses if b.monitored]

    def bus_index(self):
        """Map bus id -> position in the buses tuple."""
        return {b.id: i for i, b in enumerate(self.buses)}


@dataclass(frozen=True)
class PowerFlowSolution:
    voltages: np.ndarray       # complex, aligned with net.buses
    iterations: int
    max_mismatch: float


@dataclass(frozen=True)
class PowerFlowSeries:
    voltages: np.ndarray       # (T, B) complex
    iterations: np.ndarray     # (T,)
    max_mismatch: np.ndarray   # (T,)
    converged: np.ndarray      # (T,) bool


# reference-network bus ids used by measurement extraction and scenarios
SLACK_ID = 0
MV_BUS_ID = 1
ADJACENT_IDS = (2, 3, 4, 5, 6)
SUBS_BUS_ID = 7
JUNCTION_IDS = (8, 9, 10)
LEAF_IDS = (11, 12, 13, 14, 15, 16)
LOAD_BUS_IDS = ADJACENT_IDS + LEAF_IDS


def build_reference_network():
    """Deterministic synthetic stand-in for the study feeder.

    One primary substation: HV side is the slack, the 10 kV busbar sits
    behind the transformer impedance so adjacent-substation load couples
    weakly into the SubS feeder.  Five secondary substations are aggregate
    PQ buses; the sixth (SubS) is expanded into a radial LV feeder with
    three trunk junctions and six monitored leaf nodes on side branches.
    """
    z = lambda rx: complex(*rx)
    buses = [Bus(SLACK_ID, BusKind.SLACK)]
    buses.append(Bus(MV_BUS_ID, BusKind.MV_AGGREGATE))
    buses += [Bus(i, BusKind.MV_AGGREGATE) for i in ADJACENT_IDS]
    buses.append(Bus(SUBS_BUS_ID, BusKind.LV_NODE))
    buses += [Bus(i, BusKind.LV_NODE) for i in JUNCTION_IDS]
    buses += [Bus(i, BusKind.LV_NODE, monitored=True) for i in LEAF_IDS]

    lines = [Line(SLACK_ID, MV_BUS_ID, z(P.Z_PRIMARY_TX))]
    lines += [Line(MV_BUS_ID, i, z(P.Z_MV_FEEDER)) for i in ADJACENT_IDS]
    lines.append(Line(MV_BUS_ID, SUBS_BUS_ID, z(P.Z_SUBS_TX)))
    lines += [
        Line(SUBS_BUS_ID, 8, z(P.Z_LV_TRUNK)),
        Line(8, 9, z(P.Z_LV_TRUNK)),
        Line(9, 10, z(P.Z_LV_TRUNK)),
        Line(8, 11, z(P.Z_LV_BRANCH)),
        Line(8, 12, z(P.Z_LV_BRANCH)),
        Line(9, 13, z(P.Z_LV_BRANCH)),
        Line(9, 14, z(P.Z_LV_BRANCH)),
        Line(10, 15, z(P.Z_LV_BRANCH)),
        Line(10, 16, z(P.Z_LV_BRANCH)),
    ]
    return NetworkModel(buses=tuple(buses), lines=tuple(lines))


def _traversal(net):
    """Parent pointers, depth-ascending order and per-bus branch impedance."""
    pos = net.bus_index()
    nb = len(net.buses)
    adj = {i: [] for i in range(nb)}
    for ln in net.lines:
        f, t = pos[ln.from_bus], pos[ln.to_bus]
        adj[f].append((t, ln.impedance))
        adj[t].append((f, ln.impedance))
    root = pos[net.slack.id]
    parent = np.full(nb, -1)
    zbr = np.zeros(nb, complex)
    order = []
    queue = [root]
    visited = {root}
    while queue:
        cur = queue.pop(0)
        order.append(cur)
        for child, zc in sorted(adj[cur]):
            if child not in visited:
                visited.add(child)
                parent[child] = cur
                zbr[child] = zc
                queue.append(child)
    return root, parent, order[1:], zbr


def ybus(net):
    """Dense bus admittance matrix (series elements only, no shunts)."""
    pos = net.bus_index()
    nb = len(net.buses)
    y = np.zeros((nb, nb), complex)
    for ln in net.lines:
        f, t = pos[ln.from_bus], pos[ln.to_bus]
        ya = 1.0 / ln.impedance
        y[f, f] += ya
        y[t, t] += ya
        y[f, t] -= ya
        y[t, f] -= ya
    return y


def solve_power_flow_series(net, injections, tol=1e-8, max_iter=100):
    """Backward-forward sweep on every row of a (T, B) injection array.

    Each timestep iterates independently: a column is frozen the moment its
    own per-bus complex-power mismatch drops below ``tol``, so results are
    identical to solving every snapshot on its own.
    """
    s = np.asarray(injections, dtype=complex)
    if s.ndim != 2 or s.shape[1] != len(net.buses):
        raise DimensionMismatch(
            f"injections must be (T, {len(net.buses)}), got {s.shape}"
        )
    root, parent, order, zbr = _traversal(net)
    y = ybus(net)
    nonslack = [i for i in range(len(net.buses)) if i != root]

    s = s.copy()
    s[:, root] = 0.0
    t_total = s.shape[0]
    v = np.ones_like(s)
    iterations = np.zeros(t_total, dtype=int)
    mismatch = np.full(t_total, np.inf)
    converged = np.zeros(t_total, dtype=bool)

    active = np.arange(t_total)
    for it in range(1, max_iter + 1):
        sa, va = s[active], v[active]
        with np.errstate(all="ignore"):
            iacc = np.conj(sa / va)
            iacc[:, root] = 0.0
            for b in reversed(order):
                iacc[:, parent[b]] += iacc[:, b]
            for b in order:
                va[:, b] = va[:, parent[b]] - zbr[b] * iacc[:, b]
            resid = sa + va * np.conj(va @ y.T)
        mm = np.abs(resid[:, nonslack]).max(axis=1)
        v[active] = va

        finite = np.isfinite(va).all(axis=1) & np.isfinite(mm)
        done = finite & (mm < tol)
        failed = ~finite
        iterations[active[done]] = it
        mismatch[active[done]] = mm[done]
        converged[active[done]] = True
        iterations[active[failed]] = it
        mismatch[active[failed]] = np.inf
        keep = ~(done | failed)
        mismatch[active[keep]] = mm[keep]
        active = active[keep]
        if active.size == 0:
            break
    iterations[active] = max_iter

    return PowerFlowSeries(v, iterations, mismatch, converged)


def solve_power_flow(net, injections, tol=1e-8, max_iter=100):
    """Solve a single snapshot; raises :class:`NonConvergent` on failure."""
    s = np.asarray(injections, dtype=complex)
    if s.ndim != 1:
        raise DimensionMismatch("single-snapshot injections must be a 1-D vector")
    res = solve_power_flow_series(net, s[None, :], tol=tol, max_iter=max_iter)
    if not res.converged[0]:
        raise NonConvergent(res.iterations[0], res.max_mismatch[0])
    return PowerFlowSolution(
        voltages=res.voltages[0],
        iterations=int(res.iterations[0]),
        max_mismatch=float(res.max_mismatch[0]),
    )


def ground_truth_series(net, injection_series, tol=1e-8, max_iter=100):
    """Monitored-bus voltage magnitudes for every timestep, pu.

    Propagates :class:`NonConvergent` with the index of the first
    unsolvable timestep.
    """
    res = solve_power_flow_series(net, injection_series, tol=tol, max_iter=max_iter)
    if not res.converged.all():
        first = int(np.flatnonzero(~res.converged)[0])
        raise NonConvergent(res.iterations[first], res.max_mismatch[first], timestep=first)
    pos = net.bus_index()
    cols = [pos[i] for i in net.monitored_ids()]
    return np.abs(res.voltages[:, cols])


def simulate_states(net, injection_series, index=None, tol=1e-8, max_iter=100):
    """Full ground-truth state table for the reference network.

    Returns a DataFrame with one column per monitored bus (``v<id>``,
    voltage magnitude in pu) plus the two real-time measurement channels:
    primary-substation transformer flow (``subp_p``/``subp_q``, consumption-
    positive pu) and the SubS feeder receiving-end flow and busbar voltage
    (``subs_p``/``subs_q``/``subs_v``).
    """
    res = solve_power_flow_series(net, injection_series, tol=tol, max_iter=max_iter)
    if not res.converged.all():
        first = int(np.flatnonzero(~res.converged)[0])
        raise NonConvergent(res.iterations[first], res.max_mismatch[first], timestep=first)
    pos = net.bus_index()
    v = res.voltages

    data = {}
    for bid in net.monitored_ids():
        data[f"v{bid}"] = np.abs(v[:, pos[bid]])

    root = pos[net.slack.id]
    i_slack = np.zeros(v.shape[0], dtype=complex)
    for ln in net.lines:
        f, t = pos[ln.from_bus], pos[ln.to_bus]
        if f == root:
            i_slack += (v[:, f] - v[:, t]) / ln.impedance
        elif t == root:
            i_slack += (v[:, t] - v[:, f]) / ln.impedance
    s_slack = v[:, root] * np.conj(i_slack)
    data["subp_p"] = s_slack.real
    data["subp_q"] = s_slack.imag

    subs = pos[SUBS_BUS_ID]
    feed = next(
        ln for ln in net.lines
        if SUBS_BUS_ID in (ln.from_bus, ln.to_bus) and MV_BUS_ID in (ln.from_bus, ln.to_bus)
    )
    up = pos[feed.from_bus] if feed.to_bus == SUBS_BUS_ID else pos[feed.to_bus]
    i_feed = (v[:, up] - v[:, subs]) / feed.impedance
    s_feed = v[:, subs] * np.conj(i_feed)
    data["subs_p"] = s_feed.real
    data["subs_q"] = s_feed.imag
    data["subs_v"] = np.abs(v[:, subs])

    return pd.DataFrame(data, index=index)


def network_to_json(net):
    doc = {
        "base_voltage": net.base_voltage,
        "buses": [
            {"id": b.id, "kind": b.kind.value, "monitored": b.monitored}
            for b in net.buses
        ],
        "lines": [
            {
                "from_bus": ln.from_bus,
                "to_bus": ln.to_bus,
                "r_pu": ln.impedance.real,
                "x_pu": ln.impedance.imag,
            }
            for ln in net.lines
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def network_from_json(text):
    doc = json.loads(text)
    buses = tuple(
        Bus(b["id"], BusKind(b["kind"]), b["monitored"]) for b in doc["buses"]
    )
    lines = tuple(
        Line(ln["from_bus"], ln["to_bus"], complex(ln["r_pu"], ln["x_pu"]))
        for ln in doc["lines"]
    )
    return NetworkModel(buses=buses, lines=lines, base_voltage=doc["base_voltage"])
