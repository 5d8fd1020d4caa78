"""Four-layer detection: cluster rules, regional aggregation, base watchdog.

Sensors host no detection logic at all; they only produce data.  Cluster nodes
run the per-packet rules (foreign origin, TDMA slot, S-MAC sleep, route) plus
the windowed jamming vote over channel statistics.  Regional nodes watch their
member clusters (liveness and alert suppression) and forward everything
upward; the base station watches the regionals and keeps the authoritative
alert ledger.  Alerts ripple up one hop per aggregation window: cluster ->
regional rides the normal short-range channel (lost alerts are retransmitted
next window and deduplicated at the receiver), regional -> base uses the
reliable long-range channel.

The layer tag on an alert names the protocol layer whose rule fired:
phy (jamming), link (slot / sleep / foreign origin), net (route deviation),
overlay (watchdog findings about the monitoring hierarchy itself).
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable

from .mac import is_sleep_violation, is_slot_violation, slot_owner_at
from .simcore import (
    ChannelWindowStats,
    CompromiseMode,
    Engine,
    GroundTruthEvent,
    Packet,
    PacketKind,
    RadioModel,
    RunLog,
    SimTime,
    TraceEvent,
)
from .topology import HexCoord, NodeRole, Topology


class AlertRule(enum.Enum):
    JAMMING_SUSPECTED = "JammingSuspected"
    SLOT_VIOLATION = "SlotViolation"
    SLEEP_VIOLATION = "SleepViolation"
    FOREIGN_ORIGIN = "ForeignOrigin"
    ROUTE_DEVIATION = "RouteDeviation"
    MISSED_HEARTBEAT = "MissedHeartbeat"
    SUPPRESSED_ALERTS = "SuppressedAlerts"


LAYER_OF_RULE = {
    AlertRule.JAMMING_SUSPECTED: "phy",
    AlertRule.SLOT_VIOLATION: "link",
    AlertRule.SLEEP_VIOLATION: "link",
    AlertRule.FOREIGN_ORIGIN: "link",
    AlertRule.ROUTE_DEVIATION: "net",
    AlertRule.MISSED_HEARTBEAT: "overlay",
    AlertRule.SUPPRESSED_ALERTS: "overlay",
}


def suspect_node(node_id: int) -> str:
    return f"node:{node_id}"


def suspect_cell(cell: HexCoord) -> str:
    return f"cell:{cell.q},{cell.r}"


@dataclass(frozen=True)
class DetectorThresholds:
    """Jamming vote and watchdog thresholds.

    The None defaults resolve against the radio model: idle_rssi_max becomes
    noise floor + 10 dB, carrier_sense_max becomes 3x the attack-free mean
    (which equals the carrier-sense turnaround time).
    """

    pdr_min: float = 0.6
    idle_rssi_max_dbm: float | None = None
    carrier_sense_max_us: float | None = None
    vote_k: int = 2
    heartbeat_timeout_windows: int = 2
    match_window_count: int = 3

    def __post_init__(self) -> None:
        if not (0.0 <= self.pdr_min <= 1.0):
            raise ValueError("pdr_min must be in [0, 1]")
        if not (1 <= self.vote_k <= 3):
            raise ValueError("vote_k must be in 1..3")
        if self.heartbeat_timeout_windows < 1:
            raise ValueError("heartbeat_timeout_windows must be >= 1")

    def resolved(self, radio: RadioModel) -> "DetectorThresholds":
        idle = (
            self.idle_rssi_max_dbm
            if self.idle_rssi_max_dbm is not None
            else radio.noise_floor_dbm + 10.0
        )
        cs = (
            self.carrier_sense_max_us
            if self.carrier_sense_max_us is not None
            else 3.0 * radio.cs_turnaround_us
        )
        return DetectorThresholds(
            pdr_min=self.pdr_min,
            idle_rssi_max_dbm=idle,
            carrier_sense_max_us=cs,
            vote_k=self.vote_k,
            heartbeat_timeout_windows=self.heartbeat_timeout_windows,
            match_window_count=self.match_window_count,
        )


@dataclass
class Alert:
    rule: AlertRule
    layer: str
    suspect: str
    detected_by: int
    detected_at: SimTime
    window: int
    hop_trail: list[int]
    evidence: dict[str, Any] = field(default_factory=dict)
    packet_id: int | None = None

    def dedup_key(self) -> tuple:
        return (self.rule.value, self.suspect, self.window, self.packet_id)


def alert_to_dict(alert: Alert) -> dict[str, Any]:
    return {
        "rule": alert.rule.value,
        "layer": alert.layer,
        "suspect": alert.suspect,
        "detected_by": alert.detected_by,
        "detected_at": alert.detected_at,
        "window": alert.window,
        "hop_trail": list(alert.hop_trail),
        "evidence": dict(alert.evidence),
        "packet_id": alert.packet_id,
    }


def alert_from_dict(d: dict[str, Any]) -> Alert:
    return Alert(
        rule=AlertRule(d["rule"]),
        layer=d["layer"],
        suspect=d["suspect"],
        detected_by=d["detected_by"],
        detected_at=d["detected_at"],
        window=d["window"],
        hop_trail=list(d["hop_trail"]),
        evidence=dict(d["evidence"]),
        packet_id=d["packet_id"],
    )


@dataclass
class BaseAlertRecord:
    alert: Alert
    base_arrival_us: SimTime


# ============================================================================
# Routing oracle
# ============================================================================


class ConnectivityGraph:
    """Static connectivity at zero shadowing: edges join nodes within short range.

    expected_route returns the minimum-hop path, tie-broken to the
    lexicographically smallest node-id sequence; None when disconnected.
    """

    def __init__(self, topology: Topology, short_range_m: float) -> None:
        self.topology = topology
        n = len(topology.nodes)
        self.adj: list[list[int]] = [[] for _ in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                if topology.distance(a, b) <= short_range_m:
                    self.adj[a].append(b)
                    self.adj[b].append(a)
        for lst in self.adj:
            lst.sort()
        self._dist_cache: dict[int, list[int]] = {}

    def _dist_to(self, dst: int) -> list[int]:
        cached = self._dist_cache.get(dst)
        if cached is not None:
            return cached
        dist = [-1] * len(self.adj)
        dist[dst] = 0
        dq = deque([dst])
        while dq:
            u = dq.popleft()
            for v in self.adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    dq.append(v)
        self._dist_cache[dst] = dist
        return dist

    def expected_route(self, src: int, dst: int) -> list[int] | None:
        if src == dst:
            return [src]
        dist = self._dist_to(dst)
        if dist[src] < 0:
            return None
        path = [src]
        cur = src
        while cur != dst:
            # smallest-id neighbor one step closer: yields the lexicographic
            # minimum among all minimum-hop paths
            cur = min(v for v in self.adj[cur] if dist[v] == dist[cur] - 1)
            path.append(cur)
        return path


def check_route(graph: ConnectivityGraph, packet: Packet) -> tuple[bool, dict[str, Any]]:
    """Route verdict for a data packet delivered to its destination.

    The observed path is the claimed origin followed by every hop receiver.
    """
    expected = graph.expected_route(packet.origin, packet.dst)
    observed = [packet.origin] + list(packet.path_so_far)
    if expected is None:
        return False, {"error": "NoRoute"}
    violated = observed != expected
    return violated, {"observed_path": observed, "expected_path": expected}


# ============================================================================
# Windowed jamming vote
# ============================================================================


def detect_jamming(
    stats: ChannelWindowStats, thresholds: DetectorThresholds
) -> tuple[bool, dict[str, Any]]:
    """k-of-3 vote over PDR, mean idle RSSI, and mean carrier-sense time."""
    assert thresholds.idle_rssi_max_dbm is not None and thresholds.carrier_sense_max_us is not None, (
        "thresholds must be resolved against the radio model"
    )
    trips = {
        "pdr": stats.pdr < thresholds.pdr_min,
        "idle_rssi": stats.mean_idle_rssi_dbm > thresholds.idle_rssi_max_dbm,
        "carrier_sense": stats.mean_carrier_sense_us > thresholds.carrier_sense_max_us,
    }
    fired = sum(trips.values()) >= thresholds.vote_k
    evidence = {
        "pdr": round(stats.pdr, 6),
        "idle_rssi_dbm": round(stats.mean_idle_rssi_dbm, 3),
        "carrier_sense_us": round(stats.mean_carrier_sense_us, 3),
        "trips": sorted(k for k, v in trips.items() if v),
    }
    return fired, evidence


# ============================================================================
# Cluster pipeline
# ============================================================================

DATA_KINDS = (PacketKind.SENSOR_DATA, PacketKind.ATTACK_TRAFFIC)


def cluster_pipeline(
    engine: Engine,
    graph: ConnectivityGraph,
    thresholds: DetectorThresholds,
    cluster_id: int,
    window: int,
    received: list[tuple[SimTime, Packet, float | None]],
    stats: ChannelWindowStats,
) -> tuple[list[Alert], int]:
    """Run one cluster node's window: gather, detect, package.

    Returns the alerts plus the number of rule evaluations performed (for the
    monitor energy ledger).  Callers must not invoke this for a cluster in
    Silent compromise.
    """
    topo = engine.topology
    cell = topo.node(cluster_id).cell
    now = engine.now
    sensors = set(topo.sensors_of(cell))
    tdma = engine.tdma[cell]
    smac = engine.smac[cell]
    latency = engine.config.radio.per_hop_latency_us
    alerts: list[Alert] = []
    evals = 0

    def mk(rule: AlertRule, suspect: str, evidence: dict, pid: int | None = None) -> Alert:
        return Alert(
            rule=rule,
            layer=LAYER_OF_RULE[rule],
            suspect=suspect,
            detected_by=cluster_id,
            detected_at=now,
            window=window,
            hop_trail=[cluster_id],
            evidence=evidence,
            packet_id=pid,
        )

    fired, evidence = detect_jamming(stats, thresholds)
    evals += 1
    if fired:
        alerts.append(mk(AlertRule.JAMMING_SUSPECTED, suspect_cell(cell), evidence))

    for arrival, packet, _rssi in received:
        if packet.kind not in DATA_KINDS:
            continue
        t_tx = arrival - latency  # claimed transmit time reconstructed from the hop latency
        evals += 1
        if packet.origin not in sensors:
            alerts.append(
                mk(
                    AlertRule.FOREIGN_ORIGIN,
                    suspect_node(packet.origin),
                    {"t_tx": t_tx, "cell": suspect_cell(cell)},
                    packet.packet_id,
                )
            )
            continue
        evals += 1
        if is_slot_violation(tdma, packet.origin, t_tx):
            alerts.append(
                mk(
                    AlertRule.SLOT_VIOLATION,
                    suspect_node(packet.origin),
                    {"t_tx": t_tx, "slot_owner": slot_owner_at(tdma, t_tx)},
                    packet.packet_id,
                )
            )
        evals += 1
        if is_sleep_violation(smac, t_tx):
            alerts.append(
                mk(
                    AlertRule.SLEEP_VIOLATION,
                    suspect_node(packet.origin),
                    {"t_tx": t_tx},
                    packet.packet_id,
                )
            )
        evals += 1
        violated, route_ev = check_route(graph, packet)
        if violated:
            alerts.append(
                mk(AlertRule.ROUTE_DEVIATION, suspect_node(packet.origin), route_ev, packet.packet_id)
            )

    # package phase: drop duplicates within the window
    seen: set[tuple] = set()
    unique: list[Alert] = []
    for a in alerts:
        if a.dedup_key() not in seen:
            seen.add(a.dedup_key())
            unique.append(a)
    return unique, evals


# ============================================================================
# Watchdog
# ============================================================================

_LEGAL_WATCHDOG_PAIRS = {
    (NodeRole.CLUSTER, NodeRole.SENSOR),
    (NodeRole.REGIONAL, NodeRole.CLUSTER),
    (NodeRole.BASE, NodeRole.REGIONAL),
}


def watchdog_check(
    topology: Topology,
    monitor_id: int,
    monitored_id: int,
    window: int,
    now: SimTime,
    last_seen_window: int,
    thresholds: DetectorThresholds,
    suppression_evidence: list[dict[str, Any]] | None = None,
) -> list[Alert]:
    """Liveness and suppression checks for one (monitor, monitored) pair.

    suppression_evidence, when provided, holds one entry per window of the
    lookback, each {'anomalous': bool, 'reported_zero': bool, ...}; the
    SuppressedAlerts rule fires only if every entry shows an independently
    observed anomaly while the child reported zero alerts.
    """
    pair = (topology.role(monitor_id), topology.role(monitored_id))
    if pair not in _LEGAL_WATCHDOG_PAIRS:
        raise ValueError(
            f"illegal watchdog pair {pair[0].value} -> {pair[1].value}; the hierarchy "
            "monitors exactly one layer down"
        )
    alerts: list[Alert] = []
    timeout = thresholds.heartbeat_timeout_windows
    silent_windows = window - last_seen_window
    if silent_windows >= timeout:
        alerts.append(
            Alert(
                rule=AlertRule.MISSED_HEARTBEAT,
                layer=LAYER_OF_RULE[AlertRule.MISSED_HEARTBEAT],
                suspect=suspect_node(monitored_id),
                detected_by=monitor_id,
                detected_at=now,
                window=window,
                hop_trail=[monitor_id],
                evidence={"silent_windows": silent_windows, "last_seen_window": last_seen_window},
            )
        )
    if suppression_evidence is not None and len(suppression_evidence) >= timeout:
        recent = suppression_evidence[-timeout:]
        if all(e["anomalous"] and e["reported_zero"] for e in recent):
            alerts.append(
                Alert(
                    rule=AlertRule.SUPPRESSED_ALERTS,
                    layer=LAYER_OF_RULE[AlertRule.SUPPRESSED_ALERTS],
                    suspect=suspect_node(monitored_id),
                    detected_by=monitor_id,
                    detected_at=now,
                    window=window,
                    hop_trail=[monitor_id],
                    evidence={"windows": [e.get("window") for e in recent], "lookback": recent},
                )
            )
    return alerts


def aggregate_alarm_counts(alerts: Iterable[Alert]) -> dict[str, dict[str, int]]:
    """Per-rule, per-suspect counts for the regional aggregated alarm."""
    counts: dict[str, dict[str, int]] = {}
    for a in alerts:
        by_suspect = counts.setdefault(a.rule.value, {})
        by_suspect[a.suspect] = by_suspect.get(a.suspect, 0) + 1
    return counts


# ============================================================================
# The hierarchical monitor layer driving the engine hooks
# ============================================================================


@dataclass
class _OutboxEntry:
    alert: Alert
    last_packet_id: int | None = None


class HodMonitors:
    """Attaches the four-layer overlay to an engine."""

    wants_overhear = False

    def __init__(self, engine: Engine, thresholds: DetectorThresholds) -> None:
        self.engine = engine
        self.thresholds = thresholds.resolved(engine.config.radio)
        self.graph = ConnectivityGraph(engine.topology, engine.config.radio.short_range_m)
        topo = engine.topology
        self.cluster_outbox: dict[int, list[_OutboxEntry]] = {
            topo.cluster_of(c): [] for c in topo.cells
        }
        self.sensor_last_seen: dict[int, int] = {s: -1 for s in topo.sensor_ids()}
        self.child_last_seen: dict[int, int] = {
            topo.cluster_of(c): -1 for c in topo.cells
        }
        self.child_report_log: dict[int, dict[int, int]] = {
            topo.cluster_of(c): {} for c in topo.cells
        }  # cluster -> {window: alert_count reported}
        self.regional_seen_keys: dict[int, set[tuple]] = {
            r: set() for r in topo.regional_by_region.values()
        }
        self.regional_last_seen: dict[int, int] = {
            r: -1 for r in topo.regional_by_region.values()
        }
        self.base_seen_keys: set[tuple] = set()
        self.stats_history: dict[HexCoord, dict[int, ChannelWindowStats]] = {
            c: {} for c in topo.cells
        }
        engine.monitors = self

    # ------------------------------------------------------------------ hooks

    def on_window_end(self, engine: Engine, window: int) -> None:
        topo = engine.topology
        for cell, stats in engine.current_window_stats.items():
            self.stats_history[cell][window] = stats
        for cell in topo.cells:
            self._cluster_step(topo.cluster_of(cell), cell, window)
        for rid in sorted(topo.regional_by_region):
            self._regional_step(topo.regional_by_region[rid], rid, window)
        self._base_step(window)

    def on_run_end(self, engine: Engine) -> None:
        pass

    # ---------------------------------------------------------------- cluster

    def _log_alert(self, alert: Alert) -> None:
        eng = self.engine
        eng.log.alerts.append(alert)
        eng.log.events.append(
            TraceEvent(
                time_us=eng.now,
                event_kind="alert",
                src=alert.detected_by,
                dst=None,
                cell=eng.topology.node(alert.detected_by).cell,
                outcome=alert.rule.value,
                rssi_dbm=None,
                energy_uj=0.0,
                packet_id=alert.packet_id,
                pkt_kind=alert.suspect,
            )
        )

    def _send_control(
        self, src: int, dst: int, kind: PacketKind, payload: dict, long_range: bool = False
    ) -> int:
        eng = self.engine
        pid = eng.next_packet_id()
        eng.send(
            Packet(
                packet_id=pid,
                kind=kind,
                src=src,
                origin=src,
                dst=dst,
                created_at=eng.now,
                size_bits=eng.config.energy.packet_size_bits,
                payload=payload,
                control=True,
                long_range=long_range,
            )
        )
        return pid

    def _cluster_step(self, cluster: int, cell: HexCoord, window: int) -> None:
        eng = self.engine
        mode = eng.compromise_mode_at(cluster, eng.now)
        if mode is CompromiseMode.SILENT:
            return
        received = eng.inboxes[cluster]
        stats = eng.current_window_stats[cell]
        alerts, evals = cluster_pipeline(
            eng, self.graph, self.thresholds, cluster, window, received, stats
        )

        # liveness ledger: any claimed-origin data counts as a sign of life
        for _t, packet, _r in received:
            if packet.kind in DATA_KINDS and packet.origin in self.sensor_last_seen:
                if eng.topology.node(packet.origin).cell == cell:
                    self.sensor_last_seen[packet.origin] = window
        for sensor in eng.topology.sensors_of(cell):
            evals += 1
            alerts.extend(
                watchdog_check(
                    eng.topology,
                    cluster,
                    sensor,
                    window,
                    eng.now,
                    self.sensor_last_seen[sensor],
                    self.thresholds,
                )
            )
        eng.charge_rule_evals(cluster, evals)

        for a in alerts:
            self._log_alert(a)
        if mode is CompromiseMode.FALSE_DATA:
            eng.window_alert_counts[cluster] = 0  # the lie: report zero, forward nothing
        else:
            eng.window_alert_counts[cluster] = len(alerts)
            self.cluster_outbox[cluster].extend(_OutboxEntry(a) for a in alerts)

        regional = eng.topology.regional_of_cell(cell)
        remaining: list[_OutboxEntry] = []
        for entry in self.cluster_outbox[cluster]:
            if entry.last_packet_id is not None and entry.last_packet_id in eng.log.delivered_packet_ids:
                continue  # acknowledged by delivery; drop from the outbox
            entry.last_packet_id = self._send_control(
                cluster,
                regional,
                PacketKind.REGIONAL_ALARM,
                {"alert": alert_to_dict(entry.alert)},
            )
            remaining.append(entry)
        self.cluster_outbox[cluster] = remaining
        self._send_control(cluster, regional, PacketKind.HEARTBEAT, {"window": window})

    # --------------------------------------------------------------- regional

    def _regional_step(self, regional: int, rid: int, window: int) -> None:
        eng = self.engine
        topo = eng.topology
        mode = eng.compromise_mode_at(regional, eng.now)
        if mode is CompromiseMode.SILENT:
            return
        received = eng.inboxes[regional]
        member_cells = topo.regions[rid]
        children = [topo.cluster_of(c) for c in member_cells]

        incoming: list[Alert] = []
        for _t, packet, _r in received:
            src = packet.src
            if src in children:
                if packet.kind in (PacketKind.CLUSTER_REPORT, PacketKind.HEARTBEAT):
                    self.child_last_seen[src] = window
                if packet.kind is PacketKind.CLUSTER_REPORT:
                    self.child_report_log[src][packet.payload.get("window", window)] = (
                        packet.payload.get("alert_count", 0)
                    )
                if packet.kind is PacketKind.REGIONAL_ALARM and "alert" in packet.payload:
                    alert = alert_from_dict(packet.payload["alert"])
                    key = alert.dedup_key()
                    if key not in self.regional_seen_keys[regional]:
                        self.regional_seen_keys[regional].add(key)
                        incoming.append(alert)

        own: list[Alert] = []
        evals = 0
        for child in children:
            cell = topo.node(child).cell
            # Lookback pairs each completed window's overheard channel stats
            # with the child's report about that same window; the report for
            # window w only arrives during w+1, so the current window is
            # excluded.  A missing report is absence, not a zero claim.
            evidence = []
            for w in range(max(0, window - self.thresholds.heartbeat_timeout_windows), window):
                stats = self.stats_history[cell].get(w)
                if stats is None:
                    continue
                anomalous, _ev = detect_jamming(stats, self.thresholds)
                reported = self.child_report_log[child].get(w)
                evidence.append(
                    {
                        "window": w,
                        "anomalous": anomalous,
                        "reported_zero": reported == 0,
                        "overheard_pdr": round(stats.pdr, 6),
                    }
                )
            evals += 2 + len(evidence)
            own.extend(
                watchdog_check(
                    topo,
                    regional,
                    child,
                    window,
                    eng.now,
                    self.child_last_seen[child],
                    self.thresholds,
                    suppression_evidence=evidence,
                )
            )
        eng.charge_rule_evals(regional, evals)
        for a in own:
            self._log_alert(a)

        if mode is CompromiseMode.FALSE_DATA:
            return  # keeps reporting (data plane) but suppresses every alert

        base = topo.base_id
        for alert in incoming:
            alert.hop_trail.append(regional)
            self._send_control(
                regional, base, PacketKind.REGIONAL_ALARM, {"alert": alert_to_dict(alert)}, long_range=True
            )
        for alert in own:
            self._send_control(
                regional, base, PacketKind.REGIONAL_ALARM, {"alert": alert_to_dict(alert)}, long_range=True
            )
        counts = aggregate_alarm_counts(incoming + own)
        self._send_control(
            regional,
            base,
            PacketKind.REGIONAL_ALARM,
            {"window": window, "counts": counts},
            long_range=True,
        )
        self._send_control(regional, base, PacketKind.HEARTBEAT, {"window": window}, long_range=True)

    # ------------------------------------------------------------------- base

    def _base_step(self, window: int) -> None:
        eng = self.engine
        topo = eng.topology
        base = topo.base_id
        received = eng.inboxes[base]
        regionals = sorted(topo.regional_by_region.values())
        for t, packet, _r in received:
            if packet.src in self.regional_last_seen:
                self.regional_last_seen[packet.src] = window
            if packet.kind is PacketKind.REGIONAL_ALARM and "alert" in packet.payload:
                alert = alert_from_dict(packet.payload["alert"])
                key = alert.dedup_key()
                if key in self.base_seen_keys:
                    continue
                self.base_seen_keys.add(key)
                alert.hop_trail.append(base)
                eng.log.base_received.append(BaseAlertRecord(alert=alert, base_arrival_us=t))
            elif packet.kind is PacketKind.REGIONAL_ALARM and "counts" in packet.payload:
                eng.log.aggregated_alarms.append(
                    {"src": packet.src, "arrival_us": t, **packet.payload}
                )
        evals = 0
        for regional in regionals:
            evals += 1
            for alert in watchdog_check(
                topo, base, regional, window, eng.now, self.regional_last_seen[regional], self.thresholds
            ):
                self._log_alert(alert)
                key = alert.dedup_key()
                if key not in self.base_seen_keys:
                    self.base_seen_keys.add(key)
                    alert.hop_trail.append(base)
                    eng.log.base_received.append(
                        BaseAlertRecord(alert=alert, base_arrival_us=eng.now)
                    )
        eng.charge_rule_evals(base, evals)


# ============================================================================
# Ground-truth matching and the base station report
# ============================================================================

RULES_FOR_KIND = {
    "Jamming": {AlertRule.JAMMING_SUSPECTED},
    "SlotSpoof": {AlertRule.SLOT_VIOLATION},
    "SleepReplay": {AlertRule.SLEEP_VIOLATION},
    "RouteDeviation": {AlertRule.ROUTE_DEVIATION},
    "NodeCompromise": {AlertRule.MISSED_HEARTBEAT, AlertRule.SUPPRESSED_ALERTS},
}


def match_alerts(
    ground_truth: list[GroundTruthEvent],
    records: list[BaseAlertRecord],
    window_us: int,
    match_window_count: int,
) -> tuple[dict[int, int], set[int]]:
    """Greedy one-to-one matching of ground truth to received alerts.

    An alert matches an event when its rule is compatible with the attack
    kind, suspects agree, packet ids agree when the event has one, and the
    detection time falls within [event, event + match_window_count windows].
    Returns {gt_index: record_index} plus the set of unmatched record indices
    (false positives).
    """
    span = match_window_count * window_us
    used: set[int] = set()
    pairs: dict[int, int] = {}
    order = sorted(range(len(ground_truth)), key=lambda i: (ground_truth[i].time_us, i))
    for gi in order:
        gt = ground_truth[gi]
        rules = RULES_FOR_KIND.get(gt.kind, set())
        best = None
        for ri, rec in enumerate(records):
            if ri in used:
                continue
            a = rec.alert
            if a.rule not in rules or a.suspect != gt.target:
                continue
            if gt.packet_id is not None and a.packet_id != gt.packet_id:
                continue
            if not (gt.time_us <= a.detected_at <= gt.time_us + span):
                continue
            if best is None or (a.detected_at, rec.base_arrival_us, ri) < best[0]:
                best = ((a.detected_at, rec.base_arrival_us, ri), ri)
        if best is not None:
            used.add(best[1])
            pairs[gi] = best[1]
    unmatched = set(range(len(records))) - used
    return pairs, unmatched


@dataclass
class SummaryReport:
    n_windows: int
    tally: dict[str, dict[str, int]]  # cell/scope -> rule -> count
    timeline: list[dict[str, Any]]
    compromised_monitors: list[str]
    total_alerts: int


def _scope_of(alert: Alert, topology: Topology) -> str:
    node = topology.node(alert.detected_by)
    if node.cell is not None:
        return suspect_cell(node.cell)
    return node.role.value


def base_station_report(run_log: RunLog, topology: Topology) -> SummaryReport:
    """Compile the per-cell tallies, latency timeline, and compromise list."""
    pairs, _unmatched = match_alerts(
        run_log.ground_truth,
        run_log.base_received,
        run_log.window_us,
        DetectorThresholds().match_window_count,
    )
    latency_by_record = {
        ri: run_log.base_received[ri].base_arrival_us - run_log.ground_truth[gi].time_us
        for gi, ri in pairs.items()
    }
    tally: dict[str, dict[str, int]] = {}
    timeline = []
    compromised: set[str] = set()
    for ri, rec in enumerate(run_log.base_received):
        a = rec.alert
        scope = _scope_of(a, topology)
        tally.setdefault(scope, {})
        tally[scope][a.rule.value] = tally[scope].get(a.rule.value, 0) + 1
        timeline.append(
            {
                "detected_at_us": a.detected_at,
                "layer": a.layer,
                "rule": a.rule.value,
                "suspect": a.suspect,
                "detected_by": a.detected_by,
                "base_arrival_us": rec.base_arrival_us,
                "latency_us": latency_by_record.get(ri),
                "hop_trail": list(a.hop_trail),
            }
        )
        if a.rule in (AlertRule.MISSED_HEARTBEAT, AlertRule.SUPPRESSED_ALERTS):
            suspect_id = int(a.suspect.split(":")[1])
            if topology.role(suspect_id) in (NodeRole.CLUSTER, NodeRole.REGIONAL):
                compromised.add(a.suspect)
    return SummaryReport(
        n_windows=run_log.n_windows,
        tally=tally,
        timeline=timeline,
        compromised_monitors=sorted(compromised),
        total_alerts=len(run_log.base_received),
    )
