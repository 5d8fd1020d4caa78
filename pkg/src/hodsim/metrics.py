"""Scoring, the flat per-sensor baseline, and the two-mode comparison.

Scoring works from the run log alone: ground-truth events are matched to the
alerts that reached the base station (hierarchical mode) or to deduplicated
local anomaly records (flat mode).  Detection rate is reported twice — over
all injected events, and over the subset whose offending packet actually
reached a cluster node, which isolates detector quality from radio loss.

The flat baseline keeps the identical data plane and radio but removes the
hierarchy: every sensor promiscuously overhears its neighborhood, runs the
full rule set locally, and gossips per-window state and anomaly notices to
each in-range peer.  Those exchanges ride the always-on control plane (exempt
from the data-plane duty cycle), which is exactly the per-node overhead the
hierarchical overlay is designed to avoid.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any

from .attacks import apply_attacks
from .config import ScenarioConfig
from .mac import is_sleep_violation, is_slot_violation
from .detection import (
    Alert,
    AlertRule,
    BaseAlertRecord,
    ConnectivityGraph,
    DetectorThresholds,
    HodMonitors,
    LAYER_OF_RULE,
    RULES_FOR_KIND,
    detect_jamming,
    match_alerts,
    suspect_cell,
    suspect_node,
)
from .simcore import (
    Engine,
    Outcome,
    Packet,
    PacketKind,
    RunLog,
    TraceEvent,
)
from .topology import NodeRole, Topology, build_topology

ATTACK_KINDS = tuple(RULES_FOR_KIND)  # canonical column order


# ============================================================================
# Flat (non-hierarchical) baseline monitors
# ============================================================================

_FLAT_DATA_KINDS = (PacketKind.SENSOR_DATA, PacketKind.ATTACK_TRAFFIC)


class FlatMonitors:
    """Per-sensor standalone IDS: local rules plus neighborhood gossip."""

    wants_overhear = True

    def __init__(self, engine: Engine, thresholds: DetectorThresholds) -> None:
        self.engine = engine
        self.thresholds = thresholds.resolved(engine.config.radio)
        self.graph = ConnectivityGraph(engine.topology, engine.config.radio.short_range_m)
        topo = engine.topology
        self.neighbors: dict[int, list[int]] = {}
        for s in topo.sensor_ids():
            self.neighbors[s] = [
                v for v in self.graph.adj[s] if topo.role(v) is NodeRole.SENSOR
            ]
        self.cell_members: dict[int, set[int]] = {
            s: set(topo.sensors_of(topo.node(s).cell)) for s in topo.sensor_ids()
        }
        engine.monitors = self

    def _gossip(self, src: int, dst: int, kind: PacketKind, payload: dict) -> None:
        eng = self.engine
        eng.send(
            Packet(
                packet_id=eng.next_packet_id(),
                kind=kind,
                src=src,
                origin=src,
                dst=dst,
                created_at=eng.now,
                size_bits=eng.config.energy.packet_size_bits,
                payload=payload,
                control=True,
                mac_exempt=True,
            )
        )

    def _record(self, sensor: int, window: int, rule: AlertRule, suspect: str,
                packet_id: int | None, evidence: dict) -> dict:
        eng = self.engine
        rec = {
            "window": window,
            "rule": rule.value,
            "suspect": suspect,
            "packet_id": packet_id,
            "detected_by": sensor,
            "detected_at": eng.now,
            "evidence": evidence,
        }
        eng.log.flat_anomalies.append(rec)
        eng.log.events.append(
            TraceEvent(
                time_us=eng.now,
                event_kind="anomaly",
                src=sensor,
                dst=None,
                cell=eng.topology.node(sensor).cell,
                outcome=rule.value,
                rssi_dbm=None,
                energy_uj=0.0,
                packet_id=packet_id,
                pkt_kind=suspect,
            )
        )
        return rec

    def on_window_end(self, engine: Engine, window: int) -> None:
        topo = engine.topology
        latency = engine.config.radio.per_hop_latency_us
        for sensor in topo.sensor_ids():
            node = topo.node(sensor)
            cell = node.cell
            cluster = topo.cluster_of(cell)
            tdma = engine.tdma[cell]
            smac = engine.smac[cell]
            members = self.cell_members[sensor]
            evals = 0
            found: list[dict] = []

            stats = engine.current_window_stats[cell]
            evals += 1
            fired, ev = detect_jamming(stats, self.thresholds)
            if fired:
                found.append(
                    self._record(sensor, window, AlertRule.JAMMING_SUSPECTED,
                                 suspect_cell(cell), None, ev)
                )

            for t, packet in engine.overheard.get(sensor, ()):
                if packet.dst != cluster or packet.kind not in _FLAT_DATA_KINDS:
                    continue
                t_tx = t - latency
                evals += 1
                if packet.origin not in members:
                    found.append(
                        self._record(sensor, window, AlertRule.FOREIGN_ORIGIN,
                                     suspect_node(packet.origin), packet.packet_id,
                                     {"t_tx": t_tx})
                    )
                    continue
                evals += 1
                if is_slot_violation(tdma, packet.origin, t_tx):
                    found.append(
                        self._record(sensor, window, AlertRule.SLOT_VIOLATION,
                                     suspect_node(packet.origin), packet.packet_id,
                                     {"t_tx": t_tx})
                    )
                evals += 1
                if is_sleep_violation(smac, t_tx):
                    found.append(
                        self._record(sensor, window, AlertRule.SLEEP_VIOLATION,
                                     suspect_node(packet.origin), packet.packet_id,
                                     {"t_tx": t_tx})
                    )
                evals += 1
                observed = [packet.origin] + list(packet.path_so_far)
                if not observed or observed[-1] != packet.dst:
                    observed.append(packet.dst)
                expected = self.graph.expected_route(packet.origin, packet.dst)
                if expected is not None and observed != expected:
                    found.append(
                        self._record(sensor, window, AlertRule.ROUTE_DEVIATION,
                                     suspect_node(packet.origin), packet.packet_id,
                                     {"observed_path": observed, "expected_path": expected})
                    )

            engine.charge_rule_evals(sensor, evals)
            for peer in self.neighbors[sensor]:
                self._gossip(sensor, peer, PacketKind.HEARTBEAT, {"window": window})
            for rec in found:
                for peer in self.neighbors[sensor]:
                    self._gossip(
                        sensor,
                        peer,
                        PacketKind.REGIONAL_ALARM,
                        {"anomaly": {k: rec[k] for k in ("rule", "suspect", "window")}},
                    )

    def on_run_end(self, engine: Engine) -> None:
        pass


# ============================================================================
# Metrics
# ============================================================================


@dataclass
class Metrics:
    mode: str
    seed: int
    scenario_hash: str
    n_windows: int
    gt_total: dict[str, int]
    gt_delivered: dict[str, int]
    detected: dict[str, int]
    detection_rate: dict[str, float]
    detection_rate_delivered: dict[str, float]
    latencies_us: dict[str, list[int]]
    false_positives: dict[str, int]
    jamming_fp_per_100_windows: float
    ids_control_messages: int
    total_messages: int
    energy_mean_by_role_j: dict[str, float]
    energy_total_j: float

    def mean_latency_us(self, kind: str) -> float | None:
        vals = self.latencies_us.get(kind, [])
        return (sum(vals) / len(vals)) if vals else None

    def to_row(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "mode": self.mode,
            "seed": self.seed,
            "scenario_hash": self.scenario_hash,
            "n_windows": self.n_windows,
            "ids_control_messages": self.ids_control_messages,
            "total_messages": self.total_messages,
            "energy_total_j": f"{self.energy_total_j:.9f}",
            "jamming_fp_per_100_windows": f"{self.jamming_fp_per_100_windows:.4f}",
        }
        for role in ("Sensor", "ClusterNode", "RegionalNode", "BaseStation"):
            row[f"energy_mean_{role}_j"] = f"{self.energy_mean_by_role_j.get(role, 0.0):.9f}"
        for kind in ATTACK_KINDS:
            row[f"gt_{kind}"] = self.gt_total.get(kind, 0)
            row[f"detected_{kind}"] = self.detected.get(kind, 0)
            rate = self.detection_rate.get(kind)
            row[f"rate_{kind}"] = "" if rate is None else f"{rate:.4f}"
            rate_d = self.detection_rate_delivered.get(kind)
            row[f"rate_delivered_{kind}"] = "" if rate_d is None else f"{rate_d:.4f}"
            lat = self.mean_latency_us(kind)
            row[f"mean_latency_us_{kind}"] = "" if lat is None else f"{lat:.1f}"
        for rule in AlertRule:
            row[f"fp_{rule.value}"] = self.false_positives.get(rule.value, 0)
        return row


def _flat_records(run_log: RunLog) -> list[BaseAlertRecord]:
    """Collapse per-sensor anomaly records to one per distinct finding."""
    best: dict[tuple, dict] = {}
    for rec in run_log.flat_anomalies:
        key = (rec["rule"], rec["suspect"], rec["window"], rec["packet_id"])
        cur = best.get(key)
        if cur is None or (rec["detected_at"], rec["detected_by"]) < (
            cur["detected_at"], cur["detected_by"]
        ):
            best[key] = rec
    out = []
    for key in sorted(best, key=lambda k: (best[k]["detected_at"], str(k))):
        rec = best[key]
        rule = AlertRule(rec["rule"])
        out.append(
            BaseAlertRecord(
                alert=Alert(
                    rule=rule,
                    layer=LAYER_OF_RULE[rule],
                    suspect=rec["suspect"],
                    detected_by=rec["detected_by"],
                    detected_at=rec["detected_at"],
                    window=rec["window"],
                    hop_trail=[rec["detected_by"]],
                    evidence=rec.get("evidence", {}),
                    packet_id=rec["packet_id"],
                ),
                base_arrival_us=rec["detected_at"],
            )
        )
    return out


def delivered_to_cluster_ids(run_log: RunLog, topology: Topology) -> set[int]:
    """Packet ids that completed delivery to a cluster node."""
    out: set[int] = set()
    for e in run_log.events:
        if (
            e.event_kind == "rx"
            and e.outcome == Outcome.DELIVERED.value
            and e.dst is not None
            and e.packet_id is not None
            and topology.role(e.dst) is NodeRole.CLUSTER
        ):
            out.add(e.packet_id)
    return out


def score(
    run_log: RunLog,
    topology: Topology,
    thresholds: DetectorThresholds | None = None,
) -> Metrics:
    th = thresholds or DetectorThresholds()
    records = run_log.base_received if run_log.mode == "hod" else _flat_records(run_log)
    pairs, unmatched = match_alerts(
        run_log.ground_truth, records, run_log.window_us, th.match_window_count
    )
    delivered_ids = delivered_to_cluster_ids(run_log, topology)

    gt_total: dict[str, int] = {}
    gt_delivered: dict[str, int] = {}
    detected: dict[str, int] = {}
    detected_delivered: dict[str, int] = {}
    latencies: dict[str, list[int]] = {}
    for gi, gt in enumerate(run_log.ground_truth):
        kind = gt.kind
        gt_total[kind] = gt_total.get(kind, 0) + 1
        delivered = gt.packet_id is None or gt.packet_id in delivered_ids
        if delivered:
            gt_delivered[kind] = gt_delivered.get(kind, 0) + 1
        if gi in pairs:
            detected[kind] = detected.get(kind, 0) + 1
            if delivered:
                detected_delivered[kind] = detected_delivered.get(kind, 0) + 1
            latencies.setdefault(kind, []).append(
                records[pairs[gi]].base_arrival_us - gt.time_us
            )

    rate = {
        k: detected.get(k, 0) / n for k, n in gt_total.items() if n
    }
    rate_delivered = {
        k: (detected_delivered.get(k, 0) / gt_delivered[k]) if gt_delivered.get(k) else None
        for k in gt_total
    }

    fps: dict[str, int] = {}
    for ri in unmatched:
        rule = records[ri].alert.rule.value
        fps[rule] = fps.get(rule, 0) + 1
    jam_fp = fps.get(AlertRule.JAMMING_SUSPECTED.value, 0)
    jam_fp_per_100 = 100.0 * jam_fp / run_log.n_windows if run_log.n_windows else 0.0

    tally_counters = sum(c.control_sent for c in run_log.counters.values())
    tally_trace = sum(1 for e in run_log.events if e.event_kind == "tx" and e.control)
    assert tally_counters == tally_trace, (
        f"control-message ledgers disagree: counters={tally_counters} trace={tally_trace}"
    )
    total_messages = sum(c.total_sent() for c in run_log.counters.values())

    by_role: dict[str, list[float]] = {}
    total_energy = 0.0
    for node in topology.nodes:
        j = run_log.meters[node.node_id].total_j
        by_role.setdefault(node.role.value, []).append(j)
        total_energy += j
    energy_mean = {role: sum(v) / len(v) for role, v in sorted(by_role.items())}

    return Metrics(
        mode=run_log.mode,
        seed=run_log.seed,
        scenario_hash=run_log.scenario_hash,
        n_windows=run_log.n_windows,
        gt_total=gt_total,
        gt_delivered=gt_delivered,
        detected=detected,
        detection_rate=rate,
        detection_rate_delivered=rate_delivered,
        latencies_us=latencies,
        false_positives=fps,
        jamming_fp_per_100_windows=jam_fp_per_100,
        ids_control_messages=tally_counters,
        total_messages=total_messages,
        energy_mean_by_role_j=energy_mean,
        energy_total_j=total_energy,
    )


# ============================================================================
# Comparison
# ============================================================================


@dataclass
class ComparisonReport:
    seed: int
    scenario_hash: str
    hod_control_messages: int
    flat_control_messages: int
    control_message_ratio: float
    fewer_control_messages: bool
    hod_total_messages: int
    flat_total_messages: int
    hod_sensor_energy_j: float
    flat_sensor_energy_j: float
    sensor_energy_ratio: float
    lower_sensor_energy: bool
    rate_delta: dict[str, float]  # hod minus flat, per attack kind present
    detection_parity: bool
    tolerance: float

    def to_row(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "seed": self.seed,
            "scenario_hash": self.scenario_hash,
            "hod_control_messages": self.hod_control_messages,
            "flat_control_messages": self.flat_control_messages,
            "control_message_ratio": f"{self.control_message_ratio:.6f}",
            "fewer_control_messages": self.fewer_control_messages,
            "hod_total_messages": self.hod_total_messages,
            "flat_total_messages": self.flat_total_messages,
            "hod_sensor_energy_j": f"{self.hod_sensor_energy_j:.9f}",
            "flat_sensor_energy_j": f"{self.flat_sensor_energy_j:.9f}",
            "sensor_energy_ratio": f"{self.sensor_energy_ratio:.6f}",
            "lower_sensor_energy": self.lower_sensor_energy,
            "detection_parity": self.detection_parity,
            "tolerance": self.tolerance,
        }
        for kind in ATTACK_KINDS:
            delta = self.rate_delta.get(kind)
            row[f"rate_delta_{kind}"] = "" if delta is None else f"{delta:+.4f}"
        return row

    def to_text(self) -> str:
        lines = [
            f"comparison (seed {self.seed})",
            f"  IDS control messages: hierarchical {self.hod_control_messages} vs "
            f"flat {self.flat_control_messages} "
            f"(ratio {self.control_message_ratio:.4f}, fewer={self.fewer_control_messages})",
            f"  total messages:       hierarchical {self.hod_total_messages} vs "
            f"flat {self.flat_total_messages}",
            f"  mean sensor energy:   hierarchical {self.hod_sensor_energy_j:.9f} J vs "
            f"flat {self.flat_sensor_energy_j:.9f} J "
            f"(ratio {self.sensor_energy_ratio:.4f}, lower={self.lower_sensor_energy})",
            f"  detection parity within {self.tolerance:.2f}: {self.detection_parity}",
        ]
        for kind in ATTACK_KINDS:
            if kind in self.rate_delta:
                lines.append(f"    rate delta {kind}: {self.rate_delta[kind]:+.4f}")
        return "\n".join(lines) + "\n"


def compare(hod: Metrics, flat: Metrics, tolerance: float = 0.1) -> ComparisonReport:
    """Pair a hierarchical run against the flat baseline of the same scenario."""
    if hod.mode != "hod" or flat.mode != "flat":
        raise ValueError(f"compare() needs one hod and one flat run, got {hod.mode!r}/{flat.mode!r}")
    if hod.scenario_hash != flat.scenario_hash or hod.seed != flat.seed:
        raise ValueError(
            "refusing to compare runs of different scenarios: "
            f"hod seed={hod.seed} hash={hod.scenario_hash[:12]} vs "
            f"flat seed={flat.seed} hash={flat.scenario_hash[:12]}"
        )
    control_ratio = (
        hod.ids_control_messages / flat.ids_control_messages
        if flat.ids_control_messages
        else float("inf")
    )
    hod_sensor = hod.energy_mean_by_role_j.get(NodeRole.SENSOR.value, 0.0)
    flat_sensor = flat.energy_mean_by_role_j.get(NodeRole.SENSOR.value, 0.0)
    energy_ratio = hod_sensor / flat_sensor if flat_sensor else float("inf")
    deltas: dict[str, float] = {}
    parity = True
    for kind, n in sorted(hod.gt_total.items()):
        if not n:
            continue
        h = hod.detection_rate.get(kind, 0.0)
        f = flat.detection_rate.get(kind, 0.0)
        deltas[kind] = h - f
        if h < f - tolerance:
            parity = False
    return ComparisonReport(
        seed=hod.seed,
        scenario_hash=hod.scenario_hash,
        hod_control_messages=hod.ids_control_messages,
        flat_control_messages=flat.ids_control_messages,
        control_message_ratio=control_ratio,
        fewer_control_messages=hod.ids_control_messages < flat.ids_control_messages,
        hod_total_messages=hod.total_messages,
        flat_total_messages=flat.total_messages,
        hod_sensor_energy_j=hod_sensor,
        flat_sensor_energy_j=flat_sensor,
        sensor_energy_ratio=energy_ratio,
        lower_sensor_energy=hod_sensor < flat_sensor,
        rate_delta=deltas,
        detection_parity=parity,
        tolerance=tolerance,
    )


# ============================================================================
# Scenario runner and serialization helpers
# ============================================================================


def run_scenario(scenario: ScenarioConfig, mode: str, seed: int) -> tuple[RunLog, Topology]:
    """Build topology and engine for one (scenario, mode, seed) and run it."""
    if mode not in ("hod", "flat"):
        raise ValueError(f"mode must be 'hod' or 'flat', got {mode!r}")
    topology = build_topology(
        rings=scenario.rings,
        sensors_per_cell=scenario.sensors_per_cell,
        cell_radius_m=scenario.cell_radius_m,
        seed=seed,
    )
    engine = Engine(
        topology,
        scenario.sim_config(),
        seed=seed,
        mode=mode,
        scenario_hash=scenario.scenario_hash(seed),
        config_echo=scenario.echo(),
    )
    if mode == "hod":
        HodMonitors(engine, scenario.thresholds)
    else:
        FlatMonitors(engine, scenario.thresholds)
    apply_attacks(engine, scenario.attacks)
    return engine.run(), topology


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
