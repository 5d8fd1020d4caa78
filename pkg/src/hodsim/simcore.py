"""Deterministic discrete-event core: clock, radio, energy, workload, windows.

Everything runs on an integer microsecond clock.  Events execute in strict
(time, sequence) order from a binary heap, so identical inputs replay to
byte-identical logs.  The engine is detection-agnostic: monitor layers (the
hierarchical overlay or the flat per-sensor baseline) attach as a hook object
and are invoked once per aggregation window.

Radio: log-distance path loss with optional gaussian shadowing per
transmission.  A packet is delivered iff its sampled RSSI clears the receiver
sensitivity and the signal-to-interference ratio clears the SINR threshold
against the noise floor plus any active jammers.  Two overlapping data-plane
transmissions to the same cluster node collide and both drop; scheduled
control-plane messages are modeled on a separate logical channel and do not
collide.

Energy: first-order radio model.  Transmit cost is e_elec * bits +
e_amp * bits * d^2, receive cost is e_elec * bits; monitors additionally pay a
fixed cost per detection-rule evaluation and every node pays a small idle cost
per window.  Every charge is logged, so meters can be audited against the
event trace.
"""

from __future__ import annotations

import enum
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable

from .mac import (
    SmacSchedule,
    TdmaSchedule,
    build_tdma,
    is_awake,
    next_compliant_slot,
)
from .topology import HexCoord, NodeRole, Topology

SimTime = int  # microseconds


# ============================================================================
# Radio and energy models
# ============================================================================


def power_sum_dbm(*levels_dbm: float) -> float:
    """Combine power levels in dBm (sum in linear milliwatts)."""
    return 10.0 * math.log10(sum(10.0 ** (v / 10.0) for v in levels_dbm))


@dataclass(frozen=True)
class RadioModel:
    path_loss_exponent: float = 2.4
    reference_loss_db: float = 40.0  # at 1 m
    noise_floor_dbm: float = -95.0
    rx_sensitivity_dbm: float = -85.0
    sinr_threshold_db: float = 6.0
    shadowing_sigma_db: float = 0.0
    short_range_m: float = 75.0
    tx_power_dbm: float = 0.0
    long_range_reliable: bool = True
    per_hop_latency_us: int = 2000
    airtime_us: int = 1000
    cs_busy_threshold_dbm: float = -90.0
    cs_turnaround_us: int = 128
    cs_busy_wait_us: int = 5000

    def path_loss_db(self, distance_m: float) -> float:
        # distances under the 1 m reference are clamped to the reference
        d = max(distance_m, 1.0)
        return self.reference_loss_db + 10.0 * self.path_loss_exponent * math.log10(d)

    def deterministic_rssi(self, distance_m: float, tx_power_dbm: float | None = None) -> float:
        p = self.tx_power_dbm if tx_power_dbm is None else tx_power_dbm
        return p - self.path_loss_db(distance_m)

    def rssi_at(
        self,
        distance_m: float,
        rng: random.Random,
        tx_power_dbm: float | None = None,
    ) -> float:
        """Sampled RSSI: deterministic path loss plus gaussian shadowing."""
        base = self.deterministic_rssi(distance_m, tx_power_dbm)
        if self.shadowing_sigma_db > 0.0:
            return base + rng.gauss(0.0, self.shadowing_sigma_db)
        return base


@dataclass(frozen=True)
class EnergyModel:
    e_elec_j_per_bit: float = 50e-9
    e_amp_j_per_bit_m2: float = 100e-12
    rule_eval_j: float = 5e-6
    idle_j_per_window: float = 1e-6
    packet_size_bits: int = 512

    def tx_energy_j(self, bits: int, distance_m: float) -> float:
        return self.e_elec_j_per_bit * bits + self.e_amp_j_per_bit_m2 * bits * distance_m**2

    def rx_energy_j(self, bits: int) -> float:
        return self.e_elec_j_per_bit * bits


@dataclass
class EnergyMeter:
    tx_j: float = 0.0
    rx_j: float = 0.0
    idle_j: float = 0.0
    rule_eval_j: float = 0.0

    @property
    def total_j(self) -> float:
        return self.tx_j + self.rx_j + self.idle_j + self.rule_eval_j


# ============================================================================
# Packets and log records
# ============================================================================


class PacketKind(enum.Enum):
    SENSOR_DATA = "SensorData"
    CLUSTER_REPORT = "ClusterReport"
    REGIONAL_ALARM = "RegionalAlarm"
    HEARTBEAT = "Heartbeat"
    ATTACK_TRAFFIC = "AttackTraffic"


class Outcome(enum.Enum):
    DELIVERED = "Delivered"
    OUT_OF_RANGE = "Dropped(OutOfRange)"
    JAMMED = "Dropped(Jammed)"
    COLLISION = "Dropped(Collision)"


@dataclass
class Packet:
    packet_id: int
    kind: PacketKind
    src: int  # claimed link-layer sender
    origin: int  # claimed original source
    dst: int
    created_at: SimTime
    size_bits: int
    path_so_far: list[int] = field(default_factory=list)
    payload: dict[str, Any] = field(default_factory=dict)
    control: bool = False  # IDS control plane (separate logical channel)
    long_range: bool = False
    mac_exempt: bool = False  # attack machinery bypasses sender-side MAC asserts
    phantom_pos: tuple[float, float] | None = None  # true tx position if forged


@dataclass
class TraceEvent:
    time_us: SimTime
    event_kind: str  # tx | rx | drop | idle | rule_eval | alert | anomaly
    src: int | None
    dst: int | None
    cell: HexCoord | None
    outcome: str
    rssi_dbm: float | None
    energy_uj: float
    packet_id: int | None = None
    pkt_kind: str = ""
    control: bool = False


@dataclass
class GroundTruthEvent:
    time_us: SimTime
    kind: str  # attack kind name
    target: str  # suspect string expected from a correct detector
    detail: str
    packet_id: int | None = None
    end_us: SimTime | None = None


@dataclass
class ChannelWindowStats:
    cell: HexCoord
    window: int
    sent: int
    delivered: int
    pdr: float
    mean_idle_rssi_dbm: float
    mean_carrier_sense_us: float


@dataclass
class MessageCounters:
    sent: dict[str, int] = field(default_factory=dict)
    received: dict[str, int] = field(default_factory=dict)
    control_sent: int = 0

    def total_sent(self) -> int:
        return sum(self.sent.values())


@dataclass
class RunLog:
    """Everything a finished run produced, sufficient for scoring and replay."""

    mode: str
    seed: int
    scenario_hash: str
    config_echo: dict[str, Any]
    horizon_us: SimTime
    window_us: SimTime
    n_windows: int
    events: list[TraceEvent] = field(default_factory=list)
    ground_truth: list[GroundTruthEvent] = field(default_factory=list)
    alerts: list[Any] = field(default_factory=list)  # detection.Alert, generation order
    base_received: list[Any] = field(default_factory=list)  # detection.BaseAlertRecord
    aggregated_alarms: list[dict[str, Any]] = field(default_factory=list)
    flat_anomalies: list[dict[str, Any]] = field(default_factory=list)
    window_stats: list[ChannelWindowStats] = field(default_factory=list)
    meters: dict[int, EnergyMeter] = field(default_factory=dict)
    counters: dict[int, MessageCounters] = field(default_factory=dict)
    delivered_packet_ids: set[int] = field(default_factory=set)


# ============================================================================
# Event queue
# ============================================================================


class EventQueue:
    """Min-heap of (time, seq, action); seq breaks ties in schedule order."""

    def __init__(self) -> None:
        self._heap: list[tuple[SimTime, int, Callable[[], None]]] = []
        self._seq = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, now: SimTime, t: SimTime, action: Callable[[], None]) -> None:
        if t < now:
            raise ValueError(f"cannot schedule event at {t} before current time {now}")
        heapq.heappush(self._heap, (t, self._seq, action))
        self._seq += 1

    def peek_time(self) -> SimTime | None:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> tuple[SimTime, int, Callable[[], None]]:
        return heapq.heappop(self._heap)


# ============================================================================
# Scenario-level configuration consumed by the engine
# ============================================================================


@dataclass(frozen=True)
class MacConfig:
    slot_duration_us: int = 10_000
    frame_length: int | None = None  # default: sensors_per_cell
    smac_period_us: int | None = None  # default: 2 * frame duration
    awake_fraction: float = 0.5
    phase_offset_us: int = 0


@dataclass(frozen=True)
class WorkloadConfig:
    report_interval_us: int = 1_000_000
    jitter_frac: float = 0.1
    sensors_enabled: bool = True


@dataclass(frozen=True)
class SimConfig:
    radio: RadioModel = RadioModel()
    energy: EnergyModel = EnergyModel()
    mac: MacConfig = MacConfig()
    workload: WorkloadConfig = WorkloadConfig()
    aggregation_window_us: int = 1_000_000
    horizon_windows: int = 30
    sensing_tick_us: int = 100_000
    drain_us: int = 50_000


@dataclass(frozen=True)
class InterferenceSource:
    x: float
    y: float
    power_dbm: float
    start_us: SimTime
    end_us: SimTime


class CompromiseMode(enum.Enum):
    SILENT = "Silent"
    FALSE_DATA = "FalseData"


@dataclass
class _PendingTx:
    start_us: SimTime
    end_us: SimTime
    packet: Packet
    rssi_dbm: float
    receiver: int
    in_range: bool


# ============================================================================
# Engine
# ============================================================================


class Engine:
    """Owns the clock, the radio, and all per-window accounting."""

    def __init__(
        self,
        topology: Topology,
        config: SimConfig,
        seed: int,
        mode: str = "hod",
        scenario_hash: str = "",
        config_echo: dict[str, Any] | None = None,
    ) -> None:
        self.topology = topology
        self.config = config
        self.seed = seed
        self.mode = mode
        self.now: SimTime = 0
        self.queue = EventQueue()
        self.monitors: Any = None

        self._shadow_rng = random.Random(f"{seed}|shadow")
        self._jitter_rng = random.Random(f"{seed}|jitter")
        self._idle_rng = random.Random(f"{seed}|idle-rssi")
        self._packet_seq = 0

        # per-cell schedules
        self.tdma: dict[HexCoord, TdmaSchedule] = {}
        self.smac: dict[HexCoord, SmacSchedule] = {}
        mac = config.mac
        for cell in topology.cells:
            sensors = topology.sensors_of(cell)
            frame_len = mac.frame_length if mac.frame_length is not None else len(sensors)
            tdma = build_tdma(sensors, frame_len, mac.slot_duration_us)
            period = (
                mac.smac_period_us
                if mac.smac_period_us is not None
                else 2 * tdma.frame_duration_us
            )
            self.tdma[cell] = tdma
            self.smac[cell] = SmacSchedule(
                period_us=period,
                awake_fraction=mac.awake_fraction,
                phase_offset_us=mac.phase_offset_us,
            )

        # attack state (populated by the attacks module before run())
        self.interference: list[InterferenceSource] = []
        self.compromise: dict[int, list[tuple[SimTime, SimTime, CompromiseMode]]] = {}
        self.route_overrides: dict[int, list[tuple[SimTime, SimTime, int]]] = {}

        # per-window accounting
        w = config.aggregation_window_us
        self.log = RunLog(
            mode=mode,
            seed=seed,
            scenario_hash=scenario_hash,
            config_echo=config_echo or {},
            horizon_us=w * config.horizon_windows,
            window_us=w,
            n_windows=config.horizon_windows,
        )
        for n in topology.nodes:
            self.log.meters[n.node_id] = EnergyMeter()
            self.log.counters[n.node_id] = MessageCounters()

        self._pending_by_receiver: dict[int, list[_PendingTx]] = {}
        self._cell_sent: dict[HexCoord, int] = {c: 0 for c in topology.cells}
        self._cell_delivered: dict[HexCoord, int] = {c: 0 for c in topology.cells}
        self._cell_cs_samples: dict[HexCoord, list[int]] = {c: [] for c in topology.cells}
        self.inboxes: dict[int, list[tuple[SimTime, Packet, float | None]]] = {
            m: [] for m in topology.monitor_ids()
        }
        self.overheard: dict[int, list[tuple[SimTime, Packet]]] = {}
        self.window_alert_counts: dict[int, int] = {}
        self.current_window_stats: dict[HexCoord, ChannelWindowStats] = {}

    # ------------------------------------------------------------------ utils

    def next_packet_id(self) -> int:
        pid = self._packet_seq
        self._packet_seq += 1
        return pid

    def schedule(self, t: SimTime, action: Callable[[], None]) -> None:
        self.queue.schedule(self.now, t, action)

    def window_of(self, t: SimTime) -> int:
        return t // self.config.aggregation_window_us

    def compromise_mode_at(self, node_id: int, t: SimTime) -> CompromiseMode | None:
        for start, end, cmode in self.compromise.get(node_id, ()):
            if start <= t < end:
                return cmode
        return None

    def route_override_at(self, victim: int, t: SimTime) -> int | None:
        for start, end, relay in self.route_overrides.get(victim, ()):
            if start <= t < end:
                return relay
        return None

    def interference_dbm_at(self, x: float, y: float, t0: SimTime, t1: SimTime | None = None) -> float:
        """Noise floor plus all jammers active anywhere in [t0, t1)."""
        t1 = t0 + 1 if t1 is None else t1
        levels = [self.config.radio.noise_floor_dbm]
        for src in self.interference:
            if src.start_us < t1 and src.end_us > t0:
                d = math.hypot(x - src.x, y - src.y)
                levels.append(self.config.radio.deterministic_rssi(d, src.power_dbm))
        return power_sum_dbm(*levels) if len(levels) > 1 else levels[0]

    # ----------------------------------------------------------------- energy

    def _charge(self, node_id: int, component: str, joules: float, log_event: bool = False) -> None:
        meter = self.log.meters[node_id]
        if component == "tx":
            meter.tx_j += joules
        elif component == "rx":
            meter.rx_j += joules
        elif component == "idle":
            meter.idle_j += joules
        else:
            meter.rule_eval_j += joules
        if log_event:
            self.log.events.append(
                TraceEvent(
                    time_us=self.now,
                    event_kind=component,
                    src=node_id,
                    dst=None,
                    cell=self.topology.node(node_id).cell,
                    outcome="",
                    rssi_dbm=None,
                    energy_uj=joules * 1e6,
                )
            )

    def charge_rule_evals(self, node_id: int, count: int) -> None:
        """Fixed per-rule-evaluation cost on the evaluating node."""
        if count <= 0:
            return
        self._charge(node_id, "rule_eval", self.config.energy.rule_eval_j * count, log_event=True)

    # ------------------------------------------------------------------- send

    def send(self, packet: Packet) -> bool:
        """Transmit a packet at the current time.  Returns False if suppressed.

        Silent-compromised nodes transmit nothing.  The sender pays transmit
        energy whether or not the packet will be delivered; delivery resolves
        one hop latency later.
        """
        radio = self.config.radio
        src_node = None
        if packet.phantom_pos is None:
            src_node = self.topology.node(packet.src)
            if self.compromise_mode_at(packet.src, self.now) is CompromiseMode.SILENT:
                return False
            if src_node.role is NodeRole.SENSOR and not packet.mac_exempt:
                # compliant sensors only transmit inside their wake window
                assert is_awake(self.smac[src_node.cell], self.now), (
                    f"sensor {packet.src} transmitting outside wake window at {self.now}"
                )
        tx_pos = packet.phantom_pos if packet.phantom_pos is not None else (src_node.x, src_node.y)
        dst_node = self.topology.node(packet.dst)
        distance = math.hypot(tx_pos[0] - dst_node.x, tx_pos[1] - dst_node.y)

        cell = src_node.cell if src_node is not None else None
        if src_node is not None:
            energy = self.config.energy.tx_energy_j(packet.size_bits, distance)
            self._charge(packet.src, "tx", energy)
            counters = self.log.counters[packet.src]
            counters.sent[packet.kind.value] = counters.sent.get(packet.kind.value, 0) + 1
            if packet.control:
                counters.control_sent += 1
            if cell is not None and not packet.long_range:
                self._cell_sent[cell] += 1
                if src_node.role is NodeRole.CLUSTER:
                    self._record_carrier_sense(cell, tx_pos)
        else:
            energy = 0.0  # external attacker hardware is not metered

        self.log.events.append(
            TraceEvent(
                time_us=self.now,
                event_kind="tx",
                src=packet.src,
                dst=packet.dst,
                cell=cell if cell is not None else self.topology.node(packet.origin).cell,
                outcome="",
                rssi_dbm=None,
                energy_uj=energy * 1e6,
                packet_id=packet.packet_id,
                pkt_kind=packet.kind.value,
                control=packet.control,
            )
        )

        if packet.long_range and radio.long_range_reliable:
            self.schedule(self.now + radio.per_hop_latency_us, lambda: self._deliver(packet, None))
            return True

        rssi = radio.rssi_at(distance, self._shadow_rng)
        pending = _PendingTx(
            start_us=self.now,
            end_us=self.now + radio.airtime_us,
            packet=packet,
            rssi_dbm=rssi,
            receiver=packet.dst,
            in_range=rssi >= radio.rx_sensitivity_dbm,
        )
        self._pending_by_receiver.setdefault(packet.dst, []).append(pending)
        self.schedule(self.now + radio.per_hop_latency_us, lambda: self._resolve(pending))
        return True

    def _record_carrier_sense(self, cell: HexCoord, pos: tuple[float, float]) -> None:
        radio = self.config.radio
        level = self.interference_dbm_at(pos[0], pos[1], self.now)
        wait = radio.cs_turnaround_us
        if level > radio.cs_busy_threshold_dbm:
            wait += radio.cs_busy_wait_us
        self._cell_cs_samples[cell].append(wait)

    def _collides(self, pending: _PendingTx) -> bool:
        # slot collisions only matter on the shared data channel into a cluster
        if pending.packet.control:
            return False
        if self.topology.node(pending.receiver).role is not NodeRole.CLUSTER:
            return False
        for other in self._pending_by_receiver.get(pending.receiver, ()):
            if other is pending or other.packet.control or not other.in_range:
                continue
            if other.start_us < pending.end_us and other.end_us > pending.start_us:
                return True
        return False

    def _resolve(self, pending: _PendingTx) -> None:
        radio = self.config.radio
        packet = pending.packet
        dst_node = self.topology.node(pending.receiver)
        outcome = Outcome.DELIVERED
        if not pending.in_range:
            outcome = Outcome.OUT_OF_RANGE
        else:
            interference = self.interference_dbm_at(
                dst_node.x, dst_node.y, pending.start_us, pending.end_us
            )
            if pending.rssi_dbm - interference < radio.sinr_threshold_db:
                outcome = Outcome.JAMMED
            elif self._collides(pending):
                outcome = Outcome.COLLISION

        src_node = self.topology.node(packet.src) if packet.phantom_pos is None else None
        cell = src_node.cell if src_node is not None else self.topology.node(packet.origin).cell
        if outcome is Outcome.DELIVERED:
            self._deliver(packet, pending.rssi_dbm, cell_of_tx=cell, counted=src_node is not None)
        else:
            self.log.events.append(
                TraceEvent(
                    time_us=self.now,
                    event_kind="drop",
                    src=packet.src,
                    dst=packet.dst,
                    cell=cell,
                    outcome=outcome.value,
                    rssi_dbm=pending.rssi_dbm,
                    energy_uj=0.0,
                    packet_id=packet.packet_id,
                    pkt_kind=packet.kind.value,
                )
            )
        self._overhear(pending)
        # prune expired pendings so collision scans stay O(recent)
        lst = self._pending_by_receiver.get(pending.receiver)
        if lst is not None:
            self._pending_by_receiver[pending.receiver] = [
                p for p in lst if p.end_us > self.now - 10 * radio.airtime_us
            ]

    def _deliver(
        self,
        packet: Packet,
        rssi: float | None,
        cell_of_tx: HexCoord | None = None,
        counted: bool = True,
    ) -> None:
        packet.path_so_far.append(packet.dst)
        dst = packet.dst
        self._charge(dst, "rx", self.config.energy.rx_energy_j(packet.size_bits))
        counters = self.log.counters[dst]
        counters.received[packet.kind.value] = counters.received.get(packet.kind.value, 0) + 1
        if counted and cell_of_tx is not None and not packet.long_range:
            self._cell_delivered[cell_of_tx] += 1
        self.log.delivered_packet_ids.add(packet.packet_id)
        self.log.events.append(
            TraceEvent(
                time_us=self.now,
                event_kind="rx",
                src=packet.src,
                dst=dst,
                cell=cell_of_tx,
                outcome=Outcome.DELIVERED.value,
                rssi_dbm=rssi,
                energy_uj=self.config.energy.rx_energy_j(packet.size_bits) * 1e6,
                packet_id=packet.packet_id,
                pkt_kind=packet.kind.value,
            )
        )
        if dst in self.inboxes:
            self.inboxes[dst].append((self.now, packet, rssi))
        dst_node = self.topology.node(dst)
        if dst_node.role is NodeRole.SENSOR and packet.kind is PacketKind.SENSOR_DATA:
            self._relay_onward(packet, dst)

    def _relay_onward(self, packet: Packet, relay: int) -> None:
        """Second hop of a detoured intra-cell route (attack machinery)."""
        victim = packet.origin
        cell = self.topology.node(victim).cell
        cluster = self.topology.cluster_of(cell)
        # forwarded inside the victim's own slot so only the route layer fires
        t = next_compliant_slot(self.tdma[cell], self.smac[cell], victim, self.now)
        hop2 = Packet(
            packet_id=packet.packet_id,
            kind=packet.kind,
            src=relay,
            origin=victim,
            dst=cluster,
            created_at=packet.created_at,
            size_bits=packet.size_bits,
            path_so_far=packet.path_so_far,
            payload=packet.payload,
            mac_exempt=True,
        )
        self.schedule(t, lambda: self.send(hop2))

    def _overhear(self, pending: _PendingTx) -> None:
        """Flat-baseline promiscuous listening on data-plane transmissions."""
        if not self.overheard:
            return
        packet = pending.packet
        if packet.kind not in (PacketKind.SENSOR_DATA, PacketKind.ATTACK_TRAFFIC):
            return
        radio = self.config.radio
        if packet.phantom_pos is not None:
            tx_pos = packet.phantom_pos
            true_src = None
        else:
            n = self.topology.node(packet.src)
            tx_pos = (n.x, n.y)
            true_src = packet.src
        for sensor_id in self.overheard:
            if sensor_id == true_src or sensor_id == packet.dst:
                continue
            node = self.topology.node(sensor_id)
            d = math.hypot(tx_pos[0] - node.x, tx_pos[1] - node.y)
            det = radio.deterministic_rssi(d)
            if det < radio.rx_sensitivity_dbm:
                continue
            interference = self.interference_dbm_at(node.x, node.y, pending.start_us, pending.end_us)
            if det - interference < radio.sinr_threshold_db:
                continue
            self._charge(sensor_id, "rx", self.config.energy.rx_energy_j(packet.size_bits))
            self.log.events.append(
                TraceEvent(
                    time_us=self.now,
                    event_kind="rx",
                    src=packet.src,
                    dst=sensor_id,
                    cell=node.cell,
                    outcome="Overheard",
                    rssi_dbm=det,
                    energy_uj=self.config.energy.rx_energy_j(packet.size_bits) * 1e6,
                    packet_id=packet.packet_id,
                    pkt_kind=packet.kind.value,
                )
            )
            self.overheard[sensor_id].append((self.now, packet))

    # ------------------------------------------------------------- run window

    def _collect_window_stats(self, window: int) -> None:
        radio = self.config.radio
        w_start = window * self.config.aggregation_window_us
        ticks = max(1, self.config.aggregation_window_us // self.config.sensing_tick_us)
        self.current_window_stats = {}
        for cell in self.topology.cells:
            cluster = self.topology.node(self.topology.cluster_of(cell))
            samples = []
            for i in range(ticks):
                t = w_start + i * self.config.sensing_tick_us
                level = self.interference_dbm_at(cluster.x, cluster.y, t)
                if radio.shadowing_sigma_db > 0.0:
                    level += self._idle_rng.gauss(0.0, radio.shadowing_sigma_db)
                samples.append(level)
            cs = self._cell_cs_samples[cell]
            sent = self._cell_sent[cell]
            delivered = self._cell_delivered[cell]
            stats = ChannelWindowStats(
                cell=cell,
                window=window,
                sent=sent,
                delivered=delivered,
                pdr=(delivered / sent) if sent else 1.0,
                mean_idle_rssi_dbm=sum(samples) / len(samples),
                mean_carrier_sense_us=(sum(cs) / len(cs)) if cs else float(radio.cs_turnaround_us),
            )
            self.current_window_stats[cell] = stats
            self.log.window_stats.append(stats)
            self._cell_sent[cell] = 0
            self._cell_delivered[cell] = 0
            self._cell_cs_samples[cell] = []

    def _window_boundary(self, window: int) -> None:
        self._collect_window_stats(window)
        idle = self.config.energy.idle_j_per_window
        if idle > 0.0:
            for n in self.topology.nodes:
                self._charge(n.node_id, "idle", idle, log_event=True)
        if self.monitors is not None:
            self.monitors.on_window_end(self, window)
        if self.mode == "hod":
            self._emit_data_reports(window)
        self.window_alert_counts = {}
        for inbox in self.inboxes.values():
            inbox.clear()
        for lst in self.overheard.values():
            lst.clear()

    def _emit_data_reports(self, window: int) -> None:
        """Data-plane periodic reports: cluster -> regional -> base."""
        topo = self.topology
        for cell in topo.cells:
            cluster = topo.cluster_of(cell)
            regional = topo.regional_of_cell(cell)
            self.send(
                Packet(
                    packet_id=self.next_packet_id(),
                    kind=PacketKind.CLUSTER_REPORT,
                    src=cluster,
                    origin=cluster,
                    dst=regional,
                    created_at=self.now,
                    size_bits=self.config.energy.packet_size_bits,
                    payload={
                        "window": window,
                        "alert_count": self.window_alert_counts.get(cluster, 0),
                    },
                )
            )
        for rid in sorted(topo.regional_by_region):
            regional = topo.regional_by_region[rid]
            self.send(
                Packet(
                    packet_id=self.next_packet_id(),
                    kind=PacketKind.REGIONAL_ALARM,
                    src=regional,
                    origin=regional,
                    dst=topo.base_id,
                    created_at=self.now,
                    size_bits=self.config.energy.packet_size_bits,
                    payload={"window": window},
                    long_range=True,
                )
            )

    def _plan_workload(self) -> None:
        wl = self.config.workload
        if not wl.sensors_enabled:
            return
        horizon = self.log.horizon_us
        interval = wl.report_interval_us
        jitter_span = int(interval * wl.jitter_frac)
        for cell in self.topology.cells:
            tdma = self.tdma[cell]
            smac = self.smac[cell]
            for sensor in self.topology.sensors_of(cell):
                k = 0
                while True:
                    nominal = k * interval
                    if nominal >= horizon:
                        break
                    jitter = self._jitter_rng.randint(-jitter_span, jitter_span) if jitter_span else 0
                    t = next_compliant_slot(tdma, smac, sensor, max(nominal + jitter, 0))
                    if t < horizon:
                        self._plan_sensor_send(sensor, cell, t)
                    k += 1

    def _plan_sensor_send(self, sensor: int, cell: HexCoord, t: SimTime) -> None:
        cluster = self.topology.cluster_of(cell)
        pid = self.next_packet_id()
        relay = self.route_override_at(sensor, t)
        dst = relay if relay is not None else cluster
        packet = Packet(
            packet_id=pid,
            kind=PacketKind.SENSOR_DATA,
            src=sensor,
            origin=sensor,
            dst=dst,
            created_at=t,
            size_bits=self.config.energy.packet_size_bits,
            payload={"seq": pid},
        )
        if relay is not None:
            self.log.ground_truth.append(
                GroundTruthEvent(
                    time_us=t,
                    kind="RouteDeviation",
                    target=f"node:{sensor}",
                    detail=f"detour via node {relay}",
                    packet_id=pid,
                )
            )
        self.schedule(t, lambda: self.send(packet))

    def run(self) -> RunLog:
        """Execute the scenario to its horizon and return the completed log."""
        if self.monitors is not None and getattr(self.monitors, "wants_overhear", False):
            self.overheard = {s: [] for s in self.topology.sensor_ids()}
        # boundaries are scheduled before the workload so that at an exact
        # boundary instant the window rolls over before any same-time send
        w = self.config.aggregation_window_us
        for window in range(self.config.horizon_windows):
            self.schedule((window + 1) * w, (lambda wi: lambda: self._window_boundary(wi))(window))
        self._plan_workload()
        t_end = self.log.horizon_us + self.config.drain_us
        while len(self.queue) > 0:
            t_next = self.queue.peek_time()
            if t_next is None or t_next > t_end:
                break
            t, _, action = self.queue.pop()
            assert t >= self.now, "event queue went backwards"
            self.now = t
            action()
        if self.monitors is not None:
            self.monitors.on_run_end(self)
        return self.log
