"""Output-queued ports, store-and-forward switching, and queue telemetry.

Every directed link is realized as one output ``Port`` on the sending
node: a FIFO with a byte buffer limit, a line rate, and a pluggable
marking policy consulted at admission time.  Tail drop happens before the
policy sees the packet; marking applies only to admitted, ECN-capable
packets.  Host-side ports (the NIC) have no buffer limit and no policy;
the sender's window is what bounds them.

Monitored ports carry a ``PortTrace`` that records the queue evolution,
the telemetry stamps, and the ground-truth annotations (first-window
arrivals, per-round arrival spans, first drop/mark) that the analysis
stage uses for phase segmentation.
"""

from collections import deque

from .packets import DATA
from .units import NS_PER_S, quantize_down

ACCEPTED = 0
ACCEPTED_MARKED = 1
DROPPED = 2

TIME_QUANTUM_NS = 800   # telemetry timestamp register tick
QUEUE_QUANTUM_B = 8     # telemetry queue-length register granularity


def stamp_telemetry(pkt, now_ns: int, queue_bytes: int, fidelity: bool) -> None:
    """Attach (timestamp, pre-admission queue length) to a packet.

    Fidelity mode reproduces the register granularities of a hardware
    pipeline: 800 ns timestamp ticks and 8-byte queue counts, both
    truncating.  Exact mode records the raw integers.
    """
    if fidelity:
        pkt.telemetry_stamp = (quantize_down(now_ns, TIME_QUANTUM_NS),
                               quantize_down(queue_bytes, QUEUE_QUANTUM_B))
    else:
        pkt.telemetry_stamp = (now_ns, queue_bytes)


class PortTrace:
    """Event log and ground-truth annotations for one monitored port."""

    def __init__(self, port_id, fidelity=False, eligible_flows=None):
        self.port_id = port_id
        self.fidelity = fidelity
        self.eligible_flows = eligible_flows  # None means every flow
        self.rows = []          # (time_ns, queue_bytes, flow_id, event)
        self.times = []         # exact post-event occupancy samples
        self.occupancy = []
        self.first_window_last_arrival = {}   # flow_id -> last 1st-window arrival
        self.first_window_last_departure = {}  # flow_id -> last 1st-window dequeue
        self.first_window_bytes = 0
        self.first_window_first_ns = None
        self.first_window_last_ns = None
        self.round_spans = {}   # (flow_id, round) -> [first_ns, last_ns]
        self.first_drop_ns = None
        self.first_mark_ns = None

    def _eligible(self, pkt):
        return self.eligible_flows is None or pkt.flow_id in self.eligible_flows

    def record_enqueue(self, now, q_before, q_after, pkt, marked):
        self.times.append(now)
        self.occupancy.append(q_after)
        if pkt.kind == DATA and self._eligible(pkt):
            stamp_telemetry(pkt, now, q_before, self.fidelity)
            t_row, q_row = pkt.telemetry_stamp
        else:
            t_row, q_row = now, q_before
        self.rows.append((t_row, q_row, pkt.flow_id, "enqueue"))
        if marked:
            self.rows.append((now, q_before, pkt.flow_id, "mark"))
            if self.first_mark_ns is None:
                self.first_mark_ns = now
        if pkt.kind == DATA and pkt.send_round >= 0:
            if pkt.first_window:
                self.first_window_last_arrival[pkt.flow_id] = now
                self.first_window_bytes += pkt.size
                if self.first_window_first_ns is None:
                    self.first_window_first_ns = now
                self.first_window_last_ns = now
            span = self.round_spans.get((pkt.flow_id, pkt.send_round))
            if span is None:
                self.round_spans[(pkt.flow_id, pkt.send_round)] = [now, now]
            else:
                span[1] = now

    def record_dequeue(self, now, q_after, pkt):
        self.times.append(now)
        self.occupancy.append(q_after)
        self.rows.append((now, q_after, pkt.flow_id, "dequeue"))
        if pkt.kind == DATA and pkt.first_window:
            self.first_window_last_departure[pkt.flow_id] = now

    def record_drop(self, now, q_now, pkt):
        self.rows.append((now, q_now, pkt.flow_id, "drop"))
        if self.first_drop_ns is None:
            self.first_drop_ns = now


def _forward(now, arg):
    port, pkt = arg
    port.enqueue(pkt, now)


class Port:
    """One output port: FIFO queue draining at line rate."""

    __slots__ = ("port_id", "rate_bps", "buffer_limit", "policy", "engine",
                 "queue", "queue_bytes", "busy", "forward_ns", "deliver_fn",
                 "trace", "bytes_in", "bytes_out", "bytes_dropped",
                 "drops", "marks", "max_queue_bytes")

    def __init__(self, port_id, rate_bps, buffer_limit, policy, engine,
                 forward_ns=0, deliver_fn=None):
        self.port_id = port_id
        self.rate_bps = rate_bps
        self.buffer_limit = buffer_limit
        self.policy = policy
        self.engine = engine
        self.queue = deque()
        self.queue_bytes = 0
        self.busy = False
        self.forward_ns = forward_ns
        self.deliver_fn = deliver_fn
        self.trace = None
        self.bytes_in = 0
        self.bytes_out = 0
        self.bytes_dropped = 0
        self.drops = 0
        self.marks = 0
        self.max_queue_bytes = 0

    def _ser_ns(self, size):
        rate = self.rate_bps
        return (size * 8 * NS_PER_S + rate // 2) // rate

    def enqueue(self, pkt, now):
        size = pkt.size
        qb = self.queue_bytes
        lim = self.buffer_limit
        if lim is not None and qb + size > lim:
            self.drops += 1
            self.bytes_dropped += size
            self.engine.stats.packets_dropped += 1
            if self.trace is not None:
                self.trace.record_drop(now, qb, pkt)
            return DROPPED
        marked = False
        policy = self.policy
        if policy is not None and policy.decide(qb, size, now) and pkt.ecn_capable:
            pkt.ecn_marked = True
            marked = True
            self.marks += 1
            self.engine.stats.packets_marked += 1
        qb += size
        self.queue_bytes = qb
        self.bytes_in += size
        if qb > self.max_queue_bytes:
            self.max_queue_bytes = qb
        if self.trace is not None:
            self.trace.record_enqueue(now, qb - size, qb, pkt, marked)
        self.queue.append(pkt)
        if not self.busy:
            self.busy = True
            self.engine.schedule(now + self._ser_ns(size), self._tx_done, None)
        return ACCEPTED_MARKED if marked else ACCEPTED

    def _tx_done(self, now, _):
        queue = self.queue
        pkt = queue.popleft()
        self.queue_bytes -= pkt.size
        self.bytes_out += pkt.size
        if self.trace is not None:
            self.trace.record_dequeue(now, self.queue_bytes, pkt)
        if queue:
            self.engine.schedule(now + self._ser_ns(queue[0].size),
                                 self._tx_done, None)
        else:
            self.busy = False
        hop = pkt.hop + 1
        pkt.hop = hop
        route = pkt.route
        delay = self.forward_ns
        if hop < len(route):
            nxt = route[hop]
            if delay:
                self.engine.schedule(now + delay, _forward, (nxt, pkt))
            else:
                nxt.enqueue(pkt, now)
        else:
            if delay:
                self.engine.schedule(now + delay, self.deliver_fn, pkt)
            else:
                self.deliver_fn(now, pkt)

    def conservation_ok(self) -> bool:
        return self.bytes_in == self.bytes_out + self.queue_bytes
