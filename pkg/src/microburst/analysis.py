"""Post-processing of queue traces: phase segmentation, slope fitting,
slope distributions, and flow/query metrics.

Phase boundaries come from ground-truth annotations recorded during the
run, not from change-point inference: the first growth phase ends when the
last first-window packet reaches the monitored port, and the second ends
at the first congestion reaction (drop at the port or mark-induced window
cut), falling back to the time the queue peaks.
"""

from dataclasses import dataclass

import numpy as np

from .units import NS_PER_S


class InsufficientData(Exception):
    """Too few trace samples in the requested window."""


@dataclass
class QueueTrace:
    """Time-ordered occupancy samples of one port plus annotations."""
    port_id: str
    times: np.ndarray          # ns, post-event sample times
    occupancy: np.ndarray      # bytes after each event
    annotations: object        # the recording PortTrace

    @classmethod
    def from_port_trace(cls, pt):
        return cls(pt.port_id, np.asarray(pt.times, dtype=np.int64),
                   np.asarray(pt.occupancy, dtype=np.int64), pt)

    def occupancy_at(self, t_ns):
        idx = np.searchsorted(self.times, t_ns, side="right") - 1
        return 0 if idx < 0 else int(self.occupancy[idx])


@dataclass
class Phase:
    start_ns: int
    end_ns: int
    slope_bps: float
    height_bytes: int = 0


@dataclass
class PhaseReport:
    phase1: Phase
    phase2: Phase              # None when the burst ends before phase 2
    later_phases: list


def fit_slope(trace: QueueTrace, window) -> float:
    """Least-squares slope of queue length over [start, end], in bits/s."""
    start, end = window
    lo = np.searchsorted(trace.times, start, side="left")
    hi = np.searchsorted(trace.times, end, side="right")
    t = trace.times[lo:hi].astype(np.float64)
    q = trace.occupancy[lo:hi].astype(np.float64)
    if len(t) < 2 or t[0] == t[-1]:
        raise InsufficientData(f"{len(t)} samples in window {window}")
    t -= t.mean()
    q -= q.mean()
    slope_bytes_per_ns = float(np.dot(t, q) / np.dot(t, t))
    return slope_bytes_per_ns * 8.0 * NS_PER_S


def slope_upper_bound(first_round_rate_bps: float, port_rate_bps: float) -> float:
    """Growth-rate cap when an upstream queue drains into the port:
    2*a*R / (a + R) with a the first-round arrival rate."""
    a, r = first_round_rate_bps, port_rate_bps
    if a <= 0 or r <= 0:
        raise ValueError("rates must be positive")
    return 2.0 * a * r / (a + r)


def first_window_rate(trace: QueueTrace) -> float:
    """Measured arrival rate of first-window packets at the port, bits/s."""
    ann = trace.annotations
    if ann.first_window_first_ns is None or ann.first_window_bytes == 0:
        raise InsufficientData("no first-window packets observed")
    span = ann.first_window_last_ns - ann.first_window_first_ns
    if span <= 0:
        raise InsufficientData("first-window span is empty")
    return ann.first_window_bytes * 8.0 * NS_PER_S / span


def segment_phases(trace: QueueTrace, first_cut_ns=None) -> PhaseReport:
    """Split the burst onset into its growth phases using annotations.

    The first phase ends when the last first-window packet has cleared the
    monitored port (its dequeue): with store-and-forward switching, bursts
    parked in upstream queues keep feeding the port above its drain rate
    until then, so the arrival of the last first-window packet would cut
    the boundary too early.
    """
    ann = trace.annotations
    if not ann.first_window_last_arrival:
        raise InsufficientData("trace has no first-window annotations")
    p1_start = ann.first_window_first_ns
    if ann.first_window_last_departure:
        p1_end = max(ann.first_window_last_departure.values())
    else:
        p1_end = max(ann.first_window_last_arrival.values())
    base = trace.occupancy_at(p1_start - 1)
    try:
        p1_slope = fit_slope(trace, (p1_start, p1_end))
    except InsufficientData:
        p1_slope = 0.0
    phase1 = Phase(p1_start, p1_end, p1_slope,
                   trace.occupancy_at(p1_end) - base)

    candidates = []
    if ann.first_drop_ns is not None and ann.first_drop_ns > p1_end:
        candidates.append(ann.first_drop_ns)
    if first_cut_ns is not None and first_cut_ns > p1_end:
        candidates.append(first_cut_ns)
    lo = np.searchsorted(trace.times, p1_end, side="right")
    if lo < len(trace.times):
        peak = lo + int(np.argmax(trace.occupancy[lo:]))
        # growth stop counts only if the queue actually kept growing
        if trace.occupancy[peak] > trace.occupancy_at(p1_end):
            candidates.append(int(trace.times[peak]))
    phase2 = None
    if candidates:
        p2_end = min(candidates)
        try:
            phase2 = Phase(p1_end, p2_end, fit_slope(trace, (p1_end, p2_end)))
        except InsufficientData:
            phase2 = None

    # later growth phases: arrival spans of the following send rounds,
    # separated by the pauses while each round's ACKs travel back
    later = []
    spans = {}
    for (flow, rnd), (lo_ns, hi_ns) in ann.round_spans.items():
        if rnd == 0:
            continue
        cur = spans.get(rnd)
        if cur is None:
            spans[rnd] = [lo_ns, hi_ns]
        else:
            cur[0] = min(cur[0], lo_ns)
            cur[1] = max(cur[1], hi_ns)
    for rnd in sorted(spans)[:16]:
        lo_ns, hi_ns = spans[rnd]
        try:
            later.append(Phase(lo_ns, hi_ns,
                               fit_slope(trace, (lo_ns, hi_ns))))
        except InsufficientData:
            continue
    return PhaseReport(phase1, phase2, later)


def slope_distribution(slopes_bps) -> dict:
    """Sorted slopes with mean and coefficient of variation."""
    if len(slopes_bps) == 0:
        raise InsufficientData("no slopes")
    arr = np.sort(np.asarray(slopes_bps, dtype=np.float64))
    mean = float(arr.mean())
    cv = float(arr.std() / mean) if mean else float("inf")
    return {"slopes_bps": arr, "mean_bps": mean, "cv": cv}


def time_weighted_stddev(trace: QueueTrace, t0_ns, t1_ns) -> float:
    """Stddev of the queue-length step function over [t0, t1], bytes."""
    if t1_ns <= t0_ns:
        raise InsufficientData("empty stddev window")
    lo = np.searchsorted(trace.times, t0_ns, side="right")
    hi = np.searchsorted(trace.times, t1_ns, side="right")
    times = np.concatenate(([t0_ns], trace.times[lo:hi], [t1_ns])).astype(np.float64)
    start_occ = trace.occupancy_at(t0_ns)
    occ = np.concatenate(([start_occ], trace.occupancy[lo:hi])).astype(np.float64)
    widths = np.diff(times)
    total = widths.sum()
    if total <= 0:
        raise InsufficientData("empty stddev window")
    mean = float((occ * widths).sum() / total)
    var = float((widths * (occ - mean) ** 2).sum() / total)
    return var ** 0.5


def _percentile(values, pct):
    return float(np.percentile(np.asarray(values, dtype=np.float64), pct))


def compute_metrics(result) -> dict:
    """Long-form metric rows for one finished run."""
    cfg = result.cfg
    s = result.summary
    metrics = {
        "events_dispatched": s.events_dispatched,
        "packets_sent": s.packets_sent,
        "packets_delivered": s.packets_delivered,
        "packets_dropped": s.packets_dropped,
        "packets_marked": s.packets_marked,
    }
    flows = result.flows
    completed = [f for f in flows if f.end_ns is not None]
    metrics["flows_total"] = len(flows)
    metrics["flows_completed"] = len(completed)

    delivered = sum(f.delivered_bytes for f in flows)
    if flows:
        start = min(f.start_ns for f in flows)
        if completed and len(completed) == len(flows):
            end = max(f.end_ns for f in completed)
        else:
            end = result.end_ns
        span = max(end - start, 1)
        metrics["goodput_mbps"] = round(delivered * 8e3 / span, 3)
        metrics["measure_span_ns"] = span

    if completed:
        fcts = [f.end_ns - f.start_ns for f in completed]
        metrics["fct_mean_ns"] = int(np.mean(fcts))
        metrics["fct_p99_ns"] = int(_percentile(fcts, 99))

    qcts = [qct for _, _, _, qct in result.query_completions() if qct is not None]
    if qcts:
        metrics["queries_total"] = len(result.queries)
        metrics["queries_completed"] = len(qcts)
        metrics["qct_mean_ns"] = int(np.mean(qcts))
        metrics["qct_p99_ns"] = int(_percentile(qcts, 99))

    for port_id in sorted(result.ports):
        snap = result.ports[port_id]
        if port_id in result.traces or snap["max_queue_bytes"] > 0:
            metrics[f"max_queue_bytes[{port_id}]"] = snap["max_queue_bytes"]

    for port_id in sorted(result.traces):
        trace = QueueTrace.from_port_trace(result.traces[port_id])
        if len(trace.times) == 0:
            continue
        t0 = cfg.stddev_after_ns
        t1 = result.end_ns
        if t1 > t0:
            try:
                metrics[f"queue_stddev_bytes[{port_id}]"] = round(
                    time_weighted_stddev(trace, t0, t1), 3)
            except InsufficientData:
                pass
        try:
            report = segment_phases(trace, result.first_ece_cut_ns)
            metrics[f"phase1_end_ns[{port_id}]"] = report.phase1.end_ns
            metrics[f"phase1_height_bytes[{port_id}]"] = report.phase1.height_bytes
            if report.phase2 is not None:
                metrics[f"phase2_slope_gbps[{port_id}]"] = round(
                    report.phase2.slope_bps / 1e9, 3)
        except InsufficientData:
            pass
    return metrics
