"""Named acceptance experiments: each check runs a scripted set of
simulations, compares the measurements against its stated tolerance, and
reports PASS/FAIL with the measured values.

These are the executable forms of the queue-dynamics laws and the marking
policy's suppression/equivalence claims; `microburst check <name>` and the
acceptance test suite both call them.
"""

import filecmp
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .analysis import (QueueTrace, first_window_rate, segment_phases,
                       slope_distribution, slope_upper_bound,
                       time_weighted_stddev)
from .config import RunConfig
from .marking import SlopeEcn, mark_probability_from_arrival
from .sim import run_simulation, write_outputs
from .units import GBPS


@dataclass
class CheckResult:
    name: str
    passed: bool
    lines: list = field(default_factory=list)

    def note(self, ok, text):
        self.passed = self.passed and bool(ok)
        self.lines.append(f"{'ok  ' if ok else 'FAIL'} {text}")


def _phase2_slope(res, port="root->t4"):
    trace = QueueTrace.from_port_trace(res.traces[port])
    report = segment_phases(trace, res.first_ece_cut_ns)
    return report, trace


# -- queue-dynamics laws -------------------------------------------------------


def check_law1(base_seed=1, repetitions=20):
    """Sync fan-in without background: growth slope equals the port rate."""
    result = CheckResult("law1", True)
    slopes = []
    for i in range(repetitions):
        cfg = RunConfig(seed=base_seed + i, protocol="TCP",
                        scenario={"kind": "sync_fanin", "n": 18,
                                  "response_bytes": 1_000_000,
                                  "jitter_ns": 20_000},
                        duration_ns=6_000_000)
        report, _ = _phase2_slope(run_simulation(cfg))
        slopes.append(report.phase2.slope_bps)
    dist = slope_distribution(slopes)
    gbps = [s / 1e9 for s in slopes]
    result.note(all(0.95 <= g <= 1.05 for g in gbps),
                f"every slope in [0.95, 1.05] Gbps: min {min(gbps):.3f}, "
                f"max {max(gbps):.3f} over {repetitions} runs")
    result.note(dist["cv"] < 0.05,
                f"coefficient of variation {dist['cv']:.4f} < 0.05 "
                f"(mean {dist['mean_bps'] / 1e9:.3f} Gbps)")
    return result


def check_law2(base_seed=1, repetitions=10):
    """A full-window background flow caps growth below the port rate."""
    result = CheckResult("law2", True)
    slopes = []
    for i in range(repetitions):
        cfg = RunConfig(seed=base_seed + i, protocol="TCP",
                        scenario={"kind": "one_background", "fanin_count": 8,
                                  "response_bytes": 1_000_000,
                                  "delay_ns": 20_000_000, "jitter_ns": 20_000},
                        duration_ns=34_000_000)
        report, _ = _phase2_slope(run_simulation(cfg))
        slopes.append(report.phase2.slope_bps / 1e9)
    result.note(all(s < 0.95 for s in slopes),
                f"every slope < 0.95 Gbps: values "
                f"{[round(s, 3) for s in slopes]}")
    return result


def check_law3(base_seed=1, repetitions=5):
    """Hidden upstream buffer: slope grows with the upstream buffer size and
    stays below 2aR/(a+R)."""
    result = CheckResult("law3", True)
    means = {}
    bound_ok = True
    bound_text = []
    for tor_kb in (128, 256, 512):
        slopes = []
        for i in range(repetitions):
            cfg = RunConfig(seed=base_seed + i, protocol="TCP",
                            scenario={"kind": "background_prev_hop",
                                      "fanin_count": 6,
                                      "response_bytes": 1_000_000,
                                      "delay_ns": 40_000_000,
                                      "jitter_ns": 20_000},
                            duration_ns=60_000_000,
                            tor_uplink_buffer_bytes=tor_kb * 1000,
                            max_cwnd_packets=256)
            res = run_simulation(cfg)
            report, trace = _phase2_slope(res)
            slope = report.phase2.slope_bps
            slopes.append(slope)
            a = first_window_rate(trace)
            bound = slope_upper_bound(a, GBPS)
            if slope > 1.05 * bound:
                bound_ok = False
            bound_text.append(f"{slope / 1e9:.3f}<=1.05*{bound / 1e9:.3f}")
        means[tor_kb] = float(np.mean(slopes))
    m = {k: round(v / 1e9, 3) for k, v in means.items()}
    result.note(means[128] < means[256] < means[512],
                f"mean slope strictly increasing with upstream buffer: {m}")
    result.note(bound_ok, f"every slope within 1.05x of 2aR/(a+R) "
                          f"[{bound_text[0]} ... {bound_text[-1]}]")
    return result


# -- marking-policy behavior ---------------------------------------------------

_SUPPRESSION_SCENARIO = {"kind": "sync_fanin", "n": 9,
                         "response_bytes": 20_000_000, "jitter_ns": 20_000}


def _burst_run(protocol, seed=1):
    cfg = RunConfig(seed=seed, protocol=protocol,
                    scenario=dict(_SUPPRESSION_SCENARIO),
                    duration_ns=60_000_000, stddev_after_ns=10_000_000)
    return run_simulation(cfg)


def check_overshoot(base_seed=1):
    """Threshold marking overshoots: queue exceeds twice the threshold."""
    result = CheckResult("overshoot", True)
    res = _burst_run("ECN*", base_seed)
    maxq = res.ports["root->t4"]["max_queue_bytes"]
    result.note(maxq >= 64_000,
                f"ECN* max queue {maxq} B >= 64000 B (2x threshold)")
    return result


def check_suppression(base_seed=1):
    """Slope marking at least halves the threshold-marking peak."""
    result = CheckResult("suppression", True)
    peak = {p: _burst_run(p, base_seed).ports["root->t4"]["max_queue_bytes"]
            for p in ("ECN*", "S-ECN", "SL-ECN")}
    result.note(peak["S-ECN"] <= 0.5 * peak["ECN*"],
                f"S-ECN peak {peak['S-ECN']} <= 50% of ECN* peak {peak['ECN*']}")
    result.note(abs(peak["SL-ECN"] - peak["S-ECN"]) <= 0.15 * peak["S-ECN"],
                f"SL-ECN peak {peak['SL-ECN']} within 15% of S-ECN peak "
                f"{peak['S-ECN']}")
    return result


def check_dctcp(base_seed=1):
    """Slope marking under DCTCP: lower peak and steadier converged queue."""
    result = CheckResult("dctcp", True)
    runs = {p: _burst_run(p, base_seed) for p in ("DCTCP", "DCTCP+SL-ECN")}
    peak = {p: r.ports["root->t4"]["max_queue_bytes"] for p, r in runs.items()}
    result.note(peak["DCTCP+SL-ECN"] <= 0.6 * peak["DCTCP"],
                f"DCTCP+SL-ECN peak {peak['DCTCP+SL-ECN']} <= 60% of "
                f"DCTCP peak {peak['DCTCP']}")
    stddev = {}
    for p, r in runs.items():
        trace = QueueTrace.from_port_trace(r.traces["root->t4"])
        stddev[p] = time_weighted_stddev(trace, 10_000_000, r.end_ns)
    result.note(stddev["DCTCP+SL-ECN"] < stddev["DCTCP"],
                f"post-slow-start stddev {stddev['DCTCP+SL-ECN']:.0f} B < "
                f"{stddev['DCTCP']:.0f} B")
    return result


def check_equivalence(base_seed=1, packets=10_000):
    """Accumulator marking matches the per-packet probability expectation."""
    result = CheckResult("equivalence", True)
    mss = 1500
    cases = [(1.0, 0.0), (1.25, 0.25), (1.5, 0.5), (1.75, 0.75), (2.0, 1.0)]
    for mult, expected in cases:
        gap = int(round(mss * 8e9 / (mult * GBPS)))
        policy = SlopeEcn(GBPS)
        marks = 0
        oracle = 0.0
        prev = None
        for i in range(packets):
            t = i * gap
            if policy.decide(0, mss, t):
                marks += 1
            if prev is not None:
                oracle += mark_probability_from_arrival(mss, t - prev, GBPS)
            prev = t
        frac = marks / packets
        result.note(abs(frac - expected) <= 0.05,
                    f"rate {mult:.2f}R: marked fraction {frac:.3f} vs "
                    f"expectation {expected:.2f} (oracle sum {oracle / packets:.3f})")
        if mult <= 1.0:
            result.note(marks == 0, f"rate {mult:.2f}R: zero marks at or "
                                    f"below line rate ({marks})")
    # below line rate: never marks
    policy = SlopeEcn(GBPS)
    gap = int(round(mss * 8e9 / (0.8 * GBPS)))
    marks = sum(bool(policy.decide(0, mss, i * gap)) for i in range(packets))
    result.note(marks == 0, f"rate 0.80R: zero marks ({marks})")
    return result


def check_utilization(base_seed=1):
    """Three saturating flows: DCTCP+SL-ECN keeps goodput above 900 Mbps
    while halving-based hosts with slope marking fall short of it."""
    result = CheckResult("utilization", True)
    goodput = {}
    for protocol in ("DCTCP+SL-ECN", "S-ECN", "SL-ECN"):
        cfg = RunConfig(seed=base_seed, protocol=protocol,
                        scenario={"kind": "long_flow_batches", "batch": 3,
                                  "interval_ns": 1_000_000_000, "batches": 1},
                        duration_ns=1_000_000_000, telemetry_mode="off")
        res = run_simulation(cfg)
        delivered = sum(f.delivered_bytes for f in res.flows)
        goodput[protocol] = delivered * 8e3 / res.end_ns
    g = {k: round(v, 1) for k, v in goodput.items()}
    result.note(goodput["DCTCP+SL-ECN"] > 900,
                f"DCTCP+SL-ECN goodput {g['DCTCP+SL-ECN']} Mbps > 900 Mbps")
    result.note(goodput["S-ECN"] < goodput["DCTCP+SL-ECN"],
                f"S-ECN {g['S-ECN']} < DCTCP+SL-ECN {g['DCTCP+SL-ECN']} Mbps")
    result.note(goodput["SL-ECN"] < goodput["DCTCP+SL-ECN"],
                f"SL-ECN {g['SL-ECN']} < DCTCP+SL-ECN {g['DCTCP+SL-ECN']} Mbps")
    return result


def _incast_goodput_mbps(protocol, n, seed):
    cfg = RunConfig(seed=seed, protocol=protocol,
                    scenario={"kind": "incast", "n": n,
                              "mode": "fixed_response",
                              "response_bytes": 64_000},
                    buffer_bytes=128_000, telemetry_mode="off")
    res = run_simulation(cfg)
    ends = [f.end_ns for f in res.flows]
    if any(e is None for e in ends):
        return 0.0
    span = max(ends) - min(f.start_ns for f in res.flows)
    return sum(f.size_bytes for f in res.flows) * 8e3 / span


def _collapse_onset(protocol, ns, seed):
    goodputs = {n: _incast_goodput_mbps(protocol, n, seed) for n in ns}
    plateau = max(list(goodputs.values())[:3])
    for n, g in goodputs.items():
        if g < 0.5 * plateau:
            return n
    return None


def check_incast(base_seed=1):
    """Collapse-onset ordering across the protocol matrix."""
    result = CheckResult("incast", True)
    ns = list(range(2, 51, 2))
    onset = {p: _collapse_onset(p, ns, base_seed)
             for p in ("TCP", "ECN*", "SL-ECN", "DCTCP", "DCTCP+SL-ECN")}

    def val(p):
        return onset[p] if onset[p] is not None else float("inf")

    text = {p: (o if o is not None else "none<=50") for p, o in onset.items()}
    result.note(val("TCP") <= val("ECN*") <= val("SL-ECN"),
                f"onset ordering TCP <= ECN* <= SL-ECN: {text['TCP']} <= "
                f"{text['ECN*']} <= {text['SL-ECN']}")
    result.note(val("DCTCP") <= val("DCTCP+SL-ECN"),
                f"onset ordering DCTCP <= DCTCP+SL-ECN: {text['DCTCP']} <= "
                f"{text['DCTCP+SL-ECN']}")
    return result


def check_pacing(base_seed=1):
    """Pacing does not tame the fan-in peak: heights within 10%."""
    result = CheckResult("pacing", True)
    peaks = {}
    for pacing in (False, True):
        cfg = RunConfig(seed=base_seed, protocol="TCP",
                        scenario={"kind": "incast", "n": 40,
                                  "mode": "fixed_response",
                                  "response_bytes": 64_000},
                        buffer_bytes=128_000, pacing=pacing,
                        telemetry_mode="off")
        res = run_simulation(cfg)
        peaks[pacing] = res.ports["root->t4"]["max_queue_bytes"]
    diff = abs(peaks[True] - peaks[False])
    result.note(diff < 0.10 * peaks[False],
                f"max queue paced {peaks[True]} vs unpaced {peaks[False]}: "
                f"difference {diff} B < 10%")
    return result


def check_workload(base_seed=1, seeds=10):
    """Reduced-scale web-search workload: slope marking lowers query
    completion times under DCTCP hosts."""
    result = CheckResult("workload", True)
    pools = {}
    for protocol in ("DCTCP", "DCTCP+SL-ECN"):
        qcts = []
        for i in range(seeds):
            cfg = RunConfig(seed=base_seed + i, protocol=protocol,
                            scenario={"kind": "websearch", "load": 0.4,
                                      "duration_ns": 10_000_000_000,
                                      "query_fraction": 0.5},
                            duration_ns=10_000_000_000,
                            drain_grace_ns=1_000_000_000,
                            buffer_bytes=128_000, max_cwnd_packets=32,
                            telemetry_mode="off")
            res = run_simulation(cfg)
            qcts += [q for _, _, _, q in res.query_completions()
                     if q is not None]
        pools[protocol] = np.asarray(qcts, dtype=np.float64)
    base, slope = pools["DCTCP"], pools["DCTCP+SL-ECN"]
    mean_gain = 1 - slope.mean() / base.mean()
    p99_base = float(np.percentile(base, 99))
    p99_slope = float(np.percentile(slope, 99))
    p99_gain = 1 - p99_slope / p99_base
    result.note(slope.mean() < base.mean(),
                f"mean QCT {slope.mean() / 1e6:.3f} ms < "
                f"{base.mean() / 1e6:.3f} ms ({mean_gain * 100:.1f}% lower)")
    result.note(p99_slope < p99_base,
                f"p99 QCT {p99_slope / 1e6:.3f} ms < {p99_base / 1e6:.3f} ms")
    result.note(p99_gain >= 0.05,
                f"p99 QCT improvement {p99_gain * 100:.1f}% >= 5% "
                f"({len(base)} queries per protocol, {seeds} seeds)")
    return result


def check_determinism(base_seed=1):
    """Identical (config, seed) produces byte-identical outputs."""
    result = CheckResult("determinism", True)
    cfg_kwargs = dict(seed=base_seed, protocol="SL-ECN",
                      scenario={"kind": "sync_fanin", "n": 18,
                                "response_bytes": 1_000_000,
                                "jitter_ns": 20_000},
                      duration_ns=6_000_000)
    with tempfile.TemporaryDirectory() as tmp:
        dirs = []
        for i in (0, 1):
            out = os.path.join(tmp, f"run{i}")
            write_outputs(run_simulation(RunConfig(**cfg_kwargs)), out)
            dirs.append(out)
        for name in ("trace.csv", "metrics.csv", "flows.csv", "summary.txt"):
            same = filecmp.cmp(os.path.join(dirs[0], name),
                               os.path.join(dirs[1], name), shallow=False)
            result.note(same, f"{name} byte-identical across repeated runs")
    return result


CHECKS = {
    "law1": check_law1,
    "law2": check_law2,
    "law3": check_law3,
    "overshoot": check_overshoot,
    "suppression": check_suppression,
    "dctcp": check_dctcp,
    "equivalence": check_equivalence,
    "utilization": check_utilization,
    "incast": check_incast,
    "pacing": check_pacing,
    "workload": check_workload,
    "determinism": check_determinism,
}


def run_check(name, base_seed=1):
    fn = CHECKS.get(name)
    if fn is None:
        raise KeyError(f"unknown check {name!r}; available: "
                       f"{', '.join(sorted(CHECKS))}")
    return fn(base_seed=base_seed)
