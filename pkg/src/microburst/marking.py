"""Admission-time marking policies for switch output ports.

Four policies are pluggable per port:

* ``TailDrop``      -- never marks (drops happen upstream of any policy).
* ``ThresholdEcn``  -- mark when the instantaneous queue exceeds a threshold.
* ``SlopeEcn``      -- mark in proportion to the queue-growth slope, realized
                       divider-free with a byte accumulator.
* ``SlopeThresholdEcn`` -- slope marking below the threshold, mark-all above.

The slope policy infers the instantaneous arrival rate from each packet's
size P and the inter-arrival gap I: arrival rate P/I against drain rate R
gives a growth slope s = P/I - R and a marking probability

    prob = 0            if s <= 0
    prob = s / R        if 0 < s < R
    prob = 1            if s >= R

equivalently, in per-arrival byte units,

    prob = 0                      if P <= R*I
    prob = (P - R*I) / (R*I)      if R*I < P < 2*R*I
    prob = 1                      if P >= 2*R*I

The deterministic accumulator adds (P - R*I) per packet and marks when the
sum exceeds R*I.  Two details differ from a bare running sum and are
config-toggleable (see ``SlopeEcn``):

* on a mark the threshold amount is subtracted instead of zeroing the sum,
  so the long-run marked fraction converges to the mean per-packet
  probability instead of undershooting it;
* the per-packet increment is capped at R*I (probability mass of one mark),
  so a transient arrival burst above 2x line rate cannot bank unbounded
  marking debt.
"""

import random

from .units import rate_time_to_bytes


class InvalidRate(Exception):
    """Port rate must be positive."""


class NoPreviousArrival(Exception):
    """First arrival at a port has no inter-arrival gap; treat as prob 0."""


def mark_probability_from_slope(slope_bps: float, rate_bps: float) -> float:
    """Marking probability as a function of queue-growth slope."""
    if rate_bps <= 0:
        raise InvalidRate(f"rate must be > 0, got {rate_bps}")
    if slope_bps <= 0:
        return 0.0
    if slope_bps >= rate_bps:
        return 1.0
    return slope_bps / rate_bps


def mark_probability_from_arrival(pkt_bytes: int, interarrival_ns, rate_bps: int) -> float:
    """Per-arrival form of the slope probability, in byte units.

    `interarrival_ns` of None means this is the first packet seen at the
    port; the caller must treat that as probability 0.
    """
    if rate_bps <= 0:
        raise InvalidRate(f"rate must be > 0, got {rate_bps}")
    if interarrival_ns is None:
        raise NoPreviousArrival("no previous arrival at this port")
    ri = rate_time_to_bytes(rate_bps, interarrival_ns)
    if pkt_bytes <= ri:
        return 0.0
    if pkt_bytes >= 2 * ri:
        return 1.0
    return (pkt_bytes - ri) / ri


def threshold_overshoot_bytes(threshold_bytes: int, rate_bps: int, rtt_ns: int) -> float:
    """Minimum queue overshoot before the first sender reacts to a
    threshold mark, assuming the queue keeps growing at the port rate:
    2*threshold + R*RTT."""
    return 2 * threshold_bytes + rate_bps * rtt_ns / (8 * 1e9)


class TailDrop:
    """No marking at all; overflow handling lives in the port."""

    __slots__ = ()

    def decide(self, queue_bytes, pkt_bytes, now_ns):
        return False


class ThresholdEcn:
    """Mark iff the instantaneous queue exceeds the threshold (stateless)."""

    __slots__ = ("threshold_bytes",)

    def __init__(self, threshold_bytes: int):
        self.threshold_bytes = threshold_bytes

    def decide(self, queue_bytes, pkt_bytes, now_ns):
        return queue_bytes > self.threshold_bytes


class SlopeEcn:
    """Deterministic divider-free slope marking (byte accumulator).

    accumulator += P - R*I per arrival; mark when accumulator > R*I.
    State volume is one signed counter and the last arrival time, as a
    switch pipeline would keep per port.

    `carry_remainder` subtracts R*I on a mark (default) instead of zeroing;
    `clamp_at_zero` floors the accumulator so idle periods do not bank
    negative credit; `mark_next` delays the mark decision one packet (the
    alternative reading of "the next packet will be marked").
    """

    __slots__ = ("rate_bps", "accumulator", "last_arrival_ns",
                 "carry_remainder", "clamp_at_zero", "mark_next", "_pending")

    def __init__(self, rate_bps: int, carry_remainder: bool = True,
                 clamp_at_zero: bool = True, mark_next: bool = False):
        if rate_bps <= 0:
            raise InvalidRate(f"rate must be > 0, got {rate_bps}")
        self.rate_bps = rate_bps
        self.accumulator = 0
        self.last_arrival_ns = None
        self.carry_remainder = carry_remainder
        self.clamp_at_zero = clamp_at_zero
        self.mark_next = mark_next
        self._pending = False

    def reset_on_external_mark(self, now_ns):
        """A mark decided outside the slope scheme (hybrid threshold branch)
        still consumes the accumulated debt and advances the arrival chain."""
        self.last_arrival_ns = now_ns
        self.accumulator = 0
        self._pending = False

    def decide(self, queue_bytes, pkt_bytes, now_ns):
        last = self.last_arrival_ns
        self.last_arrival_ns = now_ns
        if last is None:
            return False
        ri = rate_time_to_bytes(self.rate_bps, now_ns - last)
        if ri == 0:
            # Two arrivals in the same nanosecond: unbounded rate, mark.
            return True
        inc = pkt_bytes - ri
        if self.carry_remainder and inc > ri:
            inc = ri
        acc = self.accumulator + inc
        if self.clamp_at_zero and acc < 0:
            acc = 0
        mark = False
        if acc > ri:
            acc = acc - ri if self.carry_remainder else 0
            mark = True
        self.accumulator = acc
        if self.mark_next:
            mark, self._pending = self._pending, mark
        return mark


class RandomSlopeEcn:
    """Reference slope marker: literal per-packet random draw against the
    arrival-form probability.  Used as the independent cross-check for the
    accumulator scheme; consumes the run's seeded generator."""

    __slots__ = ("rate_bps", "rng", "last_arrival_ns")

    def __init__(self, rate_bps: int, rng: random.Random):
        if rate_bps <= 0:
            raise InvalidRate(f"rate must be > 0, got {rate_bps}")
        self.rate_bps = rate_bps
        self.rng = rng
        self.last_arrival_ns = None

    def reset_on_external_mark(self, now_ns):
        self.last_arrival_ns = now_ns

    def decide(self, queue_bytes, pkt_bytes, now_ns):
        last = self.last_arrival_ns
        self.last_arrival_ns = now_ns
        if last is None:
            return False
        prob = mark_probability_from_arrival(pkt_bytes, now_ns - last, self.rate_bps)
        if prob <= 0.0:
            return False
        if prob >= 1.0:
            return True
        return self.rng.random() < prob


class SlopeThresholdEcn:
    """Hybrid: below the queue threshold defer to slope marking, above it
    mark everything (and clear the slope state)."""

    __slots__ = ("threshold_bytes", "slope")

    def __init__(self, threshold_bytes: int, slope):
        self.threshold_bytes = threshold_bytes
        self.slope = slope

    def decide(self, queue_bytes, pkt_bytes, now_ns):
        if queue_bytes > self.threshold_bytes:
            self.slope.reset_on_external_mark(now_ns)
            return True
        return self.slope.decide(queue_bytes, pkt_bytes, now_ns)
