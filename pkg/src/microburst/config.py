"""Run configuration: YAML schema, defaults, validation, protocol matrix.

A run is one scenario under one protocol.  The protocol names pair a host
congestion-control algorithm with a switch marking policy:

    TCP           NewReno, no ECN     tail-drop only
    ECN*          NewReno + ECN       threshold marking
    S-ECN         NewReno + ECN       slope marking
    SL-ECN        NewReno + ECN       slope below threshold, all above
    DCTCP         DCTCP               threshold marking
    DCTCP+SL-ECN  DCTCP               slope below threshold, all above
"""

from dataclasses import dataclass, field, asdict

import yaml

from .transport import NEWRENO, DCTCP
from .units import GBPS


class ConfigError(Exception):
    """Invalid config; message names the offending field."""

    def __init__(self, field_path, message):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}")


PROTOCOLS = {
    # name: (host algorithm, ecn capable, policy kind)
    "TCP": (NEWRENO, False, "taildrop"),
    "ECN*": (NEWRENO, True, "threshold"),
    "S-ECN": (NEWRENO, True, "slope"),
    "SL-ECN": (NEWRENO, True, "slope+threshold"),
    "DCTCP": (DCTCP, True, "threshold"),
    "DCTCP+SL-ECN": (DCTCP, True, "slope+threshold"),
}

TELEMETRY_MODES = ("exact", "fidelity", "off")

DEFAULT_MONITOR_PORT = "root->t4"


@dataclass
class RunConfig:
    seed: int
    protocol: str
    scenario: dict
    duration_ns: int = 0           # 0: run until the event set drains

    # network
    link_rate_bps: int = GBPS
    prop_delay_ns: int = 0
    hop_proc_ns: int = 0
    buffer_bytes: int = 512_000
    tor_uplink_buffer_bytes: int = None

    # switch marking
    ecn_threshold_bytes: int = 32_000
    secn_clamp: bool = True          # floor the accumulator at zero
    secn_exact_fraction: bool = True  # carry remainder + cap increment
    secn_mark_next: bool = False
    secn_random_engine: bool = False  # reference random-draw marker

    # transport
    mss_bytes: int = 1500
    initial_window_packets: int = 3
    max_cwnd_packets: int = 64
    rto_min_ns: int = 10_000_000
    dctcp_gain: float = 0.125
    dctcp_alpha0: float = 1.0
    pacing: bool = False
    initial_rtt_ns: int = 50_000

    # telemetry / metrics
    telemetry_mode: str = "exact"
    telemetry_ports: list = field(default_factory=lambda: [DEFAULT_MONITOR_PORT])
    stddev_after_ns: int = 2_000_000
    drain_grace_ns: int = 0        # extra time past duration for in-flight data

    sweep: dict = None             # optional {param: dotted.path, values: [...]}

    def validate(self):
        if not isinstance(self.seed, int):
            raise ConfigError("seed", "seed is mandatory and must be an integer")
        if self.protocol not in PROTOCOLS:
            raise ConfigError("protocol",
                              f"unknown protocol {self.protocol!r}; "
                              f"choose one of {', '.join(PROTOCOLS)}")
        if not isinstance(self.scenario, dict) or "kind" not in self.scenario:
            raise ConfigError("scenario", "must be a mapping with a 'kind'")
        if self.telemetry_mode not in TELEMETRY_MODES:
            raise ConfigError("telemetry.mode",
                              f"must be one of {TELEMETRY_MODES}")
        for name, value in (("duration_ns", self.duration_ns),
                            ("link_rate_bps", self.link_rate_bps),
                            ("buffer_bytes", self.buffer_bytes),
                            ("ecn_threshold_bytes", self.ecn_threshold_bytes),
                            ("mss_bytes", self.mss_bytes),
                            ("rto_min_ns", self.rto_min_ns)):
            if not isinstance(value, int) or value < 0:
                raise ConfigError(name, f"must be a non-negative integer, got {value!r}")
        if self.link_rate_bps <= 0:
            raise ConfigError("link_rate_bps", "must be positive")
        if not 0 < self.dctcp_gain <= 1:
            raise ConfigError("transport.dctcp_gain", "must be in (0, 1]")
        if not 0 <= self.dctcp_alpha0 <= 1:
            raise ConfigError("transport.dctcp_alpha0", "must be in [0, 1]")
        kind = self.scenario.get("kind")
        if kind == "websearch":
            load = self.scenario.get("load")
            if not isinstance(load, (int, float)) or not 0 < load < 1:
                raise ConfigError("scenario.load",
                                  f"must be in (0,1), got {load!r}")
        if self.sweep is not None:
            if "param" not in self.sweep or "values" not in self.sweep:
                raise ConfigError("sweep", "needs 'param' and 'values'")
        return self

    def host_algorithm(self):
        return PROTOCOLS[self.protocol][0]

    def ecn_capable(self):
        return PROTOCOLS[self.protocol][1]

    def policy_kind(self):
        return PROTOCOLS[self.protocol][2]

    def to_dict(self):
        return asdict(self)


_SECTIONS = {
    "network": ("link_rate_bps", "prop_delay_ns", "hop_proc_ns",
                "buffer_bytes", "tor_uplink_buffer_bytes"),
    "switch": ("ecn_threshold_bytes", "secn_clamp", "secn_exact_fraction",
               "secn_mark_next", "secn_random_engine"),
    "transport": ("mss_bytes", "initial_window_packets", "max_cwnd_packets",
                  "rto_min_ns", "dctcp_gain", "dctcp_alpha0", "pacing",
                  "initial_rtt_ns"),
    "telemetry": ("mode", "ports"),
    "metrics": ("stddev_after_ns", "drain_grace_ns"),
}

_TOP_KEYS = {"seed", "protocol", "scenario", "duration_ns", "sweep"} | set(_SECTIONS)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown config key")
    kwargs = {}
    for key in ("seed", "protocol", "scenario", "duration_ns", "sweep"):
        if key in raw:
            kwargs[key] = raw[key]
    for section, names in _SECTIONS.items():
        sub = raw.get(section) or {}
        if not isinstance(sub, dict):
            raise ConfigError(section, "must be a mapping")
        for key in sub:
            if key not in names:
                raise ConfigError(f"{section}.{key}", "unknown config key")
        for name in names:
            if name in sub:
                if section == "telemetry":
                    kwargs["telemetry_mode" if name == "mode"
                           else "telemetry_ports"] = sub[name]
                else:
                    kwargs[name] = sub[name]
    if "seed" not in kwargs:
        raise ConfigError("seed", "seed is mandatory")
    if "protocol" not in kwargs:
        raise ConfigError("protocol", "protocol is mandatory")
    if "scenario" not in kwargs:
        raise ConfigError("scenario", "scenario is mandatory")
    try:
        cfg = RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from None
    return cfg.validate()


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return config_from_dict(raw)


def effective_yaml(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False)
