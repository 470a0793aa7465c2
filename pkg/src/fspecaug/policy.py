"""Augmentation policy: static configuration, validation, ``key = value`` config files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, Mapping, TextIO

from .errors import PolicyError

FRAME = "frame"
UTTERANCE = "utterance"

# config key -> dataclass field
CONFIG_KEYS = {
    "warp_w": "warp_W",
    "freq_f": "freq_F",
    "time_t": "time_T",
    "n_freq_masks": "n_freq_masks",
    "n_time_masks": "n_time_masks",
    "mask_value": "mask_value",
    "fix_corners": "fix_corners",
    "level": "level",
    "enable_warp": "enable_warp",
    "enable_freq": "enable_freq",
    "enable_time": "enable_time",
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class AugmentPolicy:
    """Defaults are the frame-level setting W=5, F=15 (one mask), T=10 (one mask)."""

    warp_W: int = 5
    freq_F: int = 15
    time_T: int = 10
    n_freq_masks: int = 1
    n_time_masks: int = 1
    mask_value: float = 0.0
    fix_corners: bool = False
    enable_warp: bool = True
    enable_freq: bool = True
    enable_time: bool = True
    level: str = FRAME

    def __post_init__(self):
        problems = []
        for name in ("warp_W", "freq_F", "time_T", "n_freq_masks", "n_time_masks"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if self.level not in (FRAME, UTTERANCE):
            problems.append(f"level must be {FRAME!r} or {UTTERANCE!r}, got {self.level!r}")
        if problems:
            raise PolicyError(problems)

    @classmethod
    def utterance_default(cls) -> "AugmentPolicy":
        """Utterance-level comparator: one F=15 mask, one T=30 mask, no warping."""
        return cls(time_T=30, enable_warp=False, level=UTTERANCE)

    @classmethod
    def identity(cls) -> "AugmentPolicy":
        return cls(enable_warp=False, enable_freq=False, enable_time=False)

    def replace(self, **changes) -> "AugmentPolicy":
        return dataclasses.replace(self, **changes)

    def to_config(self) -> Dict[str, object]:
        return {key: getattr(self, name) for key, name in CONFIG_KEYS.items()}

    @classmethod
    def from_config(cls, entries: Mapping[str, object], base: "AugmentPolicy" = None) -> "AugmentPolicy":
        """Overlay config ``entries`` (string or typed values) on ``base``."""
        base = base or cls()
        changes = {}
        for key, raw in entries.items():
            if key not in CONFIG_KEYS:
                raise PolicyError(f"unknown policy key {key!r}")
            name = CONFIG_KEYS[key]
            default = getattr(base, name)
            try:
                if isinstance(default, bool):
                    value = raw if isinstance(raw, bool) else parse_bool(raw)
                elif isinstance(default, int):
                    value = int(raw)
                elif isinstance(default, float):
                    value = float(raw)
                else:
                    value = str(raw).strip()
            except ValueError as exc:
                raise PolicyError(f"bad value for {key}: {raw!r}") from exc
            changes[name] = value
        return dataclasses.replace(base, **changes)


def read_policy_config(source: TextIO) -> Dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    entries = {}
    for lineno, line in enumerate(source.read().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PolicyError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise PolicyError(f"config line {lineno}: unknown key {key!r}")
        entries[key] = value
    return entries


def write_policy_config(policy: AugmentPolicy, sink: TextIO) -> None:
    for key, value in policy.to_config().items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        sink.write(f"{key} = {value}\n")


def validate_policy(policy: AugmentPolicy, tau: int, D: int) -> AugmentPolicy:
    """Check ``policy`` against a tau x D window; every violated bound is reported."""
    problems = []
    if policy.enable_freq and policy.freq_F > D:
        problems.append(f"freq_F exceeds D ({policy.freq_F} > {D})")
    if policy.enable_time and policy.time_T > tau:
        problems.append(f"time_T exceeds tau ({policy.time_T} > {tau})")
    if policy.enable_warp:
        if policy.level == UTTERANCE:
            problems.append("time warping is not allowed at utterance level")
        else:
            if D % 2:
                problems.append(f"D must be even for time warping (D={D})")
            if tau < 3:
                problems.append(f"tau must be >= 3 for time warping (tau={tau})")
    if problems:
        raise PolicyError(problems)
    return policy
