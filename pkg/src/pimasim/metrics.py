"""Run accounting: frame efficiency, latency, drops, burst clearance times."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MetricsLedger:
    """Accumulators for one simulation run; merge() combines parallel runs."""

    eta_sum: float = 0.0
    eta_frames: int = 0
    latency_sum: float = 0.0
    delivered: int = 0
    generated: int = 0
    dropped: int = 0
    frames: int = 0
    burst_times: list = field(default_factory=list)
    latencies: list | None = None  # optional raw samples, off by default

    def record_generated(self, count: int = 1) -> None:
        self.generated += count

    def record_dropped(self, count: int = 1) -> None:
        self.dropped += count
        assert self.delivered + self.dropped <= self.generated

    def record_delivery(self, latency_usd: float) -> None:
        if latency_usd <= 0:
            raise ValueError("latency must be positive")
        self.latency_sum += latency_usd
        self.delivered += 1
        if self.latencies is not None:
            self.latencies.append(latency_usd)

    def record_frame(self, successes: int, frame_slots: float, estimated_active: int) -> None:
        """Log one frame; only frames believed nonempty enter the efficiency mean.

        frame_slots is the whole frame length in slot units (signalling
        included), so the sample is successes per slot-equivalent spent.
        """
        if frame_slots > 0 and successes > frame_slots:
            raise ValueError("more successes than slots")
        self.frames += 1
        if estimated_active > 0:
            self.eta_sum += successes / frame_slots
            self.eta_frames += 1

    def record_burst(self, clearance_usd: float) -> None:
        self.burst_times.append(clearance_usd)

    def bulk_deliveries(self, latencies) -> None:
        latencies = np.asarray(latencies, dtype=float)
        if latencies.size == 0:
            return
        if latencies.min() <= 0:
            raise ValueError("latency must be positive")
        self.latency_sum += float(latencies.sum())
        self.delivered += int(latencies.size)
        if self.latencies is not None:
            self.latencies.extend(latencies.tolist())

    def bulk_empty_frames(self, frame_slots, estimated_active) -> None:
        """Batch-record zero-success frames (idle stretches, false alarms)."""
        estimated_active = np.asarray(estimated_active)
        self.frames += int(estimated_active.size)
        self.eta_frames += int((estimated_active > 0).sum())

    def merge(self, other: "MetricsLedger") -> "MetricsLedger":
        out = MetricsLedger()
        out.eta_sum = self.eta_sum + other.eta_sum
        out.eta_frames = self.eta_frames + other.eta_frames
        out.latency_sum = self.latency_sum + other.latency_sum
        out.delivered = self.delivered + other.delivered
        out.generated = self.generated + other.generated
        out.dropped = self.dropped + other.dropped
        out.frames = self.frames + other.frames
        out.burst_times = self.burst_times + other.burst_times
        return out

    def finalize(self) -> dict:
        """Point summaries; absent data reports None rather than zero."""
        eta = self.eta_sum / self.eta_frames if self.eta_frames else None
        lat = self.latency_sum / self.delivered if self.delivered else None
        pdrop = self.dropped / self.generated if self.generated else None
        out = {
            "eta_bar": eta,
            "d_bar_usd": lat,
            "p_drop": pdrop,
            "n_frames": self.frames,
            "n_generated": self.generated,
            "n_delivered": self.delivered,
            "n_dropped": self.dropped,
        }
        if self.burst_times:
            out["mean_burst_usd"] = float(np.mean(self.burst_times))
        return out


def eccdf(samples) -> list[tuple[float, float]]:
    """(value, tail probability) pairs at each distinct sample value.

    tail(x) = fraction of samples strictly greater than x, so the curve is
    nonincreasing and reaches zero at the maximum sample.
    """
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    if n == 0:
        return []
    values, last_idx = np.unique(xs, return_index=True)
    counts = np.diff(np.append(last_idx, n))
    above = n - np.cumsum(counts)
    return [(float(v), float(a) / n) for v, a in zip(values, above)]
