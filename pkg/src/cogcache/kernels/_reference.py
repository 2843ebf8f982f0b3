"""Pure-Python/numpy fallback for the slotted-queue kernels.

Semantics are defined here; the Cython extension in ``_speedups`` must
produce bit-identical histograms for the same arrival streams.

Slot convention: at the start of slot t the servers remove up to c head
entries (all of which arrived in earlier slots), then the slot-t arrivals
join the tail.  The recorded queue length is the content after arrivals;
a request's delay is (service slot - arrival slot) >= 1.
"""

from __future__ import annotations

import numpy as np


def single_class_slot_sim(arrivals: np.ndarray, c: int, warmup: int,
                          max_q: int, max_d: int):
    """Histogram queue content and delays of a c-server slotted FIFO queue.

    ``arrivals[t]`` is the batch size of slot t.  Returns
    ``(q_counts, d_counts, backlog_counts)`` where ``backlog_counts``
    histograms the pre-arrival backlog (used for conditional smoothing).
    Counts cover slots / services at t >= warmup; the last bin absorbs
    overflow.
    """
    arrivals = np.asarray(arrivals, dtype=np.int64)
    n = len(arrivals)
    # Lindley recursion for the pre-arrival backlog q_t = (u_{t-1} - c)^+
    steps = np.concatenate(([0], arrivals[:-1] - c))
    s = np.cumsum(steps)
    q = s - np.minimum.accumulate(np.minimum(s, 0))
    u = q + arrivals

    q_counts = np.bincount(np.minimum(u[warmup:], max_q), minlength=max_q + 1)

    # an entry at post-backlog position p is served ceil(p/c) slots later
    pos_base = np.repeat(q, arrivals)
    excl = np.cumsum(arrivals) - arrivals
    intra = np.arange(1, int(arrivals.sum()) + 1) - np.repeat(excl, arrivals)
    slot = np.repeat(np.arange(n), arrivals)
    delay = -(-(pos_base + intra) // c)
    served_at = slot + delay
    keep = (served_at >= warmup) & (served_at < n)
    d_counts = np.bincount(np.minimum(delay[keep], max_d),
                           minlength=max_d + 1)
    backlog_counts = np.bincount(np.minimum(q[warmup:], max_q),
                                 minlength=max_q + 1)
    return q_counts, d_counts, backlog_counts


def two_class_slot_sim(arr_high: np.ndarray, arr_low: np.ndarray, c: int,
                       warmup: int, max_q: int, max_d: int):
    """Histogram the low-priority queue of a two-class c-server slotted queue.

    High-priority entries take servers first in every slot; within a class
    service is FIFO.  Returns ``(lq_counts, ld_counts)`` for the
    low-priority content after arrivals and the low-priority delays.
    """
    arr_high = np.asarray(arr_high, dtype=np.int64)
    arr_low = np.asarray(arr_low, dtype=np.int64)
    n = len(arr_high)
    lq_counts = np.zeros(max_q + 1, dtype=np.int64)
    ld_counts = np.zeros(max_d + 1, dtype=np.int64)
    hq = 0
    low = _IntRing()
    for t in range(n):
        sh = hq if hq < c else c
        hq -= sh
        rem = c - sh
        k = min(rem, len(low))
        for _ in range(k):
            arr_slot = low.popleft()
            if t >= warmup:
                d = t - arr_slot
                ld_counts[d if d < max_d else max_d] += 1
        hq += arr_high[t]
        low.push_n(t, arr_low[t])
        if t >= warmup:
            lq = len(low)
            lq_counts[lq if lq < max_q else max_q] += 1
    return lq_counts, ld_counts


class _IntRing:
    """Growable ring buffer of int64, mirroring the Cython kernel's buffer."""

    def __init__(self, cap=1 << 12):
        self.buf = np.zeros(cap, dtype=np.int64)
        self.head = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push_n(self, value, count):
        cap = len(self.buf)
        while self.size + count > cap:
            self.buf = np.concatenate(
                [np.roll(self.buf, -self.head), np.zeros(cap, dtype=np.int64)])
            self.head = 0
            cap *= 2
        for _ in range(count):
            self.buf[(self.head + self.size) % cap] = value
            self.size += 1

    def popleft(self):
        v = self.buf[self.head]
        self.head = (self.head + 1) % len(self.buf)
        self.size -= 1
        return int(v)
