"""Slot-level Monte Carlo of the cache-enabled cognitive D2D network.

One realization deploys BSs and users as independent PPPs on a toroidal
window, thins users into cache-enabled D2D TXs (probability ``alpha``),
associates the rest by long-term biased received power, and then runs a
slotted protocol: BSs assign their channels to FIFO queue heads first;
D2D TXs sense every channel with fresh exponential fades and transmit on
the free ones, splitting channels orthogonally inside their sensing group.

Steadiness is decided per node from its queue-length trace; reported PMFs
average the per-node empirical distributions over steady nodes, matching
the analytic mixtures which weigh conditioning states per node.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .core import DiscretePmf, ScenarioConfig, zipf_cdf_table
from .geometry import replication_rng, sample_ppp, toroidal_deltas

MAX_QUEUE_BIN = 2000
MAX_DELAY_BIN = 2000
STEADY_SLOPE = 0.01     # requests per slot
STEADY_FINAL = 50       # requests
WARMUP_FRACTION = 0.2

SUBSET_LOCAL = 0
SUBSET_D2D = 1
SUBSET_BS = 2


@dataclass(frozen=True)
class QueueEntry:
    """One buffered request: FIFO order is arrival-slot order per node."""

    arrival_slot: int
    user_id: int
    content_id: int


@dataclass
class NetworkRealization:
    """A sampled network with static association and grouping structure."""

    cfg: ScenarioConfig
    seed: int
    bs_xy: np.ndarray            # (n_bs, 2)
    user_xy: np.ndarray          # (n_user, 2)
    cache_flag: np.ndarray       # (n_user,) bool; True = cache-enabled D2D TX
    tx_user: np.ndarray          # user index of each D2D TX
    serving_bs: np.ndarray       # (n_user,) nearest BS index
    assoc_d2d: np.ndarray        # (n_user,) bool; D2D tier wins the power rule
    serving_tx: np.ndarray       # (n_user,) D2D TX index (or -1)
    groups: list                 # per TX: array of TX indices (itself included)
    avg_power_bs_tx: np.ndarray  # (n_bs, n_tx) long-term BS power at each TX
    avg_power_tx_tx: np.ndarray  # (n_tx, n_tx) long-term TX power at each TX
    bs_queues: list = field(default_factory=list)
    tx_queues: list = field(default_factory=list)
    slot: int = 0

    @property
    def n_bs(self) -> int:
        return len(self.bs_xy)

    @property
    def n_tx(self) -> int:
        return len(self.tx_user)


@dataclass
class MetricsReport:
    """Aggregated empirical metrics, conditioned on steady nodes."""

    steady_bs_fraction: float
    steady_bs_ci: float
    steady_d2d_fraction: float
    steady_d2d_ci: float
    pmfs: dict                   # (node_class, metric) -> DiscretePmf
    node_counts: dict            # node_class -> contributing steady nodes
    replications: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for frac in (self.steady_bs_fraction, self.steady_d2d_fraction):
            if not (np.isnan(frac) or 0.0 <= frac <= 1.0):
                raise ValueError(f"steady fraction {frac} outside [0, 1]")

    def pmf_rows(self):
        """Yield ``(node_class, metric, n, value)`` rows for CSV export."""
        for (node_class, metric), pmf in sorted(self.pmfs.items()):
            for n, p in enumerate(pmf.mass):
                yield node_class, metric, n, p

    def fraction_rows(self):
        """Yield ``(node_class, steady_fraction, ci)`` rows for CSV export."""
        yield "bs", self.steady_bs_fraction, self.steady_bs_ci
        yield "d2d", self.steady_d2d_fraction, self.steady_d2d_ci


def _avg_power_matrix(src_xy, dst_xy, power, beta, side):
    """Long-term received power of each src at each dst on the torus."""
    if len(src_xy) == 0 or len(dst_xy) == 0:
        return np.zeros((len(src_xy), len(dst_xy)))
    d = toroidal_deltas(src_xy[:, None, :], dst_xy[None, :, :], side)
    r2 = np.maximum(np.sum(d * d, axis=-1), 1e-12)
    return power * r2 ** (-beta / 2.0)


def build_realization(cfg: ScenarioConfig, seed: int) -> NetworkRealization:
    """Sample a network: PPP deployment, caching, association, grouping.

    Deterministic for a given (cfg, seed).  An empty BS pattern is
    resampled (with a warning) because every Subset-2 request needs a
    serving BS.
    """
    rng = replication_rng(seed, 0)
    side = cfg.window_side
    bs = sample_ppp(cfg.lambda_bs, side, rng)
    attempts = 0
    while len(bs.xy) == 0:
        attempts += 1
        warnings.warn("empty BS pattern; resampling (degenerate realization)")
        bs = sample_ppp(cfg.lambda_bs, side, rng)
        if attempts > 1000:
            raise RuntimeError("BS intensity too low to populate the window")
    users = sample_ppp(cfg.lambda_user, side, rng)
    n_user = len(users.xy)
    cache_flag = rng.random(n_user) < cfg.alpha
    tx_user = np.flatnonzero(cache_flag)
    tx_xy = users.xy[tx_user]
    beta = cfg.pathloss

    # long-term association: best BS always exists; the D2D tier wins for a
    # non-cache user when its strongest TX beats the strongest BS
    p_bs_user = _avg_power_matrix(bs.xy, users.xy, cfg.power_bs, beta, side)
    serving_bs = np.argmax(p_bs_user, axis=0)
    best_bs = p_bs_user[serving_bs, np.arange(n_user)]
    if len(tx_user):
        p_tx_user = _avg_power_matrix(tx_xy, users.xy, cfg.power_d2d, beta, side)
        serving_tx = np.argmax(p_tx_user, axis=0)
        best_tx = p_tx_user[serving_tx, np.arange(n_user)]
        assoc_d2d = best_tx > best_bs
    else:
        serving_tx = np.full(n_user, -1)
        assoc_d2d = np.zeros(n_user, dtype=bool)
    # a cache-enabled user is itself a TX: it never associates to the tier
    assoc_d2d &= ~cache_flag
    serving_tx = np.where(assoc_d2d, serving_tx, -1)

    avg_power_bs_tx = _avg_power_matrix(bs.xy, tx_xy, cfg.power_bs, beta, side)
    avg_power_tx_tx = _avg_power_matrix(tx_xy, tx_xy, cfg.power_d2d, beta, side)
    groups = []
    gamma = cfg.sense_threshold
    for d in range(len(tx_user)):
        heard = np.flatnonzero(avg_power_tx_tx[:, d] > gamma)
        heard = np.union1d(heard, [d])
        groups.append(heard.astype(np.int64))

    return NetworkRealization(
        cfg=cfg, seed=seed, bs_xy=bs.xy, user_xy=users.xy,
        cache_flag=cache_flag, tx_user=tx_user, serving_bs=serving_bs,
        assoc_d2d=assoc_d2d, serving_tx=serving_tx, groups=groups,
        avg_power_bs_tx=avg_power_bs_tx, avg_power_tx_tx=avg_power_tx_tx,
        bs_queues=[[] for _ in range(len(bs.xy))],
        tx_queues=[[] for _ in range(len(tx_user))])


def classify_request(user: int, content: int, real: NetworkRealization):
    """Subset of one request and its serving node.

    Returns ``(subset, node)`` where node is ``("self", user)``,
    ``("d2d", tx_index)`` or ``("bs", bs_index)``.  Content ranks are
    1-based; every cache holds the ``cache_size`` most popular contents.
    """
    cached = 1 <= content <= real.cfg.cache_size
    if real.cache_flag[user]:
        if cached:
            return SUBSET_LOCAL, ("self", int(user))
        return SUBSET_BS, ("bs", int(real.serving_bs[user]))
    if real.assoc_d2d[user] and cached:
        return SUBSET_D2D, ("d2d", int(real.serving_tx[user]))
    return SUBSET_BS, ("bs", int(real.serving_bs[user]))


def steady_classifier(queue_trace, warmup: int | None = None) -> bool:
    """True when the post-warmup queue trace shows no sustained growth.

    A node is unsteady when the least-squares slope of its post-warmup
    queue length exceeds ``STEADY_SLOPE`` requests/slot or the final
    length exceeds ``STEADY_FINAL``.
    """
    trace = np.asarray(queue_trace, dtype=float)
    if warmup is None:
        warmup = int(len(trace) * WARMUP_FRACTION)
    if len(trace) < 2 * max(warmup, 1) or len(trace) - warmup < 2:
        raise ValueError(f"trace of length {len(trace)} is too short for "
                         f"warmup {warmup}")
    tail = trace[warmup:]
    t = np.arange(len(tail), dtype=float)
    slope = np.polyfit(t, tail, 1)[0]
    return bool(slope <= STEADY_SLOPE and tail[-1] <= STEADY_FINAL)


def _blocked_channels(c, bs_used, bs_power, tx_assignments,
                      group_taken, gamma, mu, rng):
    """Channel availability mask for one sensing D2D TX.

    ``bs_used[b]`` is how many leading channels BS b occupies this slot and
    ``bs_power[b]`` its long-term power here; ``tx_assignments`` is a list
    of (channels, avg_power_here) for D2D TXs already transmitting;
    ``group_taken`` are channels claimed by own-group members (orthogonal
    split).  Fresh Exp(mu) fades apply per transmitting node.
    """
    blocked = np.zeros(c, dtype=bool)
    if len(bs_used):
        fades = rng.exponential(1.0 / mu, size=len(bs_used))
        loud = fades * bs_power >= gamma
        if np.any(loud):
            blocked[:int(bs_used[loud].max())] = True
    for channels, power in tx_assignments:
        if power <= 0:
            continue
        if rng.exponential(1.0 / mu) * power >= gamma:
            blocked[channels] = True
    blocked[group_taken] = True
    return blocked


def run_slots(real: NetworkRealization, num_slots: int,
              warmup: int | None = None) -> MetricsReport:
    """Run the slotted protocol and report per-class empirical metrics.

    Slot order: serve first (BSs, then D2D TXs in queue-length order),
    then generate arrivals; a request is therefore served at the earliest
    one slot after it arrives and its delay (service - arrival) is >= 1.
    """
    cfg = real.cfg
    if warmup is None:
        warmup = int(num_slots * WARMUP_FRACTION)
    if num_slots < 2 * max(warmup, 1):
        raise ValueError("num_slots must cover at least twice the warmup")
    c = cfg.num_channels
    lam_u = cfg.request_rate
    gamma = cfg.sense_threshold
    mu = cfg.fading_rate
    rng = replication_rng(real.seed, 1)
    n_bs, n_tx, n_user = real.n_bs, real.n_tx, len(real.user_xy)

    cdf = zipf_cdf_table(cfg.zipf_exponent, cfg.library_size)
    # static per-user routing: 0 self-or-bs (cache-enabled), 1 d2d-or-bs,
    # 2 always bs
    route = np.where(real.cache_flag, 0, np.where(real.assoc_d2d, 1, 2))

    bs_q = [[] for _ in range(n_bs)]
    bs_head = [0] * n_bs
    tx_q = [[] for _ in range(n_tx)]
    tx_head = [0] * n_tx
    bs_trace = np.zeros((num_slots, n_bs), dtype=np.int32)
    tx_len = np.zeros(n_tx, dtype=np.int64)
    tx_trace = np.zeros((num_slots, n_tx), dtype=np.int32)
    bs_delay = np.zeros((n_bs, MAX_DELAY_BIN + 1), dtype=np.int64)
    tx_delay = np.zeros((n_tx, MAX_DELAY_BIN + 1), dtype=np.int64)

    if n_tx:
        rows = np.concatenate([np.full(len(g), d)
                               for d, g in enumerate(real.groups)])
        cols = np.concatenate(real.groups)
        group_mat = sparse.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(n_tx, n_tx))
    else:
        group_mat = None

    subset_counts = np.zeros(3, dtype=np.int64)

    for t in range(num_slots):
        # --- service phase: BSs first (licensed tier) -------------------
        bs_used = np.zeros(n_bs, dtype=np.int64)
        for b in range(n_bs):
            q, h = bs_q[b], bs_head[b]
            k = min(c, len(q) - h)
            if k > 0:
                if t >= warmup:
                    for e in q[h:h + k]:
                        d = t - e.arrival_slot
                        bs_delay[b, min(d, MAX_DELAY_BIN)] += 1
                bs_head[b] = h + k
                bs_used[b] = k
                if bs_head[b] > 4096:
                    bs_q[b] = q[bs_head[b]:]
                    bs_head[b] = 0

        # --- service phase: D2D TXs sense and split channels ------------
        if n_tx:
            active = np.flatnonzero(tx_len)
            if active.size:
                order = active[np.lexsort((active, -tx_len[active]))]
                assignments = {}  # tx -> channel index array
                for d in order:
                    group_taken = np.concatenate(
                        [assignments.get(m, _EMPTY_I)
                         for m in real.groups[d]]) if assignments else _EMPTY_I
                    tx_list = [(ch, real.avg_power_tx_tx[e, d])
                               for e, ch in assignments.items()
                               if e not in set(real.groups[d])]
                    blocked = _blocked_channels(
                        c, bs_used, real.avg_power_bs_tx[:, d], tx_list,
                        group_taken, gamma, mu, rng)
                    avail = np.flatnonzero(~blocked)
                    k = min(int(tx_len[d]), avail.size)
                    if k <= 0:
                        continue
                    q, h = tx_q[d], tx_head[d]
                    if t >= warmup:
                        for e in q[h:h + k]:
                            dd = t - e.arrival_slot
                            tx_delay[d, min(dd, MAX_DELAY_BIN)] += 1
                    tx_head[d] = h + k
                    tx_len[d] -= k
                    assignments[d] = avail[:k]
                    if tx_head[d] > 4096:
                        tx_q[d] = q[tx_head[d]:]
                        tx_head[d] = 0

        # --- arrival phase ----------------------------------------------
        counts = rng.poisson(lam_u, n_user)
        req_users = np.repeat(np.arange(n_user), counts)
        if req_users.size:
            ranks = np.searchsorted(cdf, rng.random(req_users.size)) + 1
            cached = ranks <= cfg.cache_size
            r = route[req_users]
            subset = np.where((r == 0) & cached, SUBSET_LOCAL,
                              np.where((r == 1) & cached, SUBSET_D2D,
                                       SUBSET_BS))
            subset_counts += np.bincount(subset, minlength=3)
            for u, rank, s in zip(req_users, ranks, subset):
                if s == SUBSET_BS:
                    bs_q[real.serving_bs[u]].append(
                        QueueEntry(t, int(u), int(rank)))
                elif s == SUBSET_D2D:
                    d = real.serving_tx[u]
                    tx_q[d].append(QueueEntry(t, int(u), int(rank)))
                    tx_len[d] += 1

        bs_trace[t] = [len(q) - h for q, h in zip(bs_q, bs_head)]
        if n_tx:
            tx_trace[t] = tx_len
    real.slot += num_slots

    # --- steadiness and per-class metrics --------------------------------
    steady_bs = np.array([steady_classifier(bs_trace[:, b], warmup)
                          for b in range(n_bs)])
    if n_tx:
        # a TX is steady when its sensing group's total backlog is steady,
        # mirroring the analytic per-group queue
        group_sum = (group_mat @ tx_trace.T.astype(float)).T
        steady_tx = np.array([steady_classifier(group_sum[:, d], warmup)
                              for d in range(n_tx)])
    else:
        group_sum = np.zeros((num_slots, 0))
        steady_tx = np.zeros(0, dtype=bool)

    pmfs = {}
    node_counts = {}
    qb = _per_node_pmf(bs_trace[warmup:, steady_bs].T, MAX_QUEUE_BIN)
    if qb is not None:
        pmfs[("bs", "queue_length")] = qb
    db = _per_node_delay_pmf(bs_delay[steady_bs])
    if db is not None:
        pmfs[("bs", "delay")] = db
    node_counts["bs"] = int(steady_bs.sum())
    if n_tx:
        qd = _per_node_pmf(np.rint(group_sum[warmup:, steady_tx]).astype(
            np.int64).T, MAX_QUEUE_BIN)
        if qd is not None:
            pmfs[("d2d", "queue_length")] = qd
        dd = _per_node_delay_pmf(tx_delay[steady_tx])
        if dd is not None:
            pmfs[("d2d", "delay")] = dd
    node_counts["d2d"] = int(steady_tx.sum())

    f_bs = float(steady_bs.mean()) if n_bs else float("nan")
    ci_bs = _wilsonish_ci(f_bs, n_bs)
    f_tx = float(steady_tx.mean()) if n_tx else float("nan")
    ci_tx = _wilsonish_ci(f_tx, n_tx)
    total_req = int(subset_counts.sum())
    return MetricsReport(
        steady_bs_fraction=f_bs, steady_bs_ci=ci_bs,
        steady_d2d_fraction=f_tx, steady_d2d_ci=ci_tx,
        pmfs=pmfs, node_counts=node_counts, replications=1,
        meta={"num_slots": num_slots, "warmup": warmup,
              "n_bs": n_bs, "n_tx": n_tx, "n_user": n_user,
              "subset_counts": subset_counts.tolist(),
              "subset_fractions": (subset_counts / total_req).tolist()
              if total_req else [0.0, 0.0, 0.0],
              "seed": real.seed})


_EMPTY_I = np.zeros(0, dtype=np.int64)


def _per_node_pmf(rows: np.ndarray, max_bin: int) -> DiscretePmf | None:
    """Average of per-node normalized histograms (equal node weights)."""
    if rows.size == 0:
        return None
    clipped = np.minimum(rows, max_bin)
    hist = np.zeros(max_bin + 1)
    for row in clipped:
        h = np.bincount(row, minlength=max_bin + 1)
        hist += h / h.sum()
    hist /= len(clipped)
    return DiscretePmf.from_unnormalized(
        hist, meta={"nodes": len(clipped),
                    "samples": int(rows.size)}).trimmed(1e-15)


def _per_node_delay_pmf(hists: np.ndarray) -> DiscretePmf | None:
    """Average of per-node delay histograms; nodes with no services drop out."""
    totals = hists.sum(axis=1)
    keep = totals > 0
    if not np.any(keep):
        return None
    norm = hists[keep] / totals[keep, None]
    return DiscretePmf.from_unnormalized(
        norm.mean(axis=0),
        meta={"nodes": int(keep.sum()),
              "samples": int(totals.sum())}).trimmed(1e-15)


def _wilsonish_ci(frac: float, n: int) -> float:
    """Normal-approximation half-width for a fraction over n nodes."""
    if not n or np.isnan(frac):
        return float("nan")
    return float(1.96 * np.sqrt(max(frac * (1 - frac), 0.0) / n))


def aggregate_replications(reports: list) -> MetricsReport:
    """Pool replication reports: PMFs weighted by contributing nodes,
    fractions averaged with normal-approximation half-widths."""
    if not reports:
        raise ValueError("no reports to aggregate")
    if len(reports) == 1:
        return reports[0]

    def pool_fraction(values):
        vals = np.array([v for v in values if not np.isnan(v)])
        if vals.size == 0:
            return float("nan"), float("nan")
        mean = float(vals.mean())
        if vals.size == 1:
            return mean, float("nan")
        return mean, float(1.96 * vals.std(ddof=1) / np.sqrt(vals.size))

    f_bs, ci_bs = pool_fraction([r.steady_bs_fraction for r in reports])
    f_tx, ci_tx = pool_fraction([r.steady_d2d_fraction for r in reports])

    pmfs = {}
    keys = sorted({k for r in reports for k in r.pmfs})
    for key in keys:
        node_class = key[0]
        length = max(len(r.pmfs[key].mass) for r in reports if key in r.pmfs)
        acc = np.zeros(length)
        weight = 0.0
        nodes = 0
        for r in reports:
            if key not in r.pmfs:
                continue
            w = r.pmfs[key].meta.get("nodes", r.node_counts.get(node_class, 1))
            m = r.pmfs[key].mass
            acc[:len(m)] += w * m
            weight += w
            nodes += w
        if weight > 0:
            pmfs[key] = DiscretePmf.from_unnormalized(
                acc, meta={"nodes": int(nodes),
                           "replications": len(reports)}).trimmed(1e-15)

    node_counts = {}
    for r in reports:
        for k, v in r.node_counts.items():
            node_counts[k] = node_counts.get(k, 0) + v
    meta = {"replications": len(reports),
            "seeds": [r.meta.get("seed") for r in reports]}
    sc = [r.meta.get("subset_counts") for r in reports
          if r.meta.get("subset_counts") is not None]
    if sc:
        tot = np.sum(sc, axis=0)
        meta["subset_counts"] = tot.tolist()
        meta["subset_fractions"] = (tot / max(tot.sum(), 1)).tolist()
    return MetricsReport(
        steady_bs_fraction=f_bs, steady_bs_ci=ci_bs,
        steady_d2d_fraction=f_tx, steady_d2d_ci=ci_tx,
        pmfs=pmfs, node_counts=node_counts,
        replications=len(reports), meta=meta)


def simulate(cfg: ScenarioConfig, num_slots: int = 10_000,
             replications: int = 30) -> MetricsReport:
    """Run independent replications (seeds split from cfg.seed) and pool."""
    reports = []
    for rep in range(replications):
        real = build_realization(cfg, _rep_seed(cfg.seed, rep))
        reports.append(run_slots(real, num_slots))
    return aggregate_replications(reports)


def _rep_seed(master_seed: int, rep: int) -> int:
    """Deterministic per-replication seed split."""
    return int(np.random.SeedSequence([master_seed, rep]).generate_state(1)[0])


def sensed_counts(cfg: ScenarioConfig, probe_xy, bs_xy, d2d_xy, rng):
    """Count nodes of each tier sensed at a probe with fresh Exp(mu) fades.

    Returns ``(n_d2d, n_bs)``: nodes whose faded power P h r^-beta at the
    probe exceeds the sensing threshold.  Used to cross-check the sensing
    region against its closed-form count intensities.
    """
    out = []
    for xy, power in ((d2d_xy, cfg.power_d2d), (bs_xy, cfg.power_bs)):
        if len(xy) == 0:
            out.append(0)
            continue
        d = toroidal_deltas(np.asarray(xy), np.asarray(probe_xy)[None, :],
                            cfg.window_side)
        r2 = np.maximum(np.sum(d * d, axis=-1), 1e-12)
        fades = rng.exponential(1.0 / cfg.fading_rate, size=len(xy))
        received = power * fades * r2 ** (-cfg.pathloss / 2.0)
        out.append(int(np.sum(received > cfg.sense_threshold)))
    return out[0], out[1]
