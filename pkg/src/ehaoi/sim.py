"""Seeded discrete-event simulation of the data-buffer / battery system.

The event loop is a numba kernel that can be resumed: it runs until a random
stream or an output buffer is exhausted, the driver refills it and calls again.
Random numbers come from three numpy substreams (status, energy, service)
spawned from one master seed, so a run is bit-reproducible per seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .errors import InvalidParams, ModeUnsupported
from .fcfs import fcfs_interarrival_cdf
from .model import Discipline, Linear, Penalty, SystemParams, validate_params

CHUNK = 1 << 18
QUEUE_LEVELS = 64  # data-queue levels tracked in exponential-service occupancy

# float state slots
F_T, F_NEXT_S, F_NEXT_E, F_NEXT_V, F_LAST_GEN, F_WARM_T, F_Q1_AREA, F_OCC_T = range(8)
# integer state slots
(I_Q1, I_Q2, I_HEAD, I_BUSY, I_EVENTS, I_ARRIVALS, I_BLOCKED, I_DISCARDED, I_VALID,
 I_EDISC, I_DELIV, I_SEQ, I_MISMATCH, I_NREC, I_NLOG, I_VALID_WARM) = range(16)

EVENT_KINDS = ("status", "energy", "service")


@njit(cache=True)
def _kernel(fs, st, buf_t, buf_q, ds, de, dv, ptr, rec_a, rec_d, rec_p, occ,
            log_t, log_k, log_q1, log_q2, log_aoi, cf, ci):
    lam, r, mu, t_end, warm_time = cf[0], cf[1], cf[2], cf[3], cf[4]
    K, B, lcfs, service = ci[0], ci[1], ci[2], ci[3]
    max_events, max_valid, warm_events, warm_valid = ci[4], ci[5], ci[6], ci[7]
    cap, levels = ci[8], ci[9]
    log_cap = log_t.shape[0]
    rec_cap = rec_a.shape[0]
    while True:
        if max_events >= 0 and st[I_EVENTS] >= max_events:
            return 0
        if max_valid >= 0 and st[I_VALID_WARM] >= max_valid:
            return 0
        t_next = fs[F_NEXT_S]
        kind = 0
        if fs[F_NEXT_E] < t_next:
            t_next = fs[F_NEXT_E]
            kind = 1
        if st[I_BUSY] == 1 and fs[F_NEXT_V] < t_next:
            t_next = fs[F_NEXT_V]
            kind = 2
        if t_next > t_end:
            t_next = t_end
            kind = -1
        if kind == 0 and ptr[0] >= ds.shape[0]:
            return 1
        if kind == 1 and ptr[1] >= de.shape[0]:
            return 2
        if service == 1 and ptr[2] >= dv.shape[0]:
            return 3
        if st[I_NREC] + 2 > rec_cap:
            return 4

        # time spent in the current state
        t0 = fs[F_T]
        if fs[F_WARM_T] < t0:
            lo = t0
        else:
            lo = fs[F_WARM_T]
        if t_next > lo:
            dt = t_next - lo
            q1 = st[I_Q1]
            q2 = st[I_Q2]
            if service == 0:
                occ[q1 - q2 + B] += dt
            else:
                lvl = q1 if q1 < levels - 1 else levels - 1
                occ[lvl * (B + 1) + q2] += dt
            fs[F_Q1_AREA] += q1 * dt
            fs[F_OCC_T] += dt
        fs[F_T] = t_next
        if kind == -1:
            return 0
        t = t_next
        st[I_EVENTS] += 1
        if fs[F_WARM_T] == np.inf:
            if (warm_events >= 0 and st[I_EVENTS] >= warm_events) or \
               (warm_valid >= 0 and st[I_VALID] >= warm_valid) or t >= warm_time:
                fs[F_WARM_T] = t

        deliver = False
        d_arr = 0.0
        d_seq = 0
        if kind == 0:
            st[I_ARRIVALS] += 1
            st[I_SEQ] += 1
            fs[F_NEXT_S] = t + ds[ptr[0]] / lam
            ptr[0] += 1
            if service == 0 and st[I_Q2] > 0:
                st[I_Q2] -= 1
                deliver = True
                d_arr = t
                d_seq = st[I_SEQ]
            elif st[I_Q1] < K:
                idx = (st[I_HEAD] + st[I_Q1]) % cap
                buf_t[idx] = t
                buf_q[idx] = st[I_SEQ]
                st[I_Q1] += 1
            elif lcfs == 1 and K > 0:
                # push out the oldest waiting packet
                st[I_HEAD] = (st[I_HEAD] + 1) % cap
                st[I_DISCARDED] += 1
                idx = (st[I_HEAD] + K - 1) % cap
                buf_t[idx] = t
                buf_q[idx] = st[I_SEQ]
            elif lcfs == 1:
                st[I_DISCARDED] += 1
            else:
                st[I_BLOCKED] += 1
        elif kind == 1:
            fs[F_NEXT_E] = t + de[ptr[1]] / r
            ptr[1] += 1
            if st[I_Q2] < B:
                st[I_Q2] += 1
            else:
                st[I_EDISC] += 1
            if service == 0 and st[I_Q1] > 0:
                st[I_Q2] -= 1
                st[I_Q1] -= 1
                if lcfs == 1:
                    idx = (st[I_HEAD] + st[I_Q1]) % cap
                else:
                    idx = st[I_HEAD]
                    st[I_HEAD] = (st[I_HEAD] + 1) % cap
                deliver = True
                d_arr = buf_t[idx]
                d_seq = buf_q[idx]
        else:
            st[I_BUSY] = 0
            idx = st[I_HEAD]
            st[I_HEAD] = (st[I_HEAD] + 1) % cap
            st[I_Q1] -= 1
            st[I_Q2] -= 1
            deliver = True
            d_arr = buf_t[idx]
            d_seq = buf_q[idx]

        if service == 1 and st[I_BUSY] == 0 and st[I_Q1] > 0 and st[I_Q2] > 0:
            st[I_BUSY] = 1
            fs[F_NEXT_V] = t + dv[ptr[2]] / mu
            ptr[2] += 1

        if deliver:
            st[I_DELIV] += 1
            valid = d_arr > fs[F_LAST_GEN]
            if lcfs == 1:
                fresh = d_seq == st[I_SEQ]
                if fresh != valid:
                    st[I_MISMATCH] += 1
            if valid:
                n = st[I_NREC]
                rec_a[n] = d_arr
                rec_d[n] = t
                rec_p[n] = t - fs[F_LAST_GEN]
                st[I_NREC] = n + 1
                fs[F_LAST_GEN] = d_arr
                st[I_VALID] += 1
                if t >= fs[F_WARM_T]:
                    st[I_VALID_WARM] += 1

        if st[I_NLOG] < log_cap:
            n = st[I_NLOG]
            log_t[n] = t
            log_k[n] = kind
            log_q1[n] = st[I_Q1]
            log_q2[n] = st[I_Q2]
            log_aoi[n] = t - fs[F_LAST_GEN]
            st[I_NLOG] = n + 1


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    ``horizon_kind`` is ``"events"``, ``"time"`` or ``"updates"`` (valid updates
    delivered after warmup).  ``service`` is ``"zero"`` for instantaneous service
    or ``"exp"`` for exponential service at ``params.mu``.
    """

    params: SystemParams
    discipline: Discipline = Discipline.FCFS
    service: str = "zero"
    horizon_kind: str = "events"
    horizon: float = 1e6
    seed: int = 0
    warmup_fraction: float = 0.1
    penalties: Tuple[Penalty, ...] = (Linear(),)
    log_capacity: int = 0

    def validate(self) -> "SimConfig":
        validate_params(self.params, require_mu=self.service == "exp")
        if self.service not in ("zero", "exp"):
            raise InvalidParams(f"service must be 'zero' or 'exp', got {self.service!r}")
        if self.service == "exp" and Discipline(self.discipline) is Discipline.LCFS:
            raise ModeUnsupported("LCFS with exponential service is an unsupported combination")
        if self.horizon_kind not in ("events", "time", "updates"):
            raise InvalidParams(f"unknown horizon kind {self.horizon_kind!r}")
        if not self.horizon > 0:
            raise InvalidParams("horizon must be positive")
        if not 0.0 <= self.warmup_fraction <= 0.5:
            raise InvalidParams("warmup_fraction must lie in [0, 0.5]")
        return self


@dataclass
class SimCounts:
    arrivals: int
    blocked: int
    discarded: int
    valid_updates: int
    energy_discarded: int
    deliveries: int
    in_buffer: int


@dataclass
class SimResult:
    valid_rate_hat: float
    time_avg_penalty: Dict[str, float]
    stderr: Dict[str, float]
    peak_samples: np.ndarray
    sojourn_samples: np.ndarray
    interarrival_samples: np.ndarray
    peak_quantiles: np.ndarray
    sojourn_quantiles: np.ndarray
    aoi_time_integral: float
    elapsed_sim_time: float
    counts: SimCounts
    occupancy: Dict
    mean_queue_length: float
    identity_residual: float
    validity_mismatches: int
    event_log: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)

    @property
    def avg_aoi(self) -> float:
        return self.aoi_time_integral / self.elapsed_sim_time

    @property
    def mean_peak(self) -> float:
        return float(self.peak_samples.mean())

    @property
    def mean_sojourn(self) -> float:
        return float(self.sojourn_samples.mean())

    @property
    def zero_sojourn_fraction(self) -> float:
        return float(np.mean(self.sojourn_samples == 0.0))

    def summary(self) -> Dict[str, float]:
        out = {"valid_rate": self.valid_rate_hat, "avg_aoi": self.avg_aoi,
               "mean_peak": self.mean_peak, "mean_sojourn": self.mean_sojourn,
               "zero_sojourn_fraction": self.zero_sojourn_fraction,
               "elapsed_sim_time": self.elapsed_sim_time,
               "mean_queue_length": self.mean_queue_length}
        out.update({f"penalty[{k}]": v for k, v in self.time_avg_penalty.items()})
        return out


_QUANTILE_LEVELS = np.arange(1, 1000) / 1000.0


def _batch_ratio_se(num: np.ndarray, den: np.ndarray, batches: int = 32) -> float:
    n = len(num)
    if n < 2 * batches:
        return math.nan
    edges = np.linspace(0, n, batches + 1).astype(int)
    vals = np.array([num[a:b].sum() / den[a:b].sum() for a, b in zip(edges[:-1], edges[1:])])
    return float(vals.std(ddof=1) / math.sqrt(batches))


def run_sim(cfg: SimConfig) -> SimResult:
    cfg.validate()
    p = cfg.params
    lcfs = Discipline(cfg.discipline) is Discipline.LCFS
    service = 1 if cfg.service == "exp" else 0
    B, K = p.B, p.K
    cap = max(K, 1)

    t_end, warm_time = math.inf, math.inf
    max_events = max_valid = warm_events = warm_valid = -1
    if cfg.horizon_kind == "time":
        t_end = float(cfg.horizon)
        warm_time = cfg.warmup_fraction * t_end
    elif cfg.horizon_kind == "events":
        max_events = int(cfg.horizon)
        warm_events = int(cfg.warmup_fraction * max_events)
    else:
        # count only post-warmup updates; warmup length is a fraction of the target
        max_valid = int(cfg.horizon)
        warm_valid = int(cfg.warmup_fraction * max_valid)
    if cfg.warmup_fraction == 0:
        warm_time = 0.0

    ss = np.random.SeedSequence(cfg.seed)
    rngs = [np.random.default_rng(s) for s in ss.spawn(3)]
    draws = [g.standard_exponential(CHUNK) for g in rngs]
    ptr = np.zeros(3, dtype=np.int64)

    fs = np.zeros(8)
    fs[F_NEXT_S] = draws[0][0] / p.lam
    fs[F_NEXT_E] = draws[1][0] / p.r
    fs[F_NEXT_V] = math.inf
    fs[F_WARM_T] = 0.0 if cfg.warmup_fraction == 0 else math.inf
    ptr[0] = ptr[1] = 1
    st = np.zeros(16, dtype=np.int64)
    st[I_Q2] = B  # start with a full battery and an empty buffer

    buf_t = np.zeros(cap)
    buf_q = np.zeros(cap, dtype=np.int64)
    guess = int(min(max(cfg.horizon if cfg.horizon_kind != "time" else cfg.horizon * p.lam, 1024), 1 << 24))
    rec = [np.zeros(guess), np.zeros(guess), np.zeros(guess)]
    occ = np.zeros(K + B + 1 if service == 0 else QUEUE_LEVELS * (B + 1))
    log_cap = int(cfg.log_capacity)
    logs = [np.zeros(log_cap), np.zeros(log_cap, dtype=np.int64), np.zeros(log_cap, dtype=np.int64),
            np.zeros(log_cap, dtype=np.int64), np.zeros(log_cap)]
    cf = np.array([p.lam, p.r, p.mu if p.mu else 1.0, t_end, warm_time])
    ci = np.array([K, B, int(lcfs), service, max_events, max_valid, warm_events, warm_valid,
                   cap, QUEUE_LEVELS], dtype=np.int64)

    while True:
        code = _kernel(fs, st, buf_t, buf_q, draws[0], draws[1], draws[2], ptr,
                       rec[0], rec[1], rec[2], occ, *logs, cf, ci)
        if code == 0:
            break
        if code in (1, 2, 3):
            k = code - 1
            draws[k] = rngs[k].standard_exponential(CHUNK)
            ptr[k] = 0
        elif code == 4:
            rec = [np.concatenate([a, np.zeros(len(a))]) for a in rec]

    n = int(st[I_NREC])
    arr, dep, peak = (a[:n] for a in rec)
    return _summarize(cfg, fs, st, arr, dep, peak, occ, logs, service)


def _summarize(cfg, fs, st, arr, dep, peak, occ, logs, service) -> SimResult:
    p = cfg.params
    warm_t = fs[F_WARM_T]
    idx = np.flatnonzero(dep >= warm_t)
    if len(idx) < 3:
        raise InvalidParams("horizon too short: fewer than three valid updates after warmup")
    i0, i1 = idx[0], idx[-1]
    soj_all = dep - arr
    seg_end = peak[i0 + 1:i1 + 1]     # AoI right before each reset
    seg_start = soj_all[i0:i1]        # AoI right after the previous reset
    seg_len = dep[i0 + 1:i1 + 1] - dep[i0:i1]
    window = float(dep[i1] - dep[i0])

    penalties = {}
    stderr = {}
    for spec in cfg.penalties:
        inc = np.asarray(spec.antiderivative(seg_end)) - np.asarray(spec.antiderivative(seg_start))
        penalties[spec.id] = float(inc.sum() / window)
        stderr[spec.id] = _batch_ratio_se(inc, seg_len)
    area = 0.5 * (seg_end ** 2 - seg_start ** 2)
    stderr["avg_aoi"] = _batch_ratio_se(area, seg_len)
    stderr["valid_rate"] = _batch_ratio_se(np.ones_like(seg_len), seg_len)

    x = arr[idx[1:]] - arr[idx[1:] - 1]
    d = dep[idx[1:]] - dep[idx[1:] - 1]
    t_samp = soj_all[idx]
    # A_i = X_i + T_i and A_i = D_{i-1} + T_{i-1}
    r1 = np.abs(peak[idx[1:]] - (x + soj_all[idx[1:]]))
    r2 = np.abs(peak[idx[1:]] - (d + soj_all[idx[1:] - 1]))
    resid = float(max(r1.max(initial=0.0), r2.max(initial=0.0)))

    occ_total = fs[F_OCC_T]
    if service == 0:
        occupancy = {s: float(occ[s + p.B] / occ_total) for s in range(-p.B, p.K + 1)}
    else:
        grid = occ.reshape(QUEUE_LEVELS, p.B + 1) / occ_total
        occupancy = {(q1, q2): float(grid[q1, q2]) for q1 in range(QUEUE_LEVELS)
                     for q2 in range(p.B + 1) if grid[q1, q2] > 0}

    counts = SimCounts(
        arrivals=int(st[I_ARRIVALS]), blocked=int(st[I_BLOCKED]),
        discarded=int(st[I_DISCARDED]), valid_updates=int(st[I_VALID]),
        energy_discarded=int(st[I_EDISC]), deliveries=int(st[I_DELIV]),
        in_buffer=int(st[I_Q1]))
    event_log = None
    if cfg.log_capacity:
        nl = int(st[I_NLOG])
        event_log = {"time": logs[0][:nl], "kind": logs[1][:nl], "q1": logs[2][:nl],
                     "q2": logs[3][:nl], "aoi_after": logs[4][:nl]}
    peaks = peak[idx]
    return SimResult(
        valid_rate_hat=(len(idx) - 1) / window,
        time_avg_penalty=penalties,
        stderr=stderr,
        peak_samples=peaks,
        sojourn_samples=t_samp,
        interarrival_samples=x,
        peak_quantiles=np.quantile(peaks, _QUANTILE_LEVELS),
        sojourn_quantiles=np.quantile(t_samp, _QUANTILE_LEVELS),
        aoi_time_integral=float(area.sum()),
        elapsed_sim_time=window,
        counts=counts,
        occupancy=occupancy,
        mean_queue_length=float(fs[F_Q1_AREA] / occ_total),
        identity_residual=resid,
        validity_mismatches=int(st[I_MISMATCH]),
        event_log=event_log,
    )


def state_occupancy(cfg: SimConfig) -> Dict[int, float]:
    """Long-run time fraction of each collapsed state ``S = q1 - q2``."""
    if cfg.service != "zero":
        raise ModeUnsupported("state collapse only holds for instantaneous service")
    return run_sim(cfg).occupancy


def empirical_interarrival_cdf_check(cfg: SimConfig, grid: Sequence[float]) -> float:
    """Max gap between the empirical and closed-form CDF of valid-update inter-arrivals."""
    if cfg.service != "zero" or Discipline(cfg.discipline) is not Discipline.FCFS:
        raise ModeUnsupported("inter-arrival law is only known for FCFS with instantaneous service")
    res = run_sim(cfg)
    xs = np.sort(res.interarrival_samples)
    g = np.asarray(grid, dtype=float)
    ecdf = np.searchsorted(xs, g, side="right") / len(xs)
    return float(np.max(np.abs(ecdf - fcfs_interarrival_cdf(cfg.params, g))))


def write_event_log(result: SimResult, path) -> None:
    """Write the event log as whitespace-separated text.

    One header line, then ``event_time event_kind q1 q2 aoi_after`` per event,
    where ``event_kind`` is ``status``, ``energy`` or ``service``.
    """
    if result.event_log is None:
        raise ValueError("run was not configured with an event log")
    log = result.event_log
    with open(path, "w") as fh:
        fh.write("# event_time event_kind q1 q2 aoi_after\n")
        for t, k, q1, q2, a in zip(log["time"], log["kind"], log["q1"], log["q2"], log["aoi_after"]):
            fh.write(f"{t:.17g} {EVENT_KINDS[k]} {q1} {q2} {a:.17g}\n")


def kolmogorov_distance(samples: np.ndarray, dist) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``dist.cdf``.

    Both one-sided gaps are checked at every jump, which also covers an atom at 0.
    """
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    uniq, last = np.unique(xs, return_index=False, return_counts=True)
    upper = np.cumsum(last) / n
    lower = upper - last / n
    f = dist.cdf(uniq)
    # left limit of the model CDF at each jump; atoms only occur at 0
    f_left = np.where(uniq > 0, f, 0.0)
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(f_left - lower))))
