"""Deterministic session engine.

Runs the full discrimination session: two unscored warm-up trials, 24 match
trials, then 24 softer trials, with rest markers after every eight scored
trials.  Each stimulus presentation simulates a trapezoidal squeeze on all
three finger pairs, renders feedback under the selected law, and feeds the
pooled rendered-force / leader-displacement trace to the virtual
participant.

Two execution paths produce identical numbers: a vectorized fast path used
for bulk simulation, and a per-tick message path that frames every pose,
force, and feedback sample through the wire codec and transport (used when
message logging is enabled, and required for the lossy datagram mode where
stale forces decay to gated zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import wire
from .config import RunConfig
from .feedback import FeedbackForce, estimate_stiffness, gate, method1
from .observer import NoContactPercept, Observer, PerceptualModel
from .retarget import (
    LEADER_FINGERS,
    FingerId,
    NearZeroFollowerDisplacement,
    beta,
    leader_to_follower_displacement,
    map_finger,
)
from .samples import (
    FingertipReading,
    SampleSpec,
    aggregate_max,
    clip_to_range,
    sample_by_level,
    squeeze_counts,
)
from .schedule import (
    TASK_ABX,
    TASK_S,
    PresentationPlan,
    Trial,
    TrialSchedule,
    practice_trials,
    randomize_presentation,
    schedule_table1,
    softer_task_trials,
)
from .sessionlog import SessionLog

_TASK_CODES = {TASK_ABX: 1, TASK_S: 2}
_OBSERVER_STREAM = 0xB5
_PRESENTATION_STREAM = 0x9E
_WORLD_STREAM = 0x57EA


class SessionAborted(RuntimeError):
    def __init__(self, message: str, log: SessionLog):
        super().__init__(message)
        self.log = log


@dataclass(frozen=True)
class TrialResult:
    trial: Trial
    answered: str
    correct: bool
    percepts: dict
    record_span: tuple[int, int]


def _trapezoid(n_ticks: int) -> np.ndarray:
    """Normalized squeeze profile: ramp up, hold, ramp down."""
    t = np.arange(n_ticks, dtype=float)
    last = float(n_ticks - 1)
    return np.interp(t, [0.0, 0.4 * last, 0.6 * last, last], [0.0, 1.0, 1.0, 0.0])


class _SqueezeKernel:
    """Per-session precomputed squeeze arrays.

    The displacement trajectories are the same for every stimulus
    presentation, so everything that does not depend on the sample or the
    noise draw is computed once; rows index the three finger pairs.
    """

    def __init__(self, cfg: RunConfig):
        from .samples import CHANNEL_WEIGHTS, catalog

        profile = _trapezoid(cfg.ticks_per_squeeze)
        dz_l, dz_f, betas = [], [], []
        for finger in LEADER_FINGERS:
            dzl = cfg.squeeze_fraction * cfg.devices.leader_max(finger) * profile
            dz_l.append(dzl)
            dz_f.append(leader_to_follower_displacement(dzl, finger, cfg.devices))
            betas.append(beta(cfg.devices, finger))
        self.dz_leader = np.stack(dz_l)
        self.dz_follower = np.stack(dz_f)
        self.dz_leader_flat = self.dz_leader.ravel()
        self.beta = np.asarray(betas)[:, None]
        if cfg.delta_mode == "windowed":
            ratio = np.stack(
                [
                    _windowed_ratio(self.dz_leader[i], self.dz_follower[i], cfg.eps_mm)
                    for i in range(len(LEADER_FINGERS))
                ]
            )
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(
                    self.dz_follower <= cfg.eps_mm, np.nan, self.dz_leader / self.dz_follower
                )
        self.near_zero = np.isnan(ratio)
        self.ratio = np.nan_to_num(ratio, nan=0.0)
        self.base_counts = {
            spec.stiffness_level: spec.stiffness * self.dz_follower * cfg.sensor.counts_per_newton
            for spec in catalog(cfg.geometry)
        }
        self.weights = np.asarray(CHANNEL_WEIGHTS)
        self.alpha = cfg.feedback.alpha
        self.f_min = cfg.sensor.f_min
        self.f_max = cfg.sensor.f_max
        self.f_leader_max = cfg.f_leader_max
        self.clamp = cfg.clamp_output
        self.sigma = cfg.noise_sigma

    def render(
        self,
        sample: SampleSpec,
        perms: list[np.ndarray],
        rng: np.random.Generator,
        method: int,
    ) -> np.ndarray:
        """Rendered force (3, T) for one squeeze of one sample.

        Arithmetic matches the per-tick operations exactly; the per-finger
        noise blocks are drawn in the same stream order as the framed path.
        """
        base = self.base_counts[sample.stiffness_level]
        wp = self.weights[np.stack(perms)]
        z = base[:, :, None] * wp[:, None, :]
        if self.sigma > 0:
            z = z * (1.0 + self.sigma * rng.standard_normal(z.shape))
        z = np.maximum(z, 0.0)
        raw = z.max(axis=2)
        clipped = np.minimum(raw, self.f_max)
        gated = raw < self.f_min
        m1 = np.where(gated, 0.0, self.alpha * clipped)
        if method == 1:
            return m1
        m2 = np.where(gated | self.near_zero, 0.0, m1 * self.ratio * self.beta)
        if self.clamp:
            m2 = np.minimum(m2, self.f_leader_max)
        return m2


class _TransportPair:
    """leader->follower and follower->leader channels."""

    def __init__(self, cfg: RunConfig):
        if cfg.transport == "udp":
            host = "127.0.0.1"
            recv_f = wire.DatagramTransport((host, 0), bind=(host, cfg.udp_port))
            recv_l = wire.DatagramTransport((host, 0), bind=(host, 0))
            # cross-wire the senders onto the ephemeral bound ports
            self.to_follower = wire.DatagramTransport((host, recv_f.bound_port))
            self.to_leader = wire.DatagramTransport((host, recv_l.bound_port))
            self.recv_follower = recv_f
            self.recv_leader = recv_l
            self._own = [recv_f, recv_l, self.to_follower, self.to_leader]
        else:
            chan_lf = wire.InProcessTransport()
            chan_fl = wire.InProcessTransport()
            self.to_follower = chan_lf
            self.recv_follower = chan_lf
            self.to_leader = chan_fl
            self.recv_leader = chan_fl
            self._own = []

    def close(self) -> None:
        for t in self._own:
            t.close()


class SessionEngine:
    def __init__(
        self,
        config: RunConfig,
        observer: Observer | None = None,
        schedule: TrialSchedule | None = None,
        participant: str = "p00",
        group: int = 1,
        day: int = 1,
        transports: _TransportPair | None = None,
    ):
        self.cfg = config
        self.schedule = schedule or schedule_table1()
        model = config.observer_model
        self._own_observer = observer is None
        if self._own_observer:
            self._seeded_model = PerceptualModel(
                weber_fraction=model.weber_fraction,
                lapse_rate=model.lapse_rate,
                seed=int(np.random.SeedSequence((config.seed, _OBSERVER_STREAM)).generate_state(1)[0]),
                pure_noise=model.pure_noise,
            )
            observer = Observer(self._seeded_model)
        self.observer = observer
        self.participant = participant
        self.group = group
        self.day = day
        self._transports = transports
        self._seq: dict[tuple[str, str], int] = {}
        self._squeeze_kernel: _SqueezeKernel | None = None
        self._world_rng: np.random.Generator | None = None

    # -- wire helpers -----------------------------------------------------

    def _next_seq(self, kind: str, finger: str) -> int:
        key = (kind, finger)
        n = self._seq.get(key, 0)
        self._seq[key] = n + 1
        return n

    # -- session ----------------------------------------------------------

    def _header(self) -> dict:
        rows = [
            {
                "index": t.index,
                "a": t.a,
                "b": t.b,
                "x": t.x,
                "d": t.distance,
                "direction": t.direction,
            }
            for t in self.schedule.trials
        ]
        return {
            "participant": self.participant,
            "group": self.group,
            "day": self.day,
            "seed": self.cfg.seed,
            "method": self.cfg.method,
            "config": self.cfg.to_dict(),
            "schedule": rows,
        }

    def run(self, out_path=None) -> tuple[SessionLog, list[TrialResult]]:
        cfg = self.cfg
        # reset per-run state so repeated runs of one engine are identical
        self._world_rng = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, _WORLD_STREAM))
        )
        self._seq = {}
        if self._own_observer:
            self.observer = Observer(self._seeded_model)
        log = SessionLog(header=self._header())
        results: list[TrialResult] = []
        transports = self._transports
        own_transports = transports is None
        if own_transports and cfg.log_messages:
            transports = _TransportPair(cfg)
        try:
            for task in (TASK_ABX, TASK_S):
                trials = list(self.schedule.trials)
                if task == TASK_S:
                    trials = list(softer_task_trials(self.schedule).trials)
                plans = randomize_presentation(
                    TrialSchedule(trials=tuple(trials)),
                    (cfg.seed, _TASK_CODES[task], _PRESENTATION_STREAM),
                )
                if task == TASK_ABX:
                    for pt in practice_trials():
                        plan = PresentationPlan(first="A")
                        results.append(self._run_trial(log, pt, plan, transports))
                scored = 0
                for trial, plan in zip(trials, plans):
                    results.append(self._run_trial(log, trial, plan, transports))
                    scored += 1
                    if scored in (8, 16):
                        log.append({"t": "rest", "seconds": cfg.rest_seconds, "task": task})
            log.append(
                {
                    "t": "session_end",
                    "scored_trials": sum(1 for r in results if not r.trial.practice),
                    "correct": sum(1 for r in results if r.correct and not r.trial.practice),
                }
            )
        except NoContactPercept as exc:
            log.append({"t": "abort", "reason": str(exc)})
            if out_path is not None:
                log.write(out_path)
            raise SessionAborted(f"observer failure: {exc}", log) from exc
        finally:
            if own_transports and transports is not None:
                transports.close()
        if out_path is not None:
            log.write(out_path)
        return log, results

    # -- trials -----------------------------------------------------------

    def _run_trial(
        self,
        log: SessionLog,
        trial: Trial,
        plan: PresentationPlan,
        transports: _TransportPair | None,
    ) -> TrialResult:
        cfg = self.cfg
        start = log.append(
            {
                "t": "trial",
                "task": trial.task,
                "index": trial.index,
                "a": trial.a,
                "b": trial.b,
                "x": trial.x,
                "d": trial.distance,
                "direction": trial.direction,
                "pair": trial.pair_label(),
                "practice": trial.practice,
                "first": plan.first,
            }
        )
        second = "B" if plan.first == "A" else "A"
        roles = [plan.first, second] + (["X"] if trial.task == TASK_ABX else [])
        levels = {"A": trial.a, "B": trial.b, "X": trial.x}

        percepts: dict[str, float] = {}
        for role in roles:
            sample = sample_by_level(levels[role], cfg.geometry)
            feedback_trace, dz_trace = self._run_phase(log, trial, sample, transports)
            percepts[role] = self.observer.perceive(feedback_trace, dz_trace)
            log.append(
                {
                    "t": "percept",
                    "task": trial.task,
                    "index": trial.index,
                    "role": role,
                    "level": levels[role],
                    "value": percepts[role],
                    "practice": trial.practice,
                }
            )

        if trial.task == TASK_ABX:
            answered = self.observer.answer_abx(percepts["A"], percepts["B"], percepts["X"])
            correct = levels[answered] == trial.x
        else:
            answered = self.observer.answer_softer(percepts["A"], percepts["B"])
            other = "B" if answered == "A" else "A"
            correct = levels[answered] < levels[other]

        end = log.append(
            {
                "t": "answer",
                "task": trial.task,
                "index": trial.index,
                "a": trial.a,
                "b": trial.b,
                "x": trial.x,
                "d": trial.distance,
                "direction": trial.direction,
                "pair": trial.pair_label(),
                "answered": answered,
                "correct": bool(correct),
                "practice": trial.practice,
            }
        )
        return TrialResult(
            trial=trial,
            answered=answered,
            correct=bool(correct),
            percepts=percepts,
            record_span=(start, end + 1),
        )

    # -- squeeze phases ---------------------------------------------------

    def _kernel(self) -> "_SqueezeKernel":
        if self._squeeze_kernel is None:
            self._squeeze_kernel = _SqueezeKernel(self.cfg)
        return self._squeeze_kernel

    def _run_phase(
        self,
        log: SessionLog,
        trial: Trial,
        sample: SampleSpec,
        transports: _TransportPair | None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Simulate one squeeze on all fingers; returns pooled traces."""
        cfg = self.cfg
        kern = self._kernel()
        rng = self._world_rng
        perms = [rng.permutation(4) for _ in LEADER_FINGERS]

        if cfg.log_messages and transports is not None:
            feedback_parts = []
            for i, finger in enumerate(LEADER_FINGERS):
                z = squeeze_counts(
                    sample,
                    kern.dz_follower[i],
                    cfg.sensor,
                    rng,
                    perm=perms[i],
                    noise_sigma=cfg.noise_sigma,
                )
                feedback_parts.append(
                    self._message_pass(
                        log, trial, finger, kern.dz_leader[i], kern.dz_follower[i], z, transports
                    )
                )
            return np.concatenate(feedback_parts), kern.dz_leader_flat

        m_active = kern.render(sample, perms, rng, cfg.method)
        return m_active.ravel(), kern.dz_leader_flat

    def _message_pass(
        self,
        log: SessionLog,
        trial: Trial,
        finger: str,
        dz_leader: np.ndarray,
        dz_follower: np.ndarray,
        z: np.ndarray,
        transports: _TransportPair,
    ) -> np.ndarray:
        """Per-tick framing through the wire; applies the stale-force policy."""
        cfg = self.cfg
        fb_cfg = cfg.feedback
        leader_id = FingerId("leader", finger)
        follower_id = FingerId("follower", map_finger(finger))
        n = len(dz_leader)
        m_active = np.zeros(n)
        last_force: wire.ForceMessage | None = None
        stale_age = cfg.stale_timeout_ticks + 1
        cum_l = 0.0
        cum_f = 0.0
        b = beta(cfg.devices, finger)
        for t in range(n):
            pose = wire.PoseMessage(
                seq=self._next_seq("pose", finger),
                tick=t,
                finger=leader_id,
                dz_leader=float(dz_leader[t]),
            )
            transports.to_follower.send(wire.encode(pose))
            pose_frame = transports.recv_follower.recv()
            if pose_frame is not None:
                pose_rx = wire.decode(pose_frame)
                log.append(
                    {
                        "t": "pose",
                        "seq": pose_rx.seq,
                        "tick": pose_rx.tick,
                        "finger": finger,
                        "dz_leader": pose_rx.dz_leader,
                    }
                )

            reading = FingertipReading(
                finger=follower_id,
                z_forces=tuple(float(v) for v in z[t]),
                xy_forces=tuple((0.06 * float(v), 0.03 * float(v)) for v in z[t]),
                timestamp=t,
            )
            force = wire.ForceMessage(
                seq=self._next_seq("force", finger),
                tick=t,
                finger=follower_id,
                reading=reading,
                f_aggregate=float(clip_to_range(aggregate_max(reading), cfg.sensor)),
                dz_follower=float(dz_follower[t]),
            )
            transports.to_leader.send(wire.encode(force))
            force_frame = transports.recv_leader.recv()

            if force_frame is not None:
                force_rx: wire.ForceMessage = wire.decode(force_frame)
                last_force = force_rx
                stale_age = 0
            else:
                stale_age += 1
                force_rx = last_force if stale_age <= cfg.stale_timeout_ticks else None

            if force_rx is None:
                m1_val = m2_val = 0.0
                k_hat = None
            else:
                log.append(
                    {
                        "t": "force",
                        "seq": force_rx.seq,
                        "tick": force_rx.tick,
                        "finger": follower_id.name,
                        "f_aggregate": force_rx.f_aggregate,
                        "dz_follower": force_rx.dz_follower,
                        "stale": stale_age > 0,
                    }
                )
                f_agg = force_rx.f_aggregate
                dz_f = force_rx.dz_follower
                cum_l += float(dz_leader[t])
                cum_f += dz_f
                m1_val = method1(f_agg, fb_cfg)
                if cfg.delta_mode == "windowed":
                    dz_l_eff, dz_f_eff = cum_l, cum_f
                else:
                    dz_l_eff, dz_f_eff = float(dz_leader[t]), dz_f
                if gate(f_agg, fb_cfg) or dz_f_eff <= fb_cfg.eps_mm:
                    m2_val = 0.0
                else:
                    m2_val = m1_val * (dz_l_eff / dz_f_eff) * b
                    if fb_cfg.clamp_output:
                        m2_val = min(m2_val, fb_cfg.f_leader_max)
                try:
                    k_hat = estimate_stiffness(f_agg, dz_f, follower_id.name, fb_cfg.eps_mm).k_hat
                except NearZeroFollowerDisplacement:
                    k_hat = None

            rendered = FeedbackForce(finger=finger, method1=m1_val, method2=m2_val)
            fb_msg = wire.FeedbackMessage(
                seq=self._next_seq("feedback", finger),
                tick=t,
                finger=leader_id,
                rendered=rendered,
                k_hat=k_hat,
            )
            fb_rx: wire.FeedbackMessage = wire.decode(wire.encode(fb_msg))
            log.append(
                {
                    "t": "feedback",
                    "seq": fb_rx.seq,
                    "tick": fb_rx.tick,
                    "finger": finger,
                    "method1": fb_rx.rendered.method1,
                    "method2": fb_rx.rendered.method2,
                    "k_hat": fb_rx.k_hat,
                }
            )
            m_active[t] = m1_val if cfg.method == 1 else m2_val
        return m_active


def _windowed_ratio(dz_leader: np.ndarray, dz_follower: np.ndarray, eps_mm: float) -> np.ndarray:
    """Cumulative-displacement ratio alternative to the per-tick ratio."""
    cl = np.cumsum(dz_leader)
    cf = np.cumsum(dz_follower)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(cf <= eps_mm, np.nan, cl / cf)


def run_session(
    schedule: TrialSchedule,
    method: int,
    observer: Observer,
    seed: int,
    config: RunConfig | None = None,
    participant: str = "p00",
    group: int = 1,
    day: int = 1,
    out_path=None,
) -> tuple[SessionLog, list[TrialResult]]:
    """One full session under the given rendering law and seed."""
    from dataclasses import replace

    cfg = config or RunConfig()
    cfg = replace(cfg, method=method, seed=seed)
    engine = SessionEngine(
        cfg, observer=observer, schedule=schedule, participant=participant, group=group, day=day
    )
    return engine.run(out_path=out_path)
