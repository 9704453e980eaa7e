"""Oracle suite: every closed form in the package checked against an
independent route.

Each check returns a :class:`CheckResult`; :func:`run_all` bundles them into
a machine-readable report.  The key substitutable callables (closed-form
capture probability, power solvers) are injectable so a corrupted
implementation is provably caught.

The ledger reference re-implements the delay and energy equations directly
over a whole episode, independent of the incremental step accounting, using
the package's documented canonical term forms and summation order so the
comparison is exact rather than approximate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import eavesdrop, powerstar
from .agent import TrainConfig, run_random
from .costmodel import DeceiverAssignment, TransmissionSpec
from .env import EnvConfig, SplitEnv
from .icm import ICM, ICMConfig
from .nn import autodiff as ad
from .nn.layers import NetSpec, ParamStore, init_net, net_forward
from .powerstar import DeceiverGeometry, HopBudget, HopGeometry
from .slmodel import Segment, make_model, split_at
from .splitnn import backward_chain, compute_loss, forward_chain, loss_grad, \
    make_chain, monolithic_oracle, split_layers
from .topology import Device, Eavesdropper, Position, SERVER, Scenario, \
    device, gen_scenario


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "details": self.details}


def _channel_scenario(bandwidth=1.0e6, noise_psd=1.0e-12, o=1.0,
                      eaves=()) -> Scenario:
    """Minimal scenario carrying only channel constants (plus any
    eavesdroppers a check wants to place explicitly)."""
    dummy = Device(Position(0.0, 0.0), 5.0e9, 1.0e5, 1.0e-19)
    dummy2 = Device(Position(100.0, 0.0), 5.0e9, 1.0e5, 1.0e-19)
    server = Device(Position(0.0, 100.0), 5.0e9, 1.0e5, 1.0e-19)
    return Scenario(devices=(dummy, dummy2), server=server,
                    eavesdroppers=tuple(eaves), bandwidth_hz=bandwidth,
                    noise_psd=noise_psd, rayleigh_o=o, area_side=800.0,
                    time_budget=8.0, energy_budget=75.0)


# -- Check 1: expected-leakage closed form vs Monte Carlo ---------------------

def check_leakage_closed_form(seed: int = 0, n_configs: int = 20,
                              n_samples: int = 100_000,
                              closed_form=None) -> CheckResult:
    """Closed-form expected leakage within 4 standard errors of simulation."""
    closed_form = closed_form or eavesdrop.expected_leakage_closed
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x71]))
    worst = 0.0
    failures = []
    cases = []
    t0 = time.monotonic()
    for case in range(n_configs):
        n_dec = int(rng.integers(1, 4))
        n_eav = int(rng.integers(1, 4))
        n_hops = int(rng.integers(1, 3))
        eaves = tuple(
            Eavesdropper(Position(float(rng.uniform(0, 800)),
                                  float(rng.uniform(0, 800))),
                         float(rng.uniform(0.3, 0.9)))
            for _ in range(n_eav))
        scn = gen_scenario(int(rng.integers(0, 2 ** 31)),
                           u_count=max(4, n_dec + 2), e_count=0)
        scn = Scenario(devices=scn.devices, server=scn.server,
                       eavesdroppers=eaves, bandwidth_hz=scn.bandwidth_hz,
                       noise_psd=scn.noise_psd, rayleigh_o=scn.rayleigh_o,
                       area_side=scn.area_side, time_budget=scn.time_budget,
                       energy_budget=scn.energy_budget)
        hops = []
        for h in range(n_hops):
            ids = rng.permutation(scn.device_count)[:n_dec + 2]
            deceivers = tuple(
                DeceiverAssignment(device(int(d)),
                                   float(rng.uniform(0.05, 0.4)))
                for d in ids[2:])
            seg = Segment(start=0, end=1, param_bits=1e6,
                          out_bits=float(rng.uniform(1e4, 1e6)),
                          grad_in_bits=1e4, fwd_flop_coeff=0.0,
                          bwd_flop_coeff=0.0,
                          sensitivity_weight=float(rng.uniform(0.5, 1.5)))
            hops.append((TransmissionSpec(
                tx=device(int(ids[0])), rx=device(int(ids[1])),
                payload_bits=seg.out_bits,
                tx_power=float(rng.uniform(0.05, 0.4)),
                deceivers=deceivers), seg))
        closed = closed_form(hops, scn).expected_bits
        mc_mean, mc_err = eavesdrop.mc_leakage_oracle(
            hops, scn, n_samples, seed=case + 1000 * seed)
        gap = abs(mc_mean - closed)
        sigma = gap / mc_err if mc_err > 0 else math.inf if gap > 0 else 0.0
        worst = max(worst, sigma)
        cases.append({"case": case, "hops": n_hops, "deceivers": n_dec,
                      "eavesdroppers": n_eav, "closed_bits": closed,
                      "mc_mean_bits": mc_mean, "mc_stderr_bits": mc_err,
                      "gap_sigma": sigma})
        if gap > 4.0 * mc_err:
            failures.append({"case": case, "closed": closed, "mc": mc_mean,
                             "stderr": mc_err})
    runtime = time.monotonic() - t0
    return CheckResult(
        name="leakage_closed_form_vs_monte_carlo",
        passed=not failures and runtime <= 60.0,
        details={"configs": n_configs, "samples": n_samples,
                 "worst_sigma": worst, "runtime_s": runtime,
                 "cases": cases, "failures": failures})


# -- Checks 2-3: closed-form powers vs grid oracle ----------------------------

def _random_power_case(rng, n_dec: int, n_eav: int, scn: Scenario):
    geom = HopGeometry(
        m_tx_rx=float(rng.uniform(50, 400)),
        deceivers=tuple(
            DeceiverGeometry(
                m_interference=float(rng.uniform(50, 400)),
                m_to_eaves=tuple(float(rng.uniform(50, 600))
                                 for _ in range(n_eav)))
            for _ in range(n_dec)),
        m_tx_to_eaves=tuple(float(rng.uniform(50, 600))
                            for _ in range(n_eav)),
        monitor_probs=tuple(float(rng.uniform(0.3, 0.9))
                            for _ in range(n_eav)),
        delta_bits=float(rng.uniform(1e4, 1e6)),
    )
    budget = HopBudget(
        time_budget=float(rng.uniform(0.5, 3.0)),
        energy_budget=float(rng.uniform(0.005, 0.2)),
        payload_bits=float(rng.uniform(1e4, 5e5)),
    )
    return geom, budget


def check_single_deceiver_powers(seed: int = 0, n_cases: int = 10,
                                 resolution: int = 1000,
                                 solver=None) -> CheckResult:
    """Single-deceiver closed form: residuals, grid dominance, and the
    zero-energy infeasibility case."""
    solver = solver or powerstar.cor1_powers
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x72]))
    scn = _channel_scenario()
    cases = []
    failures = []
    while len(cases) < n_cases:
        n_eav = int(rng.integers(1, 4))
        geom, budget = _random_power_case(rng, 1, n_eav, scn)
        if powerstar.feasibility(budget, geom.m_tx_rx, scn):
            cases.append((geom, budget))
    rows = []
    for i, (geom, budget) in enumerate(cases):
        sol = solver(geom, scn, budget)
        if not sol.feasible:
            failures.append({"case": i, "reason": "reported infeasible"})
            continue
        t_res, e_res = powerstar.constraint_residuals(sol, geom, scn, budget)
        grid = powerstar.grid_oracle(geom, scn, budget,
                                     grid_resolution=resolution)
        rel_gap = ((sol.objective - grid.objective)
                   / max(abs(grid.objective), 1e-300))
        rows.append({"case": i, "setting": "single_deceiver",
                     "m_tx_rx": geom.m_tx_rx,
                     "time_budget": budget.time_budget,
                     "energy_budget": budget.energy_budget,
                     "payload_bits": budget.payload_bits,
                     "closed_p_tx": sol.p_tx,
                     "closed_p_d": sol.p_deceivers[0],
                     "grid_p_tx": grid.p_tx,
                     "grid_p_d": grid.p_deceivers[0],
                     "closed_objective": sol.objective,
                     "grid_objective": grid.objective,
                     "time_residual": t_res, "energy_residual": e_res})
        ok = (t_res <= 1e-9 and e_res <= 1e-9 and grid.feasible
              and rel_gap <= 1e-3)
        if not ok:
            failures.append({"case": i, "time_residual": t_res,
                             "energy_residual": e_res, "rel_gap": rel_gap})
    # Zero energy budget admits no valid deceiver power.
    geom, budget = cases[0]
    zero_budget = HopBudget(time_budget=budget.time_budget,
                            energy_budget=0.0,
                            payload_bits=budget.payload_bits)
    zero_sol = solver(geom, scn, zero_budget)
    zero_ok = (not zero_sol.feasible
               and not powerstar.feasibility(zero_budget, geom.m_tx_rx, scn))
    if not zero_ok:
        failures.append({"case": "zero_energy", "feasible": zero_sol.feasible})
    return CheckResult(
        name="single_deceiver_power_closed_form",
        passed=not failures,
        details={"cases": rows, "resolution": resolution,
                 "failures": failures})


def check_single_eavesdropper_powers(seed: int = 0, n_cases: int = 10,
                                     resolution: int = 1000,
                                     solver=None) -> CheckResult:
    """Interference-free closed form vs an equal-power grid, plus an exact
    recomputation of the transmit power formula.

    Cases place every deceiver equidistant from the eavesdropper: on that
    domain the equal-odds allocation coincides with the symmetric optimum,
    so grid dominance is a meaningful correctness check.  (For heterogeneous
    distances the equal-odds allocation is provably not optimal; see
    :func:`splitjam.powerstar.two_deceiver_simplex_search`.)
    """
    solver = solver or powerstar.cor2_powers
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x73]))
    scn = _channel_scenario()
    cases = []
    failures = []
    while len(cases) < n_cases:
        n_dec = int(rng.integers(1, 4))
        geom, budget = _random_power_case(rng, n_dec, 1, scn)
        m_shared = float(rng.uniform(50, 600))
        geom = HopGeometry(
            m_tx_rx=geom.m_tx_rx,
            deceivers=tuple(
                DeceiverGeometry(m_interference=d.m_interference,
                                 m_to_eaves=(m_shared,))
                for d in geom.deceivers),
            m_tx_to_eaves=geom.m_tx_to_eaves,
            monitor_probs=geom.monitor_probs,
            delta_bits=geom.delta_bits)
        if powerstar.feasibility(budget, geom.m_tx_rx, scn):
            cases.append((geom, budget))
    rows = []
    for i, (geom, budget) in enumerate(cases):
        sol = solver(geom, scn, budget)
        if not sol.feasible:
            failures.append({"case": i, "reason": "reported infeasible"})
            continue
        # Straight-line recomputation of the transmit-power formula.
        snr_min = 2.0 ** (budget.payload_bits
                          / (budget.time_budget * scn.bandwidth_hz)) - 1.0
        p_tx_ref = (scn.bandwidth_hz * scn.noise_psd * snr_min
                    / (geom.m_tx_rx ** -2.0 * scn.rayleigh_o))
        p_tx_err = abs(sol.p_tx - p_tx_ref) / p_tx_ref
        t_res, e_res = powerstar.constraint_residuals(
            sol, geom, scn, budget, interference_free=True)
        grid = powerstar.grid_oracle(geom, scn, budget,
                                     grid_resolution=resolution,
                                     interference_free=True)
        rel_gap = ((sol.objective - grid.objective)
                   / max(abs(grid.objective), 1e-300))
        rows.append({"case": i, "setting": "single_eavesdropper",
                     "m_tx_rx": geom.m_tx_rx,
                     "time_budget": budget.time_budget,
                     "energy_budget": budget.energy_budget,
                     "payload_bits": budget.payload_bits,
                     "closed_p_tx": sol.p_tx,
                     "closed_p_d": sol.p_deceivers[0],
                     "grid_p_tx": grid.p_tx,
                     "grid_p_d": grid.p_deceivers[0],
                     "closed_objective": sol.objective,
                     "grid_objective": grid.objective,
                     "time_residual": t_res, "energy_residual": e_res})
        ok = (p_tx_err <= 1e-12 and t_res <= 1e-9 and e_res <= 1e-9
              and grid.feasible and rel_gap <= 1e-3)
        if not ok:
            failures.append({"case": i, "p_tx_err": p_tx_err,
                             "time_residual": t_res,
                             "energy_residual": e_res, "rel_gap": rel_gap})
    return CheckResult(
        name="single_eavesdropper_power_closed_form",
        passed=not failures,
        details={"cases": rows, "resolution": resolution,
                 "failures": failures})


# -- Check 4: split invisibility ----------------------------------------------

def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(np.asarray(a).ravel()))
    nb = float(np.linalg.norm(np.asarray(b).ravel()))
    gap = float(np.linalg.norm((np.asarray(a) - np.asarray(b)).ravel()))
    return gap / max(na, nb, 1e-300)


def check_split_invisibility(seed: int = 0, n_cases: int = 20,
                             tol: float = 1e-10) -> CheckResult:
    """Chained loss and parameter gradients match the unsplit reference."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x74]))
    failures = []
    for case in range(n_cases):
        n_layers = int(rng.integers(3, 8))
        dims = [int(rng.integers(2, 8)) for _ in range(n_layers + 1)]
        layers = make_chain(dims, seed=int(rng.integers(0, 2 ** 31)))
        n_cuts = int(rng.integers(1, n_layers))
        cuts = sorted(rng.choice(np.arange(1, n_layers), size=n_cuts,
                                 replace=False).tolist())
        segments = split_layers(layers, cuts)
        batch = rng.standard_normal((int(rng.integers(2, 9)), dims[0]))
        labels = rng.standard_normal((batch.shape[0], dims[-1]))

        outs, cache = forward_chain(segments, batch)
        loss = compute_loss(outs[-1], labels)
        grads, _ = backward_chain(segments, cache, loss_grad(outs[-1], labels))
        flat = [g for seg in grads for g in seg]

        ref_loss, ref_grads = monolithic_oracle(layers, batch, labels)
        errs = [abs(loss - ref_loss) / max(abs(ref_loss), 1e-300)]
        for (dw, db), (rw, rb) in zip(flat, ref_grads):
            errs.append(_rel_err(dw, rw))
            errs.append(_rel_err(db, rb))
        worst = max(errs)
        if worst > tol:
            failures.append({"case": case, "worst_rel_err": worst})
    return CheckResult(name="split_invisibility", passed=not failures,
                       details={"cases": n_cases, "tol": tol,
                                "failures": failures})


# -- Check 5: finite-difference gradients --------------------------------------

def finite_difference_check(store: ParamStore, loss_fn, rng,
                            n_checks: int = 20, step: float = 1e-6,
                            tol: float = 1e-4, params=None) -> float:
    """Worst relative error between tape gradients and central differences.

    Checked components are sampled among entries carrying non-negligible
    gradient (at least 1e-3 of the largest magnitude), so the comparison
    measures analytic-vs-numeric agreement instead of finite-difference
    round-off on entries whose true gradient is zero, e.g. embedding rows
    of actions absent from the batch.
    """
    params = params if params is not None else store.params()
    loss = loss_fn()
    store.zero_grads()
    ad.backward(loss)
    grads = {p.name: p.grad.copy() for p in params}
    store.zero_grads()
    gmax = max(float(np.abs(g).max()) for g in grads.values())
    thresh = max(1e-3 * gmax, 1e-12)
    candidates = [(p, idx) for p in params
                  for idx in np.flatnonzero(np.abs(grads[p.name]) >= thresh)]
    worst = 0.0
    for _ in range(n_checks):
        p, idx = candidates[int(rng.integers(len(candidates)))]
        idx = int(idx)
        original = p.value.flat[idx]
        p.value.flat[idx] = original + step
        p.version += 1
        up = float(loss_fn().value)
        p.value.flat[idx] = original - step
        p.version += 1
        down = float(loss_fn().value)
        p.value.flat[idx] = original
        p.version += 1
        fd = (up - down) / (2.0 * step)
        an = grads[p.name].flat[idx]
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
        worst = max(worst, rel)
    return worst


def check_network_gradients(seed: int = 0, tol: float = 1e-4) -> CheckResult:
    """Finite-difference pass over every network kind and full graph."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x75]))
    results = {}

    # Generic body containing every block kind.
    store = ParamStore()
    spec = NetSpec((("dense", 8, "tanh"), ("residual",), ("gru", 6),
                    ("dense", 5, "sigmoid")))
    init_net(spec, store, "mix", 7, rng)
    x = rng.standard_normal((4, 7))
    w = rng.standard_normal((4, 5))

    def mixed_loss():
        out, _ = net_forward(spec, store, "mix", x)
        return ad.mean_all(ad.mul(out, ad.as_var(w)))

    results["mixed_blocks"] = finite_difference_check(store, mixed_loss, rng,
                                                      tol=tol)

    # Full curiosity stack: inverse, forward, and combined losses.
    icm = ICM(ICMConfig(state_dim=9, action_count=12, feature_dim=6,
                        hidden_dim=10, gru_hidden=5), rng)
    states = rng.standard_normal((5, 9))
    nexts = rng.standard_normal((5, 9))
    acts = rng.integers(0, 12, size=5)

    results["icm_inverse"] = finite_difference_check(
        icm.store, lambda: icm._inverse_loss(states, acts, nexts), rng,
        tol=tol)
    results["icm_forward"] = finite_difference_check(
        icm.store,
        lambda: icm._forward_loss(states, acts, nexts, extractor_grad=True),
        rng, tol=tol)

    # Actor with cross-attention plus critic, through the acting agent.
    from .agent import ICMCAAgent
    scn = gen_scenario(seed, u_count=4, e_count=2)
    model = make_model(5, "uniform", seed)
    env = SplitEnv(scn, model, EnvConfig(segment_count=3), seed)
    agent = ICMCAAgent(env, TrainConfig(seed=seed, history_len=3))
    b = 4
    a_count = env.action_count
    st = rng.standard_normal((b, env.state_dim))
    hist_s = rng.standard_normal((b, 3, env.state_dim))
    hist_a = rng.integers(0, a_count, size=(b, 3))
    hist_v = rng.random((b, 3)) < 0.8
    hist_v[:, 0] = True
    masks = rng.random((b, a_count)) < 0.3
    masks[:, 0] = True
    picked = np.array([int(rng.integers(a_count)) for _ in range(b)])
    masks[np.arange(b), picked] = True
    weights = rng.standard_normal(b)

    def actor_loss():
        probs = agent._policy_var(st, hist_s, hist_a, hist_v, masks)
        log_pa = ad.log_clip(ad.gather_cols(probs, picked))
        return ad.mean_all(ad.mul(log_pa, ad.as_var(weights)))

    actor_params = agent.store.params("actor") + agent.store.params("att")
    results["actor_attention"] = finite_difference_check(
        agent.store, actor_loss, rng, tol=tol, params=actor_params)

    def critic_loss():
        v = agent._critic_var(st)
        return ad.mean_all(ad.mul(v, ad.as_var(weights[:, None])))

    results["critic"] = finite_difference_check(
        agent.store, critic_loss, rng, tol=tol,
        params=agent.store.params("critic"))

    failures = {k: v for k, v in results.items() if v > tol}
    return CheckResult(name="network_gradients_vs_finite_differences",
                       passed=not failures,
                       details={"worst_rel_err": results,
                                "tol": tol, "failures": failures})


# -- Check 6: mask soundness and reward bounds ---------------------------------

def reference_env_factory(seed: int, e_count: int = 2,
                          observe_eavesdroppers: bool = True,
                          monitor_prob: float | None = None):
    """The desk-scale reference setup: 6 devices, 2 eavesdroppers, 4 segments."""
    from .topology import GenDefaults
    defaults = GenDefaults() if monitor_prob is None else \
        GenDefaults(monitor_prob=monitor_prob)
    scn = gen_scenario(seed, u_count=6, e_count=e_count, defaults=defaults)
    model = make_model(6, "uniform", seed)
    cfg = EnvConfig(segment_count=4,
                    observe_eavesdroppers=observe_eavesdroppers)
    return SplitEnv(scn, model, cfg, seed)


def check_mask_soundness(seed: int = 0, episodes: int = 10_000) -> CheckResult:
    """A uniform random masked policy never executes an invalid action and
    every step reward respects the boundedness interval."""
    env = reference_env_factory(seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x76]))
    lo = env.reward_lower_bound
    violations = []
    for ep in range(episodes):
        state = env.reset()
        done = False
        while not done:
            mask = env.action_mask(state)
            valid_ids = np.flatnonzero(mask)
            action_id = int(valid_ids[rng.integers(len(valid_ids))])
            try:
                outcome = env.step(state, action_id)
            except Exception as exc:  # any escape is a failure
                violations.append({"episode": ep, "error": repr(exc)})
                done = True
                continue
            if not (lo - 1e-12 <= outcome.extrinsic_reward <= 0.0):
                violations.append({"episode": ep,
                                   "reward": outcome.extrinsic_reward})
            state = outcome.next_state
            done = outcome.done
        if violations:
            break
    return CheckResult(
        name="mask_soundness_and_reward_bounds",
        passed=env.invalid_action_count == 0 and not violations,
        details={"episodes": episodes,
                 "invalid_actions": env.invalid_action_count,
                 "reward_lower_bound": lo, "violations": violations})


# -- Check 7: ledger audit ------------------------------------------------------

def reference_totals(plan, assignments, transmissions,
                     scn: Scenario) -> tuple[float, float]:
    """Whole-episode delay and energy, re-derived from the model equations.

    Independent of the incremental step accounting; it evaluates the four
    delay sums and three energy sums directly, folding in the package's
    canonical order (forward hops in chain order, backward hops in
    transmission order, forward computes by segment, backward computes
    server-first then by gradient-reception order).
    """
    s_count = plan.segment_count
    o = scn.rayleigh_o
    bn0 = scn.bandwidth_hz * scn.noise_psd

    def pos(node):
        return scn.position_of(node)

    def gain(a, b):
        m = math.hypot(pos(a).x - pos(b).x, pos(a).y - pos(b).y)
        return o * m ** -2.0

    def hop_time(hop):
        interference = 0.0
        for d in hop.deceivers:
            interference += d.power * gain(d.node, hop.rx)
        signal = hop.tx_power * gain(hop.tx, hop.rx)
        rate = scn.bandwidth_hz * math.log2(1.0 + signal
                                            / (interference + bn0))
        return hop.payload_bits / rate

    recs = [scn.compute_record(a) for a in assignments]
    hop_times = [hop_time(h) for h in transmissions]

    def t_fwd(k):
        seg, rec = plan.segments[k], recs[k]
        return (rec.cycles_per_bit * seg.fwd_flop_coeff * seg.out_bits
                * seg.param_bits / rec.cpu_hz)

    def t_bwd(k):
        seg, rec = plan.segments[k], recs[k]
        return (rec.cycles_per_bit * seg.bwd_flop_coeff * seg.grad_in_bits
                * seg.param_bits / rec.cpu_hz)

    total_time = 0.0
    for t in hop_times:
        total_time += t
    for k in range(s_count):
        total_time += t_fwd(k)
    for k in range(s_count - 1, 1, -1):
        total_time += t_bwd(k)
    total_time += t_bwd(1) + t_bwd(0)

    total_energy = 0.0
    for k in range(s_count):
        seg, rec = plan.segments[k], recs[k]
        total_energy += (rec.energy_coeff * rec.cpu_hz ** 2
                         * (seg.fwd_flop_coeff * seg.param_bits
                            + seg.bwd_flop_coeff * seg.param_bits))
    for hop, t in zip(transmissions, hop_times):
        total_energy += hop.tx_power * t
    for hop, t in zip(transmissions, hop_times):
        p_dec = 0.0
        for d in hop.deceivers:
            p_dec += d.power
        total_energy += p_dec * t
    return total_time, total_energy


def check_ledger_audit(seed: int = 0, episodes: int = 50) -> CheckResult:
    """Environment cost accounting equals the equation-level reference
    bit-for-bit on random scripted episodes."""
    env = reference_env_factory(seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x77]))
    s = env.cfg.segment_count
    mismatches = []
    for ep in range(episodes):
        state = env.reset()
        done = False
        while not done:
            mask = env.action_mask(state)
            valid_ids = np.flatnonzero(mask)
            action_id = int(valid_ids[rng.integers(len(valid_ids))])
            outcome = env.step(state, action_id)
            state = outcome.next_state
            done = outcome.done
        plan = env.last_plan
        chain = state.chain
        assignments = tuple(device(d) for d in chain) + (SERVER,)
        ledger = env.ledger()
        ref_time, ref_energy = reference_totals(
            plan, assignments, env.transmissions(), env.scn)
        if ledger.time_spent != ref_time or ledger.energy_spent != ref_energy:
            mismatches.append({
                "episode": ep,
                "time": (ledger.time_spent, ref_time),
                "energy": (ledger.energy_spent, ref_energy)})
    return CheckResult(name="ledger_audit", passed=not mismatches,
                       details={"episodes": episodes,
                                "mismatches": mismatches})


# -- suite --------------------------------------------------------------------

ALL_CHECKS = (
    check_leakage_closed_form,
    check_single_deceiver_powers,
    check_single_eavesdropper_powers,
    check_split_invisibility,
    check_network_gradients,
    check_mask_soundness,
    check_ledger_audit,
)


def run_all(seed: int = 0, mask_episodes: int = 10_000) -> dict:
    results = []
    for fn in ALL_CHECKS:
        if fn is check_mask_soundness:
            results.append(fn(seed, episodes=mask_episodes))
        else:
            results.append(fn(seed))
    return {
        "seed": seed,
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }
