"""Scenario files: parse, run, and self-verify worked reconfiguration cases.

A scenario is a line-oriented text file of [section] blocks.  Inside a
section each line is either "key = value" or a bare table row; "#" starts
a comment.  Sections:

  [topology]  k, pms_per_rack, costs (three layer costs, space separated)
  [group]     chain, gamma, phi, omega (res:weight ...), thresholds
              (hot:x warm:x cold:x), ingress, egress, candidates
              (P-names, "P3-P16" ranges allowed), offline (pool size)
  [vms]       one row per online VM: id  host  capacity  utilization
  [pms]       capacity = res:value for a uniform per-PM table, or "none"
  [event]     baseline traffic plus either "preset = overload:<extra>"
              (traffic = baseline * (1 + 0.5*extra)), "preset = underload"
              (baseline * 0.5), or an explicit "traffic = value"
  [solver]    method (lp | milp | rpadmm), beta, seed, iters
  [expect]    optional self-checks: state, v_star, launch, keep,
              terminate (host sets) and cost_delta (positive | negative)

The runner classifies the group from the recorded utilizations, sizes the
instance set for the event traffic, picks the penalty profile for the
detected state, solves with the requested method and renders a decision
table plus solver statistics.  PM names are 1-based: "P5" is the fifth
machine of the tree.
"""

import os
import time
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import lp, milp, rpadmm, scaling
from .chain_state import (OVERLOAD, UNDERLOAD, NORMAL, Thresholds, VmInstance,
                          VnfGroup, classify_group, required_instances)
from .scaling import (ScalingProblem, Weights, build_overload_lp,
                      build_underload_lp, decode, uniform_capacity,
                      baseline_forwarding_cost, forwarding_cost_of,
                      decision_csv, flows_csv, ModelInfeasibleError)
from .topology import PM, NodeId, build_fat_tree

TIME_BUDGET_ENV = "VNFSCALE_TIME_BUDGET"
DEFAULT_TIME_BUDGET = 1200.0


class ScenarioParseError(ValueError):
    pass


def parse_pm(token, topo=None):
    """'P5' -> the fifth PM (NodeId index 4)."""
    if not token.startswith("P") or not token[1:].isdigit():
        raise ScenarioParseError("bad PM name %r" % token)
    node = NodeId(PM, int(token[1:]) - 1)
    if topo is not None and node not in topo.pms:
        raise ScenarioParseError("%s is not in the topology" % token)
    return node


def parse_pm_list(text, topo=None):
    out = []
    for token in text.split():
        if "-" in token[1:]:
            a, b = token.split("-", 1)
            lo, hi = int(a.lstrip("P")), int(b.lstrip("P"))
            out.extend(parse_pm("P%d" % i, topo) for i in range(lo, hi + 1))
        else:
            out.append(parse_pm(token, topo))
    return out


def _pairs(text):
    out = {}
    for token in text.split():
        k, v = token.split(":", 1)
        out[k] = float(v)
    return out


def parse_scenario(path):
    """Sections as {name: {"kv": {...}, "rows": [...]}}, checked lightly."""
    sections = {}
    current = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                if current in sections:
                    raise ScenarioParseError(
                        "%s:%d duplicate section [%s]" % (path, lineno, current))
                sections[current] = {"kv": {}, "rows": []}
            elif current is None:
                raise ScenarioParseError(
                    "%s:%d content before any section" % (path, lineno))
            elif "=" in line:
                key, val = (s.strip() for s in line.split("=", 1))
                sections[current]["kv"][key] = val
            else:
                sections[current]["rows"].append(line.split())
    for required in ("topology", "group", "vms", "event", "solver"):
        if required not in sections:
            raise ScenarioParseError("%s: missing [%s] section" % (path, required))
    return sections


@dataclass
class Scenario:
    name: str
    topology: object
    group: VnfGroup
    baseline: float
    traffic: float
    method: str
    beta: float
    seed: int
    iters: int
    pm_capacity: dict
    expect: dict


def load_scenario(path, overrides=None):
    sec = parse_scenario(path)
    overrides = overrides or {}

    t = sec["topology"]["kv"]
    kwargs = {}
    if "costs" in t:
        kwargs["layer_costs"] = tuple(float(v) for v in t["costs"].split())
    topo = build_fat_tree(int(t.get("k", 4)),
                          pms_per_rack=int(t.get("pms_per_rack", 2)), **kwargs)

    g = sec["group"]["kv"]
    omega = _pairs(g.get("omega", "cpu:1.0"))
    thr_vals = _pairs(g.get("thresholds", "hot:0.90 warm:0.80 cold:0.30"))
    thresholds = Thresholds.uniform(
        tuple(omega), hot=thr_vals["hot"], warm=thr_vals["warm"],
        cold=thr_vals["cold"])
    chain = g.get("chain", "c")
    vnf_type = g.get("vnf_type", "fw")

    online = []
    for row in sec["vms"]["rows"]:
        if len(row) != 4:
            raise ScenarioParseError("vm row needs: id host capacity util, got %r"
                                     % " ".join(row))
        vm_id, host, cap, util = row
        online.append(VmInstance(
            vm_id, vnf_type, chain, {r: float(cap) for r in omega},
            host=parse_pm(host, topo),
            utilization={r: float(util) for r in omega}))
    if not online:
        raise ScenarioParseError("scenario has no online VMs")
    pool_cap = online[0].capacity
    pool = [VmInstance("off%d" % (i + 1), vnf_type, chain, dict(pool_cap))
            for i in range(int(g.get("offline", 8)))]

    group = VnfGroup(
        chain=chain, vnf_type=vnf_type, online=online, offline_pool=pool,
        thresholds=thresholds, gamma=float(g.get("gamma", 1.0)),
        phi=float(g.get("phi", 1.0)), omega=omega,
        ingress_pms=parse_pm_list(g["ingress"], topo),
        egress_pms=parse_pm_list(g["egress"], topo),
        candidate_pms=parse_pm_list(g["candidates"], topo))

    ev = sec["event"]["kv"]
    baseline = float(ev["baseline"])
    if "traffic" in ev:
        traffic = float(ev["traffic"])
    elif "preset" in ev:
        preset = ev["preset"]
        if preset.startswith("overload"):
            extra = int(preset.split(":", 1)[1]) if ":" in preset else 1
            traffic = baseline * (1.0 + 0.5 * extra)
        elif preset == "underload":
            traffic = baseline * 0.5
        else:
            raise ScenarioParseError("unknown event preset %r" % preset)
    else:
        raise ScenarioParseError("[event] needs a preset or explicit traffic")

    sv = sec["solver"]["kv"]
    method = overrides.get("method") or sv.get("method", "lp")
    if method not in ("lp", "milp", "rpadmm"):
        raise ScenarioParseError("unknown solver method %r" % method)

    cap_text = sec.get("pms", {"kv": {}})["kv"].get("capacity", "none")
    pm_capacity = None if cap_text == "none" \
        else uniform_capacity(topo, _pairs(cap_text))

    expect = {}
    if "expect" in sec:
        e = sec["expect"]["kv"]
        if "state" in e:
            expect["state"] = e["state"]
        if "v_star" in e:
            expect["v_star"] = int(e["v_star"])
        for key in ("launch", "keep", "terminate"):
            if key in e:
                expect[key] = set(parse_pm_list(e[key], topo))
        if "cost_delta" in e:
            expect["cost_delta"] = e["cost_delta"]

    return Scenario(
        name=os.path.splitext(os.path.basename(path))[0], topology=topo,
        group=group, baseline=baseline, traffic=traffic, method=method,
        beta=float(overrides.get("beta") or sv.get("beta", 5.0)),
        seed=int(overrides.get("seed") if overrides.get("seed") is not None
                 else sv.get("seed", 0)),
        iters=int(overrides.get("iters") or sv.get("iters", 25)),
        pm_capacity=pm_capacity, expect=expect)


# -- running -------------------------------------------------------------------

@dataclass
class RunReport:
    scenario: str
    state: str
    v_star: int = None
    method: str = None
    decision: object = None
    table: str = ""
    baseline_cost: float = None
    forwarding_cost: float = None
    cost_delta: float = None
    stats: dict = field(default_factory=dict)
    trace_paths: dict = field(default_factory=dict)
    expect_failures: list = field(default_factory=list)
    admm_trace: object = None

    def text(self):
        lines = ["scenario %s: %s" % (self.scenario, self.state)]
        if self.state == NORMAL:
            lines.append("  thresholds hold, no reconfiguration")
            return "\n".join(lines) + "\n"
        lines.append("  v* = %d, solved with %s" % (self.v_star, self.method))
        if self.table:
            lines.extend("  " + row for row in self.table.rstrip().splitlines())
        if self.cost_delta is not None:
            pct = ("" if not self.baseline_cost
                   else " = %+.1f%%" % (100 * self.cost_delta / self.baseline_cost))
            lines.append("  forwarding cost %.6g (baseline %.6g, %+.6g%s)"
                         % (self.forwarding_cost, self.baseline_cost,
                            self.cost_delta, pct))
        if self.stats:
            lines.append("  model: %(num_vars)d variables, %(num_rows)d rows,"
                         " solve %(runtime_s).3f s" % self.stats)
            if "iterations" in self.stats:
                lines.append("  sweeps: %d, converged: %s"
                             % (self.stats["iterations"],
                                self.stats.get("converged")))
        for name, p in sorted(self.trace_paths.items()):
            lines.append("  wrote %s" % p)
        for msg in self.expect_failures:
            lines.append("  EXPECT FAILED: %s" % msg)
        return "\n".join(lines) + "\n"


def _problem_for(sc, state):
    v_star = required_instances(sc.group, sc.traffic)
    if state == OVERLOAD:
        v_star = max(v_star, len(sc.group.online))
    else:
        v_star = min(v_star, len(sc.group.online))
    return ScalingProblem(
        topology=sc.topology, group=sc.group, traffic=sc.traffic,
        v_star=v_star, mode=state, pm_capacity=sc.pm_capacity,
        baseline_traffic=sc.baseline)


def _decision_table(decision, topo):
    rows = ["instance  action     host    share"]
    order = sorted(decision.kept.items(), key=lambda kv: str(kv[0]))
    for vm_id, q in order:
        key = decision.vm_slot.get(vm_id, "")
        rows.append("%-9s keep       %-7s %.4f"
                    % (vm_id, _pm_name(q), decision.shares.get(key, 0.0)))
    for key, q in sorted(decision.launched.items()):
        rows.append("%-9s launch     %-7s %.4f"
                    % (key, _pm_name(q), decision.shares.get(key, 0.0)))
    for vm_id, q in sorted(decision.terminated.items(), key=lambda kv: str(kv[0])):
        rows.append("%-9s terminate  %-7s -" % (vm_id, _pm_name(q)))
    return "\n".join(rows) + "\n"


def _pm_name(node):
    return "P%d" % (node.index + 1) if node.kind == PM else str(node)


def _check_expectations(report, sc, hosts_launched, hosts_kept, hosts_terminated):
    exp = sc.expect
    if "state" in exp and exp["state"] != report.state:
        report.expect_failures.append(
            "state %s, expected %s" % (report.state, exp["state"]))
    if report.state == NORMAL:
        return
    if "v_star" in exp and exp["v_star"] != report.v_star:
        report.expect_failures.append(
            "v_star %d, expected %d" % (report.v_star, exp["v_star"]))
    for key, got in (("launch", hosts_launched), ("keep", hosts_kept),
                     ("terminate", hosts_terminated)):
        if key in exp and exp[key] != got:
            report.expect_failures.append(
                "%s %s, expected %s"
                % (key, sorted(_pm_name(q) for q in got),
                   sorted(_pm_name(q) for q in exp[key])))
    if "cost_delta" in exp and report.cost_delta is not None:
        want_positive = exp["cost_delta"] == "positive"
        if (report.cost_delta > 0) != want_positive:
            report.expect_failures.append(
                "cost delta %+.6g, expected %s"
                % (report.cost_delta, exp["cost_delta"]))


def run_scenario(path, out_dir=None, overrides=None):
    """Load, classify, solve and verify one scenario file."""
    sc = load_scenario(path, overrides)
    state = classify_group(sc.group)
    report = RunReport(scenario=sc.name, state=state, method=sc.method)
    if state == NORMAL:
        _check_expectations(report, sc, set(), set(), set())
        return report

    p = _problem_for(sc, state)
    report.v_star = p.v_star
    report.baseline_cost = baseline_forwarding_cost(p)

    t0 = time.perf_counter()
    if sc.method == "milp":
        mp = milp.build_milp(p)
        sol = milp.solve_milp(mp)
        elapsed = time.perf_counter() - t0
        if sol.status != "optimal":
            raise ModelInfeasibleError("joint model is %s" % sol.status)
        report.decision = sol
        rows = ["vm        host    share"]
        for j in sorted(sol.placement, key=str):
            q = sol.placement[j]
            rows.append("%-9s %-7s %.4f"
                        % (j, "-" if q is None else _pm_name(q),
                           sol.shares.get(j, 0.0)))
        report.table = "\n".join(rows) + "\n"
        report.forwarding_cost = forwarding_cost_of(
            sol.flows_n, sol.flows_m, sc.topology)
        report.stats = {"num_vars": mp.base.num_vars,
                        "num_rows": mp.base.num_rows,
                        "binaries": len(mp.binaries), "runtime_s": elapsed}
        online = {vm.id for vm in sc.group.online}
        hosts_launched = {q for j, q in sol.placement.items()
                          if q is not None and j not in online}
        hosts_kept = {q for j, q in sol.placement.items()
                      if q is not None and j in online}
        hosts_terminated = {vm.host for vm in sc.group.online
                            if sol.placement.get(vm.id) is None}
    elif sc.method == "rpadmm":
        if state != OVERLOAD:
            raise ScenarioParseError(
                "the distributed solver handles only overload scenarios")
        system = rpadmm.reformulate(p)
        cfg = rpadmm.AdmmConfig(beta=sc.beta, max_iters=sc.iters, seed=sc.seed)
        x, trace = rpadmm.run(system, cfg)
        elapsed = time.perf_counter() - t0
        sol = lp.LpSolution(status=lp.OPTIMAL, point=x,
                            objective_value=trace.objectives[-1],
                            model=system.model)
        dec = decode(sol, p)
        report.decision = dec
        report.admm_trace = trace
        report.table = _decision_table(dec, sc.topology)
        report.forwarding_cost = forwarding_cost_of(
            dec.flows_n, dec.flows_m, sc.topology)
        report.stats = {"num_vars": system.model.num_vars,
                        "num_rows": system.model.num_rows,
                        "iterations": len(trace.records),
                        "converged": trace.converged, "runtime_s": elapsed}
        hosts_launched = set(dec.launched.values())
        hosts_kept = set(dec.kept.values())
        hosts_terminated = set(dec.terminated.values())
    else:
        build = build_overload_lp if state == OVERLOAD else build_underload_lp
        model = build(p)
        sol = lp.solve(model)
        elapsed = time.perf_counter() - t0
        if sol.status != lp.OPTIMAL:
            raise ModelInfeasibleError("relaxation is %s" % sol.status)
        dec = decode(sol, p)
        report.decision = dec
        report.table = _decision_table(dec, sc.topology)
        report.forwarding_cost = forwarding_cost_of(
            dec.flows_n, dec.flows_m, sc.topology)
        report.stats = {"num_vars": model.num_vars, "num_rows": model.num_rows,
                        "runtime_s": elapsed}
        hosts_launched = set(dec.launched.values())
        hosts_kept = set(dec.kept.values())
        hosts_terminated = set(dec.terminated.values())

    if report.forwarding_cost is not None and report.baseline_cost is not None:
        report.cost_delta = report.forwarding_cost - report.baseline_cost

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        if isinstance(report.decision, scaling.ScalingDecision):
            dec_path = os.path.join(out_dir, "%s_decisions.csv" % sc.name)
            with open(dec_path, "w") as fh:
                fh.write(decision_csv(report.decision))
            report.trace_paths["decisions"] = dec_path
            flows_path = os.path.join(out_dir, "%s_flows.csv" % sc.name)
            with open(flows_path, "w") as fh:
                fh.write(flows_csv(report.decision))
            report.trace_paths["flows"] = flows_path
        elif isinstance(report.decision, milp.MilpSolution):
            dec_path = os.path.join(out_dir, "%s_decisions.csv" % sc.name)
            with open(dec_path, "w") as fh:
                fh.write(milp.placement_table(report.decision))
            report.trace_paths["decisions"] = dec_path
        if report.admm_trace is not None:
            trace_path = os.path.join(out_dir, "%s_trace.csv" % sc.name)
            with open(trace_path, "w") as fh:
                fh.write(report.admm_trace.csv())
            report.trace_paths["trace"] = trace_path

    _check_expectations(report, sc, hosts_launched, hosts_kept,
                        hosts_terminated)
    return report


# -- model size sweep ----------------------------------------------------------

def _sweep_problem(k):
    """Canonical overload instance for the size table: two online VMs near
    the tree's left edge, one more required, every PM a candidate."""
    topo = build_fat_tree(k, pms_per_rack=2)
    pms = topo.pms
    omega = {"cpu": 1.0}
    thresholds = Thresholds.uniform(("cpu",))
    online = [VmInstance("vm%d" % (i + 1), "fw", "c", {"cpu": 100.0},
                         host=pms[i + 1], utilization={"cpu": 0.95})
              for i in range(2)]
    pool = [VmInstance("off1", "fw", "c", {"cpu": 100.0})]
    g = VnfGroup(chain="c", vnf_type="fw", online=online, offline_pool=pool,
                 thresholds=thresholds, gamma=1.0, phi=1.0, omega=omega,
                 ingress_pms=[pms[0]], egress_pms=[pms[-1]],
                 candidate_pms=list(pms))
    return ScalingProblem(topology=topo, group=g, traffic=300.0, v_star=3,
                          mode=OVERLOAD,
                          pm_capacity=uniform_capacity(topo, {"cpu": 100.0}))


def _solve_job(method, k, queue):
    p = _sweep_problem(k)
    t0 = time.perf_counter()
    if method == "milp":
        mp = milp.build_milp(p)
        milp.solve_milp(mp)
        nv, nr = mp.base.num_vars, mp.base.num_rows
    elif method == "rpadmm":
        system = rpadmm.reformulate(p)
        rpadmm.run(system, rpadmm.AdmmConfig())
        nv, nr = system.model.num_vars, system.model.num_rows
    else:
        model = build_overload_lp(p)
        lp.solve(model)
        nv, nr = model.num_vars, model.num_rows
    queue.put((nv, nr, time.perf_counter() - t0))


def model_counts(method, k):
    """Variable and row counts without solving."""
    p = _sweep_problem(k)
    if method == "milp":
        mp = milp.build_milp(p)
        return mp.base.num_vars, mp.base.num_rows
    if method == "rpadmm":
        system = rpadmm.reformulate(p)
        return system.model.num_vars, system.model.num_rows
    model = build_overload_lp(p)
    return model.num_vars, model.num_rows


def sweep_topologies(ks, method="lp", time_budget=None):
    """Size/time table rows: (k, switches, pms, variables, constraints,
    seconds or None once the budget is exhausted).

    Each solve runs in a worker process so a blown budget cannot wedge
    the sweep; counts are still reported for budget-exceeded rows.
    """
    if time_budget is None:
        time_budget = float(os.environ.get(TIME_BUDGET_ENV,
                                           DEFAULT_TIME_BUDGET))
    ctx = get_context("fork")
    rows = []
    for k in ks:
        topo = build_fat_tree(k, pms_per_rack=2)
        queue = ctx.Queue()
        worker = ctx.Process(target=_solve_job, args=(method, k, queue))
        worker.start()
        worker.join(time_budget)
        if worker.is_alive():
            worker.terminate()
            worker.join()
            nv, nr = model_counts(method, k)
            rows.append((k, len(topo.switches), len(topo.pms), nv, nr, None))
        else:
            nv, nr, elapsed = queue.get()
            rows.append((k, len(topo.switches), len(topo.pms), nv, nr, elapsed))
    return rows


def sweep_table(rows, method):
    out = ["%s model size and solve time" % method,
           "k    switches  PMs   variables  constraints  time"]
    for k, sw, pms, nv, nr, secs in rows:
        cell = "N/A" if secs is None else "%.3f s" % secs
        out.append("%-4d %-9d %-5d %-10d %-12d %s" % (k, sw, pms, nv, nr, cell))
    return "\n".join(out) + "\n"


# -- central vs distributed ------------------------------------------------------

@dataclass
class CompareReport:
    scenario: str
    optimum: float
    objectives: list
    gaps: list                 # per-iteration |objective - optimum| / optimum
    converged: bool
    trace: object

    @property
    def final_gap(self):
        return self.gaps[-1]

    @property
    def best_gap(self):
        return min(self.gaps)

    def text(self):
        lines = ["scenario %s: central optimum %.6g" % (self.scenario,
                                                        self.optimum),
                 "iteration  objective      gap"]
        for i, (obj, gap) in enumerate(zip(self.objectives, self.gaps), 1):
            lines.append("%-10d %-14.6g %.4f%%" % (i, obj, 100 * gap))
        lines.append("best gap %.4f%%, final gap %.4f%%"
                     % (100 * self.best_gap, 100 * self.final_gap))
        return "\n".join(lines) + "\n"


def compare_solvers(path_or_scenario, overrides=None, out_dir=None):
    """Gap of the distributed run against the central relaxation optimum."""
    sc = path_or_scenario if isinstance(path_or_scenario, Scenario) \
        else load_scenario(path_or_scenario, overrides)
    state = classify_group(sc.group)
    if state != OVERLOAD:
        raise ScenarioParseError(
            "solver comparison needs an overload scenario, got %s" % state)
    p = _problem_for(sc, state)
    central = lp.solve(build_overload_lp(p))
    if central.status != lp.OPTIMAL:
        raise ModelInfeasibleError("central relaxation is %s" % central.status)
    system = rpadmm.reformulate(p)
    cfg = rpadmm.AdmmConfig(beta=sc.beta, max_iters=sc.iters, seed=sc.seed)
    x, trace = rpadmm.run(system, cfg)
    opt = central.objective_value
    if opt != 0.0:
        gaps = [abs(o - opt) / abs(opt) for o in trace.objectives]
    else:
        gaps = [abs(o) for o in trace.objectives]
    report = CompareReport(scenario=sc.name, optimum=opt,
                           objectives=list(trace.objectives), gaps=gaps,
                           converged=trace.converged, trace=trace)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "%s_trace.csv" % sc.name)
        with open(path, "w") as fh:
            fh.write(trace.csv())
    return report
