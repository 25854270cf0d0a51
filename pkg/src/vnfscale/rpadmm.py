"""Distributed scale-out solver: randomly permuted scalar ADMM.

The central overload relaxation couples nodes only through rows that
span a node and all of its neighbors.  Introducing one difference
variable per directed arc (owned by the arc's tail) splits every
conservation row into per-arc definitions plus a local zero sum, after
which each switch and PM owns every variable it updates and reads only
its neighbors' last announced values.  Each round draws a uniformly
random permutation of all scalar blocks, sweeps them Gauss-Seidel
style against the augmented Lagrangian, then ascends every scaled dual
by its row residual.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from . import lp, scaling
from .chain_state import OVERLOAD
from .topology import neighbors

# Classical multiplier aliases for the constraint families, for readers
# used to naming duals rather than rows.
DUAL_NAMES = {
    "delta": "a_def", "delta_bar": "a_sum",
    "eta": "b_def", "eta_bar": "b_sum",
    "zeta": "c_def", "zeta_bar": "c_sum",
    "lambda0": "d_def", "lambda0_bar": "d_sum",
    "lambda1": "e_def", "lambda1_bar": "e_sum",
    "mu": "alpha_eq", "xi": "interest",
    "sigma": "arrival_new", "rho": "arrival_online",
}


class UnboundedUpdateError(RuntimeError):
    """A block update has no quadratic term and an unbounded linear pull."""


class AdmmDivergenceError(RuntimeError):
    """Objective or residuals blew past the divergence limit; carries the
    partial trace as .trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class AdmmConfig:
    beta: float = 5.0
    max_iters: int = 25
    primal_tol: float = 1e-3       # stop when max normalized violation drops below
    seed: int = 0
    divergence_limit: float = 1e12
    init: object = None            # starting primal point, default all zeros
    permutations: object = None    # explicit sweep orders; overrides the RNG

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class ReformulatedSystem:
    """Equality-row model over flow, share, interest, slack and difference
    variables, plus the agent bookkeeping the sweep needs."""

    model: object
    problem: object = None
    base_width: int = 0        # leading variables shared with the central model
    aux_def: dict = field(default_factory=dict)   # aux var -> its defining row
    owners: dict = field(default_factory=dict)    # var index -> owning agent
    row_family: list = field(default_factory=list)

    @property
    def families(self):
        seen = []
        for fam in self.row_family:
            if fam not in seen:
                seen.append(fam)
        return seen


def _family_of(label):
    return label.split("[", 1)[0] if "[" in label else label


def reformulate(p):
    """Lift the central overload model into per-agent form.

    Every switch conservation row becomes per-neighbor difference rows
    plus a zero sum, PM processing likewise, and the ingress/egress
    totals become per-instance tap variables whose sums carry T and
    T*gamma.  All placement rows are shared with the central build, so
    the lift is exact by construction.
    """
    if p.mode != OVERLOAD:
        raise ValueError("only the overload model has a distributed form")
    model = scaling._relaxation_skeleton(p, "overload_admm")
    lay = model.layout
    fv, topo = lay.fv, p.topology
    keys = [s.key for s in lay.slots]
    gamma = p.group.gamma
    scaling._placement_rows(p, model)
    base_width = model.num_vars

    owners = {}
    for (i, _, _), idx in fv.n_idx.items():
        owners[idx] = i
    for (i, _, _), idx in fv.m_idx.items():
        owners[idx] = i
    for (q, _), idx in lay.alpha_idx.items():
        owners[idx] = q
    for (q, _), idx in lay.e_idx.items():
        owners[idx] = q
    for tag, idx in lay.slack_idx.items():
        owners[idx] = tag[1]
    ingress_agent = min(fv.ingress, key=topo.node_position)
    egress_agent = min(fv.egress, key=topo.node_position)

    aux_def = {}

    # switch conservation, per flow leg: arc difference + local zero sum
    for flow, idx_map, tag in (("n", fv.n_idx, "a"), ("m", fv.m_idx, "b")):
        for sw in topo.switches:
            for d in keys:
                parts = []
                for j in neighbors(topo, sw):
                    a = model.add_var("%s[%s>%s,%s]" % (tag.upper(), sw, j, d),
                                      -np.inf, np.inf)
                    owners[a] = sw
                    coeffs = {idx_map[(sw, j, d)]: 1.0,
                              idx_map[(j, sw, d)]: -1.0, a: -1.0}
                    aux_def[a] = model.add_row(
                        coeffs, "=", 0.0, "%s_def[%s>%s,%s]" % (tag, sw, j, d))
                    parts.append(a)
                model.add_row({a: 1.0 for a in parts}, "=", 0.0,
                              "%s_sum[%s,%s]" % (tag, sw, d))

    # PM processing: processed out minus gamma times unprocessed in, per
    # arc; a PM running an instance on an ingress/egress gateway also
    # carries its internal self-arc as one more part
    for q in topo.pms:
        for d in keys:
            arcs = [(q, j) for j in neighbors(topo, q)]
            if (q, q, d) in fv.n_idx or (q, q, d) in fv.m_idx:
                arcs.append((q, q))
            parts = []
            for _, j in arcs:
                c = model.add_var("C[%s>%s,%s]" % (q, j, d), -np.inf, np.inf)
                owners[c] = q
                coeffs = {c: -1.0}
                m_out = fv.m_idx.get((q, j, d))
                if m_out is not None:
                    coeffs[m_out] = 1.0
                n_in = fv.n_idx.get((j, q, d))
                if n_in is not None:
                    coeffs[n_in] = coeffs.get(n_in, 0.0) - gamma
                aux_def[c] = model.add_row(
                    coeffs, "=", 0.0, "c_def[%s>%s,%s]" % (q, j, d))
                parts.append(c)
            model.add_row({c: 1.0 for c in parts}, "=", 0.0,
                          "c_sum[%s,%s]" % (q, d))

    # per-instance ingress/egress taps whose sums carry the endpoint totals
    taps = []
    for d in keys:
        dv = model.add_var("D[%s]" % d)
        owners[dv] = ingress_agent
        coeffs = {}
        for q in fv.ingress:
            coeffs.update(fv.outflow("n", q, d))
        coeffs[dv] = -1.0
        aux_def[dv] = model.add_row(coeffs, "=", 0.0, "d_def[%s]" % d)
        taps.append(dv)
    model.add_row({i: 1.0 for i in taps}, "=", p.traffic, "d_sum")
    taps = []
    for d in keys:
        ev = model.add_var("E[%s]" % d)
        owners[ev] = egress_agent
        coeffs = {}
        for q in fv.egress:
            coeffs.update(fv.inflow("m", q, d))
        coeffs[ev] = -1.0
        aux_def[ev] = model.add_row(coeffs, "=", 0.0, "e_def[%s]" % d)
        taps.append(ev)
    model.add_row({i: 1.0 for i in taps}, "=", p.traffic * gamma, "e_sum")

    system = ReformulatedSystem(
        model=model, problem=p, base_width=base_width, aux_def=aux_def,
        owners=owners, row_family=[_family_of(r[3]) for r in model.rows])
    agent_partition(system)   # fail fast on any orphan block
    return system


def system_from_model(model, owner="agent"):
    """Wrap a hand-built equality model as a single-agent system, mainly
    for small reference instances in tests."""
    return ReformulatedSystem(
        model=model, base_width=model.num_vars,
        owners={i: owner for i in range(model.num_vars)},
        row_family=[_family_of(r[3]) for r in model.rows])


def lift_point(system, base_point):
    """Extend a central-model point over the difference variables by
    evaluating each one's defining row."""
    model = system.model
    x = np.zeros(model.num_vars)
    x[:system.base_width] = np.asarray(base_point, dtype=float)
    for idx in sorted(system.aux_def):
        coeffs, _, rhs, _ = model.rows[system.aux_def[idx]]
        val = -rhs
        for i, c in coeffs.items():
            if i != idx:
                val += c * x[i]
        x[idx] = val   # its own coefficient is -1 by construction
    return x


def agent_partition(system):
    """Owning agent of every scalar block; an orphan block means the
    system was built wrong."""
    out = {}
    for i in range(system.model.num_vars):
        if i not in system.owners:
            raise RuntimeError("block %r has no owning agent"
                               % system.model.var_names[i])
        out[i] = system.owners[i]
    return out


def message_footprint(system):
    """Total distinct foreign values the agents read per sweep: for each
    block, the variables sharing a row with it but owned elsewhere."""
    peers = [set() for _ in range(system.model.num_vars)]
    for coeffs, _, _, _ in system.model.rows:
        idxs = list(coeffs)
        for i in idxs:
            own = system.owners[i]
            for j in idxs:
                if j != i and system.owners[j] != own:
                    peers[i].add(j)
    return sum(len(s) for s in peers)


def scalar_block_update(c, terms, lo, hi, beta):
    """Exact minimizer of  c*x + (beta/2) * sum_t (a_t*x + r_t)^2  on
    [lo, hi]; every primal update in the sweep is an instance of this."""
    denom = 0.0
    pull = 0.0
    for a, r in terms:
        denom += a * a
        pull += a * r
    if denom > 0.0:
        x = (-c / beta - pull) / denom
    elif c > 0.0:
        x = lo
    elif c < 0.0:
        x = hi
    else:
        x = 0.0
    x = min(max(x, lo), hi)
    if not np.isfinite(x):
        raise UnboundedUpdateError(
            "block update has no quadratic term and runs off to %r" % x)
    return float(x)


def _family_rows(system):
    fams = system.families
    rows = {fam: [] for fam in fams}
    for t, fam in enumerate(system.row_family):
        rows[fam].append(t)
    return {fam: np.array(idx, dtype=int) for fam, idx in rows.items()}


def _family_max(res, fam_rows):
    return {fam: (float(np.max(np.abs(res[idx]))) if len(idx) else 0.0)
            for fam, idx in fam_rows.items()}


def _normalize(cur, baseline):
    """Violations scaled per family by its initial residual.  A family
    that starts satisfied borrows the largest initial residual in the
    system as its scale; everything is capped at 1."""
    fallback = max(baseline.values(), default=0.0)
    out = {}
    for fam, val in cur.items():
        scale = baseline.get(fam, 0.0)
        if scale <= 0.0:
            scale = fallback
        if scale > 0.0:
            out[fam] = min(1.0, val / scale)
        else:
            out[fam] = 0.0 if val == 0.0 else 1.0
    return out


def _residuals(model, point):
    res = np.zeros(model.num_rows)
    for t, (coeffs, _, rhs, _) in enumerate(model.rows):
        res[t] = sum(c * point[i] for i, c in coeffs.items()) - rhs
    return res


def normalized_violations(point, system, baseline=None):
    """Per-family normalized violation of a point; the baseline defaults
    to the residuals of the all-zero start."""
    fam_rows = _family_rows(system)
    if baseline is None:
        baseline = _family_max(
            _residuals(system.model, np.zeros(system.model.num_vars)), fam_rows)
    cur = _family_max(_residuals(system.model, np.asarray(point, float)), fam_rows)
    return _normalize(cur, baseline)


@dataclass
class AdmmRecord:
    iteration: int
    objective: float
    violations: dict
    permutation: tuple
    messages_sent: int
    residuals: object          # raw row residuals after the sweep
    duals: object              # scaled duals after the ascent


@dataclass
class AdmmTrace:
    families: list
    baseline: dict             # per-family max |residual| at the start point
    messages_per_sweep: int
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def objectives(self):
        return [r.objective for r in self.records]

    def violation_curve(self, family):
        return [r.violations.get(family, 0.0) for r in self.records]

    def csv(self):
        out = io.StringIO()
        out.write("iteration,objective,%s,messages_sent\n"
                  % ",".join("violation_%s" % f for f in self.families))
        for r in self.records:
            out.write("%d,%.10g,%s,%d\n"
                      % (r.iteration, r.objective,
                         ",".join("%.6g" % r.violations.get(f, 0.0)
                                  for f in self.families),
                         r.messages_sent))
        return out.getvalue()


def _sweep_orders(cfg, num_vars):
    if cfg.permutations is None:
        return None
    orders = cfg.permutations
    if orders and np.isscalar(orders[0]):
        orders = [orders]
    checked = []
    want = np.arange(num_vars)
    for order in orders:
        arr = np.asarray(order, dtype=int)
        if not np.array_equal(np.sort(arr), want):
            raise ValueError("override is not a permutation of all %d blocks"
                             % num_vars)
        checked.append(arr)
    return checked


def run(problem, cfg=None):
    """Randomly permuted ADMM over the reformulated system.

    Returns (point, trace).  Each round: draw a sweep order, update
    every scalar block against the most recent values of everything
    else, then add each row's residual onto its scaled dual.  Stops at
    max_iters or once the largest normalized violation falls under
    primal_tol; raises AdmmDivergenceError past the divergence limit.
    """
    cfg = cfg if cfg is not None else AdmmConfig()
    system = problem if isinstance(problem, ReformulatedSystem) else reformulate(problem)
    model = system.model
    nv, nr = model.num_vars, model.num_rows
    for _, rel, _, label in model.rows:
        if rel != lp.EQ:
            raise ValueError("the sweep needs equality rows, got %r in %r"
                             % (rel, label))

    lo, hi = np.asarray(model.lower), np.asarray(model.upper)
    cost = np.zeros(nv)
    for i, c in model.objective.items():
        cost[i] = c
    cols = [[] for _ in range(nv)]
    for t, (coeffs, _, _, _) in enumerate(model.rows):
        for i, a in coeffs.items():
            cols[i].append((t, a))

    if cfg.init is None:
        x = np.zeros(nv)
    else:
        x = np.asarray(cfg.init, dtype=float)
        if x.shape != (nv,):
            raise ValueError("init must cover all %d blocks" % nv)
        x = np.clip(x, lo, hi)
    res = _residuals(model, x)
    duals = np.zeros(nr)

    fam_rows = _family_rows(system)
    baseline = _family_max(res, fam_rows)
    messages = message_footprint(system)
    trace = AdmmTrace(families=system.families, baseline=baseline,
                      messages_per_sweep=messages)

    orders = _sweep_orders(cfg, nv)
    rng = np.random.default_rng(cfg.seed)
    for it in range(1, cfg.max_iters + 1):
        if orders is not None:
            perm = orders[(it - 1) % len(orders)]
        else:
            perm = rng.permutation(nv)
        for i in perm:
            terms = [(a, res[t] - a * x[i] + duals[t]) for t, a in cols[i]]
            new = scalar_block_update(cost[i], terms, lo[i], hi[i], cfg.beta)
            step = new - x[i]
            if step != 0.0:
                for t, a in cols[i]:
                    res[t] += a * step
                x[i] = new
        duals += res

        objective = float(cost @ x) + model.obj_const
        viol = _normalize(_family_max(res, fam_rows), baseline)
        trace.records.append(AdmmRecord(
            it, objective, viol, tuple(int(v) for v in perm),
            messages, res.copy(), duals.copy()))
        raw = float(np.max(np.abs(res))) if nr else 0.0
        if not np.isfinite(objective) or abs(objective) > cfg.divergence_limit \
                or raw > cfg.divergence_limit:
            raise AdmmDivergenceError(
                "diverged at iteration %d: objective %.3g, max residual %.3g"
                % (it, objective, raw), trace)
        if max(viol.values(), default=0.0) <= cfg.primal_tol:
            trace.converged = True
            break
    return x, trace
