"""Walk the fat-tree generator across the sizes the simulator targets.

Prints the switch/PM census per k, the layer costs on a sample path,
and the full node listing for the smallest tree.
"""

import vnfscale as vs

print("fat-tree census (pms_per_rack=2)")
print("%4s %10s %6s %8s" % ("k", "switches", "PMs", "nodes"))
for k in (2, 4, 8, 16):
    t = vs.build_fat_tree(k, pms_per_rack=2)
    print("%4d %10d %6d %8d" % (k, len(t.switches), len(t.pms), len(t.nodes)))

t = vs.build_fat_tree(4, pms_per_rack=2)
pm0 = t.pms[0]
tor = vs.neighbors(t, pm0)[0]
agg = [s for s in vs.neighbors(t, tor) if s.kind == vs.AGG][0]
core = [s for s in vs.neighbors(t, agg) if s.kind == vs.CORE][0]

print()
print("per-hop forwarding costs climbing out of %s:" % pm0)
print("  %s -> %s : %g" % (pm0, tor, vs.forwarding_cost(t, pm0, tor)))
print("  %s -> %s : %g" % (tor, agg, vs.forwarding_cost(t, tor, agg)))
print("  %s -> %s : %g" % (agg, core, vs.forwarding_cost(t, agg, core)))
print("  %s -> %s : %g (intra-PM transfer)" % (pm0, pm0,
                                               vs.forwarding_cost(t, pm0, pm0)))

print()
print("k=2 tree, one node per line:")
print(vs.topology_listing(vs.build_fat_tree(2, pms_per_rack=2)))
