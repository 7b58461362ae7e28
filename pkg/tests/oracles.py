"""Independent reference implementations the fast paths are checked against.

These deliberately share no code with the package: connectivity is plain
BFS over an explicit adjacency map (the merger uses union-find), and the
i2c address search enumerates the whole joint variant space with
itertools.product (the checker dedupes per-device sets and backtracks).
"""

import itertools
from collections import deque

from matcheck.model import NC, apply_config


def pin_partition(resolved):
    """The merged-net partition computed by BFS: a set of frozensets of
    (qualified_refdes, pin) pairs, one per electrically connected group.
    Groups with no pins (port-only nets, pinless rails) are dropped, which
    matches the merger's orphan rule."""
    adjacency = {}

    def node_net(instance, net):
        return ("net", instance, net)

    def node_rail(name):
        return ("rail", name)

    def link(a, b):
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)

    doc = resolved.doc
    for instance in doc.instances:
        block = resolved.blocks[instance.instance_name]
        for net in block.internal_nets:
            adjacency.setdefault(node_net(instance.instance_name, net), set())
    for r in doc.rails:
        adjacency.setdefault(node_rail(r.name), set())

    for e in doc.edges:
        (ia, pa), (ib, pb) = e.endpoints
        link(node_net(ia, resolved.port(ia, pa).bound_net),
             node_net(ib, resolved.port(ib, pb).bound_net))
    for a in doc.attachments:
        net = resolved.port(a.instance_name, a.port_name).bound_net
        link(node_net(a.instance_name, net), node_rail(a.rail_name))

    pins_at = {}
    for instance in doc.instances:
        block = resolved.blocks[instance.instance_name]
        for comp in block.components:
            for pin, net in comp.pins:
                if net == NC:
                    continue
                key = node_net(instance.instance_name, net)
                pins_at.setdefault(key, []).append(
                    (f"{instance.instance_name}.{comp.refdes}", pin))

    partition = set()
    visited = set()
    for start in adjacency:
        if start in visited:
            continue
        queue = deque([start])
        component = set()
        while queue:
            node = queue.popleft()
            if node in component:
                continue
            component.add(node)
            queue.extend(adjacency[node] - component)
        visited |= component
        pins = frozenset(pin for node in component for pin in pins_at.get(node, ()))
        if pins:
            partition.add(pins)
    return partition


def merged_partition(merged):
    """The same shape extracted from a MergedSchematic, for comparison."""
    return {frozenset(pins) for pins in merged.nets.values()}


def i2c_group_satisfiable(devices):
    """Whether some joint choice of config variants gives every i2c
    peripheral in a group a pairwise-disjoint address set.

    ``devices`` is a list of (source_block, selections, port_name).  The
    search runs over the full cross product of every block's variant
    combinations — no per-device deduplication, no pruning.
    """
    per_device_combos = []
    for block, _selections, port_name in devices:
        option_names = [o.name for o in block.configs]
        variant_space = [[v.name for v in o.variants] for o in block.configs]
        combos = [dict(zip(option_names, combo))
                  for combo in itertools.product(*variant_space)]
        per_device_combos.append([(block, combo, port_name) for combo in combos])

    for assignment in itertools.product(*per_device_combos):
        sets = []
        for block, combo, port_name in assignment:
            resolved = apply_config(block, combo)
            sets.append(resolved.port(port_name).iface.addresses or frozenset())
        if all(not (a & b) for a, b in itertools.combinations(sets, 2)):
            return True
    return False


def choice_lists_satisfiable(choice_lists):
    """Product-enumeration oracle over already-computed address-set lists
    (checks the backtracking search in isolation)."""
    for assignment in itertools.product(*choice_lists):
        if all(not (a & b) for a, b in itertools.combinations(assignment, 2)):
            return True
    return False
