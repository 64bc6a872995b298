"""Run-level invariant checks shared by the invariant suite and the acceptance suite."""
from acpnet.acp import PHANTOM
from acpnet.scenario import RunResult

TABLE_TOL = 1e-12


def check_run(res: RunResult, path_hops: int | None = None) -> list[str]:
    """Every invariant breach in a finished run, as readable strings; empty means green."""
    net, sc = res.network, res.scenario
    bad = list(net.violations)
    audit = net.registry.audit()
    if not audit["balanced"]:
        bad.append(f"EP audit unbalanced: {audit}")
    if audit["double_consumption"]:
        bad.append(f"{audit['double_consumption']} EPs consumed twice")
    if audit["stale_reads"]:
        bad.append(f"{audit['stale_reads']} EPs consumed without a decoherence update")
    cap = net.params.max_memory_acp
    for name, ctl in net.acp.items():
        st = ctl.state
        if not 0 <= st.counter <= cap:
            bad.append(f"counter {name}={st.counter}")
        busy = sum(1 for m in net.nodes[name].acp_memories if not m.free)
        if busy > cap or busy != st.counter:
            bad.append(f"{name}: {busy} ACP memories busy, counter {st.counter}")
        table = st.table
        if abs(table.total() - 1) > TABLE_TOL or min(table.as_dict().values()) < 0:
            bad.append(f"table {name} not normalized")
        if sc.strategy == "ucp" and len({round(p, 15) for p in table.as_dict().values()}) != 1:
            bad.append(f"uniform table {name} drifted")
        if PHANTOM not in table.as_dict():
            bad.append(f"table {name} lost its phantom entry")
    generated = int(round(sc.duration_s * sc.arrival_rate_hz))
    if len(res.records) != generated:
        bad.append(f"{len(res.records)} records for {generated} requests")
    if path_hops is not None:
        hops = {r.path_hops for r in res.records}
        if hops != {path_hops}:
            bad.append(f"serving paths with {sorted(hops)} links")
    return bad
