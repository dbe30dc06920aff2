"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``. The full-scale sweep (criterion 7)
runs 20 seeds per traffic type and dominates the runtime; set
``WARPSIM_SEEDS`` to use more seeds and ``WARPSIM_WORKERS`` to cap the
process pool.
"""

from __future__ import annotations

import hashlib
import os
import random
import statistics
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pytest

from warpsim.engine import NS_PER_S, Simulator, seconds_to_ns
from warpsim.frames import MacAddress, make_arp_request, make_data
from warpsim.host import AppPacket
from warpsim.mac import Dcf, MacConfig
from warpsim.metrics import Series, TraceRecord, avg_e2e_delay, export, goodput_ratio, interval_delay, summarize
from warpsim.network import Network
from warpsim.radio import Channel, RadioConfig
from warpsim.relay import LockingTables
from warpsim.scenario import ScenarioConfig, run_scenario
from warpsim.topology import (
    FIG2_EDGES, HOST_A, HOST_B, ORACLE_MAC, ORACLE_RADIO, adjacency, fig2_positions, hop_distances,
    random_connected_positions,
)
from warpsim.wired import WiredNetwork

SEEDS = max(20, int(os.environ.get("WARPSIM_SEEDS", "20")))
_results: dict[int, bool] = {}


def report(number: int, ok: bool, title: str, detail: str) -> None:
    _results[number] = ok
    line = f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}"
    capture = _capture.get("capsys")
    if capture is not None:
        with capture.disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


_capture: dict = {}


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    _capture["capsys"] = capsys
    yield
    _capture.pop("capsys", None)


# 1 ------------------------------------------------------------------------------


def test_1_fig2_oracle_path():
    t0 = time.perf_counter()
    net = Network(fig2_positions(), radio=ORACLE_RADIO, mac=ORACLE_MAC)
    net.explore(HOST_A, HOST_B)
    net.sim.run_until(NS_PER_S)
    elapsed = time.perf_counter() - t0

    path = net.path(HOST_A, HOST_B)
    addr = [n.address for n in net.nodes]
    now = net.sim.now

    def lt(node, locked):
        return net.nodes[node].relay.lookup(addr[locked], now)

    # arrows of the learned state: toward A point back along 1-2-3-6, toward B forward
    expected = {
        (1, HOST_A): HOST_A, (2, HOST_A): 1, (3, HOST_A): 2, (6, HOST_A): 3, (HOST_B, HOST_A): 6,
        (HOST_A, HOST_B): 1, (1, HOST_B): 2, (2, HOST_B): 3, (3, HOST_B): 6, (6, HOST_B): HOST_B,
    }
    wrong = {k: v for k, v in expected.items() if lt(*k) != addr[v]}
    relays = path[1:-1] if path else None
    ok = relays == [1, 2, 3, 6] and not wrong and elapsed < 1.0
    report(1, ok, "Fig. 2 oracle path",
           f"relays={relays} lt_mismatches={len(wrong)} runtime={elapsed * 1000:.1f} ms")
    assert ok


# 2 ------------------------------------------------------------------------------


def test_2_wired_wireless_equivalence():
    positions = fig2_positions()
    adj = adjacency(positions)
    wired_adj = [[] for _ in adj]
    for a, b in FIG2_EDGES:
        wired_adj[a].append(b)
        wired_adj[b].append(a)
    twin = [sorted(x) for x in wired_adj] == [sorted(x) for x in adj]

    rng = random.Random(2024)
    mismatches = not_shortest = 0
    for _ in range(100):
        src, dst = rng.sample(range(len(positions)), 2)
        wired = WiredNetwork(FIG2_EDGES).explore(src, dst)
        net = Network(positions, radio=ORACLE_RADIO, mac=ORACLE_MAC)
        net.explore(src, dst)
        net.sim.run_until(NS_PER_S)
        wireless = net.path(src, dst)
        if wired != wireless or wired is None:
            mismatches += 1
        elif len(wired) - 1 != hop_distances(adj, src)[dst]:
            not_shortest += 1
    ok = twin and mismatches == 0 and not_shortest == 0
    report(2, ok, "wired/wireless equivalence",
           f"radio twin={twin} mismatches={mismatches}/100 non-shortest={not_shortest}")
    assert ok


# 3 and 4 ------------------------------------------------------------------------------


def _sweep(realistic: bool):
    """500 random connected topologies, one exploration from each of three random sources.

    The oracle sweep spaces the explorations 2 s apart so each floods an idle
    network; the realistic sweep starts them together to add contention.
    """
    loops = rebroadcast_violations = delivery_violations = attempts = 0
    for k in range(500):
        rng = random.Random(k)
        n = rng.randint(5, 30)
        pos = random_connected_positions(rng, n)
        kw = {} if realistic else dict(radio=ORACLE_RADIO, mac=ORACLE_MAC)
        net = Network(pos, seed=k, **kw)
        pairs = []
        for i, src in enumerate(rng.sample(range(n), 3)):
            dst = rng.choice([j for j in range(n) if j != src])
            pairs.append((src, dst))
            start = 0 if realistic else 2 * i * NS_PER_S
            net.sim.schedule(start, net.explore, src, dst)
        net.sim.run_until(8 * NS_PER_S)

        for node in range(n):
            for locked in range(n):
                _, revisited = net.lt_walk(node, locked)
                loops += revisited
        for node in net.nodes:
            rebroadcast_violations += sum(1 for c in node.rebroadcasts.values() if c > 1)

        # each exploration is one resolution attempt of up to five requests
        for src, dst in pairs:
            uids = net.nodes[src].host.request_uids.get(dst, [])
            attempts += 1
            copies = sum(net.nodes[dst].delivered_up.get(uid, 0) for uid in uids)
            if (copies > 1) if realistic else (copies != 1):
                delivery_violations += 1
    return loops, rebroadcast_violations, delivery_violations, attempts


@pytest.fixture(scope="module")
def sweeps():
    return {"oracle": _sweep(False), "realistic": _sweep(True)}


def test_3_loop_freedom(sweeps):
    lo = sweeps["oracle"][0]
    lr = sweeps["realistic"][0]
    ok = lo == 0 and lr == 0
    report(3, ok, "loop freedom",
           f"500 topologies x 3 explorations; revisits oracle={lo} realistic={lr}")
    assert ok


def test_4_duplicate_suppression(sweeps):
    _, ro, do, ao = sweeps["oracle"]
    _, rr, dr, ar = sweeps["realistic"]
    ok = ro == 0 and rr == 0 and do == 0 and dr == 0 and ao > 0
    report(4, ok, "duplicate suppression and single delivery",
           f"rebroadcast>1: oracle={ro} realistic={rr}; attempts with destination copies !=1 "
           f"(oracle)={do}/{ao}, >1 (realistic)={dr}/{ar}")
    assert ok


# 5 ------------------------------------------------------------------------------


def _mac_bench(positions, cfg=MacConfig()):
    sim = Simulator()
    ch = Channel(sim, positions, RadioConfig())
    macs = [Dcf(i, MacAddress.for_node(i), sim, ch, cfg, random.Random(i), random.Random(100 + i), lambda f: None)
            for i in range(len(positions))]
    return sim, ch, macs


def test_5_table_ii_boundaries():
    checks = {}
    a, h = MacAddress.for_node(1), MacAddress.for_node(2)

    t = LockingTables()
    t.learn_or_block(a, h, 0)
    checks["LT kept at 120.000 s"] = t.lookup(a, seconds_to_ns(120.000)) == h
    checks["LT gone at 120.001 s"] = t.lookup(a, seconds_to_ns(120.001)) is None
    t = LockingTables()
    t.learn_or_block(a, h, 0)
    checks["BT blocks at 1.000 s"] = t.is_blocked(a, NS_PER_S)
    checks["BT released after 1 s"] = not t.is_blocked(a, NS_PER_S + 1)

    net = Network([(0.0, 0.0), (5000.0, 0.0)], radio=ORACLE_RADIO, mac=ORACLE_MAC)
    host = net.nodes[0].host
    sent_at, failed_at = [], []
    original = host._send_request
    host._send_request = lambda p: (sent_at.append(net.sim.now), original(p))
    host.on_drop = lambda p, reason: failed_at.append((net.sim.now, reason))
    host.resolve_and_send(1, AppPacket(1, 64, 0, 1))
    net.sim.run_until(3 * NS_PER_S)
    checks["ARP 5 requests at 200 ms spacing"] = sent_at == [k * 200_000_000 for k in range(5)]
    checks["ARP gives up at 1 s"] = failed_at == [(NS_PER_S, "arp_fail")]

    sim, ch, macs = _mac_bench([(0.0, 0.0), (1000.0, 0.0)])
    rts = []
    transmit = ch.transmit
    ch.transmit = lambda s, f: (rts.append(f.kind), transmit(s, f))[1]
    macs[0].enqueue(make_data(macs[0].address, macs[1].address, macs[1].address, 64, uid=1, origin_ns=0))
    sim.run_until(5 * NS_PER_S)
    checks["MAC drops after 7 retries"] = len(rts) == 8 and macs[0].drops["retry_limit"] == 1

    sim, ch, macs = _mac_bench([(0.0, 0.0), (100.0, 0.0)])
    for uid in range(1, 16):
        macs[0].enqueue(make_data(macs[0].address, macs[1].address, macs[1].address, 64, uid=uid, origin_ns=0))
    checks["queue drops at occupancy 14"] = len(macs[0].queue) == 14 and macs[0].drops["queue_full"] == 1

    sim, ch, macs = _mac_bench([(0.0, 0.0)], MacConfig(queue_capacity=20_000))
    macs[0].jitter_samples = samples = []
    for uid in range(1, 10_001):
        macs[0].enqueue(make_arp_request(macs[0].address, 9, uid=uid))
    sim.run_until(100 * NS_PER_S)
    in_range = len(samples) == 10_000 and min(samples) >= 0 and max(samples) < 5_000_000
    mean_ok = abs(statistics.fmean(samples) - 2_500_000) <= 0.05 * 2_500_000
    checks["jitter in [0, 5 ms), mean within 5%"] = in_range and mean_ok

    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    report(5, ok, "Table II boundaries", f"{len(checks) - len(failed)}/{len(checks)} checks" +
           (f"; failed: {failed}" if failed else ""))
    assert ok


# 6 ------------------------------------------------------------------------------


def test_6_metric_formulas():
    rows = [
        (1, 64, 0.0, 0.010, 5), (2, 64, 0.1, 0.115, 5), (3, 64, 0.2, None, 5), (4, 160, 0.3, 0.305, 9),
        (5, 160, 0.4, 1.2, 9), (6, 64, 0.5, None, 9), (7, 64, 1.0, 1.02, 9), (8, 64, 1.5, 1.53, 9),
        (9, 160, 2.0, None, 9), (10, 64, 2.5, 2.6, 9),
    ]
    recs = [TraceRecord(uid, size, g, 0, dst, delivered_at=d) for uid, size, g, d, dst in rows]
    # hand-computed: 928 B generated / 640 B delivered by 3 s; 640 / 288 by 1 s
    expected = [
        (goodput_ratio(recs, 3.0), 100 * 640 / 928),
        (goodput_ratio(recs, 1.0), 45.0),
        (avg_e2e_delay(recs, 3.0), 0.98 / 7),
        (avg_e2e_delay(recs, 1.0), 0.01),
        (avg_e2e_delay(recs, 3.0, host=5), 0.0125),
        (interval_delay(recs, 0.5), 0.01),
        (interval_delay(recs, 1.5), 0.85 / 3),
        (interval_delay(recs, 2.5), 0.1),
    ]
    s = Series(recs)
    grid = np.array([1.0, 3.0])
    means, _ = s.interval_delay(np.array([0.0, 1.0, 2.0]))
    expected += [
        (s.goodput(grid)[0], 45.0), (s.goodput(grid)[1], 100 * 640 / 928),
        (s.cumulative_delay(grid)[1], 0.98 / 7), (means[1], 0.85 / 3),
    ]
    worst = max(abs(got - want) / abs(want) for got, want in expected)
    ok = worst <= 1e-9
    report(6, ok, "metric formulas", f"{len(expected)} values, worst relative error {worst:.2e}")
    assert ok


# 7 ------------------------------------------------------------------------------


def _full_run(job):
    traffic, seed = job
    t0 = time.perf_counter()
    r = run_scenario(ScenarioConfig(traffic=traffic, seed=seed))
    s = summarize(r.records, r.config.sim_end)
    g5, g50 = Series(r.records).goodput(np.array([5.0, 50.0]))
    zero = any(st.arp_replies == 0 for st in r.sessions)
    # stricter reading: zero replies even though the endpoints are connected by radio links
    adj = adjacency(r.positions)
    zero_connected = any(st.arp_replies == 0 and st.arp_requests > 0
                         and st.session.destination in hop_distances(adj, st.session.source)
                         for st in r.sessions)
    return dict(traffic=traffic, seed=seed, goodput=s.goodput_ratio, delay=s.avg_e2e_delay,
                g5=float(g5), g50=float(g50), zero_reply=zero, zero_connected=zero_connected,
                wall=time.perf_counter() - t0)


@pytest.fixture(scope="module")
def full_runs():
    jobs = [(traffic, seed) for traffic in ("s_data", "voice") for seed in range(1, SEEDS + 1)]
    workers = int(os.environ.get("WARPSIM_WORKERS", os.cpu_count() or 1))
    if workers <= 1:
        return [_full_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_full_run, jobs))


def test_7_full_scale_anchors(full_runs):
    by = {t: [r for r in full_runs if r["traffic"] == t] for t in ("s_data", "voice")}
    g_s = statistics.fmean(r["goodput"] for r in by["s_data"])
    g_v = statistics.fmean(r["goodput"] for r in by["voice"])
    d_s = statistics.fmean(r["delay"] for r in by["s_data"] if r["delay"] is not None)
    d_v = statistics.fmean(r["delay"] for r in by["voice"] if r["delay"] is not None)
    # curve shape on the seed-averaged goodput curve
    g5 = statistics.fmean(r["g5"] for r in full_runs)
    g50 = statistics.fmean(r["g50"] for r in full_runs)
    zero_share = statistics.fmean(1.0 if r["zero_reply"] else 0.0 for r in full_runs)
    zero_connected = statistics.fmean(1.0 if r["zero_connected"] else 0.0 for r in full_runs)
    rising = sum(r["g50"] > r["g5"] for r in full_runs)
    slowest = max(r["wall"] for r in full_runs)

    a = 20.0 <= g_s <= 60.0 and g_v < g_s
    b = all(0.005 <= d <= 0.5 for d in (d_s, d_v))
    c = g50 > g5 and zero_share >= 0.10
    budget = slowest < 300.0
    ok = a and b and c and budget
    report(7, ok, f"full-scale anchors over {SEEDS} seeds per traffic type",
           f"(a) goodput S_DATA={g_s:.2f}% VOICE={g_v:.2f}% {'ok' if a else 'NO'}; "
           f"(b) delay S_DATA={d_s:.4f}s VOICE={d_v:.4f}s {'ok' if b else 'NO'}; "
           f"(c) mean goodput@5s={g5:.1f}% @50s={g50:.1f}% (rising in {rising}/{len(full_runs)} runs), "
           f"zero-reply runs={zero_share:.0%} (with connected endpoints {zero_connected:.0%}) {'ok' if c else 'NO'}; "
           f"slowest seed {slowest:.0f}s")
    assert ok


# 8 ------------------------------------------------------------------------------


def _digest(directory: Path) -> dict[str, str]:
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_8_determinism(tmp_path):
    scenario = tmp_path / "scenario.cfg"
    scenario.write_text("node_count = 30\narea_width = 1000\narea_height = 1000\nsession_count = 4\n"
                        "sim_end = 45\nseed = 11\n")
    digests = []
    for k, hashseed in enumerate(("0", "12345")):
        out = tmp_path / f"run{k}"
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        proc = subprocess.run([sys.executable, "-m", "warpsim.cli", str(scenario), "--out", str(out),
                               "--trace", "full"], env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        digests.append(_digest(out))
    # and once in-process
    out = tmp_path / "inproc"
    out.mkdir()
    cfg = ScenarioConfig.from_file(scenario)
    with (out / "trace.csv").open("w", newline="") as sink:
        result = run_scenario(cfg, trace_sink=sink, full_trace=True)
    export(result, out)
    digests.append(_digest(out))

    files = len(digests[0])
    ok = files == 7 and digests[0] == digests[1] == digests[2]
    trace_lines = sum(1 for _ in (tmp_path / "run0" / "trace.csv").open())
    report(8, ok, "determinism", f"{files} files byte-identical across 3 runs ({trace_lines} trace lines)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
