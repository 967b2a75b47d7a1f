"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""
import math
import subprocess
import sys
from itertools import product

import numpy as np
import pytest

from ordercsp import (BooleanClause, GuardError, average_value, brute_force, delta_u,
                      delta_u_witness, encode_boolean_csp, expected_payoff_f, gen_mas, local_search,
                      neighborhood, separating_assignments, theorem2_certificate, transform, value)
from ordercsp.fourier import characters, fwht, sparsity_bound
from ordercsp.generators import all_boolean_tables

from conftest import ACCEPTANCE_LINES, acceptance_corpus, path3, triangle

TOL = 1e-9
Z99 = 2.3263478740408408  # one-sided 99% normal quantile


def report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def corpus():
    return acceptance_corpus()


@pytest.fixture(scope="module")
def certificates(corpus):
    certs, skipped = [], 0
    for _, inst in corpus:
        for u in range(inst.n):
            try:
                certs.append(theorem2_certificate(neighborhood(inst, u)))
            except GuardError:
                skipped += 1
    return certs, skipped


def solver_instances(corpus):
    small = [inst for _, inst in corpus if inst.n <= 8]
    return [("triangle", triangle()), ("path3", path3())] + [
        (f"corpus[{i}]", inst) for i, inst in enumerate(small[:6])]


@pytest.fixture(scope="module")
def solver_runs(corpus):
    runs = 10_000
    out = {}
    for name, inst in solver_instances(corpus):
        records = [local_search(inst, seed) for seed in range(runs)]
        out[name] = (inst, records)
    return out


def test_c1_theorem2_certificate(certificates):
    certs, skipped = certificates
    failed = [c.vertex for c in certs if not (c.checks["a_gap_vs_l1"] and c.checks["b_max_coeff_vs_bound"]
                                               and c.checks["c_improvement_vs_max_coeff"]
                                               and c.checks["d_improvement_vs_bound"])]
    informative = sum(1 for c in certs if c.gap > TOL)
    report("C1 Fourier improvement chain (a)-(d) at 1e-9",
           not failed and len(certs) > 0,
           f"{len(certs)} vertices certified ({informative} with gap > 0), "
           f"{skipped} beyond the 20-bit guard, {len(failed)} failures")


def test_c2_bucket_identity(corpus):
    worst, checked = 0.0, 0
    for _, inst in corpus:
        for u in range(inst.n):
            nb = neighborhood(inst, u)
            d, plus, minus = delta_u_witness(inst, u)
            x_plus, x_minus = separating_assignments(nb, plus, minus)
            diff = expected_payoff_f(nb, x_plus) - expected_payoff_f(nb, x_minus)
            worst = max(worst, abs(diff - d))
            checked += 1
    report("C2 f(x+) - f(x-) = delta_u", worst <= TOL and checked > 0,
           f"{checked} vertices, max |difference| = {worst:.2e}")


def test_c3_fourier_hygiene(corpus, certificates):
    ortho_ok = True
    for n_vars in range(13):
        chars = characters(n_vars).astype(np.float64)
        gram = chars @ chars.T
        ortho_ok &= bool(np.array_equal(gram, (1 << n_vars) * np.eye(1 << n_vars)))

    rng = np.random.default_rng(20240601)
    parseval_err = recon_err = 0.0
    for i in range(100):
        n_vars = 1 + i % 12
        values = rng.random(1 << n_vars)
        coeffs = fwht(values)
        parseval_err = max(parseval_err, abs(np.sum(coeffs ** 2) - np.mean(values ** 2)))
        recon = characters(n_vars).astype(np.float64).T @ coeffs
        recon_err = max(recon_err, float(np.max(np.abs(recon - values))))

    certs, _ = certificates
    sparse_ok = all(c.nonzero_count <= c.sparsity_bound for c in certs)
    # recount directly for the random-table family
    for spec, inst in corpus:
        if spec.family != "random-table":
            continue
        for u in range(inst.n):
            nb = neighborhood(inst, u)
            try:
                table = transform(nb, nb.D)
            except GuardError:
                continue
            sparse_ok &= table.nonzero_count() <= sparsity_bound(nb, nb.D)
    ok = ortho_ok and parseval_err <= TOL and recon_err <= TOL and sparse_ok
    report("C3 orthonormality / Parseval / reconstruction / sparsity", ok,
           f"orthonormal<=12 vars: {ortho_ok}, Parseval err {parseval_err:.1e}, "
           f"reconstruction err {recon_err:.1e}, sparsity ok: {sparse_ok}")


def test_c4_exact_baselines(corpus):
    insts = [triangle(), path3()] + [inst for _, inst in corpus if inst.n <= 8]
    avg_err, cover_ok = 0.0, True
    for inst in insts:
        rep = brute_force(inst)
        avg_err = max(avg_err, abs(rep.avg - average_value(inst)))
        cover_ok &= sum(delta_u(inst, u) for u in range(inst.n)) >= rep.opt - rep.wst - TOL
    report("C4 Avg exact and sum of delta_u >= Opt - Wst", avg_err <= TOL and cover_ok,
           f"{len(insts)} instances with n <= 8, max |Avg error| = {avg_err:.1e}, cover: {cover_ok}")


def test_c5_algorithm_soundness(solver_runs):
    bad = []
    for name, (inst, records) in solver_runs.items():
        opt = brute_force(inst).opt
        for order, trace in records:
            if (any(m.gain < 0 for m in trace.moves)
                    or abs(trace.final_value - value(inst, order)) > TOL
                    or trace.final_value > opt + TOL):
                bad.append((name, trace.seed))
    report("C5 gains >= 0, final = value(ordering), final <= Opt", not bad,
           f"{len(solver_runs)} instances x 10^4 runs, {len(bad)} violations")


def test_c6_statistics(solver_runs):
    runs = 100_000
    inst = gen_mas(8, 3, 11)
    assert inst.B == 3
    fresh = np.zeros(inst.n)
    for seed in range(runs):
        for v in local_search(inst, seed)[1].fresh_vertices:
            fresh[v] += 1
    fresh_ok, worst_margin = True, math.inf
    for u in range(inst.n):
        p_hat = fresh[u] / runs
        sigma = math.sqrt(p_hat * (1 - p_hat) / runs)
        floor = 1 / (2 * len(inst.neighbors[u]))
        fresh_ok &= p_hat >= floor - 3 * sigma
        worst_margin = min(worst_margin, p_hat - floor)

    adv_ok, zero_ok, tested = True, True, 0
    for name, (sub, records) in solver_runs.items():
        avg = average_value(sub)
        if any(delta_u(sub, u) > 0 for u in range(sub.n)):
            tested += 1
            vals = np.array([t.final_value for _, t in records])
            se = vals.std(ddof=1) / math.sqrt(len(vals))
            adv_ok &= (vals.mean() - avg) > Z99 * se if se > 0 else vals.mean() > avg
        zero = np.array([local_search(sub, seed, iterations=0)[1].final_value for seed in range(10_000)])
        zero_ok &= abs(zero.mean() - avg) <= 3 * zero.std(ddof=1) / math.sqrt(len(zero))
    report("C6 freshness / advantage over Avg / iterations=0 baseline", fresh_ok and adv_ok and zero_ok,
           f"freshness ok: {fresh_ok} (min p_hat - 1/(2|N|) = {worst_margin:.3f}), "
           f"advantage ok on {tested} instances: {adv_ok}, iterations=0 within 3 sigma: {zero_ok}")


def _boolean_opt_avg(n_vars, clauses):
    vals = [math.fsum(c(a) for c in clauses) for a in product((0, 1), repeat=n_vars)]
    return max(vals), math.fsum(vals) / len(vals)


def test_c7_encoding():
    clauses = []
    for scope in [(0,), (1,), (0, 1), (1, 0)]:
        for table in all_boolean_tables(len(scope)):
            clauses.append(BooleanClause(scope, table))
    cases = [(2, [c]) for c in clauses]
    cases += [(2, [a, b]) for i, a in enumerate(clauses) for b in clauses[i:]]

    rng = np.random.default_rng(7)
    for i in range(30):
        n_vars = 3 + i % 2
        sample = []
        for _ in range(int(rng.integers(1, 4))):
            arity = int(rng.integers(1, n_vars + 1))
            scope = tuple(int(v) for v in rng.permutation(n_vars)[:arity])
            keys = list(product((0, 1), repeat=arity))
            sample.append(BooleanClause(scope, {k: float(rng.integers(0, 2)) for k in keys}))
        cases.append((n_vars, sample))

    mismatches = 0
    for n_vars, cls in cases:
        inst = encode_boolean_csp(n_vars, cls)
        rep = brute_force(inst)
        opt, avg = _boolean_opt_avg(n_vars, cls)
        if rep.opt != opt or abs(rep.avg - avg) > TOL or abs(average_value(inst) - avg) > TOL:
            mismatches += 1
    report("C7 boolean encoding preserves Opt and Avg", mismatches == 0,
           f"{len(cases)} boolean CSPs ({len(cases) - 30} on 2 variables, 30 on 3-4), {mismatches} mismatches")


def _cli(cwd, *argv):
    proc = subprocess.run([sys.executable, "-m", "ordercsp.cli", *map(str, argv)],
                          capture_output=True, check=False, cwd=cwd)
    return proc.returncode, proc.stdout


def test_c8_determinism(tmp_path):
    commands = [
        ("gen", "--family", "mas", "--n", 8, "--b", 3, "--seed", 7, "--out", "g.json"),
        ("gen", "--family", "betweenness", "--n", 9, "--b", 2, "--seed", 1),
        ("solve", "inst.json", "--seed", 9, "--trace", "--no-timestamp"),
        ("solve", "inst.json", "--seed", 9, "--restarts", 5, "--iterations", 3, "--no-timestamp"),
        ("brute", "inst.json"),
        ("certify", "inst.json", "--all"),
        ("bench", "inst.json", "--runs", 200, "--seed", 4, "--csv", "b.csv", "--no-timestamp"),
        ("bench", "--family", "mas", "--n", 8, "--b", 3, "--gen-seed", 2, "--runs", 100, "--no-timestamp"),
    ]
    dirs = [tmp_path / "run0", tmp_path / "run1"]
    for d in dirs:
        d.mkdir()
        _cli(d, "gen", "--family", "random-table", "--n", 7, "--b", 2, "--k", 3, "--seed", 5, "--out", "inst.json")
    differing = []
    for cmd in commands:
        outputs = [_cli(d, *cmd) for d in dirs]
        if outputs[0] != outputs[1] or outputs[0][0] != 0:
            differing.append(" ".join(map(str, cmd[:3])))
    files = sorted(p.name for p in dirs[0].iterdir())
    for name in files:
        if (dirs[0] / name).read_bytes() != (dirs[1] / name).read_bytes():
            differing.append(name)
    report("C8 byte-identical CLI output for fixed seeds", not differing,
           f"{len(commands)} commands run twice in fresh processes, files compared: {files}, "
           f"differing: {differing or 'none'}")
