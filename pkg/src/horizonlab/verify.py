"""Self-checks behind the ``verify-*`` commands.

Each check returns a plain dict with a boolean ``passed`` plus the measured
numbers, so reports serialise straight to JSON.  No check records wall-clock
time: reports must be byte-identical across runs.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from . import cascade as cs
from . import funceq as fe
from . import haar as hm
from . import spin as sp
from .nohair import (
    KERR_NEWMAN,
    SCHWARZSCHILD,
    NoHairVector,
    ParticleTriple,
    Units,
    horizon_irreducible_mass,
    irreducible_mass_mqj,
    try_daughter,
)
from .rng import stream
from .tunneling import ChannelGrid, exchange_residual, spectrum, thermal_slope

FOUR_PI = 4 * math.pi


def plain(obj):
    """Recursively turn numpy scalars/arrays into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


class NonIrreducibleEntropy:
    """Negative control: S = 4 pi M^2 + Q^4 depends on more than I."""

    kind = "control_m2_q4"

    def evaluate(self, M, Q=0.0, J=0.0):
        return FOUR_PI * np.square(M) + np.power(Q, 4)

    def __call__(self, X):
        return float(self.evaluate(*X.mqj))


def check_spectrum_law(mass=1.0, delta=0.1):
    u = Units(delta)
    X = NoHairVector.from_real(mass, units=u)
    spec = spectrum(SCHWARZSCHILD, X, ChannelGrid(u))
    eps = np.array([x.eps_units * delta for x in spec.channels])
    logp = spec.log_probabilities
    worst = 0.0
    for a, b in itertools.combinations(range(len(eps)), 2):
        expect = FOUR_PI * ((mass - eps[a]) ** 2 - (mass - eps[b]) ** 2)
        worst = max(worst, abs((logp[a] - logp[b]) - expect))
    total = float(spec.probabilities.sum())
    return {"channels": len(spec), "max_pair_error": worst, "probability_sum": total,
            "passed": worst <= 1e-12 and abs(total - 1) <= 1e-12}


def random_admissible_triples(n, rng, charged=True):
    """``n`` random (X, x1, x2) on a lattice with both emission orders allowed."""
    u = Units(0.05, charge_quantum=0.05, spin_quantum=0.5) if charged else Units(0.05)
    out = []
    while len(out) < n:
        m = int(rng.integers(4, 60))
        if charged:
            q, j = int(rng.integers(-m // 2, m // 2 + 1)), int(rng.integers(-2, 3))
        else:
            q = j = 0
        if not u.subextremal(m, q, j):
            continue
        X = NoHairVector(m, q, j, u)

        def particle():
            return ParticleTriple(int(rng.integers(1, max(2, m // 3))),
                                  int(rng.integers(-3, 4)) if charged else 0,
                                  int(rng.integers(-1, 2)) if charged else 0)

        x1, x2 = particle(), particle()
        a, b = try_daughter(X, x1), try_daughter(X, x2)
        if a is None or b is None or try_daughter(a, x2) is None or try_daughter(b, x1) is None:
            continue
        out.append((X, x1, x2))
    return out


def check_exchange(seed=0, n=10_000):
    rng = stream(seed, 0, 11)
    worst = {}
    for name, model, charged in (("schwarzschild", SCHWARZSCHILD, False), ("kerr_newman", KERR_NEWMAN, True)):
        triples = random_admissible_triples(n, rng, charged)
        worst[name] = max(abs(exchange_residual(model, *t)) for t in triples)
    u = Units(0.1)

    def broken(S, x):
        return x.eps_units * u.delta * S.M ** 2

    br = abs(exchange_residual(SCHWARZSCHILD, NoHairVector(10, 0, 0, u),
                               ParticleTriple(1), ParticleTriple(2), log_weight=broken))
    return {"max_residual": worst, "broken_kernel_residual": br,
            "passed": max(worst.values()) <= 1e-12 and br >= 1e-3}


def check_thermal(masses=(0.5, 1.0, 2.0), eps=1e-4):
    rows = []
    for M in masses:
        slope = thermal_slope(SCHWARZSCHILD, (M, 0.0, 0.0), eps)
        rows.append({"M": M, "slope": slope, "expected": -8 * math.pi * M,
                     "rel_error": abs(slope / (-8 * math.pi * M) - 1)})
    return {"rows": rows, "passed": all(r["rel_error"] <= 5e-3 for r in rows)}


def check_telescoping(seed=0, trajectories=1000, workers=None):
    u = Units(0.05)
    X0 = NoHairVector.from_real(1.0, units=u)
    cfg = cs.CascadeConfig(ChannelGrid(u), trajectories=trajectories, seed=seed)
    streams = cs.run_ensemble(SCHWARZSCHILD, X0, cfg, workers)
    S0 = SCHWARZSCHILD(X0)
    worst = max(abs(cs.stream_log_weight(SCHWARZSCHILD, s) + S0) for s in streams)
    ledgers_ok = all(s.ledger == X0.key for s in streams)
    return {"trajectories": len(streams), "max_telescoping_error": worst,
            "ledgers_exact": ledgers_ok, "length_histogram": {str(k): v for k, v in cs.length_histogram(streams).items()},
            "passed": worst <= 1e-9 and ledgers_ok}


def check_radiation_entropy(delta=0.1):
    u = Units(delta)
    X0 = NoHairVector(5, 0, 0, u)
    grid = ChannelGrid(u)
    streams = cs.enumerate_streams(SCHWARZSCHILD, X0, grid)
    w = np.array([lw for _, lw in streams])
    r = cs.radiation_entropy(SCHWARZSCHILD, X0, grid, cs.CascadeConfig(grid, mode="constant_N"))
    spread = float(w.max() - w.min())
    ok = (r.n_streams == 16 and spread <= 1e-9 and abs(r.s_rad - math.log(16)) <= 1e-9
          and r.identity_residual <= 1e-9)
    return {"n_streams": r.n_streams, "weight_spread": spread, "s_rad": r.s_rad,
            "log_n_prime": r.log_n_prime, "identity_residual": r.identity_residual, "passed": ok}


def funceq_report(kernel, seed=0, quad_step=1e-3):
    """Residuals and reconstruction error for one scalar kernel."""
    fr = fe.functional_residual(kernel, 10_000, stream(seed, 0, 21))
    pde = fe.pde_residual(kernel, 1e-4)
    cau = fe.cauchy_special_case(kernel, 10_000, stream(seed, 0, 22))
    try:
        dec = fe.reconstruct_f(kernel, quad_step, rng=stream(seed, 0, 23))
        rec = fe.verify_decomposition(kernel, dec, 2000, stream(seed, 0, 24)).value
    except fe.NotASolution:
        rec = None
    return {"kernel": kernel.name, "functional_residual": fr.value, "pde_residual": pde,
            "reconstruction_error": rec, "cauchy_residual": cau.value,
            "passed": fr.value <= 1e-10 and pde <= 1e-6 and rec is not None and rec <= 1e-5}


def _planted_f(M):
    return np.sin(M) + 2.0 * M**2


def _planted_h(e):
    return 0.3 * e**2


def check_funceq(seed=0):
    kernel = fe.schwarzschild_kernel()
    dec = fe.reconstruct_f(kernel, 1e-3, rng=stream(seed, 0, 23))
    f_err = float(np.max(np.abs(dec.f_samples - FOUR_PI * dec.m_grid**2)))
    h_err = float(np.max(np.abs(dec.h_samples)))
    planted = fe.planted_kernel(_planted_f, _planted_h)
    pdec = fe.reconstruct_f(planted, 1e-3, rng=stream(seed, 1, 23))
    planted_err = fe.affine_gauge_error(pdec, _planted_f, _planted_h)
    pde = fe.pde_residual(kernel, 1e-4)
    rep = funceq_report(kernel, seed)
    ok = f_err <= 1e-5 and h_err <= 1e-5 and planted_err <= 1e-5 and pde <= 1e-6 and rep["passed"]
    return {"schwarzschild_f_error": f_err, "schwarzschild_h_error": h_err,
            "planted_table_error": planted_err, "pde_residual": pde, "report": rep, "passed": ok}


def check_penrose(seed=0, n=100):
    pairs = cs.equal_irreducible_pairs(n, stream(seed, 0, 31))
    good = cs.penrose_invariance_check(KERR_NEWMAN, pairs)
    bad = cs.penrose_invariance_check(NonIrreducibleEntropy(), pairs)
    return {"pairs": len(good.rows), "skipped": good.skipped, "max_mismatch": good.max_residual,
            "control_mismatch": bad.max_residual,
            "passed": len(good.rows) == n and good.max_residual <= 1e-9 and bad.max_residual >= 1e-3}


def check_haar(seed=0, dim=16, dr1=2, dr2=4, samples=100_000, workers=None, input_index=0):
    state = hm.PureState.basis(dim, input_index)
    v = hm.permutation_symmetry_test(state, dr1, dr2, samples, seed, workers=workers)
    p, se = v.forward.probabilities, v.forward.std_errors
    target = 1.0 / (dr1 * dr2)
    z = float(np.max(np.abs(p - target) / se))
    out = v.to_dict()
    unit = out["max_unitarity_residual"]
    out.update({"max_cell_z": z, "samples": samples,
                "passed": v.tv_distance <= 0.01 and z <= 4 and unit <= 1e-12 and v.passed})
    return out


def check_spin(jp_max=3, j_max=3):
    jp_max, j_max = sp._half(jp_max), sp._half(j_max)
    rows, all_ok, anomalous_excluded, anomalous_found = [], True, True, False
    for jp, j in itertools.product(sp.half_integers(jp_max), sp.half_integers(j_max)):
        c = sp.classify_eigenstates(jp, j)
        brute = sp.classify_bruteforce(jp, j)
        counts = {}
        for e in c.entries:
            counts[round(e.eigenvalue, 8)] = counts.get(round(e.eigenvalue, 8), 0) + 1
        ok = c.max_residual <= 1e-10 and counts == {round(k, 8): v for k, v in brute.items()}
        kinds = set(c.kinds)
        if j > 1:
            ok &= kinds == {"standard_up", "standard_down"}
        if j == sp.Fraction(1, 2):
            xs = sorted({e.eigenvalue for e in c.entries})
            expect = sorted({float(jp), -1.0 - float(jp)} if jp > 0 else {0.0})
            ok &= len(xs) == len(expect) and all(abs(a - b) <= 1e-10 for a, b in zip(xs, expect))
        ok &= "unclassified" not in kinds
        # each entry is judged against the mother whose J equals its own j'
        conserved = {}
        for J in {e.j_total for e in c.entries}:
            for i, e in enumerate(sp.conservation_filter(c, J).entries):
                if e.j_total == J:
                    conserved[i] = e
        for i in range(len(c.entries)):
            e = conserved[i]
            if e.kind == "anomalous_j1":
                anomalous_found = True
                anomalous_excluded &= not e.conserved
            if e.conserved:
                ok &= e.mother_state[1] == e.mother_state[0]
            rows.append((str(jp), str(j), e.kind, e.eigenvalue, e.residual, e.conserved, str(e.j_total)))
        all_ok &= bool(ok)
    summary = {"cases": len(sp.half_integers(jp_max)) * len(sp.half_integers(j_max)),
               "all_residuals_ok": bool(all_ok), "anomalous_found": anomalous_found,
               "anomalous_excluded": bool(anomalous_excluded)}
    summary["passed"] = bool(all_ok and anomalous_excluded and (anomalous_found or jp_max < 1 or j_max < 1))
    return summary, rows


def spin_table_csv(rows):
    lines = ["j_p,j,class,eigenvalue,residual,conserved,mother_J"]
    lines += [f"{a},{b},{k},{x!r},{r!r},{str(c).lower()},{J}" for a, b, k, x, r, c, J in rows]
    return "\n".join(lines) + "\n"


def check_irreducible_mass():
    cases = [((1.0, 0.0, 0.0), 1.0), ((1.0, 1.0, 0.0), 0.5), ((1.0, 0.0, 1.0), 1 / math.sqrt(2))]
    rows = []
    for mqj, expect in cases:
        a = float(irreducible_mass_mqj(*mqj))
        b = horizon_irreducible_mass(*mqj)
        rows.append({"state": list(mqj), "formula": a, "horizon": b, "expected": expect})
    ok = all(abs(r["formula"] - r["expected"]) <= 1e-12 and abs(r["horizon"] - r["expected"]) <= 1e-12
             for r in rows)
    return {"rows": rows, "passed": ok}


def verify_all(seed=42, workers=None):
    """Every built-in criterion, in a fixed order."""
    spin_summary, _ = check_spin()
    return plain({
        "spectrum_law": check_spectrum_law(),
        "exchange_symmetry": check_exchange(seed),
        "thermal_limit": check_thermal(),
        "telescoping": check_telescoping(seed, workers=workers),
        "radiation_entropy": check_radiation_entropy(),
        "reconstruction": check_funceq(seed),
        "penrose_invariance": check_penrose(seed),
        "haar_permutation": check_haar(seed, workers=workers),
        "spin_classification": spin_summary,
        "irreducible_mass": check_irreducible_mass(),
    })
