"""Refinement kernel benchmark: numba vs numpy.

Times both backends on the fixture molecules and on larger synthetic
graphs, checks they agree, and times end-to-end fixture extraction with
each backend selected through MOLEDIT_DISABLE_NUMBA.

    python benchmarks/bench_refine.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import csv
import os
import subprocess
import sys
import timeit
from pathlib import Path

import numpy as np

from moledit import _kernels
from moledit.smiles import parse_molecule

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "data" / "fixture_200.csv"


def fixture_graphs():
    out = []
    with open(FIXTURE, newline="") as fh:
        for row in csv.DictReader(fh):
            text = row["reactants>reagents>production"]
            reactants, _, product = text.split(">")
            for smi in [*reactants.split("."), product]:
                mol = parse_molecule(smi)
                labels = np.array([a.element * 16 + mol.num_hs(i) for i, a in enumerate(mol.atoms)], dtype=np.int64)
                out.append((labels, *mol.csr()))
    return out


def ladder(n: int, rng: np.random.Generator):
    """Fused-ring ladder with sparse random labels, n nodes (n even)."""
    edges = []
    half = n // 2
    for k in range(half - 1):
        edges += [(k, k + 1), (half + k, half + k + 1)]
    edges += [(k, half + k) for k in range(half)]
    nbrs = [[] for _ in range(n)]
    for u, v in edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for u in range(n):
        indptr[u + 1] = indptr[u] + len(nbrs[u])
    indices = np.array([v for u in range(n) for v in nbrs[u]], dtype=np.int64)
    elabels = np.full(indices.shape[0], 3, dtype=np.int64)
    labels = np.ones(n, dtype=np.int64)
    labels[rng.choice(n, size=max(1, n // 50), replace=False)] = 2
    return labels, indptr, indices, elabels


def run_all(fn, graphs):
    for labels, indptr, indices, elabels in graphs:
        fn(labels, indptr, indices, elabels, labels.shape[0])


def bench(name, graphs, repeat):
    row = [name]
    results = {}
    for backend in ("numpy", "numba"):
        fn = getattr(_kernels, f"refine_{backend}", None)
        if fn is None or (backend == "numba" and not _kernels.HAS_NUMBA):
            row.append("n/a")
            continue
        run_all(fn, graphs)  # warm-up / compile
        results[backend] = [fn(g[0], g[1], g[2], g[3], g[0].shape[0]).tolist() for g in graphs]
        t = min(timeit.repeat(lambda: run_all(fn, graphs), number=1, repeat=repeat))
        row.append(f"{t * 1e3:9.2f} ms")
    if len(results) == 2:
        row.append("yes" if results["numpy"] == results["numba"] else "NO")
    else:
        row.append("-")
    return row


def end_to_end(disable: bool) -> float:
    env = dict(os.environ)
    if disable:
        env["MOLEDIT_DISABLE_NUMBA"] = "1"
    else:
        env.pop("MOLEDIT_DISABLE_NUMBA", None)
    code = (
        "import time; from moledit.dataset import load_split, extract_all; "
        f"s = load_split({str(FIXTURE)!r}); extract_all(s); "
        "t = time.perf_counter(); extract_all(s); print(time.perf_counter() - t)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    cases = [
        ("fixture molecules (614)", fixture_graphs()),
        ("ladder n=200 x20", [ladder(200, rng) for _ in range(20)]),
        ("ladder n=2000 x5", [ladder(2000, rng) for _ in range(5)]),
    ]
    print(f"{'case':<26}{'numpy':>14}{'numba':>14}  agree")
    for name, graphs in cases:
        r = bench(name, graphs, args.repeat)
        print(f"{r[0]:<26}{r[1]:>14}{r[2]:>14}  {r[3]}")
    print()
    print(f"fixture extraction, numba backend: {end_to_end(False):.3f} s")
    print(f"fixture extraction, numpy backend: {end_to_end(True):.3f} s")


if __name__ == "__main__":
    main()
