#!/usr/bin/env python3
#
# Project EquiHG - Copyright 2026 The EquiHG Authors.
# SPDX-License-Identifier: Apache-2.0
#
"""Generate the bundled QM9-style sample: small random organics (at most 9
heavy atoms among C, N, O, F) with MMFF geometries, plus a targets CSV.

Targets are synthetic but geometry dependent:
  gap  HOMO-LUMO gap in meV: a Hueckel pi gap with distance dependent
       resonance integrals for molecules with a pi system, a composition
       based sigma gap otherwise
  r2   sum of squared distances from the centroid, in Angstrom^2
"""

import argparse
import random
import sys

import numpy as np
from rdkit import Chem, RDLogger
from rdkit.Chem import AllChem

RDLogger.DisableLog("rdApp.*")

VALENCE = {"C": 4, "N": 3, "O": 2, "F": 1}
ELEMENT_WEIGHTS = [("C", 0.62), ("N", 0.16), ("O", 0.17), ("F", 0.05)]
SEEDS = ["", "", "", "c1ccccc1", "c1ccncc1", "c1ccoc1", "c1cc[nH]c1",
         "c1cncnc1", "c1cnc[nH]1", "C1=CC=CC1"]

# Hueckel heteroatom parameters h_X (alpha_X = alpha + h_X beta); the
# second entry is for two-electron donors (pyrrole N, furan O).
HUCKEL_H = {"C": (0.0, 0.0), "N": (0.5, 1.5), "O": (1.0, 2.0), "F": (3.0, 3.0)}
BETA_EV = 2.7


def pick_element(rng):
    r = rng.random()
    for sym, w in ELEMENT_WEIGHTS:
        if r < w:
            return sym
        r -= w
    return "C"


def random_molecule(rng, max_heavy=9):
    seed = rng.choice(SEEDS)
    if seed:
        mol = Chem.RWMol(Chem.MolFromSmiles(seed))
        Chem.Kekulize(mol, clearAromaticFlags=True)
    else:
        mol = Chem.RWMol()
        mol.AddAtom(Chem.Atom(pick_element(rng)))
    target = rng.randint(max(2, mol.GetNumAtoms()), max_heavy)

    def free(idx):
        a = mol.GetAtomWithIdx(idx)
        used = sum(b.GetBondTypeAsDouble() for b in a.GetBonds())
        return VALENCE[a.GetSymbol()] - int(used)

    while mol.GetNumAtoms() < target:
        hosts = [i for i in range(mol.GetNumAtoms()) if free(i) > 0]
        if not hosts:
            break
        host = rng.choice(hosts)
        sym = pick_element(rng)
        cap = min(free(host), VALENCE[sym])
        order = 1
        r = rng.random()
        if cap >= 3 and r < 0.06:
            order = 3
        elif cap >= 2 and r < 0.25:
            order = 2
        new = mol.AddAtom(Chem.Atom(sym))
        mol.AddBond(host, new, {1: Chem.BondType.SINGLE,
                                2: Chem.BondType.DOUBLE,
                                3: Chem.BondType.TRIPLE}[order])
    if rng.random() < 0.3:
        dist = Chem.GetDistanceMatrix(mol)
        pairs = [(i, j) for i in range(mol.GetNumAtoms())
                 for j in range(i + 1, mol.GetNumAtoms())
                 if free(i) > 0 and free(j) > 0 and 2 <= dist[i][j] <= 5]
        if pairs:
            i, j = rng.choice(pairs)
            mol.AddBond(i, j, Chem.BondType.SINGLE)
    out = mol.GetMol()
    for a in out.GetAtoms():
        a.SetNoImplicit(False)
    Chem.SanitizeMol(out)
    return out


def embed(mol, seed):
    mh = Chem.AddHs(mol)
    if mh.GetNumAtoms() > 29:
        return None
    params = AllChem.ETKDGv3()
    params.randomSeed = seed
    params.maxIterations = 200
    params.timeout = 5
    if AllChem.EmbedMolecule(mh, params) != 0:
        return None
    if AllChem.MMFFHasAllMoleculeParams(mh):
        AllChem.MMFFOptimizeMolecule(mh, maxIters=500)
    return mh


def pi_gap(mh, xyz):
    """Gap in meV. Occupation counts pi bonds of a Kekule structure plus
    lone-pair donors, so it is exact for closed-shell molecules."""
    km = Chem.Mol(mh)
    Chem.Kekulize(km, clearAromaticFlags=True)
    centers = set()
    electrons = 0
    for b in km.GetBonds():
        if b.GetBondType() in (Chem.BondType.DOUBLE, Chem.BondType.TRIPLE):
            centers.update((b.GetBeginAtomIdx(), b.GetEndAtomIdx()))
            electrons += 2
    donors = set()
    for a in mh.GetAtoms():
        if a.GetIsAromatic() and a.GetIdx() not in centers:
            donors.add(a.GetIdx())
            electrons += 2
    centers |= donors
    heavy = [a for a in mh.GetAtoms() if a.GetAtomicNum() > 1]
    n_n = sum(a.GetSymbol() == "N" for a in heavy)
    n_o = sum(a.GetSymbol() == "O" for a in heavy)
    n_f = sum(a.GetSymbol() == "F" for a in heavy)
    if not centers:
        return 9800.0 - 900.0 * min(n_n, 3) - 600.0 * min(n_o, 3) + 150.0 * n_f
    idx = sorted(centers)
    pos = {a: i for i, a in enumerate(idx)}
    h = np.zeros((len(idx), len(idx)))
    for a in idx:
        sym = mh.GetAtomWithIdx(a).GetSymbol()
        h[pos[a], pos[a]] = -HUCKEL_H[sym][1 if a in donors else 0]
    for b in mh.GetBonds():
        i, j = b.GetBeginAtomIdx(), b.GetEndAtomIdx()
        if i in pos and j in pos:
            r = float(np.linalg.norm(xyz[i] - xyz[j]))
            h[pos[i], pos[j]] = h[pos[j], pos[i]] = -np.exp(-(r - 1.40) / 0.35)
    e = np.linalg.eigvalsh(h)
    occ = electrons // 2
    gap = e[occ] - e[occ - 1] if 0 < occ < len(e) else 3.0
    return 1000.0 * (BETA_EV * gap + 1.5)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=1200)
    ap.add_argument("--seed", type=int, default=20260901)
    ap.add_argument("--sdf", default="data/qm9_sample.sdf")
    ap.add_argument("--csv", default="data/qm9_sample_targets.csv")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    seen = set()
    records = []
    while len(records) < args.count:
        try:
            mol = random_molecule(rng)
        except Exception:
            continue
        if any(a.GetFormalCharge() != 0 or a.GetNumRadicalElectrons()
               for a in mol.GetAtoms()):
            continue
        smi = Chem.MolToSmiles(mol)
        if smi in seen or "." in smi:
            continue
        mh = embed(mol, rng.randrange(1 << 30))
        if mh is None:
            continue
        seen.add(smi)
        name = f"qm9s_{len(records) + 1:04d}"
        mh.SetProp("_Name", name)
        xyz = mh.GetConformer().GetPositions()
        gap = pi_gap(mh, xyz)
        r2 = float(((xyz - xyz.mean(axis=0)) ** 2).sum())
        records.append((name, Chem.MolToMolBlock(mh, kekulize=False), gap, r2))
        if len(records) % 100 == 0:
            print(f"{len(records)} molecules", file=sys.stderr, flush=True)

    with open(args.sdf, "w") as f:
        for _, block, _, _ in records:
            f.write(block)
            f.write("$$$$\n")
    with open(args.csv, "w") as f:
        f.write("name,gap,r2\n")
        for name, _, gap, r2 in records:
            f.write(f"{name},{gap:.6f},{r2:.6f}\n")


if __name__ == "__main__":
    main()
