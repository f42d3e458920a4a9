#!/usr/bin/env python3
#
# Project EquiHG - Copyright 2026 The EquiHG Authors.
# SPDX-License-Identifier: Apache-2.0
#
"""Freeze RDKit's conjugation flags for a fixed SMILES list.

For every molecule the output stores the atom and bond counts after adding
hydrogens, the flag of every heavy-atom bond, and the connected components
of the conjugated bonds (sorted, ordered by smallest member).
"""

import json
import sys

from rdkit import Chem

CORPUS = [
    # alkanes and haloalkanes
    "C", "CC", "CCCC", "CC(C)C", "C1CCCCC1", "ClCCBr",
    # alkenes and alkynes
    "C=C", "CC=CC", "CC(C)=C(C)C", "C1CC=CCC1", "C#C", "CC#CC",
    # dienes, polyenes, cumulenes
    "C=CC=C", "C=CC=CC=C", "CC=CC=CC", "C=C(C)C=C", "C1=CCC=C1", "C=CCC=C",
    "C=C=C", "C#CC=C", "CC#CC#C", "ClC=CC=C",
    # aromatics
    "c1ccccc1", "C1=CC=CC=C1", "Cc1ccccc1", "c1ccc2ccccc2c1", "c1ccncc1",
    "c1ccoc1", "c1ccsc1", "c1cc[nH]c1", "c1cncnc1", "c1cnc[nH]1",
    "c1ccc(cc1)-c1ccccc1", "C=Cc1ccccc1", "Clc1ccccc1", "CCc1ccc(F)cc1",
    # carbonyls and nitriles
    "C=O", "CC(C)=O", "O=C1CCCCC1", "C=CC=O", "CC(=O)C=C", "O=CC=O",
    "O=C1C=CC(=O)C=C1", "O=Cc1ccccc1", "CC(=O)c1ccccc1", "CC#N", "C=CC#N",
    "N#Cc1ccccc1",
    # mixed
    "O=CC=Cc1ccccc1", "C=CCCC=O",
]


def components(n, flags):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    members = set()
    for a, b, conj in flags:
        if not conj:
            continue
        members.update((a, b))
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for v in sorted(members):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])


def main():
    if len(CORPUS) != 50 or len(set(CORPUS)) != 50:
        sys.exit(f"corpus must hold 50 distinct SMILES, has {len(CORPUS)}")
    out = []
    for smi in CORPUS:
        mol = Chem.MolFromSmiles(smi)
        mh = Chem.AddHs(mol)
        flags = []
        for b in mh.GetBonds():
            a, c = b.GetBeginAtomIdx(), b.GetEndAtomIdx()
            if mh.GetAtomWithIdx(a).GetAtomicNum() == 1 or \
               mh.GetAtomWithIdx(c).GetAtomicNum() == 1:
                if b.GetIsConjugated():
                    sys.exit(f"{smi}: conjugated bond to hydrogen")
                continue
            flags.append([min(a, c), max(a, c), bool(b.GetIsConjugated())])
        flags.sort()
        out.append({
            "smiles": smi,
            "num_atoms": mh.GetNumAtoms(),
            "num_bonds": mh.GetNumBonds(),
            "heavy_bonds": flags,
            "hyperedges": components(mh.GetNumAtoms(), flags),
        })
    json.dump({"toolkit": "RDKit", "version": Chem.rdBase.rdkitVersion,
               "molecules": out}, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
