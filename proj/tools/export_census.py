#!/usr/bin/env python3
"""Export Dirichlet-domain face-pairing matrices from the SnapPy census.

Writes one hyperdrum manifold file per census entry into data/manifolds/.
Requires `pip install snappy`. The export is done once; the resulting files
are committed so that tests run offline.

Convention: SnapPy's Dirichlet domain is centred at (1, 0, 0, 0) in the
hyperboloid model with Gram form diag(+1, -1, -1, -1). Matrices are computed
with ManifoldHP and rounded to 17 significant digits. Every face pairing is
written (both g and its inverse appear, since each face is paired with its
partner). The metadata volume/diameter/geodesic-length/reference values are
the published census-table values, not SnapPy's.
"""

import argparse
import pathlib

import snappy

# name: (volume, symmetry, q2_1, m_1, L_gamma, diameter, lambda1/D, k_1)
TABLE = {
    "m003(-3,1)": (0.9427, "D6", 27.8, 1, 0.585, 0.843, 1.44, 5.18),
    "m003(-2,3)": (0.9814, "D2", 29.3, 1, 0.578, 0.868, 1.36, 5.32),
    "s556(-1,1)": (1.0156, "Z4", 27.9, 1, 0.831, 0.833, 1.45, 5.19),
    "m006(-1,2)": (1.2637, "D4", 21.1, 2, 0.575, 1.017, 1.38, 4.48),
    "m188(-1,1)": (1.2845, "D2", 20.4, 1, 0.480, 0.995, 1.44, 4.41),
    "v2030(1,1)": (1.3956, "D2", 16.2, 1, 0.366, 1.082, 1.49, 3.90),
    "m015(4,1)": (1.4124, "D2", 28.1, 2, 0.794, 0.923, 1.31, 5.21),
    "s718(1,1)": (2.2726, "D2", 10.1, 1, 0.339, 1.439, 1.45, 3.01),
    "m120(-6,1)": (3.1411, "Z2", 7.50, 1, 0.314, 1.694, 1.45, 2.55),
    "s654(-3,1)": (4.0855, "D2", 5.88, 1, 0.312, 1.946, 1.46, 2.21),
    "v2833(2,3)": (5.0629, "Z2", 6.29, 1, 0.486, 1.701, 1.60, 2.30),
    "v3509(4,3)": (6.2392, "D2", 6.06, 1, 0.346, 1.802, 1.55, 2.25),
}


def file_stem(name):
    return name.replace("(", "_").replace(")", "").replace(",", "_").replace("-", "m")


def export(name, outdir):
    vol, sym, q2, mult, lgam, diam, ratio, k1 = TABLE[name]
    manifold = snappy.ManifoldHP(name)
    domain = manifold.dirichlet_domain()
    mats = domain.pairing_matrices()
    lines = [
        "hyperdrum-manifold 1",
        f"# exported from SnapPy {snappy.__version__} ManifoldHP('{name}').dirichlet_domain()",
        f"# snappy volume {float(manifold.volume()):.17g}",
        f"# snappy in_radius {float(domain.in_radius()):.17g} out_radius {float(domain.out_radius()):.17g}",
        f"name {name}",
        f"census {name}",
        f"volume {vol}",
        f"symmetry {sym}",
        f"diameter {diam}",
        f"geodesic_length {lgam}",
        f"reference_q2_1 {q2}",
        f"reference_multiplicity_1 {mult}",
        f"reference_k1 {k1}",
        f"reference_wavelength_ratio {ratio}",
        f"generators {len(mats)}",
    ]
    for i, g in enumerate(mats):
        lines.append(f"generator f{i}")
        for r in range(4):
            lines.append(" ".join(f"{float(g[r, c]):.17g}" for c in range(4)))
    path = outdir / f"{file_stem(name)}.mfd"
    path.write_text("\n".join(lines) + "\n")
    return path


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "manifolds"))
    parser.add_argument("names", nargs="*", default=list(TABLE))
    args = parser.parse_args()
    outdir = pathlib.Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        print(export(name, outdir))


if __name__ == "__main__":
    main()
