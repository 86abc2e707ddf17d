"""Write the standard fixture meshes as binary STL files.

Handy for driving the CLI by hand:

    python3 scripts/make_fixture_meshes.py --out fixtures
    manumap analyze fixtures/pocket_plate.stl --process both --out out/pocket
"""

import argparse
from pathlib import Path

from manumap.primitives import (
    box_mesh,
    extrude_polygon,
    icosphere,
    slab_with_pockets,
    torus_mesh,
    write_binary_stl,
)

T_SLOT_PROFILE = [
    (0, 0), (40, 0), (40, 30), (22, 30), (22, 20), (30, 20),
    (30, 10), (10, 10), (10, 20), (18, 20), (18, 30), (0, 30),
]


def fixtures() -> dict:
    return {
        "cube100": box_mesh((100.0, 100.0, 100.0)),
        "sphere10": icosphere(10.0, subdivisions=4),
        "torus": torus_mesh(20.0, 8.0),
        "pocket_plate": slab_with_pockets(
            (64.0, 64.0, 64.0), [((22.0, 22.0, 42.0, 42.0), 40.0)]
        ),
        "t_slot": extrude_polygon(T_SLOT_PROFILE, 20.0),
        "die_plate": slab_with_pockets(
            (120.0, 80.0, 40.0),
            [
                ((14.0, 14.0, 26.0, 26.0), 30.0),
                ((54.0, 30.0, 66.0, 42.0), 30.0),
                ((94.0, 50.0, 106.0, 62.0), 30.0),
            ],
        ),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="fixtures", help="output directory")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, mesh in fixtures().items():
        path = out / f"{name}.stl"
        write_binary_stl(mesh, path)
        m = mesh.metrics
        print(
            f"{path}  {len(mesh.triangles)} triangles, "
            f"volume {abs(m.volume):.1f} mm^3, watertight {m.watertight}"
        )


if __name__ == "__main__":
    main()
